#include <doctest.h>

#include <set>

#include "texturebit/baselines.hpp"
#include "texturebit/rng.hpp"

using namespace texturebit;

namespace {

PixelBuffer random_gray(std::uint64_t seed) {
    Rng rng(seed, Stream::noise, {7});
    const int w = int(rng.uniform_int(1, 40)), h = int(rng.uniform_int(1, 40));
    PixelBuffer g(w, h, 1);
    // a mix of two or three clusters, so the optimum is not at the boundary
    const int modes = int(rng.uniform_int(1, 3));
    std::vector<int> centers;
    for (int m = 0; m < modes; ++m) centers.push_back(int(rng.uniform_int(0, 255)));
    for (auto& v : g.data) {
        const int c = centers[std::size_t(rng.uniform_int(0, modes - 1))];
        v = std::uint8_t(std::clamp<std::int64_t>(c + rng.uniform_int(-30, 30), 0, 255));
    }
    return g;
}

// exact maximization of n0 n1 (mu0 - mu1)² by cross-multiplied 128-bit comparison
int otsu_oracle(const PixelBuffer& g) {
    int best = -1;
    __int128 best_num = 0, best_den = 1;
    for (int t = 1; t < 256; ++t) {
        __int128 n0 = 0, n1 = 0, s0 = 0, s1 = 0;
        for (auto v : g.data) {
            if (v < t) {
                ++n0;
                s0 += v;
            } else {
                ++n1;
                s1 += v;
            }
        }
        if (n0 == 0 || n1 == 0) continue;
        const __int128 d = n1 * s0 - n0 * s1;
        const __int128 num = d * d, den = n0 * n1;
        if (best < 0 || num * best_den > best_num * den) {
            best = t;
            best_num = num;
            best_den = den;
        }
    }
    return best;
}

std::set<std::uint8_t> values(const PixelBuffer& b) { return {b.data.begin(), b.data.end()}; }

} // namespace

TEST_CASE("otsu matches an exact brute-force search") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto g = random_gray(seed);
        const int expected = otsu_oracle(g);
        if (expected < 0) {
            CHECK_THROWS_AS(otsu_threshold(g), Error);
            continue;
        }
        CHECK(otsu_threshold(g) == expected);
        ++checked;
    }
    CHECK(checked > 90);
}

TEST_CASE("otsu on two flat halves") {
    PixelBuffer g(10, 10, 1);
    for (int i = 0; i < 100; ++i) g.data[std::size_t(i)] = i < 50 ? 50 : 200;
    // every t in 51..200 separates the halves equally well; the smallest wins
    const int t = otsu_threshold(g);
    CHECK(t == 51);
    const auto out = apply_threshold(g, t);
    for (int i = 0; i < 100; ++i) CHECK(out.data[std::size_t(i)] == (i < 50 ? 0 : 255));

    PixelBuffer extremes(2, 1, 1);
    extremes.data = {0, 255};
    CHECK(otsu_threshold(extremes) == 1);
    CHECK(values(apply_threshold(extremes, 1)) == std::set<std::uint8_t>{0, 255});

    CHECK_THROWS_WITH_AS(otsu_threshold(PixelBuffer(4, 4, 1, 77)), doctest::Contains("degenerate histogram"), Error);
}

TEST_CASE("otsu ignores pixel order") {
    auto g = random_gray(3);
    const int t = otsu_threshold(g);
    std::reverse(g.data.begin(), g.data.end());
    CHECK(otsu_threshold(g) == t);
    std::rotate(g.data.begin(), g.data.begin() + std::ptrdiff_t(g.data.size() / 3), g.data.end());
    CHECK(otsu_threshold(g) == t);
}

TEST_CASE("to_gray rounds the channel mean") {
    PixelBuffer rgb(3, 1, 3);
    rgb.data = {0, 0, 1, 0, 1, 1, 10, 20, 40};
    const auto g = to_gray(rgb);
    CHECK(g.channels == 1);
    CHECK(g.data == std::vector<std::uint8_t>{0, 1, 23});
    CHECK(GrayHistogram::of(g).total() == 3);
    CHECK(GrayHistogram::of(g).counts[23] == 1);
}

TEST_CASE("floyd-steinberg") {
    CHECK(values(floyd_steinberg(PixelBuffer(16, 16, 1, 0))) == std::set<std::uint8_t>{0});
    CHECK(values(floyd_steinberg(PixelBuffer(16, 16, 1, 255))) == std::set<std::uint8_t>{255});

    const auto mid = floyd_steinberg(PixelBuffer(256, 256, 1, 128));
    CHECK(values(mid) == std::set<std::uint8_t>{0, 255});
    double sum = 0;
    for (auto v : mid.data) sum += v;
    CHECK(std::abs(sum / double(mid.data.size()) - 128) <= 2);

    // 100 rounds to 0 and pushes 7/16 of its error right: 100 + 43.75 rounds to 255
    PixelBuffer pair(2, 1, 1, 100);
    CHECK(floyd_steinberg(pair).data == std::vector<std::uint8_t>{0, 255});

    // a ramp keeps its mean
    PixelBuffer ramp(256, 64, 1);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 256; ++x) ramp.at(y, x) = std::uint8_t(x);
    const auto dithered = floyd_steinberg(ramp);
    double a = 0, b = 0;
    for (std::size_t i = 0; i < ramp.data.size(); ++i) {
        a += ramp.data[i];
        b += dithered.data[i];
    }
    CHECK(std::abs(a - b) / double(ramp.data.size()) < 1);
}

TEST_CASE("parse_methods") {
    CHECK(parse_methods("otsu,fsd,ours") == std::vector<Method>{Method::otsu, Method::fsd, Method::ours});
    CHECK(parse_methods("").empty());
    CHECK(parse_methods("fsd") == std::vector<Method>{Method::fsd});
    CHECK_THROWS_WITH_AS(parse_methods("otsu,bogus"), doctest::Contains("unknown method"), Error);
}

TEST_CASE("compare_grid tiles the original and each method") {
    PixelBuffer img(6, 4, 3);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 6; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = std::uint8_t(40 * x + 10 * c);
    const auto grid = compare_grid(img, nullptr, {Method::otsu, Method::fsd});
    CHECK(grid.width == 18);
    CHECK(grid.height == 4);
    CHECK(grid.channels == 3);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 6; ++x) {
            for (int c = 0; c < 3; ++c) CHECK(grid.at(y, x, c) == img.at(y, x, c));
            const auto v = grid.at(y, 6 + x, 0);
            CHECK((v == 0 || v == 255));
            CHECK(grid.at(y, 6 + x, 1) == v);
        }
    CHECK(compare_grid(img, nullptr, {}).width == 6);
    CHECK_THROWS_WITH_AS(compare_grid(img, nullptr, {Method::ours}), doctest::Contains("missing model"), Error);
}
