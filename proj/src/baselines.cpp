#include "texturebit/baselines.hpp"

#include <cmath>

#include "texturebit/commands.hpp"

namespace texturebit {

GrayHistogram GrayHistogram::of(const PixelBuffer& gray) {
    if (gray.channels != 1) throw Error("shape mismatch", "histogram needs a single-channel image");
    GrayHistogram h;
    for (auto v : gray.data) ++h.counts[v];
    return h;
}

std::uint64_t GrayHistogram::total() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
}

PixelBuffer to_gray(const PixelBuffer& buf) {
    if (buf.channels == 1) return buf;
    PixelBuffer out(buf.width, buf.height, 1);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const int sum = buf.data[3 * i] + buf.data[3 * i + 1] + buf.data[3 * i + 2];
        out.data[i] = std::uint8_t(std::lround(sum / 3.0));
    }
    return out;
}

int otsu_threshold(const PixelBuffer& gray) {
    if (gray.data.empty()) throw Error("empty image");
    const GrayHistogram hist = GrayHistogram::of(gray);
    std::int64_t total_n = 0, total_s = 0;
    for (int v = 0; v < 256; ++v) {
        total_n += std::int64_t(hist.counts[std::size_t(v)]);
        total_s += std::int64_t(hist.counts[std::size_t(v)]) * v;
    }
    // Class sums are kept as exact integers; the between-class variance is
    // (n1 s0 - n0 s1)² / (n0 n1 N²), and the constant N² is dropped.
    std::int64_t n0 = 0, s0 = 0;
    double best = -1.0;
    int best_t = -1;
    for (int t = 1; t < 256; ++t) {
        n0 += std::int64_t(hist.counts[std::size_t(t - 1)]);
        s0 += std::int64_t(hist.counts[std::size_t(t - 1)]) * (t - 1);
        const std::int64_t n1 = total_n - n0, s1 = total_s - s0;
        if (n0 == 0 || n1 == 0) continue;
        const double diff = double(n1 * s0 - n0 * s1);
        const double score = diff * diff / (double(n0) * double(n1));
        if (score > best) {
            best = score;
            best_t = t;
        }
    }
    if (best_t < 0) throw Error("degenerate histogram");
    return best_t;
}

PixelBuffer apply_threshold(const PixelBuffer& gray, int t) {
    PixelBuffer out(gray.width, gray.height, 1);
    for (std::size_t i = 0; i < gray.data.size(); ++i) out.data[i] = gray.data[i] >= t ? 255 : 0;
    return out;
}

PixelBuffer floyd_steinberg(const PixelBuffer& gray) {
    if (gray.channels != 1) throw Error("shape mismatch", "error diffusion needs a single-channel image");
    const int w = gray.width, h = gray.height;
    std::vector<float> work(gray.data.begin(), gray.data.end());
    PixelBuffer out(w, h, 1);
    auto spread = [&](int y, int x, float e) {
        if (x >= 0 && x < w && y < h) work[std::size_t(y) * w + x] += e;
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float old = work[std::size_t(y) * w + x];
            const float val = old >= 127.5f ? 255.0f : 0.0f;
            out.at(y, x) = std::uint8_t(val);
            const float err = old - val;
            spread(y, x + 1, err * 7.0f / 16.0f);
            spread(y + 1, x - 1, err * 3.0f / 16.0f);
            spread(y + 1, x, err * 5.0f / 16.0f);
            spread(y + 1, x + 1, err * 1.0f / 16.0f);
        }
    return out;
}

std::vector<Method> parse_methods(std::string_view list) {
    std::vector<Method> out;
    while (!list.empty()) {
        const auto comma = list.find(',');
        const std::string_view name = list.substr(0, comma);
        if (name == "otsu")
            out.push_back(Method::otsu);
        else if (name == "fsd")
            out.push_back(Method::fsd);
        else if (name == "ours")
            out.push_back(Method::ours);
        else
            throw Error("unknown method", std::string(name));
        if (comma == std::string_view::npos) break;
        list.remove_prefix(comma + 1);
    }
    return out;
}

namespace {

PixelBuffer as_rgb(const PixelBuffer& buf) {
    if (buf.channels == 3) return buf;
    PixelBuffer out(buf.width, buf.height, 3);
    for (std::size_t i = 0; i < buf.data.size(); ++i)
        for (std::size_t c = 0; c < 3; ++c) out.data[3 * i + c] = buf.data[i];
    return out;
}

} // namespace

PixelBuffer compare_grid(const PixelBuffer& input, const ModelParams<float>* model,
                         const std::vector<Method>& methods) {
    std::vector<PixelBuffer> tiles{as_rgb(input)};
    const PixelBuffer gray = to_gray(input);
    for (Method m : methods) {
        switch (m) {
        case Method::otsu: tiles.push_back(as_rgb(apply_threshold(gray, otsu_threshold(gray)))); break;
        case Method::fsd: tiles.push_back(as_rgb(floyd_steinberg(gray))); break;
        case Method::ours:
            if (!model) throw Error("missing model", "method 'ours' needs a checkpoint");
            tiles.push_back(as_rgb(binarize_image(input, *model)));
            break;
        }
    }
    const int w = input.width, h = input.height;
    PixelBuffer grid(w * int(tiles.size()), h, 3);
    for (std::size_t t = 0; t < tiles.size(); ++t)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c) grid.at(y, int(t) * w + x, c) = tiles[t].at(y, x, c);
    return grid;
}

} // namespace texturebit
