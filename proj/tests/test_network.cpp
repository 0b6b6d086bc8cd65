#include <doctest.h>

#include <cmath>
#include <set>

#include "gradcheck.hpp"
#include "texturebit/network.hpp"
#include "texturebit/objective.hpp"
#include "texturebit/rng.hpp"

using namespace texturebit;
using testing::grad_close;

namespace {

NetworkConfig small_config(int bpp = 1, int kernel = 6) {
    NetworkConfig cfg;
    cfg.pre_encoder_layers = 2;
    cfg.pre_encoder_channels = 4;
    cfg.decoder_layers = 2;
    cfg.decoder_channels = 4;
    cfg.target_bpp = bpp;
    cfg.kernel_size = kernel;
    return cfg;
}

template <typename S>
ImageTensor<S> random_image(int h, int w, std::uint64_t seed) {
    Rng rng(seed, Stream::noise, {std::uint64_t(h), std::uint64_t(w)});
    ImageTensor<S> t(h, w);
    for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] = S(rng.uniform(-1, 1));
    return t;
}

template <typename S>
FeatureMap<S> random_map(int c, int h, int w, std::uint64_t seed) {
    Rng rng(seed, Stream::noise, {std::uint64_t(c), std::uint64_t(h), std::uint64_t(w)});
    FeatureMap<S> m(c, h, w);
    for (Eigen::Index i = 0; i < m.data.size(); ++i) m.data.data()[i] = S(rng.uniform(-1, 1));
    return m;
}

// direct sum over the kernel window, zero outside the image
FeatureMap<double> naive_conv(const ConvLayer<double>& l, const FeatureMap<double>& in) {
    const int k = l.kernel, pb = (k - 1) / 2;
    FeatureMap<double> out(l.out_channels(), in.height, in.width);
    for (int o = 0; o < l.out_channels(); ++o)
        for (int y = 0; y < in.height; ++y)
            for (int x = 0; x < in.width; ++x) {
                double s = l.bias(o);
                for (int c = 0; c < in.channels(); ++c)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int sy = y + ky - pb, sx = x + kx - pb;
                            if (sy < 0 || sy >= in.height || sx < 0 || sx >= in.width) continue;
                            s += l.weight(o, (c * k + ky) * k + kx) * in(c, sy, sx);
                        }
                out(o, y, x) = s;
            }
    return out;
}

ConvLayer<double> random_layer(int in, int out, int k, std::uint64_t seed) {
    ConvLayer<double> l(in, out, k);
    Rng rng(seed, Stream::init, {});
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = rng.uniform(-1, 1);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias.data()[i] = rng.uniform(-1, 1);
    return l;
}

} // namespace

TEST_CASE("conv2d matches direct convolution") {
    for (int k : {1, 2, 3, 5, 6}) {
        for (auto [h, w] : {std::pair{1, 1}, std::pair{4, 7}, std::pair{9, 5}, std::pair{12, 12}}) {
            const auto l = random_layer(3, 5, k, std::uint64_t(k * 100 + h));
            const auto in = random_map<double>(3, h, w, std::uint64_t(k));
            const auto fast = detail::conv2d(l, in);
            const auto slow = naive_conv(l, in);
            REQUIRE(fast.same_shape(slow));
            CHECK((fast.data - slow.data).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("6x6 same padding puts two rows before and three after") {
    ConvLayer<double> l(1, 1, 6);
    l.weight(0, 0) = 1; // tap (0, 0) reads input at (y - 2, x - 2)
    FeatureMap<double> in(1, 8, 8);
    in(0, 0, 0) = 5;
    const auto out = detail::conv2d(l, in);
    CHECK(out(0, 2, 2) == 5);
    CHECK(out.data.cwiseAbs().sum() == 5);

    ConvLayer<double> last(1, 1, 6);
    last.weight(0, 35) = 1; // tap (5, 5) reads (y + 3, x + 3)
    FeatureMap<double> in2(1, 8, 8);
    in2(0, 7, 7) = 2;
    const auto out2 = detail::conv2d(last, in2);
    CHECK(out2(0, 4, 4) == 2);
    CHECK(out2.data.cwiseAbs().sum() == 2);
}

TEST_CASE("conv2d_backward is the adjoint of conv2d") {
    for (int k : {3, 6}) {
        auto l = random_layer(4, 3, k, 77);
        l.bias.setZero();
        const auto x = random_map<double>(4, 7, 10, 1);
        const auto g = random_map<double>(3, 7, 10, 2);
        ConvLayer<double> grad(4, 3, k);
        const auto gx = detail::conv2d_backward(l, x, g.data, grad, true);
        const double lhs = detail::conv2d(l, x).data.cwiseProduct(g.data).sum();
        const double rhs = x.data.cwiseProduct(gx.data).sum();
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        // weight gradient of <conv(x), g> is linear in x, so <dW, W> equals lhs too
        CHECK(grad.weight.cwiseProduct(l.weight).sum() == doctest::Approx(lhs).epsilon(1e-12));
        CHECK(grad.bias.sum() == doctest::Approx(g.data.sum()).epsilon(1e-12));
    }
}

TEST_CASE("forward preserves spatial size and stage shapes") {
    const NetworkConfig cfg = small_config();
    const auto p = init_params<float>(cfg, 3);
    for (int n : {16, 32, 64, 128}) {
        const auto fp = forward(random_image<float>(n, n, 5), p);
        for (const auto& m : fp.pre_encoder) {
            CHECK(m.height == n);
            CHECK(m.width == n);
            CHECK(m.channels() == cfg.pre_encoder_channels);
        }
        REQUIRE(fp.dde.size() == 8);
        for (const auto& m : fp.dde) CHECK(m.channels() == 1);
        const auto rec = fp.reconstruction();
        CHECK(rec.height == n);
        CHECK(rec.width == n);
    }
    const auto odd = forward(random_image<float>(7, 13, 5), p);
    CHECK(odd.plane().height == 7);
    CHECK(odd.plane().width == 13);
}

TEST_CASE("relu layers are non-negative and the reconstruction stays in (-1, 1)") {
    NetworkConfig cfg = small_config();
    cfg.decoder_layers = 4;
    const auto p = init_params<double>(cfg, 11);
    const auto fp = forward(random_image<double>(16, 16, 9), p);
    for (const auto& m : fp.pre_encoder) CHECK(m.data.minCoeff() >= 0);
    for (std::size_t i = 0; i + 1 < fp.decoder.size(); ++i) CHECK(fp.decoder[i].data.minCoeff() >= 0);
    CHECK(fp.decoder.back().data.cwiseAbs().maxCoeff() < 1);
}

TEST_CASE("zero parameters") {
    const auto p = ModelParams<double>::zeros(small_config());
    const auto fp = forward(random_image<double>(8, 8, 1), p);
    CHECK(fp.reconstruction().data.cwiseAbs().maxCoeff() == 0);
    for (const auto& m : fp.pre_encoder) CHECK(m.data.cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("each DDE stage emits only its own level set") {
    for (int bpp : {1, 2, 4, 8}) {
        const NetworkConfig cfg = small_config(bpp);
        const auto p = init_params<double>(cfg, std::uint64_t(bpp));
        const auto fp = forward(random_image<double>(32, 32, 4), p);
        const auto schedule = dde_level_schedule(bpp);
        REQUIRE(fp.dde.size() == std::size_t(9 - bpp));
        for (std::size_t i = 0; i < fp.dde.size(); ++i) {
            const auto allowed = schedule[i].level_set();
            const std::set<double> allowed_set(allowed.begin(), allowed.end());
            std::set<double> seen(fp.dde[i].data.data(), fp.dde[i].data.data() + fp.dde[i].data.size());
            CHECK(seen.size() <= std::size_t(schedule[i].levels));
            for (double v : seen) CHECK(allowed_set.count(v) == 1);
        }
        const auto plane = fp.plane();
        CHECK(plane.levels == (1 << bpp));
        CHECK(std::set<double>(plane.values.data(), plane.values.data() + plane.values.size()).size() <=
              std::size_t(1 << bpp));
        // the free-function path agrees with the forward pass
        const auto planes = down_discretize(pre_encode(fp.input, p), p);
        REQUIRE(planes.size() == fp.dde.size());
        CHECK(planes.back().values == plane.values);
        CHECK(binarize(fp.input, p).values == plane.values);
    }
}

TEST_CASE("the decoder sees only the plane") {
    const auto p = init_params<double>(small_config(2), 21);
    const auto a = forward(random_image<double>(12, 12, 1), p);
    CHECK(decode(a.plane(), p).data == a.reconstruction().data);

    // two different images that share a plane share a reconstruction
    const auto b = forward(random_image<double>(12, 12, 2), p);
    auto swapped = b.plane();
    swapped.values = a.plane().values;
    CHECK(decode(swapped, p).data == a.reconstruction().data);
}

TEST_CASE("init_params") {
    const NetworkConfig cfg;
    const auto p = init_params<float>(cfg, 42);
    const auto q = init_params<float>(cfg, 42);
    const auto other = init_params<float>(cfg, 43);
    CHECK(p.pre_encoder[3].weight == q.pre_encoder[3].weight);
    CHECK(p.pre_encoder[3].weight != other.pre_encoder[3].weight);
    p.for_each_layer([](Stage, int, const ConvLayer<float>& l) { CHECK(l.bias.cwiseAbs().maxCoeff() == 0); });

    // He variance for a 128-channel relu layer
    const auto& w = p.pre_encoder[5].weight;
    const double mean = w.cast<double>().mean();
    const double var = (w.cast<double>().array() - mean).square().mean();
    const double expected = 2.0 / (128 * 36);
    CHECK(std::abs(var - expected) < 0.1 * expected);
    CHECK(std::abs(mean) < 0.01 * std::sqrt(expected));

    // Glorot bound on DDE and output layers
    const double bound = std::sqrt(6.0 / (128 * 36 + 36));
    CHECK(p.dde[0].weight.cwiseAbs().maxCoeff() <= bound);
    CHECK(p.dde[0].weight.cwiseAbs().maxCoeff() > 0.9 * bound);

    CHECK(p.parameter_count() == std::size_t((3 * 36 + 1) * 128 + 9 * (128 * 36 + 1) * 128 + (128 * 36 + 1) +
                                             7 * 37 + (36 + 1) * 128 + (128 * 36 + 1) * 3));
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
    const auto p = init_params<double>(small_config(), 5);
    const auto fp = forward(random_image<double>(10, 10, 1), p);
    auto grads = p.zeros_like();
    backward(fp, p, OutputGradients<double>{}, grads);
    grads.for_each_layer([](Stage, int, const ConvLayer<double>& l) {
        CHECK(l.weight.cwiseAbs().maxCoeff() == 0);
        CHECK(l.bias.cwiseAbs().maxCoeff() == 0);
    });
}

TEST_CASE("discrete mode backpropagates through tanh' of the pre-activation") {
    // bpp 8 leaves a single DDE stage, so its bias gradient is Σ g · tanh'(z)
    const auto p = init_params<double>(small_config(8), 8);
    const auto fp = forward(random_image<double>(9, 9, 3), p);
    OutputGradients<double> up;
    up.plane = random_map<double>(1, 9, 9, 4);
    auto grads = p.zeros_like();
    backward(fp, p, up, grads);
    const auto& z = fp.dde_preact[0].data;
    const double expected = up.plane.data.cwiseProduct((1 - z.array().tanh().square()).matrix()).sum();
    CHECK(grads.dde[0].bias(0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(grads.decoder[0].weight.cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("surrogate-mode gradients match central differences for every parameter") {
    for (int kernel : {3, 6}) {
        const NetworkConfig cfg = small_config(6, kernel);
        const auto p = init_params<double>(cfg, std::uint64_t(kernel));
        const auto a = random_image<double>(6, 5, 1);
        auto b = a;
        b.data += 0.1 * random_image<double>(6, 5, 2).data;
        ObjectiveConfig oc;
        oc.r = 2;
        oc.items = 2;
        oc.pairs = 1;
        auto loss = [&](const ModelParams<double>& q) {
            return pair_objective(q, a, b, oc, QuantizerMode::surrogate).total;
        };
        auto grads = p.zeros_like();
        pair_objective(p, a, b, oc, QuantizerMode::surrogate, &grads);
        const auto samples = testing::finite_differences(p, grads, testing::all_params(p), loss);
        int bad = 0;
        for (const auto& s : samples)
            if (!grad_close(s.analytic, s.numeric, 1e-4, 1e-8)) ++bad;
        CHECK(bad == 0);
        CHECK(samples.size() == p.parameter_count());
    }
}

TEST_CASE("cast round trip and add_scaled") {
    auto p = init_params<double>(small_config(), 1);
    const auto f = p.cast<float>();
    CHECK(f.pre_encoder[0].weight.cast<double>().isApprox(p.pre_encoder[0].weight, 1e-6));
    auto q = p;
    q.add_scaled(p, -1.0);
    q.for_each_layer([](Stage, int, const ConvLayer<double>& l) { CHECK(l.weight.cwiseAbs().maxCoeff() == 0); });
    CHECK(p.all_finite());
    p.decoder[1].bias(0) = std::nan("");
    CHECK_FALSE(p.all_finite());
}

TEST_CASE("shape checks") {
    auto p = init_params<double>(small_config(), 1);
    p.dde[1] = ConvLayer<double>(2, 1, 6);
    CHECK_THROWS_WITH_AS(forward(random_image<double>(8, 8, 1), p), doctest::Contains("shape mismatch"), Error);
    NetworkConfig bad;
    bad.target_bpp = 9;
    CHECK_THROWS_AS(ModelParams<float>::zeros(bad), Error);
}
