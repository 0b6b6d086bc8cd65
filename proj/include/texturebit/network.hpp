#ifndef TEXTUREBIT_NETWORK_HPP
#define TEXTUREBIT_NETWORK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "texturebit/quantize.hpp"
#include "texturebit/rng.hpp"
#include "texturebit/tensor.hpp"

namespace texturebit {

/// Layer counts and widths of the three stages. The Down-Discretization
/// Encoder (DDE) length follows from the output bit depth: 9 - target_bpp.
struct NetworkConfig {
    int pre_encoder_layers = 10;
    int pre_encoder_channels = 128;
    int decoder_layers = 2;
    int decoder_channels = 128;
    int target_bpp = 1;
    int kernel_size = 6;

    int dde_layers() const { return 9 - target_bpp; }
    int output_levels() const { return 1 << target_bpp; }

    void validate() const {
        if (pre_encoder_layers < 1 || pre_encoder_channels < 1 || decoder_layers < 1 ||
            decoder_channels < 1 || kernel_size < 1)
            throw Error("invalid config", "layer and channel counts must be >= 1");
        if (target_bpp < 1 || target_bpp > 8) throw Error("invalid config", "target_bpp must be in [1, 8]");
    }

    bool operator==(const NetworkConfig&) const = default;
};

/// Same-padded 2-D convolution. weight is out × (in·k·k) with column index
/// (c·k + ky)·k + kx, i.e. the row-major layout of an [out, in, k, k] tensor.
template <typename Scalar>
struct ConvLayer {
    int kernel = 6;
    Matrix<Scalar> weight;
    Vector<Scalar> bias;

    ConvLayer() = default;
    ConvLayer(int in, int out, int k)
        : kernel(k), weight(Matrix<Scalar>::Zero(out, Eigen::Index(in) * k * k)), bias(Vector<Scalar>::Zero(out)) {}

    int out_channels() const { return int(weight.rows()); }
    int in_channels() const { return int(weight.cols() / (Eigen::Index(kernel) * kernel)); }

    template <typename Other>
    ConvLayer<Other> cast() const {
        ConvLayer<Other> out;
        out.kernel = kernel;
        out.weight = weight.template cast<Other>();
        out.bias = bias.template cast<Other>();
        return out;
    }
};

enum class Stage { pre_encoder, dde, decoder };

inline const char* stage_prefix(Stage s) {
    switch (s) {
    case Stage::pre_encoder: return "pre";
    case Stage::dde: return "dde";
    case Stage::decoder: return "dec";
    }
    return "?";
}

/// All trainable weights plus the config that shaped them. Also used as the
/// container for parameter gradients and optimizer moments.
template <typename Scalar>
struct ModelParams {
    NetworkConfig config;
    std::vector<ConvLayer<Scalar>> pre_encoder;
    std::vector<ConvLayer<Scalar>> dde;
    std::vector<ConvLayer<Scalar>> decoder;

    /// Zero-valued parameters with the layer shapes implied by cfg.
    static ModelParams zeros(const NetworkConfig& cfg) {
        cfg.validate();
        ModelParams p;
        p.config = cfg;
        const int k = cfg.kernel_size;
        const int c = cfg.pre_encoder_channels;
        for (int i = 0; i < cfg.pre_encoder_layers; ++i) p.pre_encoder.emplace_back(i == 0 ? 3 : c, c, k);
        // Stage 1 reads all features, later stages only the previous plane.
        for (int i = 0; i < cfg.dde_layers(); ++i) p.dde.emplace_back(i == 0 ? c : 1, 1, k);
        const int d = cfg.decoder_channels;
        for (int i = 0; i < cfg.decoder_layers; ++i) {
            const int in = i == 0 ? 1 : d;
            const int out = i + 1 == cfg.decoder_layers ? 3 : d;
            p.decoder.emplace_back(in, out, k);
        }
        return p;
    }

    ModelParams zeros_like() const { return zeros(config); }

    /// Visits every layer in canonical order as f(stage, index, layer).
    template <typename F>
    void for_each_layer(F&& f) {
        for (std::size_t i = 0; i < pre_encoder.size(); ++i) f(Stage::pre_encoder, int(i), pre_encoder[i]);
        for (std::size_t i = 0; i < dde.size(); ++i) f(Stage::dde, int(i), dde[i]);
        for (std::size_t i = 0; i < decoder.size(); ++i) f(Stage::decoder, int(i), decoder[i]);
    }
    template <typename F>
    void for_each_layer(F&& f) const {
        for (std::size_t i = 0; i < pre_encoder.size(); ++i) f(Stage::pre_encoder, int(i), pre_encoder[i]);
        for (std::size_t i = 0; i < dde.size(); ++i) f(Stage::dde, int(i), dde[i]);
        for (std::size_t i = 0; i < decoder.size(); ++i) f(Stage::decoder, int(i), decoder[i]);
    }

    /// Throws Error("shape mismatch") unless every layer matches config.
    void check_shapes() const {
        const ModelParams expected = zeros(config);
        auto same = [](const std::vector<ConvLayer<Scalar>>& a, const std::vector<ConvLayer<Scalar>>& b) {
            if (a.size() != b.size()) return false;
            for (std::size_t i = 0; i < a.size(); ++i)
                if (a[i].kernel != b[i].kernel || a[i].weight.rows() != b[i].weight.rows() ||
                    a[i].weight.cols() != b[i].weight.cols() || a[i].bias.size() != b[i].bias.size())
                    return false;
            return true;
        };
        if (!same(pre_encoder, expected.pre_encoder) || !same(dde, expected.dde) ||
            !same(decoder, expected.decoder))
            throw Error("shape mismatch", "parameters disagree with network config");
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for_each_layer([&](Stage, int, const ConvLayer<Scalar>& l) { n += l.weight.size() + l.bias.size(); });
        return n;
    }

    template <typename Other>
    ModelParams<Other> cast() const {
        ModelParams<Other> out;
        out.config = config;
        for (const auto& l : pre_encoder) out.pre_encoder.push_back(l.template cast<Other>());
        for (const auto& l : dde) out.dde.push_back(l.template cast<Other>());
        for (const auto& l : decoder) out.decoder.push_back(l.template cast<Other>());
        return out;
    }

    /// this += scale * other, layer by layer.
    void add_scaled(const ModelParams& other, Scalar scale) {
        auto add = [scale](std::vector<ConvLayer<Scalar>>& dst, const std::vector<ConvLayer<Scalar>>& src) {
            for (std::size_t i = 0; i < dst.size(); ++i) {
                dst[i].weight += scale * src[i].weight;
                dst[i].bias += scale * src[i].bias;
            }
        };
        add(pre_encoder, other.pre_encoder);
        add(dde, other.dde);
        add(decoder, other.decoder);
    }

    bool all_finite() const {
        bool ok = true;
        for_each_layer([&](Stage, int, const ConvLayer<Scalar>& l) {
            ok = ok && l.weight.allFinite() && l.bias.allFinite();
        });
        return ok;
    }
};

/// relu layers: N(0, 2 / fan_in). tanh layers (DDE and the decoder output):
/// U(-a, a) with a = sqrt(6 / (fan_in + fan_out)). Biases start at zero.
/// Each layer draws from its own stream, so the result depends only on seed.
template <typename Scalar = float>
ModelParams<Scalar> init_params(const NetworkConfig& cfg, std::uint64_t seed) {
    ModelParams<Scalar> p = ModelParams<Scalar>::zeros(cfg);
    std::uint64_t layer_id = 0;
    p.for_each_layer([&](Stage stage, int index, ConvLayer<Scalar>& l) {
        Rng rng(seed, Stream::init, {layer_id++});
        const double area = double(l.kernel) * l.kernel;
        const double fan_in = l.in_channels() * area;
        const double fan_out = l.out_channels() * area;
        const bool tanh_layer = stage == Stage::dde || (stage == Stage::decoder && index + 1 == cfg.decoder_layers);
        if (tanh_layer) {
            const double a = std::sqrt(6.0 / (fan_in + fan_out));
            for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = Scalar(rng.uniform(-a, a));
        } else {
            const double sd = std::sqrt(2.0 / fan_in);
            for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = Scalar(sd * rng.normal());
        }
    });
    return p;
}

namespace detail {

/// Leading zero padding for a same-padded kernel of size k; the remaining
/// k - 1 - pad_before go after (TensorFlow "SAME" convention for even k).
inline int pad_before(int k) { return (k - 1) / 2; }

/// Valid output column range [lo, hi) for kernel column kx.
inline std::pair<int, int> valid_range(int width, int k, int kx) {
    const int off = kx - pad_before(k);
    return {std::max(0, -off), std::min(width, width - off)};
}

/// Per-thread buffers for the unfolded convolution input and its gradient.
/// Reusing them keeps the large per-layer allocations off the page-fault path.
template <typename Scalar>
Matrix<Scalar>& scratch(int slot) {
    thread_local Matrix<Scalar> buffers[2];
    return buffers[slot];
}

/// Unfolds `in` so that a same-padded convolution becomes weight * col.
template <typename Scalar>
void im2col(const FeatureMap<Scalar>& in, int k, Matrix<Scalar>& col) {
    const int h = in.height, w = in.width, pb = pad_before(k);
    col.resize(Eigen::Index(in.channels()) * k * k, in.pixels());
    col.setZero();
    for (int c = 0; c < in.channels(); ++c) {
        const Scalar* src = in.data.row(c).data();
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                Scalar* dst = col.row((Eigen::Index(c) * k + ky) * k + kx).data();
                const auto [x_lo, x_hi] = valid_range(w, k, kx);
                if (x_lo >= x_hi) continue;
                const int dx = kx - pb;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - pb;
                    if (sy < 0 || sy >= h) continue;
                    std::copy(src + std::ptrdiff_t(sy) * w + x_lo + dx, src + std::ptrdiff_t(sy) * w + x_hi + dx,
                              dst + std::ptrdiff_t(y) * w + x_lo);
                }
            }
    }
}

template <typename Scalar>
Matrix<Scalar> im2col(const FeatureMap<Scalar>& in, int k) {
    Matrix<Scalar> col;
    im2col(in, k, col);
    return col;
}

/// Adjoint of im2col: scatters column gradients back onto the input grid.
template <typename Scalar>
FeatureMap<Scalar> col2im(const Matrix<Scalar>& col, int channels, int h, int w, int k) {
    FeatureMap<Scalar> out(channels, h, w);
    const int pb = pad_before(k);
    for (int c = 0; c < channels; ++c) {
        Scalar* dst = out.data.row(c).data();
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const Scalar* src = col.row((Eigen::Index(c) * k + ky) * k + kx).data();
                const auto [x_lo, x_hi] = valid_range(w, k, kx);
                if (x_lo >= x_hi) continue;
                const int dx = kx - pb;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - pb;
                    if (sy < 0 || sy >= h) continue;
                    Scalar* d = dst + std::ptrdiff_t(sy) * w + dx;
                    const Scalar* s = src + std::ptrdiff_t(y) * w;
                    for (int x = x_lo; x < x_hi; ++x) d[x] += s[x];
                }
            }
    }
    return out;
}

/// Pre-activation output of a same-padded convolution.
template <typename Scalar>
FeatureMap<Scalar> conv2d(const ConvLayer<Scalar>& layer, const FeatureMap<Scalar>& in) {
    if (in.channels() != layer.in_channels()) throw Error("shape mismatch", "convolution input channels");
    FeatureMap<Scalar> out;
    out.height = in.height;
    out.width = in.width;
    Matrix<Scalar>& col = scratch<Scalar>(0);
    im2col(in, layer.kernel, col);
    out.data.noalias() = layer.weight * col;
    out.data.colwise() += layer.bias;
    return out;
}

/// Accumulates dW, db for one layer and returns the gradient w.r.t. its input
/// (skipped when need_input_grad is false).
template <typename Scalar>
FeatureMap<Scalar> conv2d_backward(const ConvLayer<Scalar>& layer, const FeatureMap<Scalar>& in,
                                   const Matrix<Scalar>& grad_out, ConvLayer<Scalar>& grad,
                                   bool need_input_grad) {
    Matrix<Scalar>& col = scratch<Scalar>(0);
    im2col(in, layer.kernel, col);
    grad.weight.noalias() += grad_out * col.transpose();
    grad.bias += grad_out.rowwise().sum().transpose();
    if (!need_input_grad) return {};
    Matrix<Scalar>& grad_col = scratch<Scalar>(1);
    grad_col.resize(col.rows(), col.cols());
    grad_col.noalias() = layer.weight.transpose() * grad_out;
    return col2im(grad_col, in.channels(), in.height, in.width, layer.kernel);
}

template <typename Scalar>
void relu_inplace(FeatureMap<Scalar>& m) {
    m.data = m.data.cwiseMax(Scalar(0));
}

template <typename Scalar>
FeatureMap<Scalar> to_map(const DiscretePlane<Scalar>& p) {
    FeatureMap<Scalar> m;
    m.height = p.height;
    m.width = p.width;
    m.data = p.values;
    return m;
}

template <typename Scalar>
DiscretePlane<Scalar> to_plane(const FeatureMap<Scalar>& m, int levels) {
    DiscretePlane<Scalar> p;
    p.height = m.height;
    p.width = m.width;
    p.levels = levels;
    p.values = m.data.row(0);
    return p;
}

} // namespace detail

/// How DDE stages apply their activation. `discrete` is used for every
/// forward pass, training included; `surrogate` replaces each quantizer with
/// plain tanh and exists so gradients can be checked against finite differences.
enum class QuantizerMode { discrete, surrogate };

/// All intermediate activations needed by backward().
template <typename Scalar>
struct ForwardPass {
    ImageTensor<Scalar> input;
    std::vector<FeatureMap<Scalar>> pre_encoder; // post-relu
    std::vector<FeatureMap<Scalar>> dde_preact;
    std::vector<FeatureMap<Scalar>> dde;         // stage outputs
    std::vector<FeatureMap<Scalar>> decoder;     // post-activation; last is the reconstruction
    int output_levels = 2;

    const FeatureMap<Scalar>& plane_map() const { return dde.back(); }
    DiscretePlane<Scalar> plane() const { return detail::to_plane(dde.back(), output_levels); }
    ImageTensor<Scalar> reconstruction() const { return ImageTensor<Scalar>(decoder.back()); }
};

/// Ten relu convolutions (by default) from RGB to feature channels.
template <typename Scalar>
FeatureMap<Scalar> pre_encode(const ImageTensor<Scalar>& t, const ModelParams<Scalar>& p) {
    p.check_shapes();
    FeatureMap<Scalar> x = t;
    for (const auto& layer : p.pre_encoder) {
        x = detail::conv2d(layer, x);
        detail::relu_inplace(x);
    }
    return x;
}

namespace detail {

template <typename Scalar>
FeatureMap<Scalar> dde_activate(const FeatureMap<Scalar>& z, const QuantSpec& spec, QuantizerMode mode) {
    FeatureMap<Scalar> out = z;
    if (mode == QuantizerMode::surrogate)
        out.data = z.data.array().tanh();
    else
        out.data = z.data.unaryExpr([&spec](Scalar v) { return discretize_tanh(v, spec); });
    return out;
}

} // namespace detail

/// Runs the DDE; plane i has schedule[i].levels values, the last is the output image.
template <typename Scalar>
std::vector<DiscretePlane<Scalar>> down_discretize(const FeatureMap<Scalar>& features, const ModelParams<Scalar>& p) {
    const auto schedule = dde_level_schedule(p.config.target_bpp);
    std::vector<DiscretePlane<Scalar>> planes;
    FeatureMap<Scalar> x = features;
    for (std::size_t i = 0; i < p.dde.size(); ++i) {
        x = detail::dde_activate(detail::conv2d(p.dde[i], x), schedule[i], QuantizerMode::discrete);
        planes.push_back(detail::to_plane(x, schedule[i].levels));
    }
    return planes;
}

namespace detail {

template <typename Scalar>
FeatureMap<Scalar> decode_map(FeatureMap<Scalar> x, const ModelParams<Scalar>& p) {
    for (std::size_t i = 0; i < p.decoder.size(); ++i) {
        x = conv2d(p.decoder[i], x);
        if (i + 1 == p.decoder.size())
            x.data = x.data.array().tanh();
        else
            relu_inplace(x);
    }
    return x;
}

} // namespace detail

/// Reconstructs RGB from the final plane. Nothing else reaches the decoder.
template <typename Scalar>
ImageTensor<Scalar> decode(const DiscretePlane<Scalar>& b, const ModelParams<Scalar>& p) {
    p.check_shapes();
    return ImageTensor<Scalar>(detail::decode_map(detail::to_map(b), p));
}

/// The user-visible output plane.
template <typename Scalar>
DiscretePlane<Scalar> binarize(const ImageTensor<Scalar>& t, const ModelParams<Scalar>& p) {
    return down_discretize(pre_encode(t, p), p).back();
}

template <typename Scalar>
ForwardPass<Scalar> forward(const ImageTensor<Scalar>& t, const ModelParams<Scalar>& p,
                            QuantizerMode mode = QuantizerMode::discrete) {
    p.check_shapes();
    ForwardPass<Scalar> fp;
    fp.input = t;
    fp.output_levels = p.config.output_levels();
    const FeatureMap<Scalar>* x = &fp.input;
    for (const auto& layer : p.pre_encoder) {
        fp.pre_encoder.push_back(detail::conv2d(layer, *x));
        detail::relu_inplace(fp.pre_encoder.back());
        x = &fp.pre_encoder.back();
    }
    const auto schedule = dde_level_schedule(p.config.target_bpp);
    for (std::size_t i = 0; i < p.dde.size(); ++i) {
        fp.dde_preact.push_back(detail::conv2d(p.dde[i], *x));
        fp.dde.push_back(detail::dde_activate(fp.dde_preact.back(), schedule[i], mode));
        x = &fp.dde.back();
    }
    for (std::size_t i = 0; i < p.decoder.size(); ++i) {
        fp.decoder.push_back(detail::conv2d(p.decoder[i], *x));
        if (i + 1 == p.decoder.size())
            fp.decoder.back().data = fp.decoder.back().data.array().tanh();
        else
            detail::relu_inplace(fp.decoder.back());
        x = &fp.decoder.back();
    }
    return fp;
}

/// Loss gradients at the two network outputs. An empty map means zero.
template <typename Scalar>
struct OutputGradients {
    FeatureMap<Scalar> reconstruction; // 3 × pixels
    FeatureMap<Scalar> plane;          // 1 × pixels, w.r.t. the final DDE output
};

/// Reverse-mode gradients, accumulated into `grads`. Each DDE stage is
/// differentiated through tanh'(pre-activation) regardless of mode, which is
/// the straight-through estimator in discrete mode and the exact derivative
/// in surrogate mode.
template <typename Scalar>
void backward(const ForwardPass<Scalar>& fp, const ModelParams<Scalar>& p, const OutputGradients<Scalar>& upstream,
              ModelParams<Scalar>& grads) {
    const Eigen::Index n = fp.input.pixels();

    // Decoder.
    Matrix<Scalar> g = upstream.reconstruction.data.size() ? upstream.reconstruction.data
                                                           : Matrix<Scalar>::Zero(3, n);
    const std::size_t nd = p.decoder.size();
    g = g.cwiseProduct((Scalar(1) - fp.decoder.back().data.array().square()).matrix());
    for (std::size_t i = nd; i-- > 0;) {
        const FeatureMap<Scalar>& in = i == 0 ? fp.dde.back() : fp.decoder[i - 1];
        FeatureMap<Scalar> gin = detail::conv2d_backward(p.decoder[i], in, g, grads.decoder[i], true);
        if (i > 0)
            g = gin.data.cwiseProduct((fp.decoder[i - 1].data.array() > Scalar(0)).template cast<Scalar>().matrix());
        else
            g = std::move(gin.data);
    }
    if (upstream.plane.data.size()) g += upstream.plane.data;

    // DDE: g is the gradient w.r.t. the output of the last stage.
    const std::size_t ns = p.dde.size();
    for (std::size_t i = ns; i-- > 0;) {
        const Matrix<Scalar> gz =
            g.cwiseProduct(fp.dde_preact[i].data.unaryExpr([](Scalar v) { return ste_gradient(v); }));
        const FeatureMap<Scalar>& in = i == 0 ? fp.pre_encoder.back() : fp.dde[i - 1];
        g = detail::conv2d_backward(p.dde[i], in, gz, grads.dde[i], true).data;
    }

    // Pre-encoder.
    const std::size_t np = p.pre_encoder.size();
    for (std::size_t i = np; i-- > 0;) {
        const Matrix<Scalar> gz =
            g.cwiseProduct((fp.pre_encoder[i].data.array() > Scalar(0)).template cast<Scalar>().matrix());
        const FeatureMap<Scalar>& in = i == 0 ? static_cast<const FeatureMap<Scalar>&>(fp.input) : fp.pre_encoder[i - 1];
        FeatureMap<Scalar> gin = detail::conv2d_backward(p.pre_encoder[i], in, gz, grads.pre_encoder[i], i > 0);
        if (i > 0) g = std::move(gin.data);
    }
}

} // namespace texturebit

#endif // TEXTUREBIT_NETWORK_HPP
