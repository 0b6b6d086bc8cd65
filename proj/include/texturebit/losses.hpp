#ifndef TEXTUREBIT_LOSSES_HPP
#define TEXTUREBIT_LOSSES_HPP

#include <cmath>
#include <utility>

#include "texturebit/image_io.hpp"
#include "texturebit/tensor.hpp"

namespace texturebit {

struct LossBreakdown {
    double l2 = 0;
    double rel_intensity = 0;
    double continuity = 0;
    double total = 0;

    LossBreakdown& operator+=(const LossBreakdown& o) {
        l2 += o.l2;
        rel_intensity += o.rel_intensity;
        continuity += o.continuity;
        total += o.total;
        return *this;
    }
};

/// total = l2 + alpha * rel + beta * cont.
inline LossBreakdown total_loss(double l2, double rel, double cont, double alpha, double beta) {
    return {l2, rel, cont, l2 + alpha * rel + beta * cont};
}

/// How an RGB pixel becomes a [0, 1] intensity for the relative-intensity term.
enum class IntensityMode { channel_mean, luminance };

namespace detail {

template <typename Scalar>
Scalar sign(Scalar v) {
    return Scalar((v > Scalar(0)) - (v < Scalar(0)));
}

/// [begin, end) of block i when `side` is cut into r blocks; leftover rows or
/// columns join the last block.
inline std::pair<int, int> block_bounds(int side, int r, int i) {
    const int size = side / r;
    return {i * size, i + 1 == r ? side : (i + 1) * size};
}

} // namespace detail

/// Per-pixel intensity in [0, 1] of a 1- or 3-channel map in [-1, 1].
template <typename Scalar>
RowVector<Scalar> intensity(const FeatureMap<Scalar>& img, IntensityMode mode = IntensityMode::channel_mean) {
    if (img.channels() == 1) return (img.data.row(0).array() + Scalar(1)) * Scalar(0.5);
    if (img.channels() != 3) throw Error("shape mismatch", "intensity needs 1 or 3 channels");
    RowVector<Scalar> mean;
    if (mode == IntensityMode::luminance)
        mean = Scalar(0.299) * img.data.row(0) + Scalar(0.587) * img.data.row(1) + Scalar(0.114) * img.data.row(2);
    else
        mean = img.data.colwise().sum() / Scalar(3);
    return (mean.array() + Scalar(1)) * Scalar(0.5);
}

/// Mean of each cell of an r×r grid over a h×w plane, row-major, length r².
template <typename Scalar>
Vector<Scalar> region_means(const RowVector<Scalar>& plane, int h, int w, int r) {
    if (r < 1 || h < r || w < r) throw Error("invalid region grid", "need 1 <= r <= image side");
    if (plane.size() != Eigen::Index(h) * w) throw Error("shape mismatch");
    Vector<Scalar> out(Eigen::Index(r) * r);
    for (int by = 0; by < r; ++by) {
        const auto [y0, y1] = detail::block_bounds(h, r, by);
        for (int bx = 0; bx < r; ++bx) {
            const auto [x0, x1] = detail::block_bounds(w, r, bx);
            Scalar sum = 0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) sum += plane(Eigen::Index(y) * w + x);
            out(Eigen::Index(by) * r + bx) = sum / Scalar((y1 - y0) * (x1 - x0));
        }
    }
    return out;
}

/// D = A·1ᵀ − 1·Aᵀ.
template <typename Scalar>
Matrix<Scalar> region_difference_matrix(const Vector<Scalar>& a) {
    const Eigen::Index n = a.size();
    return a * RowVector<Scalar>::Ones(n) - Vector<Scalar>::Ones(n) * a.transpose();
}

/// mean |tanh(D_A) − tanh(D_B)| over all r⁴ entries. If grad_b is given it
/// receives d loss / d B.
template <typename Scalar>
Scalar relative_intensity_from_means(const Vector<Scalar>& a, const Vector<Scalar>& b, Vector<Scalar>* grad_b = nullptr) {
    if (a.size() != b.size()) throw Error("shape mismatch");
    const Matrix<Scalar> ta = region_difference_matrix(a).array().tanh();
    const Matrix<Scalar> tb = region_difference_matrix(b).array().tanh();
    const Matrix<Scalar> e = ta - tb;
    const Scalar count = Scalar(e.size());
    if (grad_b) {
        // e and sign(e) are antisymmetric, 1 - tb² symmetric, so row and
        // column contributions coincide: dL/dB_k = -(2/n²) Σ_j s_kj (1 - tb_kj²).
        const Matrix<Scalar> s = e.unaryExpr([](Scalar v) { return detail::sign(v); });
        const Matrix<Scalar> w = s.cwiseProduct((Scalar(1) - tb.array().square()).matrix());
        *grad_b = Scalar(-2) / count * w.rowwise().sum();
    }
    return e.cwiseAbs().sum() / count;
}

/// Relative-intensity term for one image and its (raw-valued) output plane.
/// grad_plane, when given, receives d loss / d plane value.
template <typename Scalar>
Scalar relative_intensity_loss(const FeatureMap<Scalar>& image, const RowVector<Scalar>& plane, int h, int w, int r,
                               IntensityMode mode = IntensityMode::channel_mean,
                               RowVector<Scalar>* grad_plane = nullptr) {
    if (image.height != h || image.width != w) throw Error("shape mismatch");
    const Vector<Scalar> a = region_means(intensity(image, mode), h, w, r);
    const Vector<Scalar> b = region_means<Scalar>((plane.array() + Scalar(1)) * Scalar(0.5), h, w, r);
    if (!grad_plane) return relative_intensity_from_means(a, b);
    Vector<Scalar> gb;
    const Scalar loss = relative_intensity_from_means(a, b, &gb);
    grad_plane->setZero(Eigen::Index(h) * w);
    for (int by = 0; by < r; ++by) {
        const auto [y0, y1] = detail::block_bounds(h, r, by);
        for (int bx = 0; bx < r; ++bx) {
            const auto [x0, x1] = detail::block_bounds(w, r, bx);
            const Scalar g = gb(Eigen::Index(by) * r + bx) * Scalar(0.5) / Scalar((y1 - y0) * (x1 - x0));
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) (*grad_plane)(Eigen::Index(y) * w + x) = g;
        }
    }
    return loss;
}

template <typename Scalar>
Scalar relative_intensity_loss(const ImageTensor<Scalar>& image, const DiscretePlane<Scalar>& plane, int r,
                               IntensityMode mode = IntensityMode::channel_mean) {
    return relative_intensity_loss(static_cast<const FeatureMap<Scalar>&>(image), plane.values, plane.height,
                                   plane.width, r, mode);
}

/// mean |b1 − b2|; grad_b1 receives d loss / d b1 (the b2 gradient is its negation).
template <typename Scalar>
Scalar color_continuity_loss(const RowVector<Scalar>& b1, const RowVector<Scalar>& b2,
                             RowVector<Scalar>* grad_b1 = nullptr) {
    if (b1.size() != b2.size() || b1.size() == 0) throw Error("shape mismatch");
    const RowVector<Scalar> d = b1 - b2;
    if (grad_b1) *grad_b1 = d.unaryExpr([](Scalar v) { return detail::sign(v); }) / Scalar(d.size());
    return d.cwiseAbs().sum() / Scalar(d.size());
}

template <typename Scalar>
Scalar color_continuity_loss(const DiscretePlane<Scalar>& b1, const DiscretePlane<Scalar>& b2) {
    if (b1.height != b2.height || b1.width != b2.width) throw Error("shape mismatch");
    return color_continuity_loss(b1.values, b2.values);
}

/// Mean squared difference over pixels and channels; grad receives d loss / d recon.
template <typename Scalar>
Scalar reconstruction_loss(const FeatureMap<Scalar>& orig, const FeatureMap<Scalar>& recon,
                           Matrix<Scalar>* grad = nullptr) {
    if (!orig.same_shape(recon)) throw Error("shape mismatch");
    const Matrix<Scalar> d = recon.data - orig.data;
    const Scalar n = Scalar(d.size());
    if (grad) *grad = Scalar(2) / n * d;
    return d.squaredNorm() / n;
}

/// Mean absolute 8-bit difference per channel, averaged over channels.
inline double pixel_error(const PixelBuffer& orig, const PixelBuffer& recon) {
    if (!orig.same_shape(recon) || orig.data.empty()) throw Error("shape mismatch");
    double total = 0;
    for (int c = 0; c < orig.channels; ++c) {
        std::uint64_t sum = 0;
        for (std::size_t i = std::size_t(c); i < orig.data.size(); i += std::size_t(orig.channels))
            sum += std::uint64_t(std::abs(int(orig.data[i]) - int(recon.data[i])));
        total += double(sum) / (double(orig.data.size()) / orig.channels);
    }
    return total / orig.channels;
}

} // namespace texturebit

#endif // TEXTUREBIT_LOSSES_HPP
