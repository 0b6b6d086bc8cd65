#ifndef TEXTUREBIT_TENSOR_HPP
#define TEXTUREBIT_TENSOR_HPP

#include <Eigen/Dense>

#include "texturebit/error.hpp"

namespace texturebit {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Multi-channel image-shaped data. Row c of `data` holds channel c with the
/// pixels in row-major order, so a convolution is one GEMM over this layout.
template <typename Scalar>
struct FeatureMap {
    int height = 0;
    int width = 0;
    Matrix<Scalar> data;

    FeatureMap() = default;
    FeatureMap(int channels, int h, int w)
        : height(h), width(w), data(Matrix<Scalar>::Zero(channels, Eigen::Index(h) * w)) {}

    int channels() const { return int(data.rows()); }
    Eigen::Index pixels() const { return Eigen::Index(height) * width; }

    Scalar& operator()(int c, int y, int x) { return data(c, Eigen::Index(y) * width + x); }
    Scalar operator()(int c, int y, int x) const { return data(c, Eigen::Index(y) * width + x); }

    bool same_shape(const FeatureMap& o) const {
        return height == o.height && width == o.width && channels() == o.channels();
    }

    template <typename Other>
    FeatureMap<Other> cast() const {
        FeatureMap<Other> out;
        out.height = height;
        out.width = width;
        out.data = data.template cast<Other>();
        return out;
    }
};

/// h×w×3 image in the canonical [-1, 1] range.
template <typename Scalar>
struct ImageTensor : FeatureMap<Scalar> {
    ImageTensor() = default;
    ImageTensor(int h, int w) : FeatureMap<Scalar>(3, h, w) {}
    explicit ImageTensor(FeatureMap<Scalar> m) : FeatureMap<Scalar>(std::move(m)) {
        if (this->channels() != 3) throw Error("shape mismatch", "image tensor needs 3 channels");
    }

    template <typename Other>
    ImageTensor<Other> cast() const {
        return ImageTensor<Other>(FeatureMap<Scalar>::template cast<Other>());
    }
};

/// Single-channel plane whose values are members of a quantizer level set.
template <typename Scalar>
struct DiscretePlane {
    int height = 0;
    int width = 0;
    int levels = 2;
    RowVector<Scalar> values;

    Eigen::Index pixels() const { return Eigen::Index(height) * width; }
    Scalar operator()(int y, int x) const { return values(Eigen::Index(y) * width + x); }
};

} // namespace texturebit

#endif // TEXTUREBIT_TENSOR_HPP
