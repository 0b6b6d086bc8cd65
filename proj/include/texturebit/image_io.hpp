#ifndef TEXTUREBIT_IMAGE_IO_HPP
#define TEXTUREBIT_IMAGE_IO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "texturebit/tensor.hpp"

namespace texturebit {

/// 8-bit image, row-major, channel-interleaved. channels is 1 or 3.
struct PixelBuffer {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> data;

    PixelBuffer() = default;
    PixelBuffer(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), data(std::size_t(w) * h * c, fill) {
        if (c != 1 && c != 3) throw Error("shape mismatch", "channels must be 1 or 3");
    }

    std::uint8_t& at(int y, int x, int c = 0) {
        return data[(std::size_t(y) * width + x) * channels + c];
    }
    std::uint8_t at(int y, int x, int c = 0) const {
        return data[(std::size_t(y) * width + x) * channels + c];
    }

    bool same_shape(const PixelBuffer& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
    bool operator==(const PixelBuffer&) const = default;
};

/// Reads an 8-bit PNG as a 3-channel buffer. Alpha is dropped, gray replicated.
/// Throws Error("unreadable file") or Error("unsupported format").
PixelBuffer load_image(const std::filesystem::path& path);

/// Writes a 1- or 3-channel buffer as an 8-bit PNG.
void save_image(const PixelBuffer& buf, const std::filesystem::path& path);

/// All *.png files in a directory, sorted by file name.
std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir);

inline std::uint8_t quantize_sample(double v) {
    // std::round is half-away-from-zero
    return std::uint8_t(std::clamp(std::round((v + 1.0) * 127.5), 0.0, 255.0));
}

template <typename Scalar = float>
ImageTensor<Scalar> to_tensor(const PixelBuffer& buf) {
    ImageTensor<Scalar> t(buf.height, buf.width);
    for (int y = 0; y < buf.height; ++y)
        for (int x = 0; x < buf.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const int src = buf.channels == 3 ? c : 0;
                t(c, y, x) = Scalar(double(buf.at(y, x, src)) / 127.5 - 1.0);
            }
    return t;
}

template <typename Scalar>
PixelBuffer from_tensor(const FeatureMap<Scalar>& t) {
    if (t.channels() != 3 && t.channels() != 1) throw Error("shape mismatch");
    PixelBuffer buf(t.width, t.height, t.channels());
    for (int y = 0; y < t.height; ++y)
        for (int x = 0; x < t.width; ++x)
            for (int c = 0; c < t.channels(); ++c) buf.at(y, x, c) = quantize_sample(double(t(c, y, x)));
    return buf;
}

/// Level k of an L-level plane is drawn as round(255 k / (L - 1)).
template <typename Scalar>
PixelBuffer render_plane(const DiscretePlane<Scalar>& p) {
    PixelBuffer buf(p.width, p.height, 1);
    for (Eigen::Index i = 0; i < p.pixels(); ++i) buf.data[std::size_t(i)] = quantize_sample(double(p.values(i)));
    return buf;
}

/// -1 -> 0, +1 -> 255. Throws Error("not a binary plane") on any other value.
template <typename Scalar>
PixelBuffer render_binary(const DiscretePlane<Scalar>& p) {
    for (Eigen::Index i = 0; i < p.pixels(); ++i)
        if (p.values(i) != Scalar(-1) && p.values(i) != Scalar(1)) throw Error("not a binary plane");
    return render_plane(p);
}

/// How corpus images are brought to the training resolution.
enum class FitMode { center_crop, stretch };

namespace detail {

template <typename Scalar>
FeatureMap<Scalar> bilinear(const FeatureMap<Scalar>& src, int y0, int x0, int src_h, int src_w,
                            int out_h, int out_w) {
    FeatureMap<Scalar> out(src.channels(), out_h, out_w);
    const bool identity = src_h == out_h && src_w == out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * double(src_h) / out_h - 0.5;
        fy = std::clamp(fy, 0.0, double(src_h - 1));
        const int iy = identity ? y : int(std::floor(fy));
        const int iy1 = std::min(iy + 1, src_h - 1);
        const Scalar ty = identity ? Scalar(0) : Scalar(fy - iy);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * double(src_w) / out_w - 0.5;
            fx = std::clamp(fx, 0.0, double(src_w - 1));
            const int ix = identity ? x : int(std::floor(fx));
            const int ix1 = std::min(ix + 1, src_w - 1);
            const Scalar tx = identity ? Scalar(0) : Scalar(fx - ix);
            for (int c = 0; c < src.channels(); ++c) {
                const Scalar a = src(c, y0 + iy, x0 + ix), b = src(c, y0 + iy, x0 + ix1);
                const Scalar d = src(c, y0 + iy1, x0 + ix), e = src(c, y0 + iy1, x0 + ix1);
                // a + t (b - a) keeps constant regions exactly constant
                const Scalar top = a + tx * (b - a);
                const Scalar bottom = d + tx * (e - d);
                out(c, y, x) = top + ty * (bottom - top);
            }
        }
    }
    return out;
}

} // namespace detail

/// Center crop to a square, then bilinear resample to n×n.
template <typename Scalar>
ImageTensor<Scalar> center_crop_resize(const ImageTensor<Scalar>& t, int n) {
    if (n <= 0) throw Error("invalid size", "n must be positive");
    const int side = std::min(t.height, t.width);
    const int y0 = (t.height - side) / 2;
    const int x0 = (t.width - side) / 2;
    return ImageTensor<Scalar>(detail::bilinear(t, y0, x0, side, side, n, n));
}

/// Bilinear resample of the whole image to n×n, ignoring aspect ratio.
template <typename Scalar>
ImageTensor<Scalar> stretch_resize(const ImageTensor<Scalar>& t, int n) {
    if (n <= 0) throw Error("invalid size", "n must be positive");
    return ImageTensor<Scalar>(detail::bilinear(t, 0, 0, t.height, t.width, n, n));
}

template <typename Scalar>
ImageTensor<Scalar> fit_to(const ImageTensor<Scalar>& t, int n, FitMode mode) {
    return mode == FitMode::center_crop ? center_crop_resize(t, n) : stretch_resize(t, n);
}

} // namespace texturebit

#endif // TEXTUREBIT_IMAGE_IO_HPP
