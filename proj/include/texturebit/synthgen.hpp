#ifndef TEXTUREBIT_SYNTHGEN_HPP
#define TEXTUREBIT_SYNTHGEN_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "texturebit/image_io.hpp"

namespace texturebit {

/// Flat background plus min_shapes..max_shapes ovals/rectangles.
struct SynthConfig {
    int resolution = 128;
    int min_shapes = 2;
    int max_shapes = 5;
    std::uint64_t seed = 0;

    void validate() const {
        if (resolution < 1) throw Error("invalid config", "resolution must be positive");
        if (min_shapes < 1 || min_shapes > max_shapes) throw Error("invalid config", "need 1 <= min_shapes <= max_shapes");
    }
};

using Rgb = std::array<std::uint8_t, 3>;

enum class ShapeKind { oval, rectangle };

/// Center and full extents in pixels; may reach past the canvas.
struct ShapeSpec {
    ShapeKind kind = ShapeKind::rectangle;
    double center_x = 0;
    double center_y = 0;
    double extent_x = 1;
    double extent_y = 1;
    Rgb color{};
};

struct SynthLayout {
    Rgb background{};
    std::vector<ShapeSpec> shapes;
};

/// Shape extents are drawn per axis from this fraction range of the canvas side.
inline constexpr double kMinShapeExtent = 0.05;
inline constexpr double kMaxShapeExtent = 0.70;

/// Random layout for image `index`; a pure function of (cfg, index).
SynthLayout synthetic_layout(const SynthConfig& cfg, std::uint64_t index);

/// Hard-edged rasterization, shapes painted in order over the background.
PixelBuffer rasterize(const SynthLayout& layout, int resolution);

PixelBuffer render_synthetic(const SynthConfig& cfg, std::uint64_t index);

template <typename Scalar = float>
ImageTensor<Scalar> generate_synthetic(const SynthConfig& cfg, std::uint64_t index) {
    return to_tensor<Scalar>(render_synthetic(cfg, index));
}

} // namespace texturebit

#endif // TEXTUREBIT_SYNTHGEN_HPP
