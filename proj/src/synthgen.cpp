#include "texturebit/synthgen.hpp"

#include <cmath>

#include "texturebit/rng.hpp"

namespace texturebit {

namespace {

Rgb random_color(Rng& rng) {
    const auto v = std::uint32_t(rng.uniform_int(0, (1 << 24) - 1));
    return {std::uint8_t(v >> 16), std::uint8_t(v >> 8), std::uint8_t(v)};
}

bool covers(const ShapeSpec& s, double px, double py) {
    const double dx = (px - s.center_x) / (0.5 * s.extent_x);
    const double dy = (py - s.center_y) / (0.5 * s.extent_y);
    if (s.kind == ShapeKind::rectangle) return std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
    return dx * dx + dy * dy <= 1.0;
}

} // namespace

SynthLayout synthetic_layout(const SynthConfig& cfg, std::uint64_t index) {
    cfg.validate();
    Rng rng(cfg.seed, Stream::synthetic, {index});
    SynthLayout layout;
    layout.background = random_color(rng);
    const auto count = int(rng.uniform_int(cfg.min_shapes, cfg.max_shapes));
    const double side = cfg.resolution;
    for (int i = 0; i < count; ++i) {
        ShapeSpec s;
        s.kind = rng.bernoulli(0.5) ? ShapeKind::oval : ShapeKind::rectangle;
        s.center_x = rng.uniform(0.0, side);
        s.center_y = rng.uniform(0.0, side);
        s.extent_x = side * rng.uniform(kMinShapeExtent, kMaxShapeExtent);
        s.extent_y = side * rng.uniform(kMinShapeExtent, kMaxShapeExtent);
        s.color = random_color(rng);
        layout.shapes.push_back(s);
    }
    return layout;
}

PixelBuffer rasterize(const SynthLayout& layout, int resolution) {
    PixelBuffer buf(resolution, resolution, 3);
    for (int y = 0; y < resolution; ++y)
        for (int x = 0; x < resolution; ++x) {
            Rgb color = layout.background;
            for (const auto& s : layout.shapes)
                if (covers(s, x + 0.5, y + 0.5)) color = s.color;
            for (int c = 0; c < 3; ++c) buf.at(y, x, c) = color[std::size_t(c)];
        }
    return buf;
}

PixelBuffer render_synthetic(const SynthConfig& cfg, std::uint64_t index) {
    return rasterize(synthetic_layout(cfg, index), cfg.resolution);
}

} // namespace texturebit
