#ifndef TEXTUREBIT_BASELINES_HPP
#define TEXTUREBIT_BASELINES_HPP

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "texturebit/image_io.hpp"
#include "texturebit/network.hpp"

namespace texturebit {

struct GrayHistogram {
    std::array<std::uint64_t, 256> counts{};

    static GrayHistogram of(const PixelBuffer& gray);
    std::uint64_t total() const;
};

/// Unweighted channel mean, rounded half away from zero.
PixelBuffer to_gray(const PixelBuffer& buf);

/// Threshold t maximizing between-class variance, where the classes are
/// samples < t and samples >= t. The smallest t wins ties.
/// Throws Error("degenerate histogram") when every sample is equal.
int otsu_threshold(const PixelBuffer& gray);

/// samples >= t become 255, the rest 0.
PixelBuffer apply_threshold(const PixelBuffer& gray, int t);

/// Left-to-right raster error diffusion with weights 7, 3, 5, 1 (/16).
PixelBuffer floyd_steinberg(const PixelBuffer& gray);

enum class Method { otsu, fsd, ours };

/// Parses "otsu,fsd,ours"; an empty string yields no methods.
std::vector<Method> parse_methods(std::string_view list);

/// Original followed by one tile per method, left to right, all RGB.
/// `model` is required only when Method::ours is requested.
PixelBuffer compare_grid(const PixelBuffer& input, const ModelParams<float>* model, const std::vector<Method>& methods);

} // namespace texturebit

#endif // TEXTUREBIT_BASELINES_HPP
