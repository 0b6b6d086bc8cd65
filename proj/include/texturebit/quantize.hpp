#ifndef TEXTUREBIT_QUANTIZE_HPP
#define TEXTUREBIT_QUANTIZE_HPP

#include <cmath>
#include <vector>

#include "texturebit/error.hpp"

namespace texturebit {

/// L evenly spaced levels in [-1, 1], endpoints included: (2k - (L-1)) / (L-1).
struct QuantSpec {
    int levels = 2;

    explicit QuantSpec(int l = 2) : levels(l) {
        if (l < 2) throw Error("invalid quantizer", "need at least 2 levels");
    }

    /// Computed as one correctly rounded division, so level(k) == -level(L-1-k) exactly.
    template <typename Scalar = double>
    Scalar level(int k) const {
        return Scalar(double(2 * k - (levels - 1)) / double(levels - 1));
    }

    /// Index of the nearest level to v in [-1, 1]; ties go to the larger level.
    template <typename Scalar>
    int nearest_index(Scalar v) const {
        const double u = (double(v) + 1.0) * 0.5 * double(levels - 1);
        const double k = std::floor(u + 0.5);
        if (k < 0) return 0;
        if (k > levels - 1) return levels - 1;
        return int(k);
    }

    std::vector<double> level_set() const {
        std::vector<double> out(static_cast<std::size_t>(levels));
        for (int k = 0; k < levels; ++k) out[std::size_t(k)] = level(k);
        return out;
    }

    bool operator==(const QuantSpec&) const = default;
};

/// Nearest level to tanh(x).
template <typename Scalar>
Scalar discretize_tanh(Scalar x, const QuantSpec& spec) {
    return spec.level<Scalar>(spec.nearest_index(std::tanh(x)));
}

/// Straight-through gradient: the derivative of the tanh surrogate, for any L.
template <typename Scalar>
Scalar ste_gradient(Scalar x) {
    const Scalar t = std::tanh(x);
    return Scalar(1) - t * t;
}

/// One bit removed per stage: 256, 128, ..., 2.
inline std::vector<QuantSpec> dde_level_schedule() {
    std::vector<QuantSpec> out;
    for (int levels = 256; levels >= 2; levels /= 2) out.emplace_back(levels);
    return out;
}

/// The first 9 - bpp stages of the schedule; the last has 2^bpp levels.
inline std::vector<QuantSpec> dde_level_schedule(int target_bpp) {
    if (target_bpp < 1 || target_bpp > 8) throw Error("invalid bpp", std::to_string(target_bpp));
    auto full = dde_level_schedule();
    full.resize(std::size_t(9 - target_bpp));
    return full;
}

} // namespace texturebit

#endif // TEXTUREBIT_QUANTIZE_HPP
