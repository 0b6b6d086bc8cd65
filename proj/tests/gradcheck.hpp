#ifndef TEXTUREBIT_GRADCHECK_HPP
#define TEXTUREBIT_GRADCHECK_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "texturebit/network.hpp"
#include "texturebit/rng.hpp"

namespace texturebit::testing {

struct ParamRef {
    Stage stage;
    int layer;
    bool bias;
    Eigen::Index index;
};

inline double& param_at(ModelParams<double>& p, const ParamRef& r) {
    auto& layers = r.stage == Stage::pre_encoder ? p.pre_encoder : r.stage == Stage::dde ? p.dde : p.decoder;
    auto& l = layers[std::size_t(r.layer)];
    return r.bias ? l.bias.data()[r.index] : l.weight.data()[r.index];
}

inline double param_at(const ModelParams<double>& p, const ParamRef& r) {
    return param_at(const_cast<ModelParams<double>&>(p), r);
}

/// Every parameter of p in canonical order.
inline std::vector<ParamRef> all_params(const ModelParams<double>& p) {
    std::vector<ParamRef> out;
    p.for_each_layer([&](Stage s, int i, const ConvLayer<double>& l) {
        for (Eigen::Index j = 0; j < l.weight.size(); ++j) out.push_back({s, i, false, j});
        for (Eigen::Index j = 0; j < l.bias.size(); ++j) out.push_back({s, i, true, j});
    });
    return out;
}

/// `per_stage` random parameters from each of the three stages.
inline std::vector<ParamRef> sample_params(const ModelParams<double>& p, int per_stage, std::uint64_t seed) {
    Rng rng(seed, Stream::init, {0xc4ec});
    std::vector<ParamRef> out;
    auto pick = [&](Stage s, const std::vector<ConvLayer<double>>& layers) {
        for (int n = 0; n < per_stage; ++n) {
            const int li = int(rng.uniform_int(0, std::int64_t(layers.size()) - 1));
            const auto& l = layers[std::size_t(li)];
            const bool bias = rng.bernoulli(0.25);
            const auto size = bias ? l.bias.size() : l.weight.size();
            out.push_back({s, li, bias, Eigen::Index(rng.uniform_int(0, std::int64_t(size) - 1))});
        }
    };
    pick(Stage::pre_encoder, p.pre_encoder);
    pick(Stage::dde, p.dde);
    pick(Stage::decoder, p.decoder);
    return out;
}

struct GradSample {
    ParamRef ref;
    double analytic;
    double numeric;
};

/// Central differences of loss around p at the listed parameters.
inline std::vector<GradSample> finite_differences(ModelParams<double> p, const ModelParams<double>& analytic,
                                                  const std::vector<ParamRef>& refs,
                                                  const std::function<double(const ModelParams<double>&)>& loss,
                                                  double h = 1e-7) {
    std::vector<GradSample> out;
    for (const auto& r : refs) {
        double& v = param_at(p, r);
        const double saved = v;
        v = saved + h;
        const double up = loss(p);
        v = saved - h;
        const double down = loss(p);
        v = saved;
        out.push_back({r, param_at(analytic, r), (up - down) / (2 * h)});
    }
    return out;
}

/// Agreement within `rel` relative error, or within `abs_floor` outright.
inline bool grad_close(double a, double b, double rel = 1e-3, double abs_floor = 1e-6) {
    const double d = std::abs(a - b);
    return d <= abs_floor || d <= rel * std::max(std::abs(a), std::abs(b));
}

} // namespace texturebit::testing

#endif // TEXTUREBIT_GRADCHECK_HPP
