#ifndef TEXTUREBIT_OPTIMIZER_HPP
#define TEXTUREBIT_OPTIMIZER_HPP

#include <cmath>
#include <cstdint>

#include "texturebit/network.hpp"

namespace texturebit {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment accumulators shaped like the model, plus the step count.
struct OptimizerState {
    ModelParams<float> m;
    ModelParams<float> v;
    std::int64_t step = 0;

    static OptimizerState zeros_for(const ModelParams<float>& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

namespace detail {

template <typename Derived>
void adam_tensor(Eigen::MatrixBase<Derived>& param, const Eigen::MatrixBase<Derived>& grad,
                 Eigen::MatrixBase<Derived>& m, Eigen::MatrixBase<Derived>& v, const AdamConfig& cfg, float c1,
                 float c2) {
    const float b1 = float(cfg.beta1), b2 = float(cfg.beta2), lr = float(cfg.learning_rate), eps = float(cfg.epsilon);
    m.derived() = b1 * m.derived() + (1.0f - b1) * grad.derived();
    v.derived() = b2 * v.derived() + (1.0f - b2) * grad.derived().cwiseAbs2();
    param.derived().array() -=
        lr * (m.derived().array() / c1) / ((v.derived().array() / c2).sqrt() + eps);
}

} // namespace detail

/// One bias-corrected Adam update of params from grads.
inline void adam_update(ModelParams<float>& params, const ModelParams<float>& grads, OptimizerState& state,
                        const AdamConfig& cfg) {
    state.step += 1;
    const float c1 = float(1.0 - std::pow(cfg.beta1, double(state.step)));
    const float c2 = float(1.0 - std::pow(cfg.beta2, double(state.step)));
    auto update = [&](std::vector<ConvLayer<float>>& p, const std::vector<ConvLayer<float>>& g,
                      std::vector<ConvLayer<float>>& m, std::vector<ConvLayer<float>>& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            detail::adam_tensor(p[i].weight, g[i].weight, m[i].weight, v[i].weight, cfg, c1, c2);
            detail::adam_tensor(p[i].bias, g[i].bias, m[i].bias, v[i].bias, cfg, c1, c2);
        }
    };
    update(params.pre_encoder, grads.pre_encoder, state.m.pre_encoder, state.v.pre_encoder);
    update(params.dde, grads.dde, state.m.dde, state.v.dde);
    update(params.decoder, grads.decoder, state.m.decoder, state.v.decoder);
}

} // namespace texturebit

#endif // TEXTUREBIT_OPTIMIZER_HPP
