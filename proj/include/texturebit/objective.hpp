#ifndef TEXTUREBIT_OBJECTIVE_HPP
#define TEXTUREBIT_OBJECTIVE_HPP

#include "texturebit/losses.hpp"
#include "texturebit/network.hpp"

namespace texturebit {

/// Weights and normalizers of the batch objective
///   L2 + alpha * relative_intensity + beta * color_continuity
/// where L2 and relative intensity are averaged over `items` images and
/// color continuity over `pairs` (image, perturbed image) pairs.
struct ObjectiveConfig {
    double alpha = 0.1;
    double beta = 0.1;
    int r = 8;
    IntensityMode intensity = IntensityMode::channel_mean;
    int items = 2;
    int pairs = 1;
};

/// Contribution of one pair to the batch objective. Summing the result over
/// all pairs of a batch gives the batch losses. When grads is non-null the
/// pair's parameter gradients are accumulated into it.
template <typename Scalar>
LossBreakdown pair_objective(const ModelParams<Scalar>& p, const ImageTensor<Scalar>& first,
                             const ImageTensor<Scalar>& second, const ObjectiveConfig& cfg,
                             QuantizerMode mode = QuantizerMode::discrete, ModelParams<Scalar>* grads = nullptr) {
    const ForwardPass<Scalar> fa = forward(first, p, mode);
    const ForwardPass<Scalar> fb = forward(second, p, mode);
    const int h = first.height, w = first.width;
    const Scalar item_scale = Scalar(1.0 / cfg.items);
    const Scalar pair_scale = Scalar(1.0 / cfg.pairs);

    const bool want = grads != nullptr;
    OutputGradients<Scalar> ga, gb;
    Matrix<Scalar> rec_a, rec_b;
    RowVector<Scalar> rel_a, rel_b, cont;

    const Scalar l2 = reconstruction_loss<Scalar>(first, fa.decoder.back(), want ? &rec_a : nullptr) +
                      reconstruction_loss<Scalar>(second, fb.decoder.back(), want ? &rec_b : nullptr);
    const Scalar rel =
        relative_intensity_loss<Scalar>(first, fa.plane_map().data.row(0), h, w, cfg.r, cfg.intensity,
                                        want ? &rel_a : nullptr) +
        relative_intensity_loss<Scalar>(second, fb.plane_map().data.row(0), h, w, cfg.r, cfg.intensity,
                                        want ? &rel_b : nullptr);
    const Scalar con = color_continuity_loss<Scalar>(fa.plane_map().data.row(0), fb.plane_map().data.row(0),
                                                     want ? &cont : nullptr);

    const LossBreakdown out = total_loss(double(l2 * item_scale), double(rel * item_scale),
                                         double(con * pair_scale), cfg.alpha, cfg.beta);
    if (!grads) return out;

    const Scalar alpha = Scalar(cfg.alpha), beta = Scalar(cfg.beta);
    auto plane_grad = [&](const RowVector<Scalar>& rel_g, Scalar cont_sign) {
        FeatureMap<Scalar> g(1, h, w);
        g.data.row(0) = alpha * item_scale * rel_g + cont_sign * beta * pair_scale * cont;
        return g;
    };
    ga.reconstruction.height = gb.reconstruction.height = h;
    ga.reconstruction.width = gb.reconstruction.width = w;
    ga.reconstruction.data = item_scale * rec_a;
    gb.reconstruction.data = item_scale * rec_b;
    ga.plane = plane_grad(rel_a, Scalar(1));
    gb.plane = plane_grad(rel_b, Scalar(-1));
    backward(fa, p, ga, *grads);
    backward(fb, p, gb, *grads);
    return out;
}

} // namespace texturebit

#endif // TEXTUREBIT_OBJECTIVE_HPP
