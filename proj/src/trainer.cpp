#include "texturebit/trainer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>

#include "texturebit/parallel.hpp"
#include "texturebit/rng.hpp"

namespace texturebit {

NetworkConfig TrainConfig::network() const {
    NetworkConfig n;
    n.pre_encoder_layers = pre_encoder_layers;
    n.pre_encoder_channels = pre_encoder_channels;
    n.decoder_layers = decoder_layers;
    n.decoder_channels = decoder_channels;
    n.target_bpp = target_bpp;
    n.kernel_size = kernel_size;
    return n;
}

ObjectiveConfig TrainConfig::objective() const {
    ObjectiveConfig o;
    o.alpha = alpha;
    o.beta = beta;
    o.r = r;
    o.intensity = intensity;
    o.items = batch_size;
    o.pairs = batch_size / 2;
    return o;
}

SynthConfig TrainConfig::synth() const {
    SynthConfig s;
    s.resolution = resolution;
    s.seed = seed;
    return s;
}

void TrainConfig::validate() const {
    if (batch_size < 2 || batch_size % 2 != 0) throw Error("invalid config", "batch size must be even and >= 2");
    if (!(synthetic_fraction >= 0.0 && synthetic_fraction <= 1.0))
        throw Error("invalid config", "synthetic fraction must be in [0, 1]");
    if (!(noise >= 0.0)) throw Error("invalid config", "noise amplitude must be >= 0");
    if (!(learning_rate >= 0.0)) throw Error("invalid config", "learning rate must be >= 0");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw Error("invalid config", "loss weights must be >= 0");
    if (steps < 0) throw Error("invalid config", "steps must be >= 0");
    if (resolution < 1 || r < 1 || r > resolution) throw Error("invalid config", "need 1 <= r <= resolution");
    if (checkpoint_every < 1) throw Error("invalid config", "checkpoint cadence must be >= 1");
    network().validate();
}

std::vector<ImageTensor<float>> load_corpus(const std::filesystem::path& dir, int resolution, FitMode fit) {
    std::vector<ImageTensor<float>> out;
    for (const auto& path : list_png_files(dir)) out.push_back(fit_to(to_tensor<float>(load_image(path)), resolution, fit));
    return out;
}

namespace {

/// x + U(-a, a) per sample, clamped. Returns the noise actually drawn.
ImageTensor<float> draw_noise(Rng& rng, int h, int w, double amplitude) {
    ImageTensor<float> n(h, w);
    if (amplitude == 0.0) return n;
    for (Eigen::Index i = 0; i < n.data.size(); ++i) n.data.data()[i] = float(rng.uniform(-amplitude, amplitude));
    return n;
}

ImageTensor<float> add_clamped(const ImageTensor<float>& x, const ImageTensor<float>& noise) {
    ImageTensor<float> out = x;
    out.data = (x.data + noise.data).cwiseMax(-1.0f).cwiseMin(1.0f);
    return out;
}

} // namespace

BatchSpec assemble_batch(const std::vector<ImageTensor<float>>& corpus, const TrainConfig& cfg,
                         std::uint64_t step_index) {
    if (corpus.empty()) throw Error("empty corpus");
    const int pairs = cfg.batch_size / 2;
    const SynthConfig synth = cfg.synth();
    BatchSpec batch;
    for (int k = 0; k < pairs; ++k) {
        Rng pick(cfg.seed, Stream::batch, {step_index, std::uint64_t(k)});
        const bool synthetic = pick.bernoulli(cfg.synthetic_fraction);
        ImageTensor<float> source;
        if (synthetic) {
            source = generate_synthetic<float>(synth, step_index * std::uint64_t(pairs) + std::uint64_t(k));
        } else {
            source = corpus[std::size_t(pick.uniform_int(0, std::int64_t(corpus.size()) - 1))];
            if (source.height != cfg.resolution || source.width != cfg.resolution)
                source = fit_to(source, cfg.resolution, cfg.fit);
        }
        Rng noise(cfg.seed, Stream::noise, {step_index, std::uint64_t(k)});
        const ImageTensor<float> augmented =
            add_clamped(source, draw_noise(noise, source.height, source.width, cfg.noise));
        ImageTensor<float> perturbation = draw_noise(noise, source.height, source.width, cfg.noise);
        batch.items.push_back(augmented);
        batch.items.push_back(add_clamped(augmented, perturbation));
        batch.perturbation.push_back(std::move(perturbation));
        const Origin origin = synthetic ? Origin::synthetic : Origin::corpus;
        batch.origins.push_back(origin);
        batch.origins.push_back(origin);
    }
    return batch;
}

LossBreakdown batch_gradients(const ModelParams<float>& params, const BatchSpec& batch, const TrainConfig& cfg,
                              ModelParams<float>& grads) {
    ObjectiveConfig obj = cfg.objective();
    obj.items = int(batch.items.size());
    obj.pairs = batch.pairs();
    const int pairs = batch.pairs();
    const int threads = std::min(pairs, cfg.threads > 0 ? cfg.threads : thread_count());
    grads = params.zeros_like();
    LossBreakdown total;

    if (threads <= 1 && cfg.strict_deterministic) {
        for (int k = 0; k < pairs; ++k) {
            ModelParams<float> g = params.zeros_like();
            total += pair_objective(params, batch.items[std::size_t(2 * k)], batch.items[std::size_t(2 * k + 1)], obj,
                                    QuantizerMode::discrete, &g);
            grads.add_scaled(g, 1.0f);
        }
        return total;
    }

    if (threads <= 1) {
        for (int k = 0; k < pairs; ++k)
            total += pair_objective(params, batch.items[std::size_t(2 * k)], batch.items[std::size_t(2 * k + 1)], obj,
                                    QuantizerMode::discrete, &grads);
        return total;
    }

    if (cfg.strict_deterministic) {
        // Same reduction order as the single-threaded strict path above.
        std::vector<ModelParams<float>> per_pair(static_cast<std::size_t>(pairs), params.zeros_like());
        std::vector<LossBreakdown> losses(static_cast<std::size_t>(pairs));
        parallel_for(pairs, threads, [&](int k) {
            losses[std::size_t(k)] = pair_objective(params, batch.items[std::size_t(2 * k)],
                                                    batch.items[std::size_t(2 * k + 1)], obj,
                                                    QuantizerMode::discrete, &per_pair[std::size_t(k)]);
        });
        for (int k = 0; k < pairs; ++k) {
            grads.add_scaled(per_pair[std::size_t(k)], 1.0f);
            total += losses[std::size_t(k)];
        }
        return total;
    }

    std::mutex mutex;
    parallel_for(pairs, threads, [&](int k) {
        ModelParams<float> g = params.zeros_like();
        const LossBreakdown l = pair_objective(params, batch.items[std::size_t(2 * k)],
                                               batch.items[std::size_t(2 * k + 1)], obj, QuantizerMode::discrete, &g);
        std::lock_guard lock(mutex);
        grads.add_scaled(g, 1.0f);
        total += l;
    });
    return total;
}

LossBreakdown train_step(ModelParams<float>& params, OptimizerState& opt, const BatchSpec& batch,
                         const TrainConfig& cfg) {
    ModelParams<float> grads;
    const LossBreakdown loss = batch_gradients(params, batch, cfg, grads);
    if (!std::isfinite(loss.total) || !grads.all_finite()) throw Error("non-finite loss");
    adam_update(params, grads, opt, cfg.adam());
    return loss;
}

std::filesystem::path metrics_path(const std::filesystem::path& checkpoint_path) {
    return checkpoint_path.string() + ".metrics.csv";
}

TrainResult train(const std::vector<ImageTensor<float>>& corpus, const TrainConfig& cfg,
                  const std::filesystem::path& checkpoint_path, const StepCallback& on_step) {
    cfg.validate();
    if (corpus.empty()) throw Error("empty corpus");
    TrainResult result{init_params<float>(cfg.network(), cfg.seed), {}, {}};
    result.optimizer = OptimizerState::zeros_for(result.params);

    std::ofstream metrics;
    if (!checkpoint_path.empty()) {
        metrics.open(metrics_path(checkpoint_path), std::ios::trunc);
        if (!metrics) throw Error("unwritable file", metrics_path(checkpoint_path).string());
        metrics << "step,l2,rel_intensity,continuity,total\n";
    }
    for (int step = 0; step < cfg.steps; ++step) {
        const BatchSpec batch = assemble_batch(corpus, cfg, std::uint64_t(step));
        const LossBreakdown loss = train_step(result.params, result.optimizer, batch, cfg);
        result.history.push_back(loss);
        if (metrics.is_open()) {
            metrics << fmt::format("{},{:.9g},{:.9g},{:.9g},{:.9g}\n", step + 1, loss.l2, loss.rel_intensity,
                                   loss.continuity, loss.total);
            metrics.flush();
        }
        if (!checkpoint_path.empty() && (step + 1) % cfg.checkpoint_every == 0)
            save_checkpoint(checkpoint_path, result.params, &result.optimizer);
        if (on_step) on_step(step + 1, loss);
    }
    if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, result.params, &result.optimizer);
    return result;
}

TrainResult train(const std::filesystem::path& corpus_dir, const TrainConfig& cfg,
                  const std::filesystem::path& checkpoint_path, const StepCallback& on_step) {
    return train(load_corpus(corpus_dir, cfg.resolution, cfg.fit), cfg, checkpoint_path, on_step);
}

} // namespace texturebit
