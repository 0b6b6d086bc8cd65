#ifndef TEXTUREBIT_TRAINER_HPP
#define TEXTUREBIT_TRAINER_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "texturebit/checkpoint.hpp"
#include "texturebit/image_io.hpp"
#include "texturebit/losses.hpp"
#include "texturebit/network.hpp"
#include "texturebit/objective.hpp"
#include "texturebit/optimizer.hpp"
#include "texturebit/synthgen.hpp"

namespace texturebit {

struct TrainConfig {
    double learning_rate = 1e-4;
    int batch_size = 16;
    double alpha = 0.1;
    double beta = 0.1;
    int r = 8;
    double synthetic_fraction = 0.10;
    /// Half-width of the additive uniform noise on the [-1, 1] scale; used for
    /// both the input augmentation and the pair perturbation.
    double noise = 0.1;
    int steps = 0;
    std::uint64_t seed = 0;
    int resolution = 128;
    int target_bpp = 1;
    int decoder_layers = 2;
    int pre_encoder_layers = 10;
    int pre_encoder_channels = 128;
    int decoder_channels = 128;
    int kernel_size = 6;
    IntensityMode intensity = IntensityMode::channel_mean;
    FitMode fit = FitMode::center_crop;
    /// Sum per-pair gradients in pair order so results do not depend on threading.
    bool strict_deterministic = false;
    int checkpoint_every = 500;
    /// 0 means thread_count().
    int threads = 0;

    NetworkConfig network() const;
    ObjectiveConfig objective() const;
    AdamConfig adam() const { return {learning_rate, 0.9, 0.999, 1e-8}; }
    SynthConfig synth() const;
    void validate() const;
};

enum class Origin { corpus, synthetic };

/// Items 2k and 2k+1 form a pair: item 2k+1 is item 2k plus the per-pixel
/// perturbation stored in perturbation[k], clamped to [-1, 1].
struct BatchSpec {
    std::vector<ImageTensor<float>> items;
    std::vector<Origin> origins;
    std::vector<ImageTensor<float>> perturbation;

    int pairs() const { return int(items.size() / 2); }
};

/// Corpus images brought to a square training resolution.
std::vector<ImageTensor<float>> load_corpus(const std::filesystem::path& dir, int resolution,
                                            FitMode fit = FitMode::center_crop);

/// Deterministic in (cfg.seed, step_index). Throws Error("empty corpus").
BatchSpec assemble_batch(const std::vector<ImageTensor<float>>& corpus, const TrainConfig& cfg,
                         std::uint64_t step_index);

/// Batch losses and parameter gradients without updating anything.
LossBreakdown batch_gradients(const ModelParams<float>& params, const BatchSpec& batch, const TrainConfig& cfg,
                              ModelParams<float>& grads);

/// Forward + backward over the batch and one Adam update. Returns the loss
/// before the update. On a non-finite loss throws Error("non-finite loss")
/// and leaves params and opt untouched.
LossBreakdown train_step(ModelParams<float>& params, OptimizerState& opt, const BatchSpec& batch,
                         const TrainConfig& cfg);

struct TrainResult {
    ModelParams<float> params;
    OptimizerState optimizer;
    std::vector<LossBreakdown> history;
};

/// Called after each step with (1-based step, loss).
using StepCallback = std::function<void(int, const LossBreakdown&)>;

/// Runs cfg.steps steps from a fresh initialization. When checkpoint_path is
/// non-empty, writes it every cfg.checkpoint_every steps and at the end, and
/// writes one CSV record per step to <checkpoint_path>.metrics.csv.
TrainResult train(const std::vector<ImageTensor<float>>& corpus, const TrainConfig& cfg,
                  const std::filesystem::path& checkpoint_path = {}, const StepCallback& on_step = {});

TrainResult train(const std::filesystem::path& corpus_dir, const TrainConfig& cfg,
                  const std::filesystem::path& checkpoint_path, const StepCallback& on_step = {});

std::filesystem::path metrics_path(const std::filesystem::path& checkpoint_path);

} // namespace texturebit

#endif // TEXTUREBIT_TRAINER_HPP
