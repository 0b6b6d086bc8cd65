#include "texturebit/commands.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <array>
#include <iostream>

#include "texturebit/baselines.hpp"
#include "texturebit/checkpoint.hpp"
#include "texturebit/losses.hpp"
#include "texturebit/parallel.hpp"
#include "texturebit/synthgen.hpp"
#include "texturebit/trainer.hpp"

namespace texturebit {

DiscretePlane<float> parse_plane(const PixelBuffer& rendered, int levels) {
    const QuantSpec spec(levels);
    std::array<int, 256> index_of;
    index_of.fill(-1);
    for (int k = 0; k < levels; ++k) index_of[quantize_sample(spec.level(k))] = k;

    DiscretePlane<float> plane;
    plane.height = rendered.height;
    plane.width = rendered.width;
    plane.levels = levels;
    plane.values.resize(plane.pixels());
    for (int y = 0; y < rendered.height; ++y)
        for (int x = 0; x < rendered.width; ++x) {
            const std::uint8_t s = rendered.at(y, x, 0);
            for (int c = 1; c < rendered.channels; ++c)
                if (rendered.at(y, x, c) != s) throw Error("input not in level set", "channels differ");
            const int k = index_of[s];
            if (k < 0) throw Error("input not in level set", fmt::format("sample {} at ({}, {})", s, x, y));
            plane.values(Eigen::Index(y) * rendered.width + x) = spec.level<float>(k);
        }
    return plane;
}

PixelBuffer binarize_image(const PixelBuffer& input, const ModelParams<float>& model) {
    return render_plane(binarize(to_tensor<float>(input), model));
}

PixelBuffer reconstruct_image(const PixelBuffer& rendered, const ModelParams<float>& model) {
    return from_tensor<float>(decode(parse_plane(rendered, model.config.output_levels()), model));
}

PixelBuffer roundtrip_image(const PixelBuffer& input, const ModelParams<float>& model) {
    return from_tensor<float>(decode(binarize(to_tensor<float>(input), model), model));
}

double mean_pixel_error(const std::vector<PixelBuffer>& originals,
                        const std::function<PixelBuffer(const PixelBuffer&)>& reconstruct, int threads) {
    if (originals.empty()) throw Error("empty corpus");
    std::vector<double> errors(originals.size());
    parallel_for(int(originals.size()), threads, [&](int i) {
        errors[std::size_t(i)] = pixel_error(originals[std::size_t(i)], reconstruct(originals[std::size_t(i)]));
    });
    double sum = 0;
    for (double e : errors) sum += e;
    return sum / double(errors.size());
}

void cmd_binarize(const std::filesystem::path& model, const std::filesystem::path& input,
                  const std::filesystem::path& output, std::optional<int> bpp) {
    const Checkpoint ck = load_checkpoint(model);
    if (bpp && *bpp != ck.params.config.target_bpp)
        throw Error("bpp mismatch with checkpoint",
                    fmt::format("requested {}, checkpoint trained for {}", *bpp, ck.params.config.target_bpp));
    save_image(binarize_image(load_image(input), ck.params), output);
}

void cmd_reconstruct(const std::filesystem::path& model, const std::filesystem::path& input,
                     const std::filesystem::path& output) {
    const Checkpoint ck = load_checkpoint(model);
    save_image(reconstruct_image(load_image(input), ck.params), output);
}

double cmd_eval(const std::filesystem::path& model, const std::filesystem::path& data_dir, int resolution) {
    const Checkpoint ck = load_checkpoint(model);
    std::vector<PixelBuffer> originals;
    for (const auto& path : list_png_files(data_dir)) {
        PixelBuffer buf = load_image(path);
        if (resolution > 0) buf = from_tensor<float>(center_crop_resize(to_tensor<float>(buf), resolution));
        originals.push_back(std::move(buf));
    }
    return mean_pixel_error(
        originals, [&](const PixelBuffer& b) { return roundtrip_image(b, ck.params); }, thread_count());
}

void cmd_synth(int count, int resolution, std::uint64_t seed, const std::filesystem::path& out_dir) {
    SynthConfig cfg;
    cfg.resolution = resolution;
    cfg.seed = seed;
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    for (int i = 0; i < count; ++i)
        save_image(render_synthetic(cfg, std::uint64_t(i)), out_dir / fmt::format("synth_{:05d}.png", i));
}

void cmd_compare(const std::filesystem::path& input, const std::filesystem::path& model, std::string_view methods,
                 const std::filesystem::path& output) {
    const std::vector<Method> list = parse_methods(methods);
    std::optional<Checkpoint> ck;
    if (!model.empty()) ck = load_checkpoint(model);
    save_image(compare_grid(load_image(input), ck ? &ck->params : nullptr, list), output);
}

namespace {

void add_train(CLI::App& app, TrainConfig& cfg, std::string& data, std::string& out, std::string& fit,
               std::string& intensity_mode, int& log_every) {
    auto* cmd = app.add_subcommand("train", "Train a model on a directory of PNG images");
    cmd->add_option("--data", data, "Corpus directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--out", out, "Checkpoint path (metrics go to <out>.metrics.csv)")->required();
    cmd->add_option("--steps", cfg.steps, "Optimizer steps")->check(CLI::NonNegativeNumber);
    cmd->add_option("--batch", cfg.batch_size, "Batch size (even)")->check(CLI::Range(2, 1 << 16));
    cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate")->check(CLI::NonNegativeNumber);
    cmd->add_option("--alpha", cfg.alpha, "Relative-intensity weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--beta", cfg.beta, "Color-continuity weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--r", cfg.r, "Region grid side")->check(CLI::PositiveNumber);
    cmd->add_option("--synthetic-frac", cfg.synthetic_fraction, "Synthetic pair fraction")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--noise", cfg.noise, "Uniform noise half-width on the [-1,1] scale")->check(CLI::NonNegativeNumber);
    cmd->add_option("--resolution", cfg.resolution, "Training resolution")->check(CLI::PositiveNumber);
    cmd->add_option("--bpp", cfg.target_bpp, "Output bits per pixel")->check(CLI::Range(1, 8));
    cmd->add_option("--decoder-layers", cfg.decoder_layers)->check(CLI::PositiveNumber);
    cmd->add_option("--decoder-channels", cfg.decoder_channels)->check(CLI::PositiveNumber);
    cmd->add_option("--pre-layers", cfg.pre_encoder_layers)->check(CLI::PositiveNumber);
    cmd->add_option("--pre-channels", cfg.pre_encoder_channels)->check(CLI::PositiveNumber);
    cmd->add_option("--kernel", cfg.kernel_size, "Convolution size")->check(CLI::PositiveNumber);
    cmd->add_option("--checkpoint-every", cfg.checkpoint_every)->check(CLI::PositiveNumber);
    cmd->add_option("--fit", fit, "How corpus images reach the resolution")->check(CLI::IsMember({"crop", "stretch"}));
    cmd->add_option("--intensity", intensity_mode)->check(CLI::IsMember({"mean", "luminance"}));
    cmd->add_option("--seed", cfg.seed);
    cmd->add_option("--threads", cfg.threads, "Worker threads (default: TEXTUREBIT_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--log-every", log_every, "Print progress every N steps (0: never)")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--strict-deterministic", cfg.strict_deterministic, "Fixed gradient reduction order");
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Reversible textured binarization of color images"};
    app.require_subcommand(1);

    TrainConfig train_cfg;
    std::string data, out, fit = "crop", intensity_mode = "mean";
    int log_every = 100;
    add_train(app, train_cfg, data, out, fit, intensity_mode, log_every);

    std::string model, input, output, methods = "otsu,fsd,ours";
    std::optional<int> bpp;
    auto* bin = app.add_subcommand("binarize", "Write the binary texture image of a PNG");
    bin->add_option("--model", model)->required();
    bin->add_option("--input", input)->required();
    bin->add_option("--output", output)->required();
    bin->add_option("--bpp", bpp, "Must equal the checkpoint's trained bit depth")->check(CLI::Range(1, 8));

    auto* rec = app.add_subcommand("reconstruct", "Recover colors from a texture image");
    rec->add_option("--model", model)->required();
    rec->add_option("--input", input)->required();
    rec->add_option("--output", output)->required();

    int eval_resolution = 0;
    auto* ev = app.add_subcommand("eval", "Mean per-channel pixel error of the round trip over a corpus");
    ev->add_option("--model", model)->required();
    ev->add_option("--data", data)->required();
    ev->add_option("--resolution", eval_resolution, "Center-crop and resize first (0: native size)")
        ->check(CLI::NonNegativeNumber);

    int count = 0, synth_resolution = 128;
    std::uint64_t synth_seed = 0;
    auto* syn = app.add_subcommand("synth", "Write synthetic shape images");
    syn->add_option("--count", count)->required()->check(CLI::NonNegativeNumber);
    syn->add_option("--resolution", synth_resolution)->check(CLI::PositiveNumber);
    syn->add_option("--seed", synth_seed);
    syn->add_option("--out", out)->required();

    auto* cmp = app.add_subcommand("compare", "Side-by-side grid of the input and binarizations");
    cmp->add_option("--input", input)->required();
    cmp->add_option("--model", model);
    cmp->add_option("--methods", methods, "Comma-separated: otsu, fsd, ours");
    cmp->add_option("--output", output)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "texturebit: error: " << e.what() << "\n";
        return e.get_exit_code() ? e.get_exit_code() : 2;
    }

    try {
        if (app.got_subcommand("train")) {
            train_cfg.fit = fit == "stretch" ? FitMode::stretch : FitMode::center_crop;
            train_cfg.intensity = intensity_mode == "luminance" ? IntensityMode::luminance : IntensityMode::channel_mean;
            train_cfg.validate();
            train(data, train_cfg, out, [&](int step, const LossBreakdown& l) {
                if (log_every > 0 && (step % log_every == 0 || step == train_cfg.steps))
                    std::cout << fmt::format("step {} l2 {:.5f} rel {:.5f} cont {:.5f} total {:.5f}\n", step, l.l2,
                                             l.rel_intensity, l.continuity, l.total)
                              << std::flush;
            });
        } else if (app.got_subcommand("binarize")) {
            cmd_binarize(model, input, output, bpp);
        } else if (app.got_subcommand("reconstruct")) {
            cmd_reconstruct(model, input, output);
        } else if (app.got_subcommand("eval")) {
            std::cout << fmt::format("mean pixel error {:.4f}\n", cmd_eval(model, data, eval_resolution));
        } else if (app.got_subcommand("synth")) {
            cmd_synth(count, synth_resolution, synth_seed, out);
        } else if (app.got_subcommand("compare")) {
            cmd_compare(input, model, methods, output);
        }
    } catch (const std::exception& e) {
        std::cerr << "texturebit: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace texturebit
