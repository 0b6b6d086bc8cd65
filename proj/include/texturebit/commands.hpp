#ifndef TEXTUREBIT_COMMANDS_HPP
#define TEXTUREBIT_COMMANDS_HPP

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "texturebit/image_io.hpp"
#include "texturebit/network.hpp"

namespace texturebit {

/// Maps rendered samples back to plane levels. Throws Error("input not in level set")
/// for samples that no level renders to, or for images whose channels differ.
DiscretePlane<float> parse_plane(const PixelBuffer& rendered, int levels);

/// binarize, then render the final plane.
PixelBuffer binarize_image(const PixelBuffer& input, const ModelParams<float>& model);

/// parse_plane, decode, back to 8 bits.
PixelBuffer reconstruct_image(const PixelBuffer& rendered, const ModelParams<float>& model);

/// Mean of pixel_error(original, reconstruct(original)) over the corpus.
double mean_pixel_error(const std::vector<PixelBuffer>& originals,
                        const std::function<PixelBuffer(const PixelBuffer&)>& reconstruct, int threads = 1);

/// The binary-and-back round trip through the model.
PixelBuffer roundtrip_image(const PixelBuffer& input, const ModelParams<float>& model);

void cmd_binarize(const std::filesystem::path& model, const std::filesystem::path& input,
                  const std::filesystem::path& output, std::optional<int> bpp = std::nullopt);
void cmd_reconstruct(const std::filesystem::path& model, const std::filesystem::path& input,
                     const std::filesystem::path& output);
/// resolution 0 evaluates images at their native size.
double cmd_eval(const std::filesystem::path& model, const std::filesystem::path& data_dir, int resolution = 0);
void cmd_synth(int count, int resolution, std::uint64_t seed, const std::filesystem::path& out_dir);
void cmd_compare(const std::filesystem::path& input, const std::filesystem::path& model, std::string_view methods,
                 const std::filesystem::path& output);

/// Entry point of the texturebit executable. Errors print one line to stderr
/// and yield a nonzero status.
int run_cli(int argc, char** argv);

} // namespace texturebit

#endif // TEXTUREBIT_COMMANDS_HPP
