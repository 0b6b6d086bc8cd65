#ifndef TEXTUREBIT_CHECKPOINT_HPP
#define TEXTUREBIT_CHECKPOINT_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "texturebit/network.hpp"
#include "texturebit/optimizer.hpp"

namespace texturebit {

/// Binary layout, all integers and floats little-endian:
///
///   "TXB1"  u32 version  u32 tensor_count
///   per tensor: u16 name_len, name (UTF-8), u8 rank, u32 dims[rank],
///               f32 payload[prod(dims)] in row-major order
///
/// Tensors: "config" (network shape as small integers), then
/// "<pre|dde|dec>.<i>.weight" [out, in, k, k] and ".bias" [out] per layer,
/// then optionally "adam.step" and "adam.m.*" / "adam.v.*" mirrors.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelParams<float> params;
    std::optional<OptimizerState> optimizer;
};

std::string serialize_checkpoint(const ModelParams<float>& params, const OptimizerState* optimizer = nullptr);

/// Throws Error("bad magic"), Error("version mismatch"), Error("truncated file")
/// or Error("malformed checkpoint").
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     const OptimizerState* optimizer = nullptr);

Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace texturebit

#endif // TEXTUREBIT_CHECKPOINT_HPP
