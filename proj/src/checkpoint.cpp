#include "texturebit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace texturebit {

namespace {

constexpr char kMagic[4] = {'T', 'X', 'B', '1'};

struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;
};

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(char(v)); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) u8(std::uint8_t(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(std::uint8_t(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void bytes(std::string_view s) { out_.append(s); }

    void tensor(const std::string& name, const std::vector<std::uint32_t>& dims, const float* data) {
        if (name.size() > 0xffff) throw Error("malformed checkpoint", "tensor name too long");
        u16(std::uint16_t(name.size()));
        bytes(name);
        u8(std::uint8_t(dims.size()));
        std::size_t n = 1;
        for (auto d : dims) {
            u32(d);
            n *= d;
        }
        for (std::size_t i = 0; i < n; ++i) f32(data[i]);
    }

    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}

    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw Error("truncated file");
    }
    std::uint8_t u8() {
        need(1);
        return std::uint8_t(in_[pos_++]);
    }
    std::uint16_t u16() {
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v = std::uint16_t(v | (std::uint16_t(u8()) << (8 * i)));
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(in_[pos_ + std::size_t(i)])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::string_view bytes(std::size_t n) {
        need(n);
        auto s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    std::string_view in_;
    std::size_t pos_ = 0;
};

std::string layer_name(Stage s, int i) { return std::string(stage_prefix(s)) + "." + std::to_string(i); }

std::vector<std::uint32_t> weight_dims(const ConvLayer<float>& l) {
    return {std::uint32_t(l.out_channels()), std::uint32_t(l.in_channels()), std::uint32_t(l.kernel),
            std::uint32_t(l.kernel)};
}

void write_params(Writer& w, const ModelParams<float>& p, const std::string& prefix) {
    p.for_each_layer([&](Stage s, int i, const ConvLayer<float>& l) {
        const std::string name = prefix + layer_name(s, i);
        w.tensor(name + ".weight", weight_dims(l), l.weight.data());
        w.tensor(name + ".bias", {std::uint32_t(l.bias.size())}, l.bias.data());
    });
}

std::uint32_t params_tensor_count(const ModelParams<float>& p) {
    return std::uint32_t(2 * (p.pre_encoder.size() + p.dde.size() + p.decoder.size()));
}

void read_params(std::map<std::string, Tensor>& tensors, ModelParams<float>& p, const std::string& prefix) {
    p.for_each_layer([&](Stage s, int i, ConvLayer<float>& l) {
        const std::string name = prefix + layer_name(s, i);
        auto take = [&](const std::string& key, const std::vector<std::uint32_t>& dims, float* dst) {
            auto it = tensors.find(key);
            if (it == tensors.end()) throw Error("malformed checkpoint", "missing tensor " + key);
            if (it->second.dims != dims) throw Error("malformed checkpoint", "shape of " + key);
            std::copy(it->second.values.begin(), it->second.values.end(), dst);
            tensors.erase(it);
        };
        take(name + ".weight", weight_dims(l), l.weight.data());
        take(name + ".bias", {std::uint32_t(l.bias.size())}, l.bias.data());
    });
}

std::vector<float> config_values(const NetworkConfig& c) {
    return {float(c.pre_encoder_layers), float(c.pre_encoder_channels), float(c.decoder_layers),
            float(c.decoder_channels),   float(c.target_bpp),           float(c.kernel_size)};
}

} // namespace

std::string serialize_checkpoint(const ModelParams<float>& params, const OptimizerState* optimizer) {
    params.check_shapes();
    Writer w;
    w.bytes(std::string_view(kMagic, 4));
    w.u32(kCheckpointVersion);
    std::uint32_t count = 1 + params_tensor_count(params);
    if (optimizer) count += 1 + 2 * params_tensor_count(params);
    w.u32(count);
    const auto cfg = config_values(params.config);
    w.tensor("config", {std::uint32_t(cfg.size())}, cfg.data());
    write_params(w, params, "");
    if (optimizer) {
        const float step = float(optimizer->step);
        w.tensor("adam.step", {1}, &step);
        write_params(w, optimizer->m, "adam.m.");
        write_params(w, optimizer->v, "adam.v.");
    }
    return w.take();
}

Checkpoint parse_checkpoint(std::string_view bytes) {
    Reader r(bytes);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error("bad magic");
    r.bytes(4);
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) throw Error("version mismatch", "file has version " + std::to_string(version));
    const std::uint32_t count = r.u32();
    std::map<std::string, Tensor> tensors;
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::string name(r.bytes(r.u16()));
        Tensor tensor;
        const int rank = r.u8();
        std::size_t n = 1;
        for (int d = 0; d < rank; ++d) {
            tensor.dims.push_back(r.u32());
            n *= tensor.dims.back();
        }
        r.need(n * 4);
        tensor.values.resize(n);
        for (auto& v : tensor.values) v = std::bit_cast<float>(r.u32());
        if (!tensors.emplace(name, std::move(tensor)).second) throw Error("malformed checkpoint", "duplicate " + name);
    }
    if (!r.done()) throw Error("malformed checkpoint", "trailing bytes");

    auto cfg_it = tensors.find("config");
    if (cfg_it == tensors.end() || cfg_it->second.values.size() != 6)
        throw Error("malformed checkpoint", "missing config");
    const auto& cv = cfg_it->second.values;
    NetworkConfig cfg;
    cfg.pre_encoder_layers = int(cv[0]);
    cfg.pre_encoder_channels = int(cv[1]);
    cfg.decoder_layers = int(cv[2]);
    cfg.decoder_channels = int(cv[3]);
    cfg.target_bpp = int(cv[4]);
    cfg.kernel_size = int(cv[5]);
    tensors.erase(cfg_it);
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw Error("malformed checkpoint", e.what());
    }

    Checkpoint ck;
    ck.params = ModelParams<float>::zeros(cfg);
    read_params(tensors, ck.params, "");
    if (auto it = tensors.find("adam.step"); it != tensors.end()) {
        OptimizerState opt = OptimizerState::zeros_for(ck.params);
        if (it->second.values.size() != 1) throw Error("malformed checkpoint", "adam.step");
        opt.step = std::int64_t(it->second.values[0]);
        tensors.erase(it);
        read_params(tensors, opt.m, "adam.m.");
        read_params(tensors, opt.v, "adam.v.");
        ck.optimizer = std::move(opt);
    }
    if (!tensors.empty()) throw Error("malformed checkpoint", "unexpected tensor " + tensors.begin()->first);
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     const OptimizerState* optimizer) {
    const std::string bytes = serialize_checkpoint(params, optimizer);
    // atomic replace
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("unwritable file", tmp.string());
        out.write(bytes.data(), std::streamsize(bytes.size()));
        if (!out) throw Error("unwritable file", tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("unreadable file", path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_checkpoint(bytes);
}

} // namespace texturebit
