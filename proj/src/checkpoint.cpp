#include <cstring>

#include "nobl/binio.hpp"
#include "nobl/fno.hpp"

namespace nobl {

namespace {

constexpr std::uint16_t k_ckpt_kind = 2;

struct BlockSpec {
    std::string name;
    std::vector<std::uint64_t> dims;
    const float* data;
    float* out;
};

// Parameter blocks in file order. Complex arrays carry a trailing dimension
// of 2 (re, im); std::complex<float> layout guarantees that pairing.
std::vector<BlockSpec> block_table(const FnoConfig& cfg,
                                   FnoParametersT<float>& p) {
    const auto lw = static_cast<std::uint64_t>(cfg.lifting_width);
    const auto pw = static_cast<std::uint64_t>(cfg.projection_width);
    const auto H = static_cast<std::uint64_t>(cfg.hidden);
    const auto C = static_cast<std::uint64_t>(cfg.in_channels);
    const auto M = static_cast<std::uint64_t>(cfg.modes);
    std::vector<BlockSpec> blocks;
    auto add = [&](std::string name, std::vector<std::uint64_t> dims,
                   auto& vec) {
        auto* base = reinterpret_cast<float*>(vec.data());
        blocks.push_back({std::move(name), std::move(dims), base, base});
    };
    add("lift.w1", {lw, C}, p.lift_w1);
    add("lift.b1", {lw}, p.lift_b1);
    add("lift.w2", {H, lw}, p.lift_w2);
    add("lift.b2", {H}, p.lift_b2);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const std::string prefix = "layer." + std::to_string(l) + ".";
        add(prefix + "spectral", {M, H, H, 2}, p.layers[l].spectral);
        add(prefix + "mix", {H, H}, p.layers[l].mix);
        add(prefix + "bias", {H}, p.layers[l].bias);
    }
    add("proj.w1", {pw, H}, p.proj_w1);
    add("proj.b1", {pw}, p.proj_b1);
    add("proj.w2", {1, pw}, p.proj_w2);
    add("proj.b2", {1}, p.proj_b2);
    return blocks;
}

std::size_t block_count(const std::vector<std::uint64_t>& dims) {
    std::size_t total = 1;
    for (auto d : dims)
        total *= static_cast<std::size_t>(d);
    return total;
}

} // namespace

void save_checkpoint(const Checkpoint& cp, const std::string& path) {
    validate(cp.fno);
    validate(cp.embedding);
    validate(cp.bounds);
    if (cp.embedding.channel_count() !=
        static_cast<std::size_t>(cp.fno.in_channels))
        throw config_error(
            "checkpoint: embedding channel count does not match in_channels");
    ByteWriter w;
    w.put_bytes(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>("NOBL"), 4));
    w.put<std::uint16_t>(1);
    w.put<std::uint16_t>(k_ckpt_kind);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cp.fno.layers));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cp.fno.hidden));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cp.fno.modes));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cp.fno.lifting_width));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cp.fno.projection_width));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cp.fno.in_channels));
    w.put_string(cp.fno.activation);
    w.put<std::int32_t>(cp.embedding.k_current);
    w.put<std::int32_t>(cp.embedding.k_feature);
    w.put<std::uint8_t>(cp.embedding.include_raw_current ? 1 : 0);
    w.put<std::uint8_t>(cp.embedding.embed_i_thr ? 1 : 0);
    w.put<std::uint8_t>(cp.embedding.embed_s_thr ? 1 : 0);
    w.put<double>(cp.bounds.i_thr_min);
    w.put<double>(cp.bounds.i_thr_max);
    w.put<double>(cp.bounds.s_thr_min);
    w.put<double>(cp.bounds.s_thr_max);
    w.put<std::uint32_t>(cp.epoch);
    w.put<std::uint32_t>(cp.loss_digest);
    auto& params = const_cast<FnoParametersT<float>&>(cp.params);
    const auto blocks = block_table(cp.fno, params);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(blocks.size()));
    for (const auto& block : blocks) {
        w.put_string(block.name);
        w.put<std::uint8_t>(static_cast<std::uint8_t>(block.dims.size()));
        for (auto d : block.dims)
            w.put<std::uint64_t>(d);
        const std::size_t count = block_count(block.dims);
        for (std::size_t i = 0; i < count; ++i)
            w.put<float>(block.data[i]);
    }
    ByteWriter trailer;
    trailer.put<std::uint32_t>(crc32(w.bytes()));
    std::vector<std::uint8_t> file = w.bytes();
    file.insert(file.end(), trailer.bytes().begin(), trailer.bytes().end());
    write_file_bytes(path, file);
}

Checkpoint load_checkpoint(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    const std::string label = "checkpoint " + path;
    if (bytes.size() < 12)
        throw io_error(label + ": truncated");
    const std::span<const std::uint8_t> payload(bytes.data(),
                                                bytes.size() - 4);
    std::uint32_t stored = 0;
    std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
    if constexpr (std::endian::native == std::endian::big) {
        auto raw = std::bit_cast<std::array<std::uint8_t, 4>>(stored);
        std::reverse(raw.begin(), raw.end());
        stored = std::bit_cast<std::uint32_t>(raw);
    }
    ByteReader r(payload, label);
    const auto magic = r.get_bytes(4);
    if (std::memcmp(magic.data(), "NOBL", 4) != 0)
        throw io_error(label + ": bad magic");
    const auto version = r.get<std::uint16_t>();
    if (version != 1)
        throw io_error(label + ": unsupported version " +
                       std::to_string(version));
    const auto kind = r.get<std::uint16_t>();
    if (kind != k_ckpt_kind)
        throw io_error(label + ": not a checkpoint record");
    if (crc32(payload) != stored)
        throw io_error(label + ": checksum mismatch");

    Checkpoint cp;
    cp.fno.layers = static_cast<int>(r.get<std::uint32_t>());
    cp.fno.hidden = static_cast<int>(r.get<std::uint32_t>());
    cp.fno.modes = static_cast<int>(r.get<std::uint32_t>());
    cp.fno.lifting_width = static_cast<int>(r.get<std::uint32_t>());
    cp.fno.projection_width = static_cast<int>(r.get<std::uint32_t>());
    cp.fno.in_channels = static_cast<int>(r.get<std::uint32_t>());
    cp.fno.activation = r.get_string();
    cp.embedding.k_current = r.get<std::int32_t>();
    cp.embedding.k_feature = r.get<std::int32_t>();
    cp.embedding.include_raw_current = r.get<std::uint8_t>() != 0;
    cp.embedding.embed_i_thr = r.get<std::uint8_t>() != 0;
    cp.embedding.embed_s_thr = r.get<std::uint8_t>() != 0;
    cp.bounds.i_thr_min = r.get<double>();
    cp.bounds.i_thr_max = r.get<double>();
    cp.bounds.s_thr_min = r.get<double>();
    cp.bounds.s_thr_max = r.get<double>();
    cp.epoch = r.get<std::uint32_t>();
    cp.loss_digest = r.get<std::uint32_t>();
    try {
        validate(cp.fno);
        validate(cp.embedding);
        validate(cp.bounds);
    } catch (const config_error& e) {
        throw io_error(label + ": invalid configuration (" +
                       std::string(e.what()) + ")");
    }
    {
        // Overflow-free size plausibility check before any allocation sized
        // by header fields.
        const long double H = cp.fno.hidden, M = cp.fno.modes;
        const long double L = cp.fno.layers, lw = cp.fno.lifting_width;
        const long double pw = cp.fno.projection_width, C = cp.fno.in_channels;
        const long double scalars = lw * C + lw + H * lw + H +
                                    L * (2 * M * H * H + H * H + H) +
                                    pw * H + pw + pw + 1;
        if (scalars * static_cast<long double>(sizeof(float)) >
            static_cast<long double>(r.remaining()))
            throw io_error(label + ": truncated");
    }
    if (cp.embedding.channel_count() !=
        static_cast<std::size_t>(cp.fno.in_channels))
        throw io_error(label +
                       ": embedding channel count does not match in_channels");

    cp.params.lift_w1.resize(static_cast<std::size_t>(cp.fno.lifting_width) *
                             cp.fno.in_channels);
    cp.params.lift_b1.resize(cp.fno.lifting_width);
    cp.params.lift_w2.resize(static_cast<std::size_t>(cp.fno.hidden) *
                             cp.fno.lifting_width);
    cp.params.lift_b2.resize(cp.fno.hidden);
    cp.params.layers.resize(cp.fno.layers);
    for (auto& layer : cp.params.layers) {
        layer.spectral.resize(static_cast<std::size_t>(cp.fno.modes) *
                              cp.fno.hidden * cp.fno.hidden);
        layer.mix.resize(static_cast<std::size_t>(cp.fno.hidden) *
                         cp.fno.hidden);
        layer.bias.resize(cp.fno.hidden);
    }
    cp.params.proj_w1.resize(static_cast<std::size_t>(cp.fno.projection_width) *
                             cp.fno.hidden);
    cp.params.proj_b1.resize(cp.fno.projection_width);
    cp.params.proj_w2.resize(cp.fno.projection_width);
    cp.params.proj_b2.resize(1);

    auto blocks = block_table(cp.fno, cp.params);
    const auto count = r.get<std::uint32_t>();
    if (count != blocks.size())
        throw io_error(label + ": unexpected parameter block count");
    for (auto& block : blocks) {
        const std::string name = r.get_string();
        if (name != block.name)
            throw io_error(label + ": unexpected parameter block '" + name +
                           "'");
        const auto rank = r.get<std::uint8_t>();
        if (rank != block.dims.size())
            throw io_error(label + ": bad shape for '" + name + "'");
        for (auto want : block.dims) {
            if (r.get<std::uint64_t>() != want)
                throw io_error(label + ": bad shape for '" + name + "'");
        }
        const std::size_t total = block_count(block.dims);
        for (std::size_t i = 0; i < total; ++i)
            block.out[i] = r.get<float>();
    }
    r.expect_end();
    return cp;
}

} // namespace nobl
