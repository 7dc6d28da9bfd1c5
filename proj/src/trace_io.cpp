#include "nobl/trace_io.hpp"

#include "nobl/binio.hpp"

namespace nobl {

namespace {
constexpr std::uint16_t k_trace_kind = 1;
}

void save_trace(const Trace& trace, const std::string& path) {
    ByteWriter w;
    w.put_bytes(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>("NOBL"), 4));
    w.put<std::uint16_t>(1);
    w.put<std::uint16_t>(k_trace_kind);
    w.put<double>(trace.grid.t0);
    w.put<double>(trace.grid.dt);
    w.put<std::uint64_t>(trace.values.size());
    for (double v : trace.values)
        w.put<float>(static_cast<float>(v));
    write_file_bytes(path, w.bytes());
}

Trace load_trace(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    ByteReader r(bytes, "trace " + path);
    const auto magic = r.get_bytes(4);
    if (std::memcmp(magic.data(), "NOBL", 4) != 0)
        throw io_error("trace " + path + ": bad magic");
    const auto version = r.get<std::uint16_t>();
    if (version != 1)
        throw io_error("trace " + path + ": unsupported version " +
                       std::to_string(version));
    const auto kind = r.get<std::uint16_t>();
    if (kind != k_trace_kind)
        throw io_error("trace " + path + ": not a trace record");
    Trace trace;
    trace.grid.t0 = r.get<double>();
    trace.grid.dt = r.get<double>();
    const auto n = r.get<std::uint64_t>();
    if (n > r.remaining() / sizeof(float))
        throw io_error("trace " + path + ": truncated");
    trace.grid.n = static_cast<std::size_t>(n);
    trace.values.resize(static_cast<std::size_t>(n));
    for (auto& v : trace.values)
        v = r.get<float>();
    r.expect_end();
    return trace;
}

} // namespace nobl
