#include <string>
#include <string_view>

#include "manifest.hpp"
#include "nobl/binio.hpp"
#include "nobl/errors.hpp"
#include "nobl/training.hpp"

namespace nobl {

namespace {

using detail::expect_row;
using detail::fmt_double;
using detail::LineParser;
using detail::parse_double;
using detail::parse_u64;

constexpr std::string_view kMagicLine = "NOBL-DS v1";
constexpr std::string_view kEndHeader = "end-header";

} // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    validate(ds);
    std::string m;
    m += kMagicLine;
    m += '\n';
    m += "grid " + fmt_double(ds.grid.t0) + " " + fmt_double(ds.grid.dt) + " " +
         std::to_string(ds.grid.n) + "\n";
    m += "protocol " + fmt_double(ds.onset_ms) + " " +
         fmt_double(ds.duration_ms) + "\n";
    m += "subsample " + std::to_string(ds.subsample_factor) + "\n";
    m += "seed " + std::to_string(ds.seed) + "\n";
    m += "bounds " + fmt_double(ds.bounds.i_thr_min) + " " +
         fmt_double(ds.bounds.i_thr_max) + " " +
         fmt_double(ds.bounds.s_thr_min) + " " +
         fmt_double(ds.bounds.s_thr_max) + "\n";
    m += "ensemble";
    if (!ds.ensemble_ref.empty()) m += " " + ds.ensemble_ref;
    m += "\n";
    m += "samples " + std::to_string(ds.samples.size()) + "\n";
    for (const DatasetSample& s : ds.samples) {
        m += "sample " + std::to_string(s.id) + " " +
             std::to_string(s.model_id) + " " +
             std::to_string(static_cast<unsigned>(s.split)) + " " +
             fmt_double(s.amplitude_na) + " " + fmt_double(s.i_thr_na) + " " +
             fmt_double(s.s_thr_hz_per_na) + " " +
             fmt_double(s.latent.i_thr_norm) + " " +
             fmt_double(s.latent.s_thr_norm) + "\n";
    }
    m += "block targets 0 " + std::to_string(ds.samples.size()) + " " +
         std::to_string(ds.grid.n) + "\n";
    m += kEndHeader;
    m += '\n';

    ByteWriter w;
    w.put_bytes(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(m.data()), m.size()));
    for (float x : ds.targets) w.put<float>(x);
    write_file_bytes(path, w.bytes());
}

Dataset load_dataset(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    const std::string label = "dataset " + path;

    LineParser p;
    p.text = std::string_view(reinterpret_cast<const char*>(bytes.data()),
                              bytes.size());
    p.label = label;
    // Bound the header scan so a giant binary blob fails fast.
    if (p.text.substr(0, kMagicLine.size()) != kMagicLine)
        throw io_error(label + ": not a dataset container");
    if (p.next_line() != kMagicLine)
        throw io_error(label + ": not a dataset container");

    Dataset ds;
    {
        const auto t = expect_row(p, "grid", 3);
        ds.grid.t0 = parse_double(p, t[0]);
        ds.grid.dt = parse_double(p, t[1]);
        ds.grid.n = parse_u64(p, t[2]);
    }
    {
        const auto t = expect_row(p, "protocol", 2);
        ds.onset_ms = parse_double(p, t[0]);
        ds.duration_ms = parse_double(p, t[1]);
    }
    {
        const auto t = expect_row(p, "subsample", 1);
        const std::uint64_t f = parse_u64(p, t[0]);
        if (f == 0 || f > 0xffffffffull) p.fail("bad subsample factor");
        ds.subsample_factor = static_cast<std::uint32_t>(f);
    }
    {
        const auto t = expect_row(p, "seed", 1);
        ds.seed = parse_u64(p, t[0]);
    }
    {
        const auto t = expect_row(p, "bounds", 4);
        ds.bounds.i_thr_min = parse_double(p, t[0]);
        ds.bounds.i_thr_max = parse_double(p, t[1]);
        ds.bounds.s_thr_min = parse_double(p, t[2]);
        ds.bounds.s_thr_max = parse_double(p, t[3]);
    }
    {
        const std::string_view line = p.next_line();
        if (line == "ensemble")
            ds.ensemble_ref.clear();
        else if (line.substr(0, 9) == "ensemble ")
            ds.ensemble_ref = std::string(line.substr(9));
        else
            p.fail("expected 'ensemble'");
    }
    std::uint64_t count = 0;
    {
        const auto t = expect_row(p, "samples", 1);
        count = parse_u64(p, t[0]);
        if (count == 0) p.fail("empty dataset");
        // Every sample needs a manifest row of at least 16 bytes; reject
        // counts the file cannot possibly hold before allocating for them.
        if (count > bytes.size() / 16) p.fail("sample count exceeds file size");
    }
    ds.samples.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto t = expect_row(p, "sample", 8);
        DatasetSample& s = ds.samples[i];
        const std::uint64_t id = parse_u64(p, t[0]);
        const std::uint64_t model = parse_u64(p, t[1]);
        const std::uint64_t split = parse_u64(p, t[2]);
        if (id != i) p.fail("sample ids must be sequential");
        if (model > 0xffffffffull) p.fail("bad model id");
        if (split > kSplitTest) p.fail("unknown split tag");
        s.id = static_cast<std::uint32_t>(id);
        s.model_id = static_cast<std::uint32_t>(model);
        s.split = static_cast<std::uint8_t>(split);
        s.amplitude_na = parse_double(p, t[3]);
        s.i_thr_na = parse_double(p, t[4]);
        s.s_thr_hz_per_na = parse_double(p, t[5]);
        s.latent.i_thr_norm = parse_double(p, t[6]);
        s.latent.s_thr_norm = parse_double(p, t[7]);
    }
    std::uint64_t offset = 0, rows = 0, cols = 0;
    {
        const auto t = expect_row(p, "block", 4);
        if (t[0] != "targets") p.fail("expected the targets block");
        offset = parse_u64(p, t[1]);
        rows = parse_u64(p, t[2]);
        cols = parse_u64(p, t[3]);
    }
    if (p.next_line() != kEndHeader) p.fail("expected end-header");

    if (rows != count) throw io_error(label + ": target row count mismatch");
    if (cols != ds.grid.n) throw io_error(label + ": target column mismatch");
    const std::size_t payload = bytes.size() - p.pos;
    // Division-only size checks so hostile row/column counts cannot overflow.
    const std::size_t nfloats = payload / sizeof(float);
    if (offset != 0 || cols == 0 || payload % sizeof(float) != 0 ||
        nfloats / cols != rows || nfloats % cols != 0)
        throw io_error(label + ": target block size mismatch");

    ByteReader r(std::span<const std::uint8_t>(bytes.data() + p.pos, payload),
                 label);
    ds.targets.resize(nfloats);
    for (float& x : ds.targets) x = r.get<float>();
    r.expect_end();

    try {
        validate(ds);
    } catch (const config_error& e) {
        throw io_error(label + ": invalid contents (" + e.what() + ")");
    }
    return ds;
}

} // namespace nobl
