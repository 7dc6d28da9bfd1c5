#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <string>
#include <vector>

#include "nobl/binio.hpp"
#include "nobl/embedding.hpp"
#include "nobl/errors.hpp"
#include "nobl/fno.hpp"
#include "nobl/rng.hpp"
#include "nobl/trace_io.hpp"
#include "oracles.hpp"

using namespace nobl;
using testing_oracles::naive_spectral;
using testing_oracles::random_trig_poly;

namespace {

std::vector<double> random_signal(Rng& rng, std::size_t len, double amp) {
    std::vector<double> v(len);
    for (auto& x : v)
        x = rng.uniform(-amp, amp);
    return v;
}

std::vector<std::complex<double>> random_weights(Rng& rng, std::size_t count,
                                                 double amp) {
    std::vector<std::complex<double>> w(count);
    for (auto& c : w) {
        const double re = rng.uniform(-amp, amp);
        const double im = rng.uniform(-amp, amp);
        c = {re, im};
    }
    return w;
}

double max_abs_diff(std::span<const double> x, std::span<const double> y) {
    REQUIRE(x.size() == y.size());
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

// Scalar objective used by the gradient tests: a fixed random weighting of
// the output samples, so every output position contributes to the loss.
double weighted_loss(const FnoConfig& cfg, const FnoParametersT<double>& p,
                     std::span<const double> input, std::size_t n,
                     std::span<const double> g) {
    const auto y = forward(cfg, p, input, n);
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
        acc += g[t] * y[t];
    return acc;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("nobl-fno-test-" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

} // namespace

TEST_SUITE("fno") {

TEST_CASE("spectral layer matches the direct-sum reference") {
    Rng rng(2024);
    const struct {
        std::size_t n, cin, cout;
        int modes;
    } cases[] = {
        {16, 2, 2, 5},  {4, 1, 3, 2},  {7, 2, 2, 3},   {15, 3, 1, 8},
        {33, 2, 4, 10}, {8, 2, 2, 16}, {21, 1, 1, 11}, {32, 4, 2, 6},
    };
    for (const auto& c : cases) {
        CAPTURE(c.n);
        CAPTURE(c.modes);
        for (int rep = 0; rep < 4; ++rep) {
            const auto v = random_signal(rng, c.cin * c.n, 2.0);
            const auto w = random_weights(
                rng, static_cast<std::size_t>(c.modes) * c.cin * c.cout, 1.0);
            const auto got =
                spectral_conv<double>(v, c.n, c.cin, c.cout, w, c.modes);
            const auto want =
                naive_spectral(v, c.n, c.cin, c.cout, w, c.modes);
            CHECK(max_abs_diff(got, want) < 1e-10);
        }
    }
}

TEST_CASE("identity mode matrices pass band-limited signals through") {
    Rng rng(7);
    const std::size_t n = 64, ch = 3;
    const int modes = 9;
    std::vector<std::complex<double>> w(
        static_cast<std::size_t>(modes) * ch * ch, {0, 0});
    for (int k = 0; k < modes; ++k)
        for (std::size_t i = 0; i < ch; ++i)
            w[(static_cast<std::size_t>(k) * ch + i) * ch + i] = {1.0, 0.0};
    std::vector<double> v(ch * n);
    for (std::size_t c = 0; c < ch; ++c) {
        const auto poly = random_trig_poly(rng, 8, 1.5);
        const auto samples = poly.sample(n);
        std::copy(samples.begin(), samples.end(), v.begin() + c * n);
    }
    const auto out = spectral_conv<double>(v, n, ch, ch, w, modes);
    CHECK(max_abs_diff(out, v) < 1e-10);

    SUBCASE("harmonics at or above the retained limit are removed") {
        std::vector<double> hi(ch * n);
        for (std::size_t c = 0; c < ch; ++c)
            for (std::size_t t = 0; t < n; ++t)
                hi[c * n + t] = std::cos(2.0 * std::numbers::pi * 12.0 *
                                         static_cast<double>(t) / n);
        const auto filtered = spectral_conv<double>(hi, n, ch, ch, w, modes);
        for (double x : filtered)
            CHECK(std::abs(x) < 1e-10);
    }
}

TEST_CASE("zero mode matrices produce exactly zero output") {
    Rng rng(11);
    const auto v = random_signal(rng, 2 * 24, 3.0);
    std::vector<std::complex<double>> w(5 * 2 * 2, {0, 0});
    const auto out = spectral_conv<double>(v, 24, 2, 2, w, 5);
    for (double x : out)
        CHECK(x == 0.0);
}

TEST_CASE("spectral layer is linear in its input") {
    Rng rng(31);
    const std::size_t n = 40, cin = 3, cout = 2;
    const int modes = 12;
    const auto w = random_weights(
        rng, static_cast<std::size_t>(modes) * cin * cout, 0.8);
    const auto x = random_signal(rng, cin * n, 2.0);
    const auto y = random_signal(rng, cin * n, 2.0);
    const double alpha = -1.375, beta = 0.6251;
    std::vector<double> mix(cin * n);
    for (std::size_t i = 0; i < mix.size(); ++i)
        mix[i] = alpha * x[i] + beta * y[i];
    const auto fx = spectral_conv<double>(x, n, cin, cout, w, modes);
    const auto fy = spectral_conv<double>(y, n, cin, cout, w, modes);
    const auto fmix = spectral_conv<double>(mix, n, cin, cout, w, modes);
    std::vector<double> expect(cout * n);
    for (std::size_t i = 0; i < expect.size(); ++i)
        expect[i] = alpha * fx[i] + beta * fy[i];
    CHECK(max_abs_diff(fmix, expect) < 1e-10);
}

TEST_CASE("imaginary parts of self-conjugate bins are inert") {
    Rng rng(47);
    const std::size_t n = 16, ch = 2;
    const int modes = 9; // covers every bin of n=16, Nyquist included
    const auto v = random_signal(rng, ch * n, 1.0);
    auto w = random_weights(rng, static_cast<std::size_t>(modes) * ch * ch,
                            0.7);
    const auto base = spectral_conv<double>(v, n, ch, ch, w, modes);
    SUBCASE("zero-frequency bin, exactly") {
        for (std::size_t i = 0; i < ch; ++i)
            for (std::size_t o = 0; o < ch; ++o)
                w[(0 * ch + i) * ch + o] += std::complex<double>(0, 0.83);
        const auto shifted = spectral_conv<double>(v, n, ch, ch, w, modes);
        for (std::size_t i = 0; i < base.size(); ++i)
            CHECK(shifted[i] == base[i]);
    }
    SUBCASE("Nyquist bin, up to forward-transform leakage") {
        // The forward transform leaves an O(eps) imaginary residue in the
        // Nyquist bin, so the perturbation couples at rounding level only.
        for (std::size_t i = 0; i < ch; ++i)
            for (std::size_t o = 0; o < ch; ++o)
                w[(8 * ch + i) * ch + o] += std::complex<double>(0, -1.29);
        const auto shifted = spectral_conv<double>(v, n, ch, ch, w, modes);
        CHECK(max_abs_diff(shifted, base) < 1e-12);
    }
}

TEST_CASE("input and weight shape mismatches are rejected") {
    std::vector<double> v(2 * 16, 0.0);
    std::vector<std::complex<double>> w(5 * 2 * 2, {0, 0});
    CHECK_THROWS_AS(spectral_conv<double>(v, 16, 3, 2, w, 5), config_error);
    CHECK_THROWS_AS(spectral_conv<double>(v, 16, 2, 2, w, 4), config_error);
    CHECK_THROWS_AS(spectral_conv<double>(v, 16, 2, 2, w, 0), config_error);
    FnoConfig cfg;
    cfg.layers = 0;
    CHECK_THROWS_AS(validate(cfg), config_error);
    cfg = FnoConfig{};
    cfg.activation = "tanh";
    CHECK_THROWS_AS(validate(cfg), config_error);
    cfg = FnoConfig{};
    cfg.modes = -3;
    CHECK_THROWS_AS(validate(cfg), config_error);
    cfg = FnoConfig{};
    const auto p = init_parameters<double>(cfg, 1);
    std::vector<double> input(static_cast<std::size_t>(cfg.in_channels) * 32);
    CHECK_THROWS_AS(forward(cfg, p, std::span<const double>(input), 33),
                    config_error);
}

TEST_CASE("zero parameters reduce the network to its output bias") {
    FnoConfig cfg;
    cfg.layers = 2;
    cfg.hidden = 5;
    cfg.modes = 6;
    cfg.lifting_width = 4;
    cfg.projection_width = 4;
    cfg.in_channels = 3;
    auto p = init_parameters<double>(cfg, 9);
    const std::size_t n = 48;
    Rng rng(3);
    const auto input = random_signal(rng, 3 * n, 2.0);

    auto zeroed = p;
    auto flat = flatten(zeroed);
    std::fill(flat.begin(), flat.end(), 0.0);
    unflatten(std::span<const double>(flat), zeroed);
    zeroed.proj_b2[0] = 0.37;
    const auto y = forward(cfg, zeroed, std::span<const double>(input), n);
    REQUIRE(y.size() == n);
    for (double v : y)
        CHECK(v == 0.37);

    SUBCASE("summed-output loss sends gradient n to the output bias") {
        auto fc = forward_cached(cfg, p, std::span<const double>(input), n);
        std::vector<double> ones(n, 1.0);
        const auto grads = backward(cfg, p, fc.cache,
                                    std::span<const double>(ones));
        CHECK(grads.grads.proj_b2[0] == static_cast<double>(n));
    }
}

TEST_CASE("initialization and forward are deterministic") {
    FnoConfig cfg;
    cfg.layers = 2;
    cfg.hidden = 4;
    cfg.modes = 5;
    cfg.lifting_width = 6;
    cfg.projection_width = 6;
    cfg.in_channels = 2;
    const auto a = init_parameters<float>(cfg, 77);
    const auto b = init_parameters<float>(cfg, 77);
    const auto c = init_parameters<float>(cfg, 78);
    const auto fa = flatten(a);
    const auto fb = flatten(b);
    const auto fc = flatten(c);
    REQUIRE(fa.size() == parameter_count(cfg));
    CHECK(fa == fb);
    CHECK(fa != fc);
    Rng rng(5);
    std::vector<float> input(2 * 32);
    for (auto& x : input)
        x = static_cast<float>(rng.uniform(-1, 1));
    const auto y1 = forward(cfg, a, std::span<const float>(input), 32);
    const auto y2 = forward(cfg, b, std::span<const float>(input), 32);
    CHECK(y1 == y2);
}

TEST_CASE("flat parameter image round-trips and counts scalars") {
    FnoConfig cfg;
    cfg.layers = 3;
    cfg.hidden = 3;
    cfg.modes = 4;
    cfg.lifting_width = 5;
    cfg.projection_width = 2;
    cfg.in_channels = 4;
    const auto p = init_parameters<double>(cfg, 123);
    const auto flat = flatten(p);
    CHECK(flat.size() == parameter_count(cfg));
    auto q = init_parameters<double>(cfg, 456);
    unflatten(std::span<const double>(flat), q);
    CHECK(flatten(q) == flat);
    std::vector<double> several(flat.begin(), flat.end() - 1);
    CHECK_THROWS_AS(unflatten(std::span<const double>(several), q),
                    config_error);
    several = flat;
    several.push_back(0.0);
    CHECK_THROWS_AS(unflatten(std::span<const double>(several), q),
                    config_error);
}

TEST_CASE("block layout tiles the flat parameter vector") {
    FnoConfig cfg;
    cfg.layers = 2;
    cfg.hidden = 3;
    cfg.modes = 4;
    cfg.lifting_width = 5;
    cfg.projection_width = 2;
    cfg.in_channels = 4;
    const auto blocks = flat_layout(cfg);
    REQUIRE(blocks.size() == 4 + 3 * 2 + 4);
    std::size_t pos = 0;
    for (const auto& b : blocks) {
        CHECK(b.offset == pos);
        CHECK(b.count > 0);
        pos += b.count;
    }
    CHECK(pos == parameter_count(cfg));
    CHECK(blocks[0].name == "lift.w1");
    CHECK(blocks[0].count == 5 * 4);
    CHECK(blocks[4].name == "layer.0.spectral");
    CHECK(blocks[4].count == 2 * 4 * 3 * 3);
    CHECK(blocks[8].name == "layer.1.mix");
    CHECK(blocks.back().name == "proj.b2");
    CHECK(blocks.back().count == 1);
}

TEST_CASE("identity-activation network is affine in each parameter") {
    // With the identity activation and a single operator layer, the output
    // is affine in every individual scalar, so a unit-step secant equals the
    // derivative exactly up to rounding. This pins the backward pass against
    // plain arithmetic with no finite-difference truncation error.
    FnoConfig cfg;
    cfg.layers = 1;
    cfg.hidden = 3;
    cfg.modes = 4;
    cfg.lifting_width = 3;
    cfg.projection_width = 3;
    cfg.in_channels = 2;
    cfg.activation = "identity";
    const std::size_t n = 12;
    Rng rng(99);
    const auto p = init_parameters<double>(cfg, 31);
    const auto input = random_signal(rng, 2 * n, 1.0);
    const auto g = random_signal(rng, n, 1.0);

    auto fc = forward_cached(cfg, p, std::span<const double>(input), n);
    const auto grads = backward(cfg, p, fc.cache, std::span<const double>(g));
    const auto analytic = flatten(grads.grads);
    const auto flat = flatten(p);
    const double base =
        weighted_loss(cfg, p, std::span<const double>(input), n, g);
    auto scratch = p;
    const double step = 0.5;
    for (std::size_t j = 0; j < flat.size(); ++j) {
        auto bumped = flat;
        bumped[j] += step;
        unflatten(std::span<const double>(bumped), scratch);
        const double shifted =
            weighted_loss(cfg, scratch, std::span<const double>(input), n, g);
        const double secant = (shifted - base) / step;
        CHECK(std::abs(secant - analytic[j]) < 1e-10);
    }
}

TEST_CASE("gradients match central finite differences") {
    const struct {
        int layers, hidden, modes, lw, pw, cin;
        std::size_t n;
    } cases[] = {
        {1, 2, 3, 2, 2, 1, 8},  {2, 3, 4, 3, 3, 2, 16},
        {3, 4, 8, 4, 4, 3, 21}, {2, 6, 5, 5, 5, 4, 32},
        {1, 5, 2, 6, 3, 2, 9},  {3, 3, 6, 2, 6, 1, 24},
    };
    int idx = 0;
    for (const auto& c : cases) {
        CAPTURE(idx);
        FnoConfig cfg;
        cfg.layers = c.layers;
        cfg.hidden = c.hidden;
        cfg.modes = c.modes;
        cfg.lifting_width = c.lw;
        cfg.projection_width = c.pw;
        cfg.in_channels = c.cin;
        Rng rng(1000 + idx);
        const auto p = init_parameters<double>(
            cfg, static_cast<std::uint64_t>(500 + idx));
        const auto input = random_signal(rng, c.cin * c.n, 1.5);
        const auto g = random_signal(rng, c.n, 1.0);

        auto fc = forward_cached(cfg, p, std::span<const double>(input), c.n);
        const auto grads =
            backward(cfg, p, fc.cache, std::span<const double>(g));
        const auto analytic = flatten(grads.grads);
        const auto flat = flatten(p);
        const double h = 1e-5;
        auto scratch = p;
        double worst = 0.0;
        for (std::size_t j = 0; j < flat.size(); ++j) {
            auto bumped = flat;
            bumped[j] = flat[j] + h;
            unflatten(std::span<const double>(bumped), scratch);
            const double up =
                weighted_loss(cfg, scratch, std::span<const double>(input),
                              c.n, g);
            bumped[j] = flat[j] - h;
            unflatten(std::span<const double>(bumped), scratch);
            const double down =
                weighted_loss(cfg, scratch, std::span<const double>(input),
                              c.n, g);
            const double fd = (up - down) / (2 * h);
            const double an = analytic[j];
            const double scale = std::max({std::abs(fd), std::abs(an), 1e-5});
            worst = std::max(worst, std::abs(fd - an) / scale);
        }
        CHECK(worst < 1e-4);

        // Input gradient against the same objective.
        double worst_in = 0.0;
        auto in = input;
        for (std::size_t j = 0; j < in.size(); ++j) {
            const double keep = in[j];
            in[j] = keep + h;
            const double up =
                weighted_loss(cfg, p, std::span<const double>(in), c.n, g);
            in[j] = keep - h;
            const double down =
                weighted_loss(cfg, p, std::span<const double>(in), c.n, g);
            in[j] = keep;
            const double fd = (up - down) / (2 * h);
            const double an = grads.input_grad[j];
            const double scale = std::max({std::abs(fd), std::abs(an), 1e-5});
            worst_in = std::max(worst_in, std::abs(fd - an) / scale);
        }
        CHECK(worst_in < 1e-4);
        ++idx;
    }
}

TEST_CASE("doubled resolution leaves outputs consistent on shared points") {
    FnoConfig cfg;
    cfg.layers = 2;
    cfg.hidden = 4;
    cfg.modes = 8;
    cfg.lifting_width = 6;
    cfg.projection_width = 6;
    cfg.in_channels = 2;
    const auto p = init_parameters<double>(cfg, 2718);
    Rng rng(271);
    const std::size_t n1 = 64, n2 = 128;
    std::vector<double> x1(2 * n1), x2(2 * n2);
    for (std::size_t c = 0; c < 2; ++c) {
        const auto poly = random_trig_poly(rng, 4, 1.0);
        const auto coarse = poly.sample(n1);
        const auto fine = poly.sample(n2);
        std::copy(coarse.begin(), coarse.end(), x1.begin() + c * n1);
        std::copy(fine.begin(), fine.end(), x2.begin() + c * n2);
    }
    const auto y1 = forward(cfg, p, std::span<const double>(x1), n1);
    const auto y2 = forward(cfg, p, std::span<const double>(x2), n2);
    double ymax = 0.0, dmax = 0.0;
    for (std::size_t j = 0; j < n1; ++j) {
        ymax = std::max(ymax, std::abs(y1[j]));
        dmax = std::max(dmax, std::abs(y2[2 * j] - y1[j]));
    }
    CHECK(ymax > 1e-4); // the comparison must not be vacuous
    CHECK(dmax < 1e-6);
}

TEST_CASE("checkpoint round-trips bitwise and behaviorally") {
    TempDir dir;
    FnoConfig cfg;
    cfg.layers = 2;
    cfg.hidden = 4;
    cfg.modes = 6;
    cfg.lifting_width = 5;
    cfg.projection_width = 5;
    cfg.in_channels = 23;
    Checkpoint cp;
    cp.fno = cfg;
    cp.embedding = EmbeddingConfig{};
    cp.bounds = LatentBounds{0.03, 0.07, 2000.0, 5000.0};
    cp.epoch = 7;
    cp.loss_digest = 0xdeadbeefu;
    cp.params = init_parameters<float>(cfg, 40);
    const auto path = dir.file("model.ckpt");
    save_checkpoint(cp, path);

    const auto back = load_checkpoint(path);
    CHECK(back.fno.layers == cfg.layers);
    CHECK(back.fno.hidden == cfg.hidden);
    CHECK(back.fno.modes == cfg.modes);
    CHECK(back.fno.lifting_width == cfg.lifting_width);
    CHECK(back.fno.projection_width == cfg.projection_width);
    CHECK(back.fno.in_channels == cfg.in_channels);
    CHECK(back.fno.activation == cfg.activation);
    CHECK(back.embedding.k_current == cp.embedding.k_current);
    CHECK(back.embedding.k_feature == cp.embedding.k_feature);
    CHECK(back.embedding.include_raw_current ==
          cp.embedding.include_raw_current);
    CHECK(back.embedding.embed_i_thr == cp.embedding.embed_i_thr);
    CHECK(back.embedding.embed_s_thr == cp.embedding.embed_s_thr);
    CHECK(back.bounds.i_thr_min == cp.bounds.i_thr_min);
    CHECK(back.bounds.i_thr_max == cp.bounds.i_thr_max);
    CHECK(back.bounds.s_thr_min == cp.bounds.s_thr_min);
    CHECK(back.bounds.s_thr_max == cp.bounds.s_thr_max);
    CHECK(back.epoch == cp.epoch);
    CHECK(back.loss_digest == cp.loss_digest);
    CHECK(flatten(back.params) == flatten(cp.params));

    Rng rng(8);
    std::vector<float> input(23 * 40);
    for (auto& x : input)
        x = static_cast<float>(rng.uniform(-1, 1));
    const auto y1 = forward(cp.fno, cp.params,
                            std::span<const float>(input), 40);
    const auto y2 = forward(back.fno, back.params,
                            std::span<const float>(input), 40);
    CHECK(y1 == y2);
}

TEST_CASE("corrupt checkpoints are rejected") {
    TempDir dir;
    FnoConfig cfg;
    cfg.layers = 1;
    cfg.hidden = 2;
    cfg.modes = 3;
    cfg.lifting_width = 2;
    cfg.projection_width = 2;
    cfg.in_channels = 23;
    Checkpoint cp;
    cp.fno = cfg;
    cp.params = init_parameters<float>(cfg, 4);
    cp.bounds = LatentBounds{0.01, 0.2, 1000.0, 6000.0};
    const auto path = dir.file("model.ckpt");
    save_checkpoint(cp, path);
    const auto bytes = read_file_bytes(path);

    SUBCASE("bad magic") {
        auto bad = bytes;
        bad[0] = 'X';
        write_file_bytes(path, bad);
        CHECK_THROWS_AS(load_checkpoint(path), io_error);
    }
    SUBCASE("unsupported version") {
        auto bad = bytes;
        bad[4] = 9;
        write_file_bytes(path, bad);
        CHECK_THROWS_AS(load_checkpoint(path), io_error);
    }
    SUBCASE("truncated payload") {
        auto bad = bytes;
        bad.resize(bad.size() - 17);
        write_file_bytes(path, bad);
        CHECK_THROWS_AS(load_checkpoint(path), io_error);
    }
    SUBCASE("flipped payload byte fails the checksum") {
        auto bad = bytes;
        bad[bad.size() / 2] ^= 0x40;
        write_file_bytes(path, bad);
        CHECK_THROWS_AS(load_checkpoint(path), io_error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_checkpoint(dir.file("absent.ckpt")), io_error);
    }
    SUBCASE("trace and checkpoint containers reject each other") {
        Trace tr;
        tr.grid = TimeGrid{0.0, 0.5, 8};
        tr.values.assign(8, -65.0);
        const auto tpath = dir.file("trace.bin");
        save_trace(tr, tpath);
        CHECK_THROWS_AS(load_checkpoint(tpath), io_error);
        CHECK_THROWS_AS(load_trace(path), io_error);
    }
}

TEST_CASE("trace container round-trips at single precision") {
    TempDir dir;
    Trace tr;
    tr.grid = TimeGrid{12.5, 0.06, 33};
    tr.values.resize(33);
    Rng rng(6);
    for (auto& v : tr.values)
        v = static_cast<float>(rng.uniform(-90.0, 40.0));
    const auto path = dir.file("trace.bin");
    save_trace(tr, path);
    const auto back = load_trace(path);
    CHECK(back.grid.t0 == tr.grid.t0);
    CHECK(back.grid.dt == tr.grid.dt);
    CHECK(back.grid.n == tr.grid.n);
    REQUIRE(back.values.size() == tr.values.size());
    for (std::size_t i = 0; i < back.values.size(); ++i)
        CHECK(back.values[i] == tr.values[i]);

    SUBCASE("truncated trace is rejected") {
        auto bytes = read_file_bytes(path);
        bytes.resize(bytes.size() - 5);
        write_file_bytes(path, bytes);
        CHECK_THROWS_AS(load_trace(path), io_error);
    }
}

TEST_CASE("assembled channel stacks feed the network directly") {
    Stimulus stim;
    stim.grid = TimeGrid{0.0, 0.05, 128};
    stim.amplitude_na = 0.15;
    stim.onset_ms = 1.0;
    stim.duration_ms = 4.0;
    const LatentPoint latent{1.25, 2.75};
    const auto stack = assemble_input(stim, latent);
    FnoConfig cfg;
    cfg.layers = 1;
    cfg.hidden = 3;
    cfg.modes = 4;
    cfg.lifting_width = 3;
    cfg.projection_width = 3;
    cfg.in_channels = static_cast<int>(stack.channels);
    const auto p = init_parameters<float>(cfg, 14);
    const auto y = forward(cfg, p, stack);
    CHECK(y.size() == stim.grid.n);
    std::vector<float> flat(stack.data.size());
    for (std::size_t i = 0; i < flat.size(); ++i)
        flat[i] = static_cast<float>(stack.data[i]);
    const auto y2 = forward(cfg, p, std::span<const float>(flat),
                            stim.grid.n);
    CHECK(y == y2);
}

} // TEST_SUITE
