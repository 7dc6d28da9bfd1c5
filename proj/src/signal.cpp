#include "nobl/signal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nobl/fft.hpp"

namespace nobl {

void validate(const TimeGrid& grid) {
    if (!(grid.dt > 0.0) || !std::isfinite(grid.dt) || !std::isfinite(grid.t0)) {
        throw config_error("time grid: dt must be positive and finite");
    }
    if (grid.n < 2) throw config_error("time grid: need at least 2 samples");
}

void validate(const Trace& trace) {
    validate(trace.grid);
    if (trace.values.size() != trace.grid.n) {
        throw config_error("trace: value count does not match grid");
    }
    for (double v : trace.values) {
        if (!std::isfinite(v)) throw config_error("trace: non-finite value");
    }
}

void validate(const Stimulus& stim) {
    validate(stim.grid);
    if (!std::isfinite(stim.amplitude_na)) {
        throw config_error("stimulus: non-finite amplitude");
    }
    if (stim.duration_ms < 0.0) {
        throw config_error("stimulus: negative duration");
    }
    if (stim.onset_ms < stim.grid.t0 ||
        stim.onset_ms + stim.duration_ms > stim.grid.end()) {
        throw config_error("stimulus: window extends outside the grid");
    }
}

std::vector<double> render_stimulus(const Stimulus& stim) {
    validate(stim);
    std::vector<double> out(stim.grid.n, 0.0);
    const double t_end = stim.onset_ms + stim.duration_ms;
    for (std::size_t j = 0; j < stim.grid.n; ++j) {
        const double t = stim.grid.time(j);
        if (t >= stim.onset_ms && t < t_end) out[j] = stim.amplitude_na;
    }
    return out;
}

namespace {

struct Biquad {
    double b0, b1, b2, a1, a2;
};

// Bilinear-transform Butterworth low-pass as a cascade of second-order
// sections. cutoff is a fraction of Nyquist in (0, 1).
std::vector<Biquad> butterworth_lowpass(double cutoff, int order) {
    if (!(cutoff > 0.0) || !(cutoff < 1.0)) {
        throw config_error("lowpass: cutoff must be inside (0, 1) of Nyquist");
    }
    if (order < 2 || order % 2 != 0) {
        throw config_error("lowpass: order must be a positive even number");
    }
    const double k = std::tan(detail::kPi * cutoff / 2.0);
    std::vector<Biquad> sections;
    sections.reserve(static_cast<std::size_t>(order / 2));
    for (int s = 0; s < order / 2; ++s) {
        const double theta =
            detail::kPi * (2.0 * s + 1.0) / (2.0 * static_cast<double>(order));
        const double q = 1.0 / (2.0 * std::cos(theta));
        const double norm = 1.0 / (1.0 + k / q + k * k);
        Biquad bq;
        bq.b0 = k * k * norm;
        bq.b1 = 2.0 * bq.b0;
        bq.b2 = bq.b0;
        bq.a1 = 2.0 * (k * k - 1.0) * norm;
        bq.a2 = (1.0 - k / q + k * k) * norm;
        sections.push_back(bq);
    }
    return sections;
}

// Direct form II transposed, with per-section state seeded to the constant
// steady state of the first sample so a DC input passes through exactly.
void filter_in_place(const std::vector<Biquad>& sections, std::vector<double>& x) {
    for (const Biquad& s : sections) {
        const double u = x.empty() ? 0.0 : x.front();
        double s1 = u * (1.0 - s.b0);
        double s2 = u * (s.b2 - s.a2);
        for (double& v : x) {
            const double in = v;
            const double out = s.b0 * in + s1;
            s1 = s.b1 * in - s.a1 * out + s2;
            s2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
}

// Samples needed for the slowest section pole to decay below 1e-12.
std::size_t warmup_length(const std::vector<Biquad>& sections, int order) {
    double radius = 0.0;
    for (const Biquad& s : sections) {
        radius = std::max(radius, std::sqrt(std::max(s.a2, 0.0)));
    }
    std::size_t pad = static_cast<std::size_t>(4 * order);
    if (radius > 0.0 && radius < 1.0) {
        pad = std::max(pad, static_cast<std::size_t>(
                                std::ceil(std::log(1e-12) / std::log(radius))));
    }
    return pad;
}

} // namespace

std::vector<double> zero_phase_lowpass(std::span<const double> x, double cutoff,
                                       int order) {
    const auto sections = butterworth_lowpass(cutoff, order);
    const std::size_t pad = warmup_length(sections, order);
    if (x.size() <= pad) {
        throw config_error("lowpass: input shorter than filter warm-up length");
    }
    const std::size_t n = x.size();
    // Odd reflection padding at both ends suppresses edge transients of the
    // zero-state filter passes.
    std::vector<double> buf(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) {
        buf[i] = 2.0 * x[0] - x[pad - i];
        buf[n + pad + i] = 2.0 * x[n - 1] - x[n - 2 - i];
    }
    std::copy(x.begin(), x.end(), buf.begin() + static_cast<std::ptrdiff_t>(pad));

    filter_in_place(sections, buf);
    std::reverse(buf.begin(), buf.end());
    filter_in_place(sections, buf);
    std::reverse(buf.begin(), buf.end());

    return std::vector<double>(buf.begin() + static_cast<std::ptrdiff_t>(pad),
                               buf.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

Trace lowpass_decimate(const Trace& trace, std::size_t factor) {
    validate(trace);
    if (factor < 1) throw config_error("lowpass_decimate: factor must be >= 1");
    if (factor == 1) return trace;
    if (trace.grid.n <= factor) {
        throw config_error("lowpass_decimate: trace too short for factor");
    }
    const std::size_t n_out = trace.grid.n / factor;
    if (n_out < 2) throw config_error("lowpass_decimate: output would be degenerate");

    // New Nyquist is old Nyquist / factor; the cutoff fraction of the old
    // Nyquist is 0.8 / factor.
    const double cutoff = 0.8 / static_cast<double>(factor);
    const std::vector<double> filtered = zero_phase_lowpass(trace.values, cutoff);

    Trace out;
    out.grid.t0 = trace.grid.t0;
    out.grid.dt = trace.grid.dt * static_cast<double>(factor);
    out.grid.n = n_out;
    out.values.resize(n_out);
    for (std::size_t j = 0; j < n_out; ++j) out.values[j] = filtered[j * factor];
    return out;
}

double relative_lp_error(std::span<const double> x, std::span<const double> y,
                         double p, double eps) {
    if (x.size() != y.size()) {
        throw config_error("relative_lp_error: length mismatch");
    }
    if (x.empty()) throw config_error("relative_lp_error: empty input");
    if (!(p >= 1.0)) throw config_error("relative_lp_error: p must be >= 1");
    if (eps < 0.0) throw config_error("relative_lp_error: eps must be >= 0");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += std::pow(std::abs(x[i] - y[i]), p);
        den += std::pow(std::abs(y[i]), p);
    }
    const double inv_p = 1.0 / p;
    return std::pow(num, inv_p) / (std::pow(den, inv_p) + eps);
}

std::vector<std::complex<double>> rfft(std::span<const double> x) {
    if (x.empty()) throw config_error("rfft: empty input");
    RfftEngine<double> eng(x.size());
    std::vector<std::complex<double>> out(eng.bins());
    eng.forward(x.data(), out.data());
    return out;
}

std::vector<double> irfft(std::span<const std::complex<double>> spectrum,
                          std::size_t n) {
    if (n == 0) throw config_error("irfft: length must be positive");
    if (spectrum.size() != n / 2 + 1) {
        throw config_error("irfft: spectrum size does not match target length " +
                           std::to_string(n));
    }
    RfftEngine<double> eng(n);
    std::vector<double> out(n);
    eng.inverse(spectrum.data(), out.data());
    return out;
}

} // namespace nobl
