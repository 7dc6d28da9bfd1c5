#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "nobl/errors.hpp"

namespace nobl {

// Uniform sample grid. Sample k lives at t0 + k*dt (milliseconds).
struct TimeGrid {
    double t0 = 0.0;
    double dt = 1.0;
    std::size_t n = 2;

    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    double end() const { return t0 + static_cast<double>(n) * dt; }
    double span_ms() const { return static_cast<double>(n) * dt; }
};

void validate(const TimeGrid& grid);

// Somatic voltage trace in mV on a uniform grid.
struct Trace {
    TimeGrid grid;
    std::vector<double> values;
};

void validate(const Trace& trace);

// Square DC current step: `amplitude` nA on [onset, onset+duration), 0 outside.
struct Stimulus {
    TimeGrid grid;
    double amplitude_na = 0.0;
    double onset_ms = 0.0;
    double duration_ms = 0.0;
};

void validate(const Stimulus& stim);

// Sampled stimulus waveform (nA), length grid.n.
std::vector<double> render_stimulus(const Stimulus& stim);

// Zero-phase (forward-backward) Butterworth low-pass. `cutoff` is a fraction
// of the Nyquist frequency; `order` must be even.
std::vector<double> zero_phase_lowpass(std::span<const double> x, double cutoff,
                                       int order = 4);

// Anti-aliased subsampling: zero-phase low-pass at 0.8x the new Nyquist
// frequency, then every factor-th sample kept. Output length floor(n/factor);
// factor 1 returns the input unchanged.
Trace lowpass_decimate(const Trace& trace, std::size_t factor);

// ||x - y||_p / (||y||_p + eps).
double relative_lp_error(std::span<const double> x, std::span<const double> y,
                         double p, double eps = 1e-8);

// Real FFT pair. Convention: unnormalized forward (bin 0 of a constant c
// equals n*c), 1/n inverse. rfft returns bins [0, n/2]; irfft ignores the
// imaginary parts of the DC and Nyquist bins.
std::vector<std::complex<double>> rfft(std::span<const double> x);
std::vector<double> irfft(std::span<const std::complex<double>> spectrum,
                          std::size_t n);

} // namespace nobl
