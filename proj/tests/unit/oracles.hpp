#pragma once

// Independent reference implementations used only by tests. Deliberately
// naive: correctness over speed, no shared code with the library paths they
// check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "nobl/rng.hpp"

namespace testing_oracles {

// O(n^2) direct DFT, bins [0, n/2].
inline std::vector<std::complex<double>> naive_real_dft(std::span<const double> x) {
    const std::size_t n = x.size();
    const double two_pi = 6.283185307179586476925286766559;
    std::vector<std::complex<double>> out(n / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -two_pi * static_cast<double>(j) *
                               static_cast<double>(k) / static_cast<double>(n);
            re += x[j] * std::cos(ang);
            im += x[j] * std::sin(ang);
        }
        out[k] = {re, im};
    }
    return out;
}

// O(n * nh) direct inverse of a half-spectrum (1/n convention, imaginary
// parts of DC/Nyquist ignored).
inline std::vector<double> naive_real_idft(
    std::span<const std::complex<double>> spec, std::size_t n) {
    const double two_pi = 6.283185307179586476925286766559;
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = spec[0].real();
        for (std::size_t k = 1; k < spec.size(); ++k) {
            const double ang = two_pi * static_cast<double>(j) *
                               static_cast<double>(k) / static_cast<double>(n);
            const bool nyquist = (n % 2 == 0) && (k == n / 2);
            const double w = nyquist ? 1.0 : 2.0;
            acc += w * (spec[k].real() * std::cos(ang) -
                        (nyquist ? 0.0 : spec[k].imag()) * std::sin(ang));
        }
        out[j] = acc / static_cast<double>(n);
    }
    return out;
}

inline double l2_diff_rel(std::span<const double> a, std::span<const double> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / (std::sqrt(den) + 1e-300);
}

// Direct-sum reference for the spectral mixing layer: naive DFT per input
// channel, per-mode matrix mix on bins below min(modes, n/2+1), naive
// inverse per output channel. Inherits the DC/Nyquist convention of
// naive_real_idft above.
inline std::vector<double> naive_spectral(
    std::span<const double> v, std::size_t n, std::size_t cin,
    std::size_t cout, std::span<const std::complex<double>> w, int modes) {
    const std::size_t bins = n / 2 + 1;
    const std::size_t km =
        std::min<std::size_t>(static_cast<std::size_t>(modes), bins);
    std::vector<std::vector<std::complex<double>>> vhat(cin);
    for (std::size_t i = 0; i < cin; ++i)
        vhat[i] = naive_real_dft(v.subspan(i * n, n));
    std::vector<double> out(cout * n);
    for (std::size_t o = 0; o < cout; ++o) {
        std::vector<std::complex<double>> spec(bins, {0.0, 0.0});
        for (std::size_t k = 0; k < km; ++k)
            for (std::size_t i = 0; i < cin; ++i)
                spec[k] += vhat[i][k] * w[(k * cin + i) * cout + o];
        const auto row = naive_real_idft(spec, n);
        std::copy(row.begin(), row.end(), out.begin() + o * n);
    }
    return out;
}

// Band-limited periodic test signal: harmonics strictly below `limit`,
// evaluable at arbitrary phase so one function can be sampled consistently
// on grids of different resolution.
struct TrigPoly {
    std::vector<double> a; // cosine coefficients, harmonic 0 upward
    std::vector<double> b; // sine coefficients

    double eval(double s) const {
        const double tau = 2.0 * std::numbers::pi;
        double acc = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            acc += a[k] * std::cos(tau * static_cast<double>(k) * s);
            acc += b[k] * std::sin(tau * static_cast<double>(k) * s);
        }
        return acc;
    }

    std::vector<double> sample(std::size_t n) const {
        std::vector<double> out(n);
        for (std::size_t j = 0; j < n; ++j)
            out[j] = eval(static_cast<double>(j) / static_cast<double>(n));
        return out;
    }
};

inline TrigPoly random_trig_poly(nobl::Rng& rng, std::size_t limit,
                                 double amp) {
    TrigPoly p;
    p.a.resize(limit);
    p.b.resize(limit);
    for (std::size_t k = 0; k < limit; ++k) {
        p.a[k] = rng.uniform(-amp, amp);
        p.b[k] = k == 0 ? 0.0 : rng.uniform(-amp, amp);
    }
    return p;
}

} // namespace testing_oracles
