#include "nobl/oracle.hpp"

#include <cmath>
#include <sstream>

#include "nobl/errors.hpp"
#include "nobl/rng.hpp"

namespace nobl {

void validate(const PointNeuronParams& p) {
    if (!(p.c > 0.0)) throw config_error("neuron params: capacitance must be positive");
    if (p.g_na < 0.0 || p.g_k < 0.0 || p.g_a < 0.0 || p.g_l < 0.0 || p.g_h < 0.0) {
        throw config_error("neuron params: conductances must be nonnegative");
    }
    if (!(p.area_cm2 > 0.0)) throw config_error("neuron params: area must be positive");
    if (!(p.tau_h_ms > 0.0)) throw config_error("neuron params: tau_h must be positive");
    if (!(p.e_k < p.e_l && p.e_l < p.e_na)) {
        throw config_error("neuron params: require E_K < E_L < E_Na");
    }
    if (!(p.e_k < p.e_h && p.e_h < p.e_na)) {
        throw config_error("neuron params: require E_K < E_H < E_Na");
    }
    if (!(-120.0 <= p.e_a && p.e_a < p.e_na)) {
        throw config_error("neuron params: require -120 <= E_A < E_Na");
    }
}

AmplitudeRange reference_amplitude_range() { return AmplitudeRange{}; }

AmplitudeRange reference_amplitude_range(double lo_na, double hi_na) {
    if (!(lo_na < hi_na)) {
        throw config_error("amplitude range: low bound must be below high bound");
    }
    return AmplitudeRange{lo_na, hi_na};
}

namespace {

// x / (1 - exp(-x/k)), finite at x = 0.
double vtrap(double x, double k) {
    if (std::abs(x / k) < 1e-6) return k * (1.0 + 0.5 * x / k);
    return x / (1.0 - std::exp(-x / k));
}

// Sodium and delayed-rectifier kinetics in the Connor-Stevens
// parameterization (warm-temperature fast-spiking variant of the classic
// squid gates). Together with the transient potassium current below, this
// gives class 1 excitability: the firing rate grows continuously from zero
// at threshold instead of jumping, and release from hyperpolarization does
// not fire anodal-break spikes.
double alpha_m(double v) { return 0.38 * vtrap(v + 29.7, 10.0); }
double beta_m(double v) { return 15.2 * std::exp(-(v + 54.7) / 18.0); }
double alpha_h(double v) { return 0.266 * std::exp(-(v + 48.0) / 20.0); }
double beta_h(double v) { return 3.8 / (1.0 + std::exp(-(v + 18.0) / 10.0)); }
double alpha_n(double v) { return 0.02 * vtrap(v + 45.7, 10.0); }
double beta_n(double v) { return 0.25 * std::exp(-(v + 55.7) / 80.0); }

// Transient potassium (A-type) gates, Connor-Stevens shapes. The activation
// is additionally closed off below -80 mV so the current does not load the
// strongly hyperpolarized range, where the sag current acts.
double a_inf(double v) {
    const double num = 0.0761 * std::exp((v + 94.22) / 31.84);
    const double den = 1.0 + std::exp((v + 1.17) / 28.93);
    const double low_cut = 1.0 / (1.0 + std::exp(-(v + 72.0) / 4.0));
    return std::cbrt(num / den) * low_cut;
}
double tau_a(double v) {
    return 0.3632 + 1.158 / (1.0 + std::exp((v + 55.96) / 20.12));
}
double b_inf(double v) {
    const double s = 1.0 / (1.0 + std::exp((v + 53.3) / 14.54));
    return s * s * s * s;
}
double tau_b(double v) {
    return 1.24 + 2.678 / (1.0 + std::exp((v + 50.0) / 16.027));
}

// Activation of the hyperpolarization-recruited conductance. Nearly closed
// at rest, half-open at -80 mV. Because its reversal sits between E_K and
// rest, it pulls the membrane back up during strong negative steps (the
// sag) and then brakes the voltage as it returns through the subthreshold
// corridor after release, which helps keep the cell from firing an
// anodal-break spike.
double h_inf(double v) { return 1.0 / (1.0 + std::exp((v + 80.0) / 5.0)); }

double gate_inf(double a, double b) { return a / (a + b); }

struct State {
    double v, m, h, n, a, b, r;
};

// Ionic current density (uA/cm^2), positive outward.
double ionic_current(const PointNeuronParams& p, const State& s) {
    const double i_na = p.g_na * s.m * s.m * s.m * s.h * (s.v - p.e_na);
    const double i_k = p.g_k * s.n * s.n * s.n * s.n * (s.v - p.e_k);
    const double i_a = p.g_a * s.a * s.a * s.a * s.b * (s.v - p.e_a);
    const double i_l = p.g_l * (s.v - p.e_l);
    const double i_h = p.g_h * s.r * (s.v - p.e_h);
    return i_na + i_k + i_a + i_l + i_h;
}

State derivatives(const PointNeuronParams& p, const State& s, double inj_density) {
    State d;
    d.v = (inj_density - ionic_current(p, s)) / p.c;
    d.m = alpha_m(s.v) * (1.0 - s.m) - beta_m(s.v) * s.m;
    d.h = alpha_h(s.v) * (1.0 - s.h) - beta_h(s.v) * s.h;
    d.n = alpha_n(s.v) * (1.0 - s.n) - beta_n(s.v) * s.n;
    d.a = (a_inf(s.v) - s.a) / tau_a(s.v);
    d.b = (b_inf(s.v) - s.b) / tau_b(s.v);
    d.r = (h_inf(s.v) - s.r) / p.tau_h_ms;
    return d;
}

State equilibrium_state(double v) {
    State s;
    s.v = v;
    s.m = gate_inf(alpha_m(v), beta_m(v));
    s.h = gate_inf(alpha_h(v), beta_h(v));
    s.n = gate_inf(alpha_n(v), beta_n(v));
    s.a = a_inf(v);
    s.b = b_inf(v);
    s.r = h_inf(v);
    return s;
}

State rk4_step(const PointNeuronParams& p, const State& s, double t, double dt,
               const Stimulus& stim, double density_per_na) {
    // The injected current is constant over each substep, classified at the
    // substep midpoint. Sampling the on/off window at the stage times instead
    // would let the endpoint stage of the step adjacent to an edge see the
    // other side of the discontinuity, degrading the integrator to first
    // order globally.
    const double mid = t + 0.5 * dt;
    const bool on = mid >= stim.onset_ms && mid < stim.onset_ms + stim.duration_ms;
    const double inj_step = on ? stim.amplitude_na * density_per_na : 0.0;
    auto inj = [&](double) { return inj_step; };
    auto advance = [&](const State& base, const State& d, double f) {
        State out;
        out.v = base.v + f * d.v;
        out.m = base.m + f * d.m;
        out.h = base.h + f * d.h;
        out.n = base.n + f * d.n;
        out.a = base.a + f * d.a;
        out.b = base.b + f * d.b;
        out.r = base.r + f * d.r;
        return out;
    };
    const State k1 = derivatives(p, s, inj(t));
    const State k2 = derivatives(p, advance(s, k1, 0.5 * dt), inj(t + 0.5 * dt));
    const State k3 = derivatives(p, advance(s, k2, 0.5 * dt), inj(t + 0.5 * dt));
    const State k4 = derivatives(p, advance(s, k3, dt), inj(t + dt));
    State out;
    out.v = s.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    out.m = s.m + dt / 6.0 * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
    out.h = s.h + dt / 6.0 * (k1.h + 2.0 * k2.h + 2.0 * k3.h + k4.h);
    out.n = s.n + dt / 6.0 * (k1.n + 2.0 * k2.n + 2.0 * k3.n + k4.n);
    out.a = s.a + dt / 6.0 * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a);
    out.b = s.b + dt / 6.0 * (k1.b + 2.0 * k2.b + 2.0 * k3.b + k4.b);
    out.r = s.r + dt / 6.0 * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
    return out;
}

} // namespace

double resting_potential(const PointNeuronParams& params) {
    validate(params);
    auto balance = [&](double v) {
        return ionic_current(params, equilibrium_state(v));
    };
    // Scan upward for the first sign change, then bisect. The lowest root is
    // the stable resting point.
    double lo = -120.0;
    double f_lo = balance(lo);
    double hi = lo;
    bool bracketed = false;
    for (double v = lo + 0.5; v <= 0.0; v += 0.5) {
        const double f = balance(v);
        if ((f_lo < 0.0) != (f < 0.0)) {
            hi = v;
            bracketed = true;
            break;
        }
        lo = v;
        f_lo = f;
    }
    if (!bracketed) {
        throw generation_error("resting potential: no equilibrium below 0 mV");
    }
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = balance(mid);
        if ((f_lo < 0.0) != (f < 0.0)) {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f;
        }
    }
    return 0.5 * (lo + hi);
}

Trace simulate(const PointNeuronParams& params, const Stimulus& stim, double dt_ms) {
    validate(params);
    validate(stim);
    if (!(dt_ms > 0.0) || dt_ms > 0.02 + 1e-12) {
        throw config_error("simulate: dt must be positive and at most 0.02 ms");
    }
    if (std::abs(stim.amplitude_na) > 10.0) {
        throw config_error("simulate: amplitude outside solver safety bounds");
    }
    const double ratio = stim.grid.dt / dt_ms;
    const auto substeps = static_cast<std::size_t>(std::llround(ratio));
    if (substeps < 1 || std::abs(ratio - static_cast<double>(substeps)) > 1e-9) {
        throw config_error("simulate: dt must divide the grid step");
    }
    const double dt = stim.grid.dt / static_cast<double>(substeps);
    const double density_per_na = 1e-3 / params.area_cm2; // nA -> uA/cm^2

    Trace tr;
    tr.grid = stim.grid;
    tr.values.resize(stim.grid.n);

    State s = equilibrium_state(resting_potential(params));
    tr.values[0] = s.v;
    for (std::size_t j = 1; j < stim.grid.n; ++j) {
        const double t_base = stim.grid.time(j - 1);
        for (std::size_t k = 0; k < substeps; ++k) {
            s = rk4_step(params, s, t_base + static_cast<double>(k) * dt, dt, stim,
                         density_per_na);
        }
        if (!std::isfinite(s.v) || !std::isfinite(s.m) || !std::isfinite(s.h) ||
            !std::isfinite(s.n) || !std::isfinite(s.r) || std::abs(s.v) > 200.0) {
            std::ostringstream os;
            os << "simulate: numerical blow-up at t = " << stim.grid.time(j)
               << " ms";
            throw generation_error(os.str());
        }
        tr.values[j] = s.v;
    }
    return tr;
}

HofEnsemble generate_ensemble(const PointNeuronParams& base, std::size_t count,
                              const JitterSpec& jitter, std::uint64_t seed,
                              const ThresholdProtocol& protocol,
                              const AmplitudeRange& range, int max_retries) {
    validate(base);
    if (count < 1) throw config_error("generate_ensemble: count must be >= 1");
    if (!(range.lo_na < range.hi_na)) {
        throw config_error("generate_ensemble: invalid amplitude range");
    }
    if (jitter.g_na < 0.0 || jitter.g_k < 0.0 || jitter.g_a < 0.0 ||
        jitter.g_l < 0.0 || jitter.g_h < 0.0 || jitter.g_na >= 1.0 ||
        jitter.g_k >= 1.0 || jitter.g_a >= 1.0 || jitter.g_l >= 1.0 ||
        jitter.g_h >= 1.0) {
        throw config_error("generate_ensemble: jitter fractions must be in [0, 1)");
    }

    HofEnsemble ens;
    ens.base = base;
    ens.jitter = jitter;
    ens.range = range;
    ens.protocol = protocol;
    ens.seed = seed;
    ens.models.reserve(count);

    const Rng root(seed);
    for (std::size_t i = 0; i < count; ++i) {
        Rng slot = root.fork(i);
        bool placed = false;
        for (int attempt = 0; attempt <= max_retries && !placed; ++attempt) {
            PointNeuronParams p = base;
            p.g_na *= slot.uniform(1.0 - jitter.g_na, 1.0 + jitter.g_na);
            p.g_k *= slot.uniform(1.0 - jitter.g_k, 1.0 + jitter.g_k);
            p.g_a *= slot.uniform(1.0 - jitter.g_a, 1.0 + jitter.g_a);
            p.g_l *= slot.uniform(1.0 - jitter.g_l, 1.0 + jitter.g_l);
            p.g_h *= slot.uniform(1.0 - jitter.g_h, 1.0 + jitter.g_h);
            auto sim = [&](double amp) {
                Stimulus st;
                st.grid = protocol.grid;
                st.amplitude_na = amp;
                st.onset_ms = protocol.onset_ms;
                st.duration_ms = protocol.duration_ms;
                return simulate(p, st, protocol.dt_ms);
            };
            try {
                const ThresholdFeatures tf = threshold_features(
                    sim, range.lo_na, range.hi_na, protocol.onset_ms,
                    protocol.duration_ms);
                if (!(tf.s_thr_hz_per_na > 0.0)) continue;
                HofModel m;
                m.params = p;
                m.i_thr_na = tf.i_thr_na;
                m.s_thr_hz_per_na = tf.s_thr_hz_per_na;
                m.id = static_cast<std::uint32_t>(i);
                ens.models.push_back(m);
                placed = true;
            } catch (const generation_error&) {
                // Silent candidate; try the next jitter draw from this slot.
            }
        }
        if (!placed) {
            std::ostringstream os;
            os << "generate_ensemble: no firing candidate for slot " << i
               << " after " << max_retries + 1 << " attempts";
            throw generation_error(os.str());
        }
    }
    return ens;
}

} // namespace nobl
