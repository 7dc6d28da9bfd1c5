#pragma once

#include <cstdint>
#include <vector>

#include "nobl/features.hpp"
#include "nobl/signal.hpp"

namespace nobl {

// Single-compartment conductance model: transient sodium, delayed-rectifier
// potassium, transient (A-type) potassium, leak, and a slow
// hyperpolarization-recruited current. The A-current smooths the firing
// onset so the rate grows continuously from zero at threshold, and together
// with the slow current it keeps the cell from firing rebound spikes when a
// strong hyperpolarizing step is released; the slow current also gives
// hyperpolarizing steps a measurable sag. Units: mV, ms, mS/cm^2, uF/cm^2;
// injected current in nA is converted to a density via the membrane area.
struct PointNeuronParams {
    double c = 1.0;          // uF/cm^2
    double g_na = 120.0;     // mS/cm^2
    double g_k = 20.0;       // mS/cm^2
    double g_a = 47.7;       // mS/cm^2
    double g_l = 0.3;        // mS/cm^2
    double g_h = 1.0;        // mS/cm^2
    double e_na = 55.0;      // mV
    double e_k = -72.0;      // mV
    double e_a = -75.0;      // mV
    double e_l = -25.29;     // mV, places rest at -65 given the other defaults
    double e_h = -70.0;      // mV
    double tau_h_ms = 50.0;  // activation time constant of the sag current
    double area_cm2 = 4.5e-6;
};

void validate(const PointNeuronParams& params);

struct AmplitudeRange {
    double lo_na = -0.11;
    double hi_na = 0.28;
};

// Supported injection amplitude window; defaults to the reference range.
AmplitudeRange reference_amplitude_range();
AmplitudeRange reference_amplitude_range(double lo_na, double hi_na);

// Resting membrane potential: the lowest root of the steady-state current
// balance with all gates at their voltage-clamped equilibria.
double resting_potential(const PointNeuronParams& params);

// Fixed-step RK4 integration from rest; dt must divide the stimulus grid
// step and be at most 0.02 ms. The returned trace lives on the stimulus
// grid. Non-finite or runaway state raises a blow-up error naming the time.
Trace simulate(const PointNeuronParams& params, const Stimulus& stim,
               double dt_ms = 0.02);

struct HofModel {
    PointNeuronParams params;
    double i_thr_na = 0.0;
    double s_thr_hz_per_na = 0.0;
    std::uint32_t id = 0;
};

// Relative half-widths of the uniform multiplicative jitter per conductance.
// The transient-potassium and sag conductances vary the most, which spreads
// the threshold slope and sag across ensemble members.
struct JitterSpec {
    double g_na = 0.10;
    double g_k = 0.10;
    double g_a = 0.25;
    double g_l = 0.10;
    double g_h = 0.20;
};

// Stimulus protocol used to probe threshold features of candidate models.
struct ThresholdProtocol {
    TimeGrid grid{0.0, 0.02, 6144};
    double onset_ms = 15.0;
    double duration_ms = 85.0;
    double dt_ms = 0.02;
};

struct HofEnsemble {
    std::vector<HofModel> models;
    PointNeuronParams base;
    JitterSpec jitter;
    AmplitudeRange range;
    ThresholdProtocol protocol;
    std::uint64_t seed = 0;
};

// `count` jittered copies of `base`, each with measured (i_thr, s_thr).
// Candidates that stay silent at the range top (or have a non-positive
// threshold slope) are resampled up to `max_retries` times per slot.
HofEnsemble generate_ensemble(const PointNeuronParams& base, std::size_t count,
                              const JitterSpec& jitter, std::uint64_t seed,
                              const ThresholdProtocol& protocol,
                              const AmplitudeRange& range = reference_amplitude_range(),
                              int max_retries = 20);

} // namespace nobl
