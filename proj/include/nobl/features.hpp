#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nobl/signal.hpp"

namespace nobl {

// Spike peaks found by threshold crossing. Times strictly increasing; every
// peak value strictly exceeds the detection threshold.
struct SpikeEvents {
    std::vector<std::size_t> peak_indices;
    std::vector<double> peak_times_ms;
    std::vector<double> peak_values_mv;
    double threshold_mv = -20.0;

    std::size_t count() const { return peak_indices.size(); }
};

// A spike starts at an upward crossing (previous sample at or below the
// threshold, current strictly above) and is reported at the maximum sample
// before the trace falls back to or below the threshold. A trace that only
// touches the threshold exactly produces no spike.
SpikeEvents detect_spikes(const Trace& trace, double threshold_mv = -20.0);

enum class FeatureId : std::size_t {
    ahp_depth = 0,
    ahp_time_from_peak,
    ahp1_depth_from_peak,
    ap1_peak,
    ap1_width,
    decay_time_constant_after_stim,
    depol_block,
    inv_first_isi,
    mean_ap_amplitude,
    mean_frequency,
    sag_amplitude,
    spikecount,
    steady_state_voltage,
    steady_state_voltage_stimend,
    time_to_first_spike,
    voltage_base,
};

inline constexpr std::size_t kFeatureCount = 16;

const char* feature_name(FeatureId id);
std::optional<FeatureId> feature_from_name(const std::string& name);

// Values per feature; undefined cases carry no value (never sentinels).
struct FeatureSet {
    std::array<std::optional<double>, kFeatureCount> values;

    std::optional<double>& operator[](FeatureId id) {
        return values[static_cast<std::size_t>(id)];
    }
    const std::optional<double>& operator[](FeatureId id) const {
        return values[static_cast<std::size_t>(id)];
    }
};

// Flat "name value|undefined" records, one feature per line.
std::string to_text(const FeatureSet& fs);
FeatureSet feature_set_from_text(const std::string& text);

struct FeatureConfig {
    double spike_threshold_mv = -20.0;
    // Fraction of a window used for "last 10%" style means.
    double window_fraction = 0.1;
    // Exponential-decay fit after stimulus end.
    double decay_window_ms = 50.0;
    double decay_min_deviation_mv = 0.05;
    std::size_t decay_min_points = 5;
    // Depolarization/hyperpolarization block heuristic.
    double depol_hold_ms = 50.0;
    double depol_high_mv = -40.0;
    double depol_hypo_offset_mv = 30.0;
};

// Computes the full feature catalog for a trace under its stimulus.
// Window conventions (half-open in time, sample j belongs to [a, b) iff
// a <= t_j < b):
//   voltage_base                 mean over the last `window_fraction` of
//                                [t0, onset); undefined when onset <= t0
//   steady_state_voltage         mean over [onset+duration, grid end)
//   steady_state_voltage_stimend mean over the last `window_fraction` of the
//                                stimulus window
//   mean_frequency               spikes with peak inside the stimulus window
//                                divided by duration, in Hz
//   sag_amplitude                steady_state_voltage_stimend minus the
//                                stimulus-window minimum; defined only when
//                                the whole trace has no spikes
//   decay_time_constant_after_stim  least-squares slope of log |v - baseline|
//                                over [stim end, stim end + decay_window_ms),
//                                baseline = mean of the final window_fraction
//                                of the trace; undefined unless the fit has
//                                enough points and a negative slope
// Spike-anchored features use the first spike of the trace; the first
// after-hyperpolarization minimum is searched between the first peak and the
// second peak (or stimulus end, then trace end, when absent).
FeatureSet extract_features(const Trace& trace, const Stimulus& stim,
                            const FeatureConfig& cfg = {});

struct FICurve {
    std::vector<double> amplitudes_na;
    std::vector<double> rates_hz;
};

using SimulateFn = std::function<Trace(double amplitude_na)>;

// Firing rate (mean_frequency) per amplitude. Amplitudes must be strictly
// increasing; simulator errors are rethrown with the amplitude attached.
FICurve fi_curve(const SimulateFn& sim, std::span<const double> amplitudes_na,
                 double onset_ms, double duration_ms,
                 const FeatureConfig& cfg = {});

struct ThresholdFeatures {
    double i_thr_na = 0.0;
    double s_thr_hz_per_na = 0.0;
};

// Bisection for the smallest firing amplitude in [range_lo, range_hi] plus
// the forward-difference F-I slope at that point. The model must fire at
// range_hi and stay silent at range_lo.
ThresholdFeatures threshold_features(const SimulateFn& sim, double range_lo_na,
                                     double range_hi_na, double onset_ms,
                                     double duration_ms, double tol_na = 1e-3,
                                     double slope_delta_na = 0.01,
                                     const FeatureConfig& cfg = {});

} // namespace nobl
