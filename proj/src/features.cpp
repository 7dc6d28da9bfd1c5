#include "nobl/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nobl/errors.hpp"

namespace nobl {

SpikeEvents detect_spikes(const Trace& trace, double threshold_mv) {
    validate(trace);
    SpikeEvents ev;
    ev.threshold_mv = threshold_mv;
    const auto& v = trace.values;
    const std::size_t n = v.size();
    std::size_t j = 0;
    // Skip any initial segment already above threshold: no upward crossing
    // has been observed for it.
    while (j < n && v[j] > threshold_mv) ++j;
    while (j < n) {
        if (!(j > 0 && v[j] > threshold_mv && v[j - 1] <= threshold_mv)) {
            ++j;
            continue;
        }
        std::size_t peak = j;
        std::size_t k = j;
        while (k < n && v[k] > threshold_mv) {
            if (v[k] > v[peak]) peak = k;
            ++k;
        }
        ev.peak_indices.push_back(peak);
        ev.peak_times_ms.push_back(trace.grid.time(peak));
        ev.peak_values_mv.push_back(v[peak]);
        j = k;
    }
    return ev;
}

namespace {

constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "AHP_depth",
    "AHP_time_from_peak",
    "AHP1_depth_from_peak",
    "AP1_peak",
    "AP1_width",
    "decay_time_constant_after_stim",
    "depol_block",
    "inv_first_ISI",
    "mean_AP_amplitude",
    "mean_frequency",
    "sag_amplitude",
    "spikecount",
    "steady_state_voltage",
    "steady_state_voltage_stimend",
    "time_to_first_spike",
    "voltage_base",
};

// Samples with a <= t < b.
struct IndexWindow {
    std::size_t lo = 0; // first index inside
    std::size_t hi = 0; // one past last index inside

    bool empty() const { return hi <= lo; }
    std::size_t size() const { return empty() ? 0 : hi - lo; }
};

IndexWindow window_indices(const TimeGrid& grid, double a, double b) {
    IndexWindow w;
    if (!(b > a)) return w;
    const double lo_f = std::ceil((a - grid.t0) / grid.dt - 1e-9);
    std::size_t lo = lo_f <= 0.0 ? 0 : static_cast<std::size_t>(lo_f);
    std::size_t hi = lo;
    while (hi < grid.n && grid.time(hi) < b) ++hi;
    while (lo < hi && grid.time(lo) < a) ++lo;
    w.lo = std::min(lo, grid.n);
    w.hi = std::min(hi, grid.n);
    return w;
}

std::optional<double> window_mean(const std::vector<double>& v, IndexWindow w) {
    if (w.empty()) return std::nullopt;
    double acc = 0.0;
    for (std::size_t j = w.lo; j < w.hi; ++j) acc += v[j];
    return acc / static_cast<double>(w.size());
}

std::optional<std::size_t> window_argmin(const std::vector<double>& v, IndexWindow w) {
    if (w.empty()) return std::nullopt;
    std::size_t best = w.lo;
    for (std::size_t j = w.lo + 1; j < w.hi; ++j) {
        if (v[j] < v[best]) best = j;
    }
    return best;
}

// Linearly interpolated time at which the segment [j, j+1] crosses `level`.
double crossing_time(const Trace& tr, std::size_t j, double level) {
    const double v0 = tr.values[j];
    const double v1 = tr.values[j + 1];
    const double t0 = tr.grid.time(j);
    if (v1 == v0) return t0;
    const double frac = (level - v0) / (v1 - v0);
    return t0 + frac * tr.grid.dt;
}

std::optional<double> fit_decay_tau(const Trace& tr, IndexWindow fit,
                                    double baseline, const FeatureConfig& cfg) {
    std::vector<double> ts, ys;
    for (std::size_t j = fit.lo; j < fit.hi; ++j) {
        const double d = std::abs(tr.values[j] - baseline);
        if (d < cfg.decay_min_deviation_mv) continue;
        ts.push_back(tr.grid.time(j));
        ys.push_back(std::log(d));
    }
    if (ts.size() < cfg.decay_min_points) return std::nullopt;
    const double n = static_cast<double>(ts.size());
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        st += ts[i];
        sy += ys[i];
        stt += ts[i] * ts[i];
        sty += ts[i] * ys[i];
    }
    const double denom = n * stt - st * st;
    if (denom <= 0.0) return std::nullopt;
    const double slope = (n * sty - st * sy) / denom;
    if (!(slope < 0.0)) return std::nullopt;
    return -1.0 / slope;
}

// Longest run (in ms) of consecutive stimulus-window samples satisfying
// `pred`, optionally requiring the run to contain no spike peak.
double longest_run_ms(const Trace& tr, IndexWindow w,
                      const std::function<bool(double)>& pred,
                      const std::vector<std::size_t>* exclude_peaks) {
    double best = 0.0;
    std::size_t run_start = w.lo;
    bool in_run = false;
    auto flush = [&](std::size_t end) {
        if (!in_run) return;
        bool blocked = false;
        if (exclude_peaks != nullptr) {
            for (std::size_t p : *exclude_peaks) {
                if (p >= run_start && p < end) {
                    blocked = true;
                    break;
                }
            }
        }
        if (!blocked) {
            const double len =
                static_cast<double>(end - run_start) * tr.grid.dt;
            best = std::max(best, len);
        }
        in_run = false;
    };
    for (std::size_t j = w.lo; j < w.hi; ++j) {
        if (pred(tr.values[j])) {
            if (!in_run) {
                in_run = true;
                run_start = j;
            }
        } else {
            flush(j);
        }
    }
    flush(w.hi);
    return best;
}

} // namespace

const char* feature_name(FeatureId id) {
    return kFeatureNames[static_cast<std::size_t>(id)];
}

std::optional<FeatureId> feature_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (name == kFeatureNames[i]) return static_cast<FeatureId>(i);
    }
    return std::nullopt;
}

std::string to_text(const FeatureSet& fs) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        os << kFeatureNames[i] << ' ';
        if (fs.values[i].has_value()) {
            os << *fs.values[i];
        } else {
            os << "undefined";
        }
        os << '\n';
    }
    return os.str();
}

FeatureSet feature_set_from_text(const std::string& text) {
    FeatureSet fs;
    std::istringstream is(text);
    std::string name, value;
    while (is >> name >> value) {
        const auto id = feature_from_name(name);
        if (!id.has_value()) throw io_error("feature record: unknown feature " + name);
        if (value != "undefined") fs[*id] = std::stod(value);
    }
    return fs;
}

FeatureSet extract_features(const Trace& trace, const Stimulus& stim,
                            const FeatureConfig& cfg) {
    validate(trace);
    if (stim.onset_ms < trace.grid.t0 ||
        stim.onset_ms + stim.duration_ms > trace.grid.end() ||
        stim.duration_ms <= 0.0) {
        throw config_error("extract_features: stimulus window outside trace grid");
    }

    const auto& v = trace.values;
    const TimeGrid& grid = trace.grid;
    const double onset = stim.onset_ms;
    const double stim_end = stim.onset_ms + stim.duration_ms;
    const double frac = cfg.window_fraction;

    FeatureSet fs;

    const SpikeEvents spikes = detect_spikes(trace, cfg.spike_threshold_mv);
    const std::size_t n_spikes = spikes.count();
    fs[FeatureId::spikecount] = static_cast<double>(n_spikes);

    // Baseline and steady-state windows.
    std::optional<double> base;
    if (onset > grid.t0) {
        const double pre_span = onset - grid.t0;
        IndexWindow w = window_indices(grid, onset - frac * pre_span, onset);
        base = window_mean(v, w);
        if (!base.has_value()) {
            // Pre-stimulus span shorter than one sample: use the last sample
            // strictly before onset.
            IndexWindow pre = window_indices(grid, grid.t0, onset);
            if (!pre.empty()) base = v[pre.hi - 1];
        }
    }
    fs[FeatureId::voltage_base] = base;

    const IndexWindow stim_w = window_indices(grid, onset, stim_end);
    const IndexWindow stimend_w = window_indices(
        grid, stim_end - frac * stim.duration_ms, stim_end);
    const IndexWindow post_w = window_indices(grid, stim_end, grid.end());

    fs[FeatureId::steady_state_voltage] = window_mean(v, post_w);
    const auto ss_stimend = window_mean(v, stimend_w);
    fs[FeatureId::steady_state_voltage_stimend] = ss_stimend;

    // Firing rate over the stimulus window.
    std::size_t in_window = 0;
    for (double t : spikes.peak_times_ms) {
        if (t >= onset && t < stim_end) ++in_window;
    }
    fs[FeatureId::mean_frequency] =
        1000.0 * static_cast<double>(in_window) / stim.duration_ms;

    // Sag: subthreshold responses only.
    if (n_spikes == 0 && ss_stimend.has_value()) {
        const auto jmin = window_argmin(v, stim_w);
        if (jmin.has_value()) {
            fs[FeatureId::sag_amplitude] = *ss_stimend - v[*jmin];
        }
    }

    // Exponential decay after stimulus end, against the settled tail.
    {
        const double tail_span = grid.end() - stim_end;
        if (tail_span > 0.0) {
            IndexWindow tail_w =
                window_indices(grid, grid.end() - frac * tail_span, grid.end());
            const auto tail_baseline = window_mean(v, tail_w);
            if (tail_baseline.has_value()) {
                IndexWindow fit_w = window_indices(
                    grid, stim_end,
                    std::min(stim_end + cfg.decay_window_ms, grid.end()));
                fs[FeatureId::decay_time_constant_after_stim] =
                    fit_decay_tau(trace, fit_w, *tail_baseline, cfg);
            }
        }
    }

    // Depolarization / hyperpolarization block heuristic.
    {
        double block = 0.0;
        const double high_run = longest_run_ms(
            trace, stim_w, [&](double x) { return x > cfg.depol_high_mv; },
            &spikes.peak_indices);
        if (high_run > cfg.depol_hold_ms) block = 1.0;
        if (base.has_value()) {
            const double low_level = *base - cfg.depol_hypo_offset_mv;
            const double low_run = longest_run_ms(
                trace, stim_w, [&](double x) { return x < low_level; }, nullptr);
            if (low_run > cfg.depol_hold_ms) block = 1.0;
        }
        fs[FeatureId::depol_block] = block;
    }

    // Spike-anchored features.
    if (n_spikes >= 2) {
        const double isi = spikes.peak_times_ms[1] - spikes.peak_times_ms[0];
        fs[FeatureId::inv_first_isi] = isi > 0.0 ? 1000.0 / isi : 0.0;
    } else {
        fs[FeatureId::inv_first_isi] = 0.0;
    }

    if (n_spikes >= 1) {
        const std::size_t p1 = spikes.peak_indices[0];
        fs[FeatureId::ap1_peak] = v[p1];

        for (double t : spikes.peak_times_ms) {
            if (t >= onset) {
                fs[FeatureId::time_to_first_spike] = t - onset;
                break;
            }
        }

        // First AHP: minimum between the first peak and the second peak, or
        // the stimulus end (then trace end) when there is no second spike.
        std::size_t ahp_hi;
        if (n_spikes >= 2) {
            ahp_hi = spikes.peak_indices[1];
        } else if (!stim_w.empty() && stim_w.hi > p1 + 1) {
            ahp_hi = stim_w.hi;
        } else {
            ahp_hi = grid.n;
        }
        std::optional<std::size_t> ahp1;
        if (ahp_hi > p1 + 1) {
            ahp1 = window_argmin(v, IndexWindow{p1 + 1, ahp_hi});
        }

        if (ahp1.has_value()) {
            const double ahp_v = v[*ahp1];
            if (base.has_value()) fs[FeatureId::ahp_depth] = ahp_v - *base;
            fs[FeatureId::ahp_time_from_peak] =
                grid.time(*ahp1) - grid.time(p1);
            fs[FeatureId::ahp1_depth_from_peak] = v[p1] - ahp_v;

            // Width of the first spike at the half level between its peak and
            // the subsequent after-hyperpolarization minimum.
            const double half = 0.5 * (v[p1] + ahp_v);
            std::size_t l = p1;
            while (l > 0 && v[l - 1] >= half) --l;
            std::size_t r = p1;
            while (r + 1 < grid.n && v[r + 1] >= half) ++r;
            if (l > 0 && r + 1 < grid.n) {
                const double t_left = crossing_time(trace, l - 1, half);
                const double t_right = crossing_time(trace, r, half);
                if (t_right > t_left) fs[FeatureId::ap1_width] = t_right - t_left;
            }
        }

        // Mean AP amplitude: first spike measured against its subsequent AHP
        // minimum, later spikes against the preceding inter-peak minimum.
        std::vector<double> amps;
        if (ahp1.has_value()) amps.push_back(v[p1] - v[*ahp1]);
        for (std::size_t s = 1; s < n_spikes; ++s) {
            const std::size_t a = spikes.peak_indices[s - 1];
            const std::size_t b = spikes.peak_indices[s];
            const auto m = window_argmin(v, IndexWindow{a + 1, b});
            if (m.has_value()) amps.push_back(v[b] - v[*m]);
        }
        if (!amps.empty()) {
            double acc = 0.0;
            for (double a : amps) acc += a;
            fs[FeatureId::mean_ap_amplitude] = acc / static_cast<double>(amps.size());
        }
    }

    return fs;
}

FICurve fi_curve(const SimulateFn& sim, std::span<const double> amplitudes_na,
                 double onset_ms, double duration_ms, const FeatureConfig& cfg) {
    if (amplitudes_na.empty()) throw config_error("fi_curve: no amplitudes");
    for (std::size_t i = 1; i < amplitudes_na.size(); ++i) {
        if (!(amplitudes_na[i] > amplitudes_na[i - 1])) {
            throw config_error("fi_curve: amplitudes must be strictly increasing");
        }
    }
    FICurve curve;
    curve.amplitudes_na.assign(amplitudes_na.begin(), amplitudes_na.end());
    curve.rates_hz.reserve(amplitudes_na.size());
    for (double a : amplitudes_na) {
        Trace tr;
        try {
            tr = sim(a);
        } catch (const error& e) {
            throw generation_error("fi_curve: simulation failed at amplitude " +
                                   std::to_string(a) + " nA: " + e.what());
        }
        Stimulus meta;
        meta.grid = tr.grid;
        meta.amplitude_na = a;
        meta.onset_ms = onset_ms;
        meta.duration_ms = duration_ms;
        const FeatureSet fs = extract_features(tr, meta, cfg);
        curve.rates_hz.push_back(fs[FeatureId::mean_frequency].value_or(0.0));
    }
    return curve;
}

namespace {

bool fires(const SimulateFn& sim, double amplitude, double threshold_mv) {
    const Trace tr = sim(amplitude);
    return detect_spikes(tr, threshold_mv).count() >= 1;
}

double rate_at(const SimulateFn& sim, double amplitude, double onset_ms,
               double duration_ms, const FeatureConfig& cfg) {
    const double grid[1] = {amplitude};
    return fi_curve(sim, grid, onset_ms, duration_ms, cfg).rates_hz[0];
}

} // namespace

ThresholdFeatures threshold_features(const SimulateFn& sim, double range_lo_na,
                                     double range_hi_na, double onset_ms,
                                     double duration_ms, double tol_na,
                                     double slope_delta_na,
                                     const FeatureConfig& cfg) {
    if (!(range_hi_na > range_lo_na)) {
        throw config_error("threshold_features: invalid amplitude range");
    }
    if (range_lo_na > 0.0) {
        throw config_error("threshold_features: range low bound must be <= 0");
    }
    if (!(tol_na > 0.0) || !(slope_delta_na > 0.0)) {
        throw config_error("threshold_features: tolerances must be positive");
    }
    if (!fires(sim, range_hi_na, cfg.spike_threshold_mv)) {
        throw generation_error(
            "threshold_features: model does not fire at the range top");
    }
    if (fires(sim, range_lo_na, cfg.spike_threshold_mv)) {
        throw generation_error(
            "threshold_features: model fires at the range low bound");
    }
    double lo = range_lo_na;
    double hi = range_hi_na;
    while (hi - lo > tol_na) {
        const double mid = 0.5 * (lo + hi);
        if (fires(sim, mid, cfg.spike_threshold_mv)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    ThresholdFeatures out;
    out.i_thr_na = hi;
    const double r0 = rate_at(sim, hi, onset_ms, duration_ms, cfg);
    const double r1 = rate_at(sim, hi + slope_delta_na, onset_ms, duration_ms, cfg);
    out.s_thr_hz_per_na = (r1 - r0) / slope_delta_na;
    return out;
}

} // namespace nobl
