#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nobl/errors.hpp"
#include "nobl/features.hpp"
#include "nobl/oracle.hpp"
#include "nobl/signal.hpp"

#include "oracles.hpp"

using namespace nobl;

namespace {

ThresholdProtocol proto() { return ThresholdProtocol{}; }

Trace run(const PointNeuronParams& p, double amp) {
    const ThresholdProtocol pr = proto();
    Stimulus stim{pr.grid, amp, pr.onset_ms, pr.duration_ms};
    return simulate(p, stim, pr.dt_ms);
}

SimulateFn base_sim(const PointNeuronParams& p) {
    return [p](double amp) { return run(p, amp); };
}

} // namespace

TEST_SUITE("oracle") {

TEST_CASE("zero stimulus stays at the resting potential") {
    const PointNeuronParams p;
    const double rest = resting_potential(p);
    CHECK(rest < -60.0);
    CHECK(rest > -70.0);
    const Trace tr = run(p, 0.0);
    double dev = 0.0;
    for (double v : tr.values) dev = std::max(dev, std::abs(v - rest));
    CHECK(dev < 0.1);
}

TEST_CASE("bottom of the amplitude range hyperpolarizes without spiking") {
    const PointNeuronParams p;
    const ThresholdProtocol pr = proto();
    const Trace tr = run(p, reference_amplitude_range().lo_na);
    CHECK(detect_spikes(tr).count() == 0);
    const Stimulus stim{pr.grid, reference_amplitude_range().lo_na, pr.onset_ms,
                        pr.duration_ms};
    const FeatureSet fs = extract_features(tr, stim);
    REQUIRE(fs[FeatureId::spikecount].has_value());
    CHECK(*fs[FeatureId::spikecount] == 0.0);
    REQUIRE(fs[FeatureId::sag_amplitude].has_value());
    CHECK(*fs[FeatureId::sag_amplitude] > 1.0);
    const double rest = resting_potential(p);
    const double vmin = *std::min_element(tr.values.begin(), tr.values.end());
    CHECK(vmin < rest - 10.0);
}

TEST_CASE("suprathreshold step fires and the count grows with duration") {
    const PointNeuronParams p;
    const Trace tr_short = run(p, 0.15);
    const std::size_t c_short = detect_spikes(tr_short).count();
    CHECK(c_short >= 4);

    const TimeGrid long_grid{0.0, 0.02, 12288};
    const Stimulus long_stim{long_grid, 0.15, 15.0, 170.0};
    const Trace tr_long = simulate(p, long_stim, 0.02);
    const std::size_t c_long = detect_spikes(tr_long).count();
    CHECK(c_long > c_short);
    CHECK(c_long >= 2 * c_short - 2);
}

TEST_CASE("step halving converges at fourth order") {
    const PointNeuronParams p;
    const TimeGrid grid{0.0, 0.02, 2000};

    SUBCASE("subthreshold response is already resolved at the default step") {
        const Stimulus stim{grid, 0.03, 5.0, 30.0};
        const Trace t1 = simulate(p, stim, 0.02);
        const Trace t2 = simulate(p, stim, 0.01);
        CHECK(testing_oracles::l2_diff_rel(t1.values, t2.values) < 1e-3);
    }

    SUBCASE("error on a spiking window shrinks sixteenfold per halving") {
        const Stimulus stim{grid, 0.15, 5.0, 30.0};
        const Trace t1 = simulate(p, stim, 0.02);
        const Trace t2 = simulate(p, stim, 0.01);
        const Trace t3 = simulate(p, stim, 0.005);
        const double e1 = testing_oracles::l2_diff_rel(t1.values, t2.values);
        const double e2 = testing_oracles::l2_diff_rel(t2.values, t3.values);
        CHECK(e1 < 1e-3);
        REQUIRE(e2 > 0.0);
        const double ratio = e1 / e2;
        CHECK(ratio > 8.0);
        CHECK(ratio < 32.0);
    }
}

TEST_CASE("integration is deterministic") {
    const PointNeuronParams p;
    const Trace a = run(p, 0.123);
    const Trace b = run(p, 0.123);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t j = 0; j < a.values.size(); ++j) {
        CHECK(a.values[j] == b.values[j]);
    }
}

TEST_CASE("rejects invalid timesteps and parameters") {
    const PointNeuronParams p;
    const ThresholdProtocol pr = proto();
    const Stimulus stim{pr.grid, 0.1, pr.onset_ms, pr.duration_ms};
    CHECK_THROWS_AS(simulate(p, stim, 0.04), config_error);
    CHECK_THROWS_AS(simulate(p, stim, 0.019), config_error);

    PointNeuronParams bad = p;
    bad.g_na = -1.0;
    CHECK_THROWS_AS(simulate(bad, stim, 0.02), config_error);
    bad = p;
    bad.area_cm2 = 0.0;
    CHECK_THROWS_AS(resting_potential(bad), config_error);
    bad = p;
    bad.e_l = -100.0;
    CHECK_THROWS_AS(resting_potential(bad), config_error);
}

TEST_CASE("runaway injection trips the blow-up guard") {
    const PointNeuronParams p;
    const ThresholdProtocol pr = proto();
    const Stimulus stim{pr.grid, -5.0, pr.onset_ms, pr.duration_ms};
    CHECK_THROWS_AS(simulate(p, stim, 0.02), generation_error);
}

TEST_CASE("threshold features match a dense amplitude sweep") {
    const PointNeuronParams p;
    const AmplitudeRange range = reference_amplitude_range();
    const ThresholdProtocol pr = proto();
    const ThresholdFeatures tf = threshold_features(
        base_sim(p), range.lo_na, range.hi_na, pr.onset_ms, pr.duration_ms);
    CHECK(tf.i_thr_na > 0.0);
    CHECK(tf.i_thr_na < range.hi_na);
    CHECK(tf.s_thr_hz_per_na > 0.0);

    // Independent oracle: scan a 1e-4-step grid around the reported value for
    // the lowest firing amplitude.
    double dense = 0.0;
    for (double amp = tf.i_thr_na - 5e-3; amp <= tf.i_thr_na + 5e-3; amp += 1e-4) {
        if (detect_spikes(run(p, amp)).count() > 0) {
            dense = amp;
            break;
        }
    }
    REQUIRE(dense != 0.0);
    CHECK(std::abs(dense - tf.i_thr_na) <= 2e-3);
}

TEST_CASE("threshold shifts exactly under a bias current") {
    const PointNeuronParams p;
    const AmplitudeRange range = reference_amplitude_range();
    const ThresholdProtocol pr = proto();
    const ThresholdFeatures tf = threshold_features(
        base_sim(p), range.lo_na, range.hi_na, pr.onset_ms, pr.duration_ms);

    const double bias = 0.013;
    SimulateFn biased = [&p, bias](double amp) { return run(p, amp + bias); };
    const ThresholdFeatures tb = threshold_features(
        biased, range.lo_na, range.hi_na - bias, pr.onset_ms, pr.duration_ms);
    CHECK(std::abs(tb.i_thr_na - (tf.i_thr_na - bias)) <= 2e-3);
}

TEST_CASE("silent model yields a threshold-not-found error") {
    const ThresholdProtocol pr = proto();
    SimulateFn silent = [&pr](double) {
        Trace tr{pr.grid, std::vector<double>(pr.grid.n, -65.0)};
        return tr;
    };
    CHECK_THROWS_AS(threshold_features(silent, -0.11, 0.28, pr.onset_ms,
                                       pr.duration_ms),
                    generation_error);
}

TEST_CASE("single-model ensemble with zero jitter reproduces the base") {
    const PointNeuronParams p;
    JitterSpec zero;
    zero.g_na = zero.g_k = zero.g_a = zero.g_l = zero.g_h = 0.0;
    const HofEnsemble ens = generate_ensemble(p, 1, zero, 42, proto());
    REQUIRE(ens.models.size() == 1);
    const HofModel& m = ens.models[0];
    CHECK(m.params.g_na == p.g_na);
    CHECK(m.params.g_k == p.g_k);
    CHECK(m.params.g_a == p.g_a);
    CHECK(m.params.g_l == p.g_l);
    CHECK(m.params.g_h == p.g_h);

    const AmplitudeRange range = reference_amplitude_range();
    const ThresholdProtocol pr = proto();
    const ThresholdFeatures tf = threshold_features(
        base_sim(p), range.lo_na, range.hi_na, pr.onset_ms, pr.duration_ms);
    CHECK(m.i_thr_na == tf.i_thr_na);
    CHECK(m.s_thr_hz_per_na == tf.s_thr_hz_per_na);
}

TEST_CASE("ensembles are reproducible and diverse") {
    const PointNeuronParams p;
    const HofEnsemble a = generate_ensemble(p, 60, JitterSpec{}, 3, proto());
    const HofEnsemble b = generate_ensemble(p, 60, JitterSpec{}, 3, proto());
    REQUIRE(a.models.size() == 60);
    REQUIRE(b.models.size() == 60);

    bool all_positive = true;
    bool any_differs = false;
    for (std::size_t j = 0; j < a.models.size(); ++j) {
        CHECK(a.models[j].id == j);
        CHECK(a.models[j].params.g_na == b.models[j].params.g_na);
        CHECK(a.models[j].params.g_a == b.models[j].params.g_a);
        CHECK(a.models[j].params.g_h == b.models[j].params.g_h);
        CHECK(a.models[j].i_thr_na == b.models[j].i_thr_na);
        CHECK(a.models[j].s_thr_hz_per_na == b.models[j].s_thr_hz_per_na);
        if (!(a.models[j].i_thr_na > 0.0)) all_positive = false;
        if (a.models[j].i_thr_na != a.models[0].i_thr_na) any_differs = true;
        CHECK(a.models[j].s_thr_hz_per_na > 0.0);
    }
    CHECK(all_positive);
    CHECK(any_differs);
}

TEST_CASE("every ensemble model has a monotone firing-rate curve past threshold") {
    const PointNeuronParams p;
    const HofEnsemble ens = generate_ensemble(p, 8, JitterSpec{}, 7, proto());
    const ThresholdProtocol pr = proto();
    const double hi = reference_amplitude_range().hi_na;
    for (const HofModel& m : ens.models) {
        std::vector<double> amps;
        for (int k = 0; k < 10; ++k) {
            amps.push_back(m.i_thr_na +
                           (hi - m.i_thr_na) * static_cast<double>(k) / 9.0);
        }
        const FICurve fi =
            fi_curve(base_sim(m.params), amps, pr.onset_ms, pr.duration_ms);
        for (std::size_t k = 1; k < fi.rates_hz.size(); ++k) {
            CHECK(fi.rates_hz[k] >= fi.rates_hz[k - 1]);
        }
        CHECK(fi.rates_hz.back() > 0.0);
    }
}

TEST_CASE("amplitude range accessors validate their bounds") {
    const AmplitudeRange def = reference_amplitude_range();
    CHECK(def.lo_na == -0.11);
    CHECK(def.hi_na == 0.28);
    const AmplitudeRange custom = reference_amplitude_range(-0.2, 0.4);
    CHECK(custom.lo_na == -0.2);
    CHECK(custom.hi_na == 0.4);
    CHECK_THROWS_AS(reference_amplitude_range(0.3, 0.1), config_error);
}

} // TEST_SUITE
