#include "nobl/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <numeric>
#include <sstream>

#include "nobl/binio.hpp"
#include "nobl/errors.hpp"
#include "nobl/parallel.hpp"

namespace nobl {

namespace {

bool finite(double x) { return std::isfinite(x); }

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
double normal_cdf(double z) { return 0.5 * (1.0 + std::erf(z * kInvSqrt2)); }

} // namespace

void validate(const AmplitudeSampler& s) {
    if (!finite(s.location) || !finite(s.shape))
        throw config_error("amplitude sampler: non-finite parameters");
    if (!finite(s.scale) || s.scale <= 0.0)
        throw config_error("amplitude sampler: scale must be positive");
    if (!finite(s.lo_na) || !finite(s.hi_na) || !(s.lo_na < s.hi_na))
        throw config_error("amplitude sampler: support must satisfy lo < hi");
    if (!finite(s.positive_tail_ratio) || s.positive_tail_ratio <= 0.0)
        throw config_error("amplitude sampler: tail ratio must be positive");
}

double skew_normal_density(const AmplitudeSampler& s, double x) {
    validate(s);
    const double z = (x - s.location) / s.scale;
    return 2.0 / s.scale * normal_pdf(z) * normal_cdf(s.shape * z);
}

namespace {

// One candidate via the two-normal representation: delta|z0| + sqrt(1-d^2) z1
// is skew-normal with shape alpha when delta = alpha / sqrt(1 + alpha^2).
double skew_normal_candidate(const AmplitudeSampler& s, Rng& rng) {
    const double delta = s.shape / std::hypot(1.0, s.shape);
    const double z0 = rng.normal();
    const double z1 = rng.normal();
    const double z =
        delta * std::abs(z0) + std::sqrt(1.0 - delta * delta) * z1;
    return s.location + s.scale * z;
}

} // namespace

double draw_amplitude(const AmplitudeSampler& s, Rng& rng) {
    validate(s);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const double x = skew_normal_candidate(s, rng);
        if (x > s.lo_na && x < s.hi_na) return x;
    }
    throw config_error("amplitude sampler: acceptance rate below 1%");
}

std::vector<double> sample_amplitudes(const AmplitudeSampler& s, std::size_t n) {
    validate(s);
    if (n == 0) throw config_error("amplitude sampler: n must be positive");
    Rng rng(s.seed);
    std::vector<double> out;
    out.reserve(n);
    std::uint64_t attempts = 0;
    while (out.size() < n) {
        ++attempts;
        const double x = skew_normal_candidate(s, rng);
        if (x > s.lo_na && x < s.hi_na) out.push_back(x);
        if (attempts >= 10000 && out.size() * 100 < attempts)
            throw config_error("amplitude sampler: acceptance rate below 1%");
    }
    return out;
}

void validate(const SplitSpec& s) {
    if (!finite(s.validation) || !finite(s.test) || s.validation < 0.0 ||
        s.test < 0.0 || s.validation + s.test >= 1.0)
        throw config_error("split spec: fractions must be >= 0 and sum below 1");
}

std::span<const float> Dataset::target(std::size_t i) const {
    return {targets.data() + i * grid.n, grid.n};
}

Stimulus Dataset::stimulus_for(std::size_t i) const {
    return Stimulus{grid, samples[i].amplitude_na, onset_ms, duration_ms};
}

std::vector<std::size_t> Dataset::split_indices(std::uint8_t split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].split == split) out.push_back(i);
    }
    return out;
}

void validate(const Dataset& ds) {
    validate(ds.grid);
    validate(ds.bounds);
    if (!finite(ds.onset_ms) || !finite(ds.duration_ms) || ds.duration_ms <= 0.0)
        throw config_error("dataset: invalid stimulus window");
    if (ds.subsample_factor == 0)
        throw config_error("dataset: subsample factor must be >= 1");
    if (ds.samples.empty()) throw config_error("dataset: no samples");
    if (ds.targets.size() != ds.samples.size() * ds.grid.n)
        throw config_error("dataset: target block size mismatch");
    if (ds.ensemble_ref.find('\n') != std::string::npos)
        throw config_error("dataset: ensemble reference must be single-line");
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const DatasetSample& s = ds.samples[i];
        if (s.id != i) throw config_error("dataset: sample ids must be 0..n-1");
        if (s.split > kSplitTest)
            throw config_error("dataset: unknown split tag");
        if (!finite(s.amplitude_na) || !finite(s.i_thr_na) ||
            !finite(s.s_thr_hz_per_na) || !finite(s.latent.i_thr_norm) ||
            !finite(s.latent.s_thr_norm))
            throw config_error("dataset: non-finite sample metadata");
    }
}

Dataset build_dataset(const HofEnsemble& ensemble, const AmplitudeSampler& sampler,
                      std::size_t n_samples, std::uint32_t subsample_factor,
                      std::uint64_t seed, const SplitSpec& split, int threads,
                      std::span<const double> forced_amplitudes) {
    validate(sampler);
    validate(split);
    if (ensemble.models.empty())
        throw config_error("dataset: empty ensemble");
    if (n_samples == 0)
        throw config_error("dataset: n_samples must be positive");
    if (subsample_factor == 0)
        throw config_error("dataset: subsample factor must be >= 1");
    if (threads < 1)
        throw config_error("dataset: thread count must be >= 1");
    if (!forced_amplitudes.empty()) {
        if (forced_amplitudes.size() != n_samples)
            throw config_error("dataset: forced amplitude count mismatch");
        for (double a : forced_amplitudes) {
            if (!finite(a) || a < sampler.lo_na || a > sampler.hi_na)
                throw config_error("dataset: forced amplitude outside support");
        }
    }
    const TimeGrid& raw = ensemble.protocol.grid;
    validate(raw);
    if (raw.n / subsample_factor == 0)
        throw config_error("dataset: subsample factor larger than the grid");

    Dataset ds;
    ds.grid = TimeGrid{raw.t0, raw.dt * static_cast<double>(subsample_factor),
                       raw.n / subsample_factor};
    ds.onset_ms = ensemble.protocol.onset_ms;
    ds.duration_ms = ensemble.protocol.duration_ms;
    ds.subsample_factor = subsample_factor;
    ds.seed = seed;
    ds.bounds = latent_bounds(ensemble.models);
    ds.samples.resize(n_samples);
    ds.targets.resize(n_samples * ds.grid.n);

    const Rng base(seed);
    ThreadPool pool(static_cast<std::size_t>(threads));
    pool.for_each_index(n_samples, [&](std::size_t i) {
        Rng rng = base.fork(i);
        // Bounded regeneration loop: a simulation blow-up discards the draw
        // and continues the same per-sample stream.
        for (int attempt = 0;; ++attempt) {
            const double amp = forced_amplitudes.empty()
                                   ? draw_amplitude(sampler, rng)
                                   : forced_amplitudes[i];
            const std::size_t m = rng.index(ensemble.models.size());
            const double u = rng.uniform01();
            const HofModel& model = ensemble.models[m];
            const Stimulus stim{raw, amp, ensemble.protocol.onset_ms,
                                ensemble.protocol.duration_ms};
            Trace trace;
            try {
                trace = simulate(model.params, stim, ensemble.protocol.dt_ms);
            } catch (const generation_error& e) {
                if (attempt >= 8)
                    throw generation_error("dataset: sample " + std::to_string(i) +
                                           " failed after retries: " + e.what());
                std::cerr << "dataset: regenerating sample " << i
                          << " after simulation blow-up: " << e.what() << "\n";
                continue;
            }
            const Trace dec = lowpass_decimate(trace, subsample_factor);
            float* row = ds.targets.data() + i * ds.grid.n;
            for (std::size_t j = 0; j < ds.grid.n; ++j)
                row[j] = static_cast<float>(dec.values[j]);
            DatasetSample& s = ds.samples[i];
            s.id = static_cast<std::uint32_t>(i);
            s.model_id = static_cast<std::uint32_t>(m);
            if (u < split.validation)
                s.split = kSplitValidation;
            else if (u < split.validation + split.test)
                s.split = kSplitTest;
            else
                s.split = kSplitTrain;
            s.amplitude_na = amp;
            s.i_thr_na = model.i_thr_na;
            s.s_thr_hz_per_na = model.s_thr_hz_per_na;
            s.latent = normalize_latent(model.i_thr_na, model.s_thr_hz_per_na,
                                        ds.bounds)
                           .point;
            return;
        }
    });
    return ds;
}

void validate(const AdamConfig& cfg) {
    if (!finite(cfg.lr) || cfg.lr <= 0.0)
        throw config_error("adam: learning rate must be positive");
    if (!finite(cfg.beta1) || cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 ||
        !finite(cfg.beta2) || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0)
        throw config_error("adam: betas must lie in [0, 1)");
    if (!finite(cfg.eps) || cfg.eps <= 0.0)
        throw config_error("adam: epsilon must be positive");
}

OptimizerState make_optimizer(const AdamConfig& cfg, std::size_t count,
                              std::vector<FlatBlock> layout) {
    validate(cfg);
    if (!layout.empty()) {
        std::size_t total = 0;
        for (const FlatBlock& b : layout) {
            if (b.offset != total)
                throw config_error("adam: block layout is not contiguous");
            total += b.count;
        }
        if (total != count)
            throw config_error("adam: block layout does not cover parameters");
    }
    OptimizerState st;
    st.cfg = cfg;
    st.m.assign(count, 0.0);
    st.v.assign(count, 0.0);
    st.layout = std::move(layout);
    return st;
}

void adam_step(OptimizerState& state, std::span<float> params,
               std::span<const float> grads) {
    if (params.size() != state.m.size() || grads.size() != state.m.size())
        throw config_error("adam: parameter/gradient size mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (std::isfinite(grads[i])) continue;
        std::string where = "parameter index " + std::to_string(i);
        for (const FlatBlock& b : state.layout) {
            if (i >= b.offset && i < b.offset + b.count) {
                where = "block '" + b.name + "' (index " +
                        std::to_string(i - b.offset) + ")";
                break;
            }
        }
        throw training_error("adam: non-finite gradient in " + where);
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.cfg.beta1, t);
    const double c2 = 1.0 - std::pow(state.cfg.beta2, t);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const double g = static_cast<double>(grads[i]);
        state.m[i] = state.cfg.beta1 * state.m[i] + (1.0 - state.cfg.beta1) * g;
        state.v[i] =
            state.cfg.beta2 * state.v[i] + (1.0 - state.cfg.beta2) * g * g;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        const double upd = state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
        params[i] = static_cast<float>(static_cast<double>(params[i]) - upd);
    }
}

void validate(const PlateauConfig& cfg) {
    if (!finite(cfg.factor) || cfg.factor <= 0.0 || cfg.factor >= 1.0)
        throw config_error("plateau: factor must lie in (0, 1)");
    if (cfg.patience < 0)
        throw config_error("plateau: patience must be >= 0");
    if (!finite(cfg.min_lr) || cfg.min_lr < 0.0)
        throw config_error("plateau: min_lr must be >= 0");
}

double plateau_step(SchedulerState& state, double validation_loss, double lr) {
    if (validation_loss < state.best) {
        state.best = validation_loss;
        state.stale = 0;
        return lr;
    }
    state.stale += 1;
    if (state.stale > state.cfg.patience) {
        state.stale = 0;
        return std::max(lr * state.cfg.factor, state.cfg.min_lr);
    }
    return lr;
}

namespace {

// Mirrors the feature extractor's sampling convention: samples with
// a <= t < b, robust to one-ulp grid jitter.
struct Window {
    std::size_t lo = 0, hi = 0;
    bool empty() const { return hi <= lo; }
    std::size_t size() const { return empty() ? 0 : hi - lo; }
};

Window window(const TimeGrid& grid, double a, double b) {
    Window w;
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

void add_window_mean(std::span<const double> v, Window w, FeatureGrad& out) {
    const double inv = 1.0 / static_cast<double>(w.size());
    double acc = 0.0;
    for (std::size_t j = w.lo; j < w.hi; ++j) {
        acc += v[j];
        out.grad[j] += inv;
    }
    out.value += acc * inv;
}

} // namespace

bool finetune_feature_supported(FeatureId f) {
    switch (f) {
        case FeatureId::sag_amplitude:
        case FeatureId::steady_state_voltage:
        case FeatureId::steady_state_voltage_stimend:
        case FeatureId::voltage_base:
            return true;
        default:
            return false;
    }
}

FeatureGrad feature_with_grad(FeatureId f, std::span<const double> v,
                              const Stimulus& stim, const FeatureConfig& cfg) {
    if (!finetune_feature_supported(f))
        throw config_error("feature surrogate: unsupported feature " +
                           std::string(feature_name(f)));
    validate(stim);
    const TimeGrid& grid = stim.grid;
    if (v.size() != grid.n)
        throw config_error("feature surrogate: trace length mismatch");
    const double onset = stim.onset_ms;
    const double stim_end = onset + stim.duration_ms;
    const double frac = cfg.window_fraction;

    FeatureGrad out;
    out.grad.assign(grid.n, 0.0);

    switch (f) {
        case FeatureId::steady_state_voltage: {
            const Window w = window(grid, stim_end, grid.end());
            if (w.empty())
                throw config_error("feature surrogate: empty post window");
            add_window_mean(v, w, out);
            return out;
        }
        case FeatureId::steady_state_voltage_stimend: {
            const Window w =
                window(grid, stim_end - frac * stim.duration_ms, stim_end);
            if (w.empty())
                throw config_error("feature surrogate: empty stim-end window");
            add_window_mean(v, w, out);
            return out;
        }
        case FeatureId::voltage_base: {
            if (!(onset > grid.t0))
                throw config_error("feature surrogate: no pre-stimulus span");
            const double pre_span = onset - grid.t0;
            Window w = window(grid, onset - frac * pre_span, onset);
            if (w.empty()) {
                const Window pre = window(grid, grid.t0, onset);
                if (pre.empty())
                    throw config_error(
                        "feature surrogate: empty pre-stimulus window");
                w = Window{pre.hi - 1, pre.hi};
            }
            add_window_mean(v, w, out);
            return out;
        }
        case FeatureId::sag_amplitude: {
            const Window we =
                window(grid, stim_end - frac * stim.duration_ms, stim_end);
            const Window ws = window(grid, onset, stim_end);
            if (we.empty() || ws.empty())
                throw config_error("feature surrogate: empty stimulus window");
            add_window_mean(v, we, out);
            std::size_t jmin = ws.lo;
            for (std::size_t j = ws.lo + 1; j < ws.hi; ++j) {
                if (v[j] < v[jmin]) jmin = j;
            }
            out.value -= v[jmin];
            out.grad[jmin] -= 1.0;
            return out;
        }
        default:
            throw config_error("feature surrogate: unsupported feature");
    }
}

void validate(const TrainConfig& cfg) {
    validate(cfg.fno);
    validate(cfg.embedding);
    validate(cfg.adam);
    validate(cfg.plateau);
    if (cfg.embedding.channel_count() !=
        static_cast<std::size_t>(cfg.fno.in_channels))
        throw config_error("train: embedding channels do not match the network");
    if (cfg.epochs < 0) throw config_error("train: epochs must be >= 0");
    if (cfg.batch_size < 1) throw config_error("train: batch size must be >= 1");
    if (cfg.threads < 1) throw config_error("train: thread count must be >= 1");
    if (!finite(cfg.loss_eps) || cfg.loss_eps <= 0.0)
        throw config_error("train: loss epsilon must be positive");
}

namespace {

struct FeatureTerm {
    FeatureId id{};
    double lambda = 0.0;
    FeatureConfig fcfg;
    std::vector<double> target_values; // per sample, extractor ground truth
};

std::vector<float> input_floats(const Dataset& ds, const EmbeddingConfig& emb,
                                std::size_t i) {
    const ChannelStack stack =
        assemble_input(ds.stimulus_for(i), ds.samples[i].latent, emb);
    std::vector<float> out(stack.data.size());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = static_cast<float>(stack.data[j]);
    return out;
}

// Relative-L4 data term for one sample; fills grad with
// weight * d(loss)/d(pred) when grad is nonempty.
double rel_l4(std::span<const float> pred, std::span<const float> target,
              double eps, double weight, std::span<float> grad) {
    const std::size_t n = pred.size();
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double d = static_cast<double>(pred[j]) - target[j];
        const double t = target[j];
        num += d * d * d * d;
        den += t * t * t * t;
    }
    const double n4 = std::pow(num, 0.25);
    const double d4 = std::pow(den, 0.25) + eps;
    if (!grad.empty()) {
        const double coef = n4 > 0.0 ? weight / (n4 * n4 * n4 * d4) : 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = static_cast<double>(pred[j]) - target[j];
            grad[j] = static_cast<float>(d * d * d * coef);
        }
    }
    return n4 / d4;
}

double rel_l2(std::span<const float> pred, std::span<const float> target,
              double eps) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < pred.size(); ++j) {
        const double d = static_cast<double>(pred[j]) - target[j];
        num += d * d;
        den += static_cast<double>(target[j]) * target[j];
    }
    return std::sqrt(num) / (std::sqrt(den) + eps);
}

struct ValMetrics {
    double voltage_l2 = 0.0;
    double selection = 0.0; // voltage + lambda * feature term
};

ValMetrics validation_metrics(const TrainConfig& cfg, const FnoConfig& fno,
                              const EmbeddingConfig& emb, const Dataset& ds,
                              const FnoParametersT<float>& params,
                              const std::vector<std::size_t>& idx,
                              const FeatureTerm* feat, const ThreadPool& pool) {
    std::vector<double> l2(idx.size());
    std::vector<double> fpred(feat ? idx.size() : 0);
    pool.for_each_index(idx.size(), [&](std::size_t k) {
        const std::size_t i = idx[k];
        const std::vector<float> in = input_floats(ds, emb, i);
        const std::vector<float> pred =
            forward(fno, params, std::span<const float>(in), ds.grid.n);
        l2[k] = rel_l2(pred, ds.target(i), cfg.loss_eps);
        if (feat) {
            std::vector<double> yd(pred.begin(), pred.end());
            fpred[k] =
                feature_with_grad(feat->id, yd, ds.stimulus_for(i), feat->fcfg)
                    .value;
        }
    });
    ValMetrics out;
    for (double x : l2) out.voltage_l2 += x;
    out.voltage_l2 /= static_cast<double>(idx.size());
    out.selection = out.voltage_l2;
    if (feat) {
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double ft = feat->target_values[idx[k]];
            const double d = fpred[k] - ft;
            num += d * d;
            den += ft * ft;
        }
        out.selection += feat->lambda * std::sqrt(num) /
                         (std::sqrt(den) + cfg.loss_eps);
    }
    return out;
}

std::string batch_dump(const Dataset& ds, std::span<const std::size_t> batch,
                       std::span<const double> losses, int epoch,
                       std::size_t batch_index) {
    std::ostringstream os;
    os << "train: non-finite loss at epoch " << epoch << ", batch "
       << batch_index << "; offending samples:";
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const DatasetSample& ms = ds.samples[batch[s]];
        os << "\n  sample " << ms.id << " model " << ms.model_id
           << " amplitude " << ms.amplitude_na << " loss " << losses[s];
    }
    return os.str();
}

TrainResult run_training(const TrainConfig& cfg, const FnoConfig& fno,
                         const EmbeddingConfig& emb, const Dataset& ds,
                         std::vector<float> theta, std::uint32_t epoch_base,
                         const FeatureTerm* feat) {
    validate(ds);
    if (ds.grid.n < 2) throw config_error("train: target grid too short");
    if (emb.channel_count() != static_cast<std::size_t>(fno.in_channels))
        throw config_error("train: embedding channels do not match the network");

    const std::vector<std::size_t> train_idx = ds.split_indices(kSplitTrain);
    std::vector<std::size_t> val_idx = ds.split_indices(kSplitValidation);
    if (train_idx.empty()) throw config_error("train: empty train split");
    // With no held-out samples the scheduler and checkpoint selection run on
    // the train split itself.
    if (val_idx.empty()) val_idx = train_idx;

    ThreadPool pool(static_cast<std::size_t>(cfg.threads));
    OptimizerState opt =
        make_optimizer(cfg.adam, theta.size(), flat_layout(fno));
    SchedulerState sched;
    sched.cfg = cfg.plateau;
    double lr = cfg.adam.lr;

    FnoParametersT<float> params = init_parameters<float>(fno, 0);
    unflatten<float>(theta, params);

    TrainResult result;
    std::vector<float> best_theta = theta;
    const std::size_t bsz = static_cast<std::size_t>(cfg.batch_size);
    const Rng shuffle_base = Rng(cfg.seed).fork(0x7261696e);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = train_idx;
        Rng srng = shuffle_base.fork(static_cast<std::uint64_t>(epoch));
        srng.shuffle(order.begin(), order.end());
        opt.cfg.lr = lr;

        double epoch_loss = 0.0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += bsz) {
            const std::size_t B = std::min(bsz, order.size() - b0);
            const std::span<const std::size_t> batch(order.data() + b0, B);
            const double wt = 1.0 / static_cast<double>(B);

            std::vector<FnoForwardT<float>> fwd(B);
            std::vector<std::vector<float>> ograd(B);
            std::vector<double> losses(B);
            std::vector<double> fvals(feat ? B : 0);
            std::vector<std::vector<double>> fgrads(feat ? B : 0);
            pool.for_each_index(B, [&](std::size_t s) {
                const std::size_t i = batch[s];
                const std::vector<float> in = input_floats(ds, emb, i);
                fwd[s] = forward_cached(fno, params, std::span<const float>(in),
                                        ds.grid.n);
                ograd[s].resize(ds.grid.n);
                losses[s] = rel_l4(fwd[s].output, ds.target(i), cfg.loss_eps,
                                   wt, ograd[s]);
                if (feat) {
                    std::vector<double> yd(fwd[s].output.begin(),
                                           fwd[s].output.end());
                    FeatureGrad fg = feature_with_grad(
                        feat->id, yd, ds.stimulus_for(i), feat->fcfg);
                    fvals[s] = fg.value;
                    fgrads[s] = std::move(fg.grad);
                }
            });

            double batch_loss = 0.0;
            for (double l : losses) batch_loss += l * wt;
            if (feat) {
                double num = 0.0, den = 0.0;
                for (std::size_t s = 0; s < B; ++s) {
                    const double ft = feat->target_values[batch[s]];
                    const double d = fvals[s] - ft;
                    num += d * d;
                    den += ft * ft;
                }
                const double diff = std::sqrt(num);
                const double scale = std::sqrt(den) + cfg.loss_eps;
                batch_loss += feat->lambda * diff / scale;
                if (diff > 0.0) {
                    for (std::size_t s = 0; s < B; ++s) {
                        const double coef = feat->lambda *
                                            (fvals[s] - feat->target_values[batch[s]]) /
                                            (diff * scale);
                        std::vector<float>& og = ograd[s];
                        const std::vector<double>& fg = fgrads[s];
                        for (std::size_t j = 0; j < og.size(); ++j) {
                            og[j] = static_cast<float>(og[j] + coef * fg[j]);
                        }
                    }
                }
            }
            if (!std::isfinite(batch_loss))
                throw training_error(
                    batch_dump(ds, batch, losses, epoch, b0 / bsz));

            std::vector<std::vector<float>> grads(B);
            pool.for_each_index(B, [&](std::size_t s) {
                FnoBackwardT<float> bwd = backward(
                    fno, params, fwd[s].cache, std::span<const float>(ograd[s]));
                grads[s] = flatten(bwd.grads);
                fwd[s] = FnoForwardT<float>{}; // release the cache early
            });

            // Accumulate in sample order so the reduction is independent of
            // the thread count.
            std::vector<double> acc(theta.size(), 0.0);
            for (std::size_t s = 0; s < B; ++s) {
                const std::vector<float>& g = grads[s];
                for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += g[j];
            }
            std::vector<float> gmean(theta.size());
            for (std::size_t j = 0; j < gmean.size(); ++j)
                gmean[j] = static_cast<float>(acc[j]);

            adam_step(opt, theta, gmean);
            unflatten<float>(theta, params);

            const double data_loss =
                std::accumulate(losses.begin(), losses.end(), 0.0) /
                static_cast<double>(B);
            epoch_loss += data_loss * static_cast<double>(B);
        }
        epoch_loss /= static_cast<double>(order.size());

        const ValMetrics vm = validation_metrics(cfg, fno, emb, ds, params,
                                                 val_idx, feat, pool);
        result.history.push_back(EpochStats{epoch, epoch_loss, vm.voltage_l2, lr});
        if (vm.selection < result.best_val) {
            result.best_val = vm.selection;
            result.best_epoch = epoch;
            best_theta = theta;
        }
        lr = plateau_step(sched, vm.selection, lr);
    }

    Checkpoint cp;
    cp.fno = fno;
    cp.embedding = emb;
    cp.bounds = ds.bounds;
    cp.epoch = epoch_base + static_cast<std::uint32_t>(result.best_epoch);
    double digest_src = result.best_val;
    std::uint8_t raw[sizeof(double)];
    std::memcpy(raw, &digest_src, sizeof(double));
    cp.loss_digest = crc32(std::span<const std::uint8_t>(raw, sizeof(double)));
    cp.params = init_parameters<float>(fno, 0);
    unflatten<float>(best_theta, cp.params);
    result.checkpoint = std::move(cp);

    if (!cfg.history_path.empty()) {
        std::ostringstream os;
        os << "# epoch train_l4 val_l2 lr\n";
        char line[160];
        for (const EpochStats& e : result.history) {
            std::snprintf(line, sizeof(line), "%d %.10g %.10g %.10g\n", e.epoch,
                          e.train_l4, e.val_l2, e.lr);
            os << line;
        }
        const std::string text = os.str();
        write_file_bytes(cfg.history_path,
                         std::span<const std::uint8_t>(
                             reinterpret_cast<const std::uint8_t*>(text.data()),
                             text.size()));
    }
    return result;
}

} // namespace

namespace {

// Schedule-only validation for runs whose architecture comes from a
// checkpoint rather than from cfg.fno.
void validate_schedule(const TrainConfig& cfg) {
    validate(cfg.adam);
    validate(cfg.plateau);
    if (cfg.epochs < 0) throw config_error("train: epochs must be >= 0");
    if (cfg.batch_size < 1) throw config_error("train: batch size must be >= 1");
    if (cfg.threads < 1) throw config_error("train: thread count must be >= 1");
    if (!finite(cfg.loss_eps) || cfg.loss_eps <= 0.0)
        throw config_error("train: loss epsilon must be positive");
}

void check_bounds_match(const Checkpoint& start, const Dataset& ds) {
    if (start.bounds.i_thr_min != ds.bounds.i_thr_min ||
        start.bounds.i_thr_max != ds.bounds.i_thr_max ||
        start.bounds.s_thr_min != ds.bounds.s_thr_min ||
        start.bounds.s_thr_max != ds.bounds.s_thr_max)
        throw config_error(
            "train: checkpoint and dataset latent bounds disagree");
}

} // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& ds) {
    validate(cfg);
    const FnoParametersT<float> p0 = init_parameters<float>(cfg.fno, cfg.seed);
    return run_training(cfg, cfg.fno, cfg.embedding, ds, flatten(p0), 0,
                        nullptr);
}

TrainResult train_from(const TrainConfig& cfg, const Checkpoint& start,
                       const Dataset& ds) {
    validate_schedule(cfg);
    check_bounds_match(start, ds);
    return run_training(cfg, start.fno, start.embedding, ds,
                        flatten(start.params), start.epoch, nullptr);
}

TrainResult finetune(const TrainConfig& cfg, const Checkpoint& start,
                     const Dataset& ds, FeatureId feature, double lambda) {
    if (!finite(lambda) || lambda < 0.0)
        throw config_error("finetune: lambda must be >= 0");
    if (!finetune_feature_supported(feature))
        throw config_error("finetune: no differentiable surrogate for " +
                           std::string(feature_name(feature)));
    if (lambda == 0.0) return train_from(cfg, start, ds);

    validate(ds);
    FeatureTerm feat;
    feat.id = feature;
    feat.lambda = lambda;
    feat.target_values.assign(ds.samples.size(), 0.0);
    ThreadPool pool(static_cast<std::size_t>(std::max(cfg.threads, 1)));
    std::vector<std::uint8_t> defined(ds.samples.size(), 0);
    pool.for_each_index(ds.samples.size(), [&](std::size_t i) {
        const std::span<const float> row = ds.target(i);
        Trace tr;
        tr.grid = ds.grid;
        tr.values.assign(row.begin(), row.end());
        const FeatureSet fs = extract_features(tr, ds.stimulus_for(i), feat.fcfg);
        const std::optional<double>& val = fs[feature];
        if (val.has_value()) {
            defined[i] = 1;
            feat.target_values[i] = *val;
        }
    });
    for (std::size_t i = 0; i < defined.size(); ++i) {
        if (!defined[i])
            throw training_error("finetune: feature " +
                                 std::string(feature_name(feature)) +
                                 " undefined on sample " + std::to_string(i));
    }

    validate_schedule(cfg);
    check_bounds_match(start, ds);
    return run_training(cfg, start.fno, start.embedding, ds,
                        flatten(start.params), start.epoch, &feat);
}

} // namespace nobl
