#include "nobl/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nobl/errors.hpp"

namespace nobl {

void validate(const LatentPoint& p) {
    if (!std::isfinite(p.i_thr_norm) || !std::isfinite(p.s_thr_norm)) {
        throw config_error("latent point: coordinates must be finite");
    }
}

bool in_latent_range(const LatentPoint& p) {
    return p.i_thr_norm >= 0.5 && p.i_thr_norm <= 3.5 && p.s_thr_norm >= 0.5 &&
           p.s_thr_norm <= 3.5;
}

void validate(const LatentBounds& b) {
    if (!std::isfinite(b.i_thr_min) || !std::isfinite(b.i_thr_max) ||
        !std::isfinite(b.s_thr_min) || !std::isfinite(b.s_thr_max)) {
        throw config_error("latent bounds: values must be finite");
    }
    if (!(b.i_thr_min < b.i_thr_max) || !(b.s_thr_min < b.s_thr_max)) {
        throw config_error("latent bounds: min must be strictly below max");
    }
}

namespace {

void widen_if_collapsed(double& lo, double& hi) {
    if (lo < hi) return;
    const double pad = std::max(0.05 * std::abs(lo), 1e-3);
    lo -= pad;
    hi += pad;
}

} // namespace

LatentBounds latent_bounds(std::span<const HofModel> models) {
    if (models.empty()) {
        throw config_error("latent bounds: need at least one model");
    }
    LatentBounds b;
    b.i_thr_min = b.i_thr_max = models[0].i_thr_na;
    b.s_thr_min = b.s_thr_max = models[0].s_thr_hz_per_na;
    for (const HofModel& m : models) {
        b.i_thr_min = std::min(b.i_thr_min, m.i_thr_na);
        b.i_thr_max = std::max(b.i_thr_max, m.i_thr_na);
        b.s_thr_min = std::min(b.s_thr_min, m.s_thr_hz_per_na);
        b.s_thr_max = std::max(b.s_thr_max, m.s_thr_hz_per_na);
    }
    widen_if_collapsed(b.i_thr_min, b.i_thr_max);
    widen_if_collapsed(b.s_thr_min, b.s_thr_max);
    validate(b);
    return b;
}

NormalizedLatent normalize_latent(double raw_i_thr, double raw_s_thr,
                                  const LatentBounds& bounds) {
    validate(bounds);
    if (!std::isfinite(raw_i_thr) || !std::isfinite(raw_s_thr)) {
        throw config_error("normalize_latent: raw features must be finite");
    }
    const auto map = [](double x, double lo, double hi) {
        return 0.5 + 3.0 * (x - lo) / (hi - lo);
    };
    NormalizedLatent out;
    out.point.i_thr_norm = map(raw_i_thr, bounds.i_thr_min, bounds.i_thr_max);
    out.point.s_thr_norm = map(raw_s_thr, bounds.s_thr_min, bounds.s_thr_max);
    out.extrapolated = !in_latent_range(out.point);
    return out;
}

std::size_t EmbeddingConfig::channel_count() const {
    std::size_t c = include_raw_current ? 1 : 0;
    c += 2 * static_cast<std::size_t>(k_current);
    if (embed_i_thr) c += 2 * static_cast<std::size_t>(k_feature);
    if (embed_s_thr) c += 2 * static_cast<std::size_t>(k_feature);
    return c;
}

void validate(const EmbeddingConfig& cfg) {
    if (cfg.k_current < 1 || cfg.k_feature < 1) {
        throw config_error("embedding config: K values must be >= 1");
    }
}

std::vector<std::vector<double>> nerf_embed(double p, std::span<const double> t,
                                            int k) {
    if (k < 1) throw config_error("nerf_embed: K must be >= 1");
    std::vector<std::vector<double>> out;
    out.reserve(2 * static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        // ldexp keeps the octave ladder exact: scaled(p, j) == scaled(2p, j-1).
        const double w = std::numbers::pi * std::ldexp(p, j);
        std::vector<double> s(t.size()), c(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            s[i] = std::sin(w * t[i]);
            c[i] = std::cos(w * t[i]);
        }
        out.push_back(std::move(s));
        out.push_back(std::move(c));
    }
    return out;
}

ChannelStack assemble_input(const Stimulus& stim, const LatentPoint& latent,
                            const EmbeddingConfig& cfg) {
    validate(stim);
    validate(latent);
    validate(cfg);

    const std::size_t n = stim.grid.n;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = static_cast<double>(i) / static_cast<double>(n);
    }

    ChannelStack st;
    st.grid = stim.grid;
    st.channels = cfg.channel_count();
    st.data.resize(st.channels * n);

    std::size_t c = 0;
    auto put = [&](const std::vector<double>& v) {
        std::copy(v.begin(), v.end(), st.channel(c).begin());
        ++c;
    };

    if (cfg.include_raw_current) put(render_stimulus(stim));
    for (const auto& ch : nerf_embed(stim.amplitude_na, t, cfg.k_current)) put(ch);
    if (cfg.embed_i_thr) {
        for (const auto& ch : nerf_embed(latent.i_thr_norm, t, cfg.k_feature)) put(ch);
    }
    if (cfg.embed_s_thr) {
        for (const auto& ch : nerf_embed(latent.s_thr_norm, t, cfg.k_feature)) put(ch);
    }
    return st;
}

} // namespace nobl
