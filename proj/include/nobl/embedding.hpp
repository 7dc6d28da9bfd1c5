#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nobl/oracle.hpp"
#include "nobl/signal.hpp"

namespace nobl {

// Normalized (threshold current, threshold slope) coordinates of one neuron
// model. In-distribution points live in [0.5, 3.5] per coordinate;
// extrapolation experiments may step outside, which normalize_latent flags.
struct LatentPoint {
    double i_thr_norm = 0.0;
    double s_thr_norm = 0.0;
};

void validate(const LatentPoint& p);
bool in_latent_range(const LatentPoint& p);

// Raw-feature intervals that the affine normalization maps onto [0.5, 3.5].
// Persisted inside checkpoints so inference needs no training data.
struct LatentBounds {
    double i_thr_min = 0.0;
    double i_thr_max = 0.0;
    double s_thr_min = 0.0;
    double s_thr_max = 0.0;
};

void validate(const LatentBounds& b);

// Feature intervals spanned by an ensemble. A coordinate that collapses to a
// single value (possible for the slope, which is quantized by the stimulus
// window) is widened symmetrically so the bounds stay usable.
LatentBounds latent_bounds(std::span<const HofModel> models);

struct NormalizedLatent {
    LatentPoint point;
    bool extrapolated = false;
};

// Affine map sending min -> 0.5 and max -> 3.5 per coordinate. Values outside
// the bounds extrapolate linearly and set the flag.
NormalizedLatent normalize_latent(double raw_i_thr, double raw_s_thr,
                                  const LatentBounds& bounds);

struct EmbeddingConfig {
    int k_current = 9;
    int k_feature = 1;
    bool include_raw_current = true;
    // Ablation switches for the model-feature embeddings; the stimulus
    // channels are always present.
    bool embed_i_thr = true;
    bool embed_s_thr = true;

    std::size_t channel_count() const;
};

void validate(const EmbeddingConfig& cfg);

// Frequency-modulated encoding of a scalar: 2K sequences
// [sin(2^0 pi p t), cos(2^0 pi p t), ..., sin(2^{K-1} pi p t),
// cos(2^{K-1} pi p t)] evaluated elementwise over t. The frequency ladder is
// built with exact power-of-two scaling, so pair k of nerf_embed(p) equals
// pair k-1 of nerf_embed(2p) bitwise.
std::vector<std::vector<double>> nerf_embed(double p, std::span<const double> t,
                                            int k);

// Channel-major (channels x grid.n) input block for the operator network.
struct ChannelStack {
    TimeGrid grid;
    std::size_t channels = 0;
    std::vector<double> data;

    std::span<const double> channel(std::size_t c) const {
        return {data.data() + c * grid.n, grid.n};
    }
    std::span<double> channel(std::size_t c) {
        return {data.data() + c * grid.n, grid.n};
    }
};

// Stacks [rendered current] + [amplitude embedding, K_current] + [latent
// embeddings, K_feature each] on the stimulus grid. Time is normalized to
// [0, 1) over the trace window (sample j maps to j/n); raw milliseconds with
// coordinates around 3 would alias against the grid Nyquist.
ChannelStack assemble_input(const Stimulus& stim, const LatentPoint& latent,
                            const EmbeddingConfig& cfg = {});

} // namespace nobl
