#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nobl/embedding.hpp"

namespace nobl {

// Operator-network shape. `modes` indexes absolute frequency bins, so weights
// trained at one resolution apply verbatim at another; sequences whose
// half-spectrum is shorter than `modes` use every available bin. Lifting and
// projection are two-stage pointwise maps with one hidden width each.
struct FnoConfig {
    int layers = 12;
    int hidden = 24;
    int modes = 256;
    int lifting_width = 48;
    int projection_width = 48;
    int in_channels = 23;
    std::string activation = "gelu"; // "gelu" or "identity"
};

void validate(const FnoConfig& cfg);

template <typename Real>
struct FnoLayerT {
    // Per-mode channel mixers, indexed [mode][in][out].
    std::vector<std::complex<Real>> spectral;
    // Pointwise mixing matrix [out][in] and bias [out].
    std::vector<Real> mix;
    std::vector<Real> bias;
};

template <typename Real>
struct FnoParametersT {
    std::vector<Real> lift_w1, lift_b1; // lifting_width x in_channels
    std::vector<Real> lift_w2, lift_b2; // hidden x lifting_width
    std::vector<FnoLayerT<Real>> layers;
    std::vector<Real> proj_w1, proj_b1; // projection_width x hidden
    std::vector<Real> proj_w2, proj_b2; // 1 x projection_width
};

using FnoParameters = FnoParametersT<float>;

// Spectral weights drawn uniform complex at scale 1/(in*out); affine stages
// drawn uniform at the usual 1/sqrt(fan_in) bound, biases included.
template <typename Real>
FnoParametersT<Real> init_parameters(const FnoConfig& cfg, std::uint64_t seed);

// Total scalar count, complex entries counting twice.
std::size_t parameter_count(const FnoConfig& cfg);

// Parameter <-> flat vector in a fixed order (lifting, layers, projection;
// complex as re,im). The optimizer works on the flat image.
template <typename Real>
std::vector<Real> flatten(const FnoParametersT<Real>& p);
template <typename Real>
void unflatten(std::span<const Real> flat, FnoParametersT<Real>& p);

// Named slice of the flat parameter vector; complex entries count two scalars.
struct FlatBlock {
    std::string name;
    std::size_t offset = 0;
    std::size_t count = 0;
};

// Block table in flatten() order; offsets sum to parameter_count(cfg).
std::vector<FlatBlock> flat_layout(const FnoConfig& cfg);

// v is channel-major (channels_in x n). Per input channel: real FFT; bins
// below min(modes, n/2+1) are mixed across channels by the per-mode complex
// matrices; higher bins are dropped; inverse real FFT per output channel.
template <typename Real>
std::vector<Real> spectral_conv(std::span<const Real> v, std::size_t n,
                                std::size_t channels_in,
                                std::size_t channels_out,
                                std::span<const std::complex<Real>> weights,
                                int modes);

// Intermediates kept from a forward pass for exact reverse-mode gradients.
template <typename Real>
struct FnoCacheT {
    std::size_t n = 0;
    std::vector<Real> input;                       // C x n
    std::vector<Real> lift_pre, lift_act;          // lifting_width x n
    std::vector<std::vector<Real>> v;              // layers+1 of H x n
    std::vector<std::vector<Real>> pre;            // layers of H x n
    std::vector<std::vector<std::complex<Real>>> v_hat; // layers of H x bins
    std::vector<Real> proj_pre, proj_act;          // projection_width x n
};

template <typename Real>
std::vector<Real> forward(const FnoConfig& cfg, const FnoParametersT<Real>& p,
                          std::span<const Real> input, std::size_t n);

template <typename Real>
std::vector<Real> forward(const FnoConfig& cfg, const FnoParametersT<Real>& p,
                          const ChannelStack& input);

template <typename Real>
struct FnoForwardT {
    std::vector<Real> output;
    FnoCacheT<Real> cache;
};

template <typename Real>
FnoForwardT<Real> forward_cached(const FnoConfig& cfg,
                                 const FnoParametersT<Real>& p,
                                 std::span<const Real> input, std::size_t n);

template <typename Real>
struct FnoBackwardT {
    FnoParametersT<Real> grads;
    std::vector<Real> input_grad; // C x n
};

// Reverse-mode gradients for every parameter and the input, given
// d(loss)/d(output). Complex spectral entries receive gradients with real and
// imaginary parts treated as independent scalars.
template <typename Real>
FnoBackwardT<Real> backward(const FnoConfig& cfg, const FnoParametersT<Real>& p,
                            const FnoCacheT<Real>& cache,
                            std::span<const Real> output_grad);

// Self-contained inference bundle: architecture, float parameters, input
// embedding recipe, and the latent normalization intervals.
struct Checkpoint {
    FnoConfig fno;
    EmbeddingConfig embedding;
    LatentBounds bounds;
    std::uint32_t epoch = 0;
    std::uint32_t loss_digest = 0;
    FnoParametersT<float> params;
};

void save_checkpoint(const Checkpoint& cp, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

} // namespace nobl
