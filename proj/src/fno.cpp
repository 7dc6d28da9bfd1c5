#include "nobl/fno.hpp"

#include <algorithm>
#include <cmath>

#include "nobl/errors.hpp"
#include "nobl/fft.hpp"
#include "nobl/rng.hpp"

namespace nobl {

namespace {

enum class Act { gelu, identity };

Act act_kind(const std::string& name) {
    if (name == "gelu")
        return Act::gelu;
    if (name == "identity")
        return Act::identity;
    throw config_error("fno: unknown activation '" + name + "'");
}

template <typename Real>
Real act_eval(Act a, Real x) {
    if (a == Act::identity)
        return x;
    return Real(0.5) * x *
           (Real(1) + std::erf(x * Real(0.7071067811865475244L)));
}

template <typename Real>
Real act_deriv(Act a, Real x) {
    if (a == Act::identity)
        return Real(1);
    const Real cdf =
        Real(0.5) * (Real(1) + std::erf(x * Real(0.7071067811865475244L)));
    const Real pdf =
        std::exp(Real(-0.5) * x * x) * Real(0.39894228040143267794L);
    return cdf + x * pdf;
}

template <typename Real>
void act_apply(Act a, std::span<const Real> x, std::span<Real> y) {
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = act_eval(a, x[i]);
}

// y[o,t] = b[o] + sum_i w[o*in+i] x[i,t]; all maps channel-major.
template <typename Real>
void affine_forward(std::span<const Real> w, std::span<const Real> b,
                    std::span<const Real> x, std::size_t in_ch,
                    std::size_t out_ch, std::size_t n, std::span<Real> y) {
    for (std::size_t o = 0; o < out_ch; ++o) {
        Real* yo = y.data() + o * n;
        std::fill(yo, yo + n, b[o]);
        const Real* wo = w.data() + o * in_ch;
        for (std::size_t i = 0; i < in_ch; ++i) {
            const Real wi = wo[i];
            const Real* xi = x.data() + i * n;
            for (std::size_t t = 0; t < n; ++t)
                yo[t] += wi * xi[t];
        }
    }
}

// Gradients of affine_forward. dx is overwritten with W^T dy; dw and db are
// overwritten with the weight and bias gradients.
template <typename Real>
void affine_backward(std::span<const Real> w, std::span<const Real> x,
                     std::span<const Real> dy, std::size_t in_ch,
                     std::size_t out_ch, std::size_t n, std::span<Real> dx,
                     std::span<Real> dw, std::span<Real> db) {
    std::fill(dx.begin(), dx.end(), Real(0));
    for (std::size_t o = 0; o < out_ch; ++o) {
        const Real* dyo = dy.data() + o * n;
        Real acc = 0;
        for (std::size_t t = 0; t < n; ++t)
            acc += dyo[t];
        db[o] = acc;
        for (std::size_t i = 0; i < in_ch; ++i) {
            const Real* xi = x.data() + i * n;
            Real* dxi = dx.data() + i * n;
            const Real wi = w[o * in_ch + i];
            Real dot = 0;
            for (std::size_t t = 0; t < n; ++t) {
                dot += dyo[t] * xi[t];
                dxi[t] += wi * dyo[t];
            }
            dw[o * in_ch + i] = dot;
        }
    }
}

// Forward transform every channel of v into hat (in_ch x bins).
template <typename Real>
void stack_rfft(RfftEngine<Real>& eng, std::span<const Real> v,
                std::size_t channels, std::vector<std::complex<Real>>& hat) {
    const std::size_t n = eng.length();
    const std::size_t bins = eng.bins();
    hat.resize(channels * bins);
    for (std::size_t c = 0; c < channels; ++c)
        eng.forward(v.data() + c * n, hat.data() + c * bins);
}

// Mode mixing on precomputed spectra: shat[o,k] = sum_i vhat[i,k] w[k,i,o]
// for k below the retained limit, zero above; then inverse per channel.
template <typename Real>
void spectral_from_hat(RfftEngine<Real>& eng,
                       const std::vector<std::complex<Real>>& vhat,
                       std::size_t in_ch, std::size_t out_ch,
                       std::span<const std::complex<Real>> w, int modes,
                       std::span<Real> out,
                       std::vector<std::complex<Real>>& shat) {
    const std::size_t n = eng.length();
    const std::size_t bins = eng.bins();
    const std::size_t kmax = std::min<std::size_t>(
        static_cast<std::size_t>(modes), bins);
    shat.assign(out_ch * bins, std::complex<Real>(0, 0));
    for (std::size_t k = 0; k < kmax; ++k) {
        for (std::size_t i = 0; i < in_ch; ++i) {
            const std::complex<Real> vi = vhat[i * bins + k];
            const std::complex<Real>* wk = w.data() + (k * in_ch + i) * out_ch;
            for (std::size_t o = 0; o < out_ch; ++o)
                shat[o * bins + k] += vi * wk[o];
        }
    }
    for (std::size_t o = 0; o < out_ch; ++o)
        eng.inverse(shat.data() + o * bins, out.data() + o * n);
}

template <typename Real>
std::size_t check_shapes(const FnoConfig& cfg, const FnoParametersT<Real>& p) {
    const auto lw = static_cast<std::size_t>(cfg.lifting_width);
    const auto pw = static_cast<std::size_t>(cfg.projection_width);
    const auto H = static_cast<std::size_t>(cfg.hidden);
    const auto C = static_cast<std::size_t>(cfg.in_channels);
    const auto M = static_cast<std::size_t>(cfg.modes);
    bool ok = p.lift_w1.size() == lw * C && p.lift_b1.size() == lw &&
              p.lift_w2.size() == H * lw && p.lift_b2.size() == H &&
              p.layers.size() == static_cast<std::size_t>(cfg.layers) &&
              p.proj_w1.size() == pw * H && p.proj_b1.size() == pw &&
              p.proj_w2.size() == pw && p.proj_b2.size() == 1;
    for (const auto& layer : p.layers)
        ok = ok && layer.spectral.size() == M * H * H &&
             layer.mix.size() == H * H && layer.bias.size() == H;
    if (!ok)
        throw config_error("fno: parameter shapes do not match config");
    return H;
}

template <typename Real>
FnoParametersT<Real> zero_like(const FnoConfig& cfg) {
    const auto lw = static_cast<std::size_t>(cfg.lifting_width);
    const auto pw = static_cast<std::size_t>(cfg.projection_width);
    const auto H = static_cast<std::size_t>(cfg.hidden);
    const auto C = static_cast<std::size_t>(cfg.in_channels);
    const auto M = static_cast<std::size_t>(cfg.modes);
    FnoParametersT<Real> p;
    p.lift_w1.assign(lw * C, Real(0));
    p.lift_b1.assign(lw, Real(0));
    p.lift_w2.assign(H * lw, Real(0));
    p.lift_b2.assign(H, Real(0));
    p.layers.resize(static_cast<std::size_t>(cfg.layers));
    for (auto& layer : p.layers) {
        layer.spectral.assign(M * H * H, std::complex<Real>(0, 0));
        layer.mix.assign(H * H, Real(0));
        layer.bias.assign(H, Real(0));
    }
    p.proj_w1.assign(pw * H, Real(0));
    p.proj_b1.assign(pw, Real(0));
    p.proj_w2.assign(pw, Real(0));
    p.proj_b2.assign(1, Real(0));
    return p;
}

} // namespace

void validate(const FnoConfig& cfg) {
    if (cfg.layers < 1)
        throw config_error("fno: layers must be positive");
    if (cfg.hidden < 1)
        throw config_error("fno: hidden width must be positive");
    if (cfg.modes < 1)
        throw config_error("fno: modes must be positive");
    if (cfg.lifting_width < 1 || cfg.projection_width < 1)
        throw config_error("fno: stage widths must be positive");
    if (cfg.in_channels < 1)
        throw config_error("fno: in_channels must be positive");
    act_kind(cfg.activation);
}

std::size_t parameter_count(const FnoConfig& cfg) {
    const auto lw = static_cast<std::size_t>(cfg.lifting_width);
    const auto pw = static_cast<std::size_t>(cfg.projection_width);
    const auto H = static_cast<std::size_t>(cfg.hidden);
    const auto C = static_cast<std::size_t>(cfg.in_channels);
    const auto M = static_cast<std::size_t>(cfg.modes);
    const auto L = static_cast<std::size_t>(cfg.layers);
    return lw * C + lw + H * lw + H +
           L * (2 * M * H * H + H * H + H) +
           pw * H + pw + pw + 1;
}

template <typename Real>
FnoParametersT<Real> init_parameters(const FnoConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    Rng rng(seed);
    auto fill_affine = [&](std::vector<Real>& w, std::vector<Real>& b,
                           std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& x : w)
            x = static_cast<Real>(rng.uniform(-bound, bound));
        for (auto& x : b)
            x = static_cast<Real>(rng.uniform(-bound, bound));
    };
    const auto H = static_cast<std::size_t>(cfg.hidden);
    auto p = zero_like<Real>(cfg);
    fill_affine(p.lift_w1, p.lift_b1, static_cast<std::size_t>(cfg.in_channels));
    fill_affine(p.lift_w2, p.lift_b2, static_cast<std::size_t>(cfg.lifting_width));
    const double scale = 1.0 / static_cast<double>(H * H);
    for (auto& layer : p.layers) {
        for (auto& c : layer.spectral) {
            const double re = rng.uniform(-scale, scale);
            const double im = rng.uniform(-scale, scale);
            c = std::complex<Real>(static_cast<Real>(re), static_cast<Real>(im));
        }
        fill_affine(layer.mix, layer.bias, H);
    }
    fill_affine(p.proj_w1, p.proj_b1, H);
    fill_affine(p.proj_w2, p.proj_b2, static_cast<std::size_t>(cfg.projection_width));
    return p;
}

template <typename Real>
std::vector<Real> flatten(const FnoParametersT<Real>& p) {
    std::vector<Real> flat;
    auto push = [&](const std::vector<Real>& v) {
        flat.insert(flat.end(), v.begin(), v.end());
    };
    auto push_c = [&](const std::vector<std::complex<Real>>& v) {
        for (const auto& c : v) {
            flat.push_back(c.real());
            flat.push_back(c.imag());
        }
    };
    push(p.lift_w1);
    push(p.lift_b1);
    push(p.lift_w2);
    push(p.lift_b2);
    for (const auto& layer : p.layers) {
        push_c(layer.spectral);
        push(layer.mix);
        push(layer.bias);
    }
    push(p.proj_w1);
    push(p.proj_b1);
    push(p.proj_w2);
    push(p.proj_b2);
    return flat;
}

template <typename Real>
void unflatten(std::span<const Real> flat, FnoParametersT<Real>& p) {
    std::size_t pos = 0;
    auto pull = [&](std::vector<Real>& v) {
        if (pos + v.size() > flat.size())
            throw config_error("fno: flat parameter vector too short");
        std::copy(flat.begin() + pos, flat.begin() + pos + v.size(), v.begin());
        pos += v.size();
    };
    auto pull_c = [&](std::vector<std::complex<Real>>& v) {
        if (pos + 2 * v.size() > flat.size())
            throw config_error("fno: flat parameter vector too short");
        for (auto& c : v) {
            c = std::complex<Real>(flat[pos], flat[pos + 1]);
            pos += 2;
        }
    };
    pull(p.lift_w1);
    pull(p.lift_b1);
    pull(p.lift_w2);
    pull(p.lift_b2);
    for (auto& layer : p.layers) {
        pull_c(layer.spectral);
        pull(layer.mix);
        pull(layer.bias);
    }
    pull(p.proj_w1);
    pull(p.proj_b1);
    pull(p.proj_w2);
    pull(p.proj_b2);
    if (pos != flat.size())
        throw config_error("fno: flat parameter vector too long");
}

std::vector<FlatBlock> flat_layout(const FnoConfig& cfg) {
    validate(cfg);
    const std::size_t C = static_cast<std::size_t>(cfg.in_channels);
    const std::size_t H = static_cast<std::size_t>(cfg.hidden);
    const std::size_t M = static_cast<std::size_t>(cfg.modes);
    const std::size_t lw = static_cast<std::size_t>(cfg.lifting_width);
    const std::size_t pw = static_cast<std::size_t>(cfg.projection_width);

    std::vector<FlatBlock> blocks;
    std::size_t pos = 0;
    auto add = [&](std::string name, std::size_t count) {
        blocks.push_back({std::move(name), pos, count});
        pos += count;
    };
    add("lift.w1", lw * C);
    add("lift.b1", lw);
    add("lift.w2", H * lw);
    add("lift.b2", H);
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string prefix = "layer." + std::to_string(l) + ".";
        add(prefix + "spectral", 2 * M * H * H);
        add(prefix + "mix", H * H);
        add(prefix + "bias", H);
    }
    add("proj.w1", pw * H);
    add("proj.b1", pw);
    add("proj.w2", pw);
    add("proj.b2", 1);
    return blocks;
}

template <typename Real>
std::vector<Real> spectral_conv(std::span<const Real> v, std::size_t n,
                                std::size_t channels_in,
                                std::size_t channels_out,
                                std::span<const std::complex<Real>> weights,
                                int modes) {
    if (n < 2)
        throw config_error("spectral_conv: sequence too short");
    if (modes < 1)
        throw config_error("spectral_conv: modes must be positive");
    if (v.size() != channels_in * n)
        throw config_error("spectral_conv: input size mismatch");
    RfftEngine<Real> eng(n);
    if (weights.size() !=
        static_cast<std::size_t>(modes) * channels_in * channels_out)
        throw config_error("spectral_conv: weight size mismatch");
    std::vector<std::complex<Real>> vhat, shat;
    stack_rfft(eng, v, channels_in, vhat);
    std::vector<Real> out(channels_out * n);
    spectral_from_hat(eng, vhat, channels_in, channels_out, weights, modes,
                      std::span<Real>(out), shat);
    return out;
}

template <typename Real>
FnoForwardT<Real> forward_cached(const FnoConfig& cfg,
                                 const FnoParametersT<Real>& p,
                                 std::span<const Real> input, std::size_t n) {
    validate(cfg);
    const std::size_t H = check_shapes(cfg, p);
    const auto C = static_cast<std::size_t>(cfg.in_channels);
    const auto lw = static_cast<std::size_t>(cfg.lifting_width);
    const auto pw = static_cast<std::size_t>(cfg.projection_width);
    const auto L = static_cast<std::size_t>(cfg.layers);
    if (n < 2)
        throw config_error("fno: sequence too short");
    if (input.size() != C * n)
        throw config_error("fno: input size does not match in_channels x n");
    const Act act = act_kind(cfg.activation);

    FnoForwardT<Real> r;
    auto& cache = r.cache;
    cache.n = n;
    cache.input.assign(input.begin(), input.end());

    RfftEngine<Real> eng(n);
    std::vector<std::complex<Real>> shat;

    cache.lift_pre.resize(lw * n);
    cache.lift_act.resize(lw * n);
    affine_forward<Real>(p.lift_w1, p.lift_b1, input, C, lw, n,
                         std::span<Real>(cache.lift_pre));
    act_apply<Real>(act, cache.lift_pre, std::span<Real>(cache.lift_act));

    cache.v.resize(L + 1);
    cache.pre.resize(L);
    cache.v_hat.resize(L);
    cache.v[0].resize(H * n);
    affine_forward<Real>(p.lift_w2, p.lift_b2, cache.lift_act, lw, H, n,
                         std::span<Real>(cache.v[0]));

    std::vector<Real> spec(H * n);
    for (std::size_t l = 0; l < L; ++l) {
        const auto& layer = p.layers[l];
        stack_rfft(eng, std::span<const Real>(cache.v[l]), H, cache.v_hat[l]);
        spectral_from_hat(eng, cache.v_hat[l], H, H,
                          std::span<const std::complex<Real>>(layer.spectral),
                          cfg.modes, std::span<Real>(spec), shat);
        cache.pre[l].resize(H * n);
        affine_forward<Real>(layer.mix, layer.bias, cache.v[l], H, H, n,
                             std::span<Real>(cache.pre[l]));
        for (std::size_t i = 0; i < H * n; ++i)
            cache.pre[l][i] += spec[i];
        cache.v[l + 1].resize(H * n);
        act_apply<Real>(act, cache.pre[l], std::span<Real>(cache.v[l + 1]));
    }

    cache.proj_pre.resize(pw * n);
    cache.proj_act.resize(pw * n);
    affine_forward<Real>(p.proj_w1, p.proj_b1, cache.v[L], H, pw, n,
                         std::span<Real>(cache.proj_pre));
    act_apply<Real>(act, cache.proj_pre, std::span<Real>(cache.proj_act));
    r.output.resize(n);
    affine_forward<Real>(p.proj_w2, p.proj_b2, cache.proj_act, pw, 1, n,
                         std::span<Real>(r.output));
    return r;
}

template <typename Real>
std::vector<Real> forward(const FnoConfig& cfg, const FnoParametersT<Real>& p,
                          std::span<const Real> input, std::size_t n) {
    return forward_cached(cfg, p, input, n).output;
}

template <typename Real>
std::vector<Real> forward(const FnoConfig& cfg, const FnoParametersT<Real>& p,
                          const ChannelStack& input) {
    std::vector<Real> flat(input.data.size());
    for (std::size_t i = 0; i < flat.size(); ++i)
        flat[i] = static_cast<Real>(input.data[i]);
    return forward(cfg, p, std::span<const Real>(flat), input.grid.n);
}

template <typename Real>
FnoBackwardT<Real> backward(const FnoConfig& cfg, const FnoParametersT<Real>& p,
                            const FnoCacheT<Real>& cache,
                            std::span<const Real> output_grad) {
    validate(cfg);
    const std::size_t H = check_shapes(cfg, p);
    const auto C = static_cast<std::size_t>(cfg.in_channels);
    const auto lw = static_cast<std::size_t>(cfg.lifting_width);
    const auto pw = static_cast<std::size_t>(cfg.projection_width);
    const auto L = static_cast<std::size_t>(cfg.layers);
    const std::size_t n = cache.n;
    if (output_grad.size() != n)
        throw config_error("fno: output gradient length mismatch");
    if (cache.v.size() != L + 1 || cache.pre.size() != L)
        throw config_error("fno: cache does not match config");
    const Act act = act_kind(cfg.activation);

    FnoBackwardT<Real> r;
    r.grads = zero_like<Real>(cfg);
    auto& g = r.grads;

    RfftEngine<Real> eng(n);
    const std::size_t bins = eng.bins();
    const std::size_t kmax =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.modes), bins);
    // Conjugate-symmetry multiplicity of each retained bin: the zero bin, and
    // the Nyquist bin when n is even, appear once in the full spectrum.
    auto bin_weight = [&](std::size_t k) {
        const bool single = k == 0 || (n % 2 == 0 && k == n / 2);
        return single ? Real(1) / static_cast<Real>(n)
                      : Real(2) / static_cast<Real>(n);
    };

    // Projection stage.
    std::vector<Real> d_act(pw * n);
    affine_backward<Real>(p.proj_w2, cache.proj_act, output_grad, pw, 1, n,
                          std::span<Real>(d_act), std::span<Real>(g.proj_w2),
                          std::span<Real>(g.proj_b2));
    for (std::size_t i = 0; i < pw * n; ++i)
        d_act[i] *= act_deriv(act, cache.proj_pre[i]);
    std::vector<Real> dv(H * n);
    affine_backward<Real>(p.proj_w1, cache.v[L], d_act, H, pw, n,
                          std::span<Real>(dv), std::span<Real>(g.proj_w1),
                          std::span<Real>(g.proj_b1));

    // Operator layers, reversed. For each layer, with s = spectral path and
    // du = d(loss)/d(pre-activation):
    //   d(mix), d(bias), and the mix part of d(v) follow the affine rules;
    //   d(spectral)[k,i,o] = conj(fft(v)[i,k]) * fft(du)[o,k] * bin_weight(k);
    //   the spectral part of d(v) is the spectral map applied to du with the
    //   per-mode matrices conjugate-transposed (the FFT scale factors cancel).
    std::vector<Real> du(H * n);
    std::vector<Real> dv_prev(H * n);
    std::vector<Real> row(n);
    std::vector<std::complex<Real>> ahat, chat;
    for (std::size_t li = L; li-- > 0;) {
        const auto& layer = p.layers[li];
        auto& glayer = g.layers[li];
        const auto& pre = cache.pre[li];
        for (std::size_t i = 0; i < H * n; ++i)
            du[i] = dv[i] * act_deriv(act, pre[i]);
        affine_backward<Real>(layer.mix, cache.v[li], du, H, H, n,
                              std::span<Real>(dv_prev),
                              std::span<Real>(glayer.mix),
                              std::span<Real>(glayer.bias));
        stack_rfft(eng, std::span<const Real>(du), H, ahat);
        const auto& vhat = cache.v_hat[li];
        if (vhat.size() != H * bins)
            throw config_error("fno: cache does not match config");
        chat.assign(H * bins, std::complex<Real>(0, 0));
        for (std::size_t k = 0; k < kmax; ++k) {
            const Real bw = bin_weight(k);
            for (std::size_t i = 0; i < H; ++i) {
                const std::complex<Real> cv = std::conj(vhat[i * bins + k]);
                const std::complex<Real>* wk =
                    layer.spectral.data() + (k * H + i) * H;
                std::complex<Real>* gw =
                    glayer.spectral.data() + (k * H + i) * H;
                std::complex<Real> acc(0, 0);
                for (std::size_t o = 0; o < H; ++o) {
                    const std::complex<Real> a = ahat[o * bins + k];
                    gw[o] = cv * a * bw;
                    acc += std::conj(wk[o]) * a;
                }
                chat[i * bins + k] = acc;
            }
        }
        for (std::size_t i = 0; i < H; ++i) {
            eng.inverse(chat.data() + i * bins, row.data());
            Real* d = dv_prev.data() + i * n;
            for (std::size_t t = 0; t < n; ++t)
                d[t] += row[t];
        }
        std::swap(dv, dv_prev);
    }

    // Lifting stage.
    std::vector<Real> d_lift(lw * n);
    affine_backward<Real>(p.lift_w2, cache.lift_act, dv, lw, H, n,
                          std::span<Real>(d_lift), std::span<Real>(g.lift_w2),
                          std::span<Real>(g.lift_b2));
    for (std::size_t i = 0; i < lw * n; ++i)
        d_lift[i] *= act_deriv(act, cache.lift_pre[i]);
    r.input_grad.resize(C * n);
    affine_backward<Real>(p.lift_w1, cache.input, d_lift, C, lw, n,
                          std::span<Real>(r.input_grad),
                          std::span<Real>(g.lift_w1),
                          std::span<Real>(g.lift_b1));
    return r;
}

template FnoParametersT<float> init_parameters<float>(const FnoConfig&,
                                                      std::uint64_t);
template FnoParametersT<double> init_parameters<double>(const FnoConfig&,
                                                        std::uint64_t);
template std::vector<float> flatten<float>(const FnoParametersT<float>&);
template std::vector<double> flatten<double>(const FnoParametersT<double>&);
template void unflatten<float>(std::span<const float>, FnoParametersT<float>&);
template void unflatten<double>(std::span<const double>,
                                FnoParametersT<double>&);
template std::vector<float> spectral_conv<float>(
    std::span<const float>, std::size_t, std::size_t, std::size_t,
    std::span<const std::complex<float>>, int);
template std::vector<double> spectral_conv<double>(
    std::span<const double>, std::size_t, std::size_t, std::size_t,
    std::span<const std::complex<double>>, int);
template FnoForwardT<float> forward_cached<float>(const FnoConfig&,
                                                  const FnoParametersT<float>&,
                                                  std::span<const float>,
                                                  std::size_t);
template FnoForwardT<double> forward_cached<double>(
    const FnoConfig&, const FnoParametersT<double>&, std::span<const double>,
    std::size_t);
template std::vector<float> forward<float>(const FnoConfig&,
                                           const FnoParametersT<float>&,
                                           std::span<const float>, std::size_t);
template std::vector<double> forward<double>(const FnoConfig&,
                                             const FnoParametersT<double>&,
                                             std::span<const double>,
                                             std::size_t);
template std::vector<float> forward<float>(const FnoConfig&,
                                           const FnoParametersT<float>&,
                                           const ChannelStack&);
template std::vector<double> forward<double>(const FnoConfig&,
                                             const FnoParametersT<double>&,
                                             const ChannelStack&);
template FnoBackwardT<float> backward<float>(const FnoConfig&,
                                             const FnoParametersT<float>&,
                                             const FnoCacheT<float>&,
                                             std::span<const float>);
template FnoBackwardT<double> backward<double>(const FnoConfig&,
                                               const FnoParametersT<double>&,
                                               const FnoCacheT<double>&,
                                               std::span<const double>);

} // namespace nobl
