#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "nobl/errors.hpp"

namespace nobl {
namespace detail {

constexpr double kPi = 3.141592653589793238462643383279502884;

inline bool is_pow2(std::size_t m) { return m != 0 && (m & (m - 1)) == 0; }

inline std::size_t next_pow2(std::size_t m) {
    std::size_t p = 1;
    while (p < m) p <<= 1;
    return p;
}

// Iterative radix-2 complex FFT core for one power-of-two size, plus a
// Bluestein chirp-z fallback for arbitrary sizes built on top of it.
// Forward transforms are unnormalized; inverse() divides by the length.
template <typename T>
class CfftCore {
public:
    explicit CfftCore(std::size_t m) : m_(m) {
        if (m_ == 0) throw config_error("fft: length must be positive");
        if (is_pow2(m_)) {
            init_pow2_tables(m_, bitrev_, tw_);
        } else {
            const std::size_t mb = next_pow2(2 * m_ - 1);
            inner_ = std::make_unique<CfftCore<T>>(mb);
            // chirp_[j] = exp(-i*pi*j^2/m); j^2 reduced mod 2m keeps the
            // trig argument small for long transforms.
            chirp_.resize(m_);
            for (std::size_t j = 0; j < m_; ++j) {
                const std::size_t q = (j * j) % (2 * m_);
                const double ang = -kPi * static_cast<double>(q) / static_cast<double>(m_);
                chirp_[j] = std::complex<T>(static_cast<T>(std::cos(ang)),
                                            static_cast<T>(std::sin(ang)));
            }
            bfft_.assign(mb, std::complex<T>(0, 0));
            bfft_[0] = std::conj(chirp_[0]);
            for (std::size_t j = 1; j < m_; ++j) {
                bfft_[j] = std::conj(chirp_[j]);
                bfft_[mb - j] = std::conj(chirp_[j]);
            }
            inner_->forward(bfft_.data());
            scratch_.resize(mb);
        }
    }

    std::size_t size() const { return m_; }

    void forward(std::complex<T>* a) {
        if (inner_ == nullptr) {
            pow2_forward(a, m_, bitrev_, tw_);
            return;
        }
        const std::size_t mb = inner_->size();
        for (std::size_t j = 0; j < m_; ++j) scratch_[j] = a[j] * chirp_[j];
        for (std::size_t j = m_; j < mb; ++j) scratch_[j] = std::complex<T>(0, 0);
        inner_->forward(scratch_.data());
        for (std::size_t j = 0; j < mb; ++j) scratch_[j] *= bfft_[j];
        inner_->inverse(scratch_.data());
        for (std::size_t k = 0; k < m_; ++k) a[k] = scratch_[k] * chirp_[k];
    }

    void inverse(std::complex<T>* a) {
        for (std::size_t j = 0; j < m_; ++j) a[j] = std::conj(a[j]);
        forward(a);
        const T s = static_cast<T>(1) / static_cast<T>(m_);
        for (std::size_t j = 0; j < m_; ++j) a[j] = std::conj(a[j]) * s;
    }

private:
    static void init_pow2_tables(std::size_t m, std::vector<std::size_t>& bitrev,
                                 std::vector<std::complex<T>>& tw) {
        bitrev.assign(m, 0);
        for (std::size_t i = 1, j = 0; i < m; ++i) {
            std::size_t bit = m >> 1;
            for (; j & bit; bit >>= 1) j ^= bit;
            j ^= bit;
            bitrev[i] = j;
        }
        tw.resize(m / 2);
        for (std::size_t j = 0; j < m / 2; ++j) {
            const double ang = -2.0 * kPi * static_cast<double>(j) / static_cast<double>(m);
            tw[j] = std::complex<T>(static_cast<T>(std::cos(ang)),
                                    static_cast<T>(std::sin(ang)));
        }
    }

    static void pow2_forward(std::complex<T>* a, std::size_t m,
                             const std::vector<std::size_t>& bitrev,
                             const std::vector<std::complex<T>>& tw) {
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = bitrev[i];
            if (i < j) std::swap(a[i], a[j]);
        }
        for (std::size_t len = 2; len <= m; len <<= 1) {
            const std::size_t half = len >> 1;
            const std::size_t step = m / len;
            for (std::size_t base = 0; base < m; base += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    const std::complex<T> w = tw[j * step];
                    const std::complex<T> u = a[base + j];
                    const std::complex<T> v = a[base + j + half] * w;
                    a[base + j] = u + v;
                    a[base + j + half] = u - v;
                }
            }
        }
    }

    std::size_t m_;
    std::vector<std::size_t> bitrev_;
    std::vector<std::complex<T>> tw_;
    std::unique_ptr<CfftCore<T>> inner_;
    std::vector<std::complex<T>> chirp_;
    std::vector<std::complex<T>> bfft_;
    std::vector<std::complex<T>> scratch_;
};

} // namespace detail

// Real-input FFT engine for one fixed length. Convention: forward is the
// plain unnormalized DFT restricted to bins [0, n/2]; inverse applies the
// 1/n factor. inverse() ignores the imaginary parts of the DC and Nyquist
// bins (a real signal cannot carry them). Instances hold scratch buffers and
// are not safe for concurrent use; create one per thread.
template <typename T>
class RfftEngine {
public:
    explicit RfftEngine(std::size_t n) : n_(n) {
        if (n_ == 0) throw config_error("rfft: length must be positive");
        if (n_ == 1) return;
        if (n_ % 2 == 0) {
            core_ = std::make_unique<detail::CfftCore<T>>(n_ / 2);
            pack_.resize(n_ / 2);
            const std::size_t nh = n_ / 2 + 1;
            rot_.resize(nh);
            for (std::size_t k = 0; k < nh; ++k) {
                const double ang = -2.0 * detail::kPi * static_cast<double>(k) /
                                   static_cast<double>(n_);
                rot_[k] = std::complex<T>(static_cast<T>(std::cos(ang)),
                                          static_cast<T>(std::sin(ang)));
            }
        } else {
            core_ = std::make_unique<detail::CfftCore<T>>(n_);
            pack_.resize(n_);
        }
    }

    std::size_t length() const { return n_; }
    std::size_t bins() const { return n_ / 2 + 1; }

    void forward(const T* x, std::complex<T>* out) {
        if (n_ == 1) {
            out[0] = std::complex<T>(x[0], 0);
            return;
        }
        if (n_ % 2 != 0) {
            for (std::size_t j = 0; j < n_; ++j) pack_[j] = std::complex<T>(x[j], 0);
            core_->forward(pack_.data());
            for (std::size_t k = 0; k < bins(); ++k) out[k] = pack_[k];
            return;
        }
        const std::size_t n2 = n_ / 2;
        for (std::size_t j = 0; j < n2; ++j) {
            pack_[j] = std::complex<T>(x[2 * j], x[2 * j + 1]);
        }
        core_->forward(pack_.data());
        const std::complex<T> ihalf(0, static_cast<T>(-0.5));
        for (std::size_t k = 0; k <= n2; ++k) {
            const std::complex<T> zk = pack_[k % n2];
            const std::complex<T> zr = std::conj(pack_[(n2 - k) % n2]);
            const std::complex<T> even = (zk + zr) * static_cast<T>(0.5);
            const std::complex<T> odd = (zk - zr) * ihalf;
            out[k] = even + rot_[k] * odd;
        }
    }

    void inverse(const std::complex<T>* in, T* x) {
        if (n_ == 1) {
            x[0] = in[0].real();
            return;
        }
        if (n_ % 2 != 0) {
            const std::size_t h = bins();
            pack_[0] = std::complex<T>(in[0].real(), 0);
            for (std::size_t k = 1; k < h; ++k) {
                pack_[k] = in[k];
                pack_[n_ - k] = std::conj(in[k]);
            }
            core_->inverse(pack_.data());
            for (std::size_t j = 0; j < n_; ++j) x[j] = pack_[j].real();
            return;
        }
        const std::size_t n2 = n_ / 2;
        auto bin = [&](std::size_t k) -> std::complex<T> {
            if (k == 0 || k == n2) return std::complex<T>(in[k].real(), 0);
            return in[k];
        };
        for (std::size_t k = 0; k < n2; ++k) {
            const std::complex<T> xk = bin(k);
            const std::complex<T> xr = std::conj(bin(n2 - k));
            const std::complex<T> even = (xk + xr) * static_cast<T>(0.5);
            const std::complex<T> odd =
                (xk - xr) * std::conj(rot_[k]) * static_cast<T>(0.5);
            pack_[k] = even + std::complex<T>(0, 1) * odd;
        }
        core_->inverse(pack_.data());
        for (std::size_t j = 0; j < n2; ++j) {
            x[2 * j] = pack_[j].real();
            x[2 * j + 1] = pack_[j].imag();
        }
    }

private:
    std::size_t n_;
    std::unique_ptr<detail::CfftCore<T>> core_;
    std::vector<std::complex<T>> pack_;
    std::vector<std::complex<T>> rot_;
};

} // namespace nobl
