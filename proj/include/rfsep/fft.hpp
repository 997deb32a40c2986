#pragma once

#include <cstdint>
#include <memory>
#include <numbers>
#include <vector>

#include "rfsep/signal.hpp"

namespace rfsep {

/// Precomputed DFT plan for a fixed length. Power-of-two lengths run an
/// iterative radix-2 transform; everything else goes through Bluestein's
/// chirp-z reduction to a power-of-two convolution. Plans are immutable
/// after construction and safe to share across threads.
///
/// Conventions: forward X_k = sum_n x_n e^{-2*pi*i*n*k/N}, inverse is the
/// unitary-normalized opposite sign (inverse(forward(x)) == x).
class FftPlan {
  public:
    explicit FftPlan(std::size_t n) : n_(n) {
        if (n == 0) throw InvalidParameterError("FftPlan: length must be >= 1");
        if (is_pow2(n)) {
            init_pow2(n);
        } else {
            init_bluestein(n);
        }
    }

    std::size_t size() const { return n_; }

    void forward(ComplexSignal& x) const {
        if (static_cast<std::size_t>(x.size()) != n_)
            throw InvalidParameterError("FftPlan::forward: length mismatch");
        if (sub_) {
            bluestein(x);
        } else {
            radix2(x.data(), twiddle_, bitrev_);
        }
    }

    void inverse(ComplexSignal& x) const {
        x = x.conjugate();
        forward(x);
        x = x.conjugate() / static_cast<double>(n_);
    }

    ComplexSignal forward_copy(const ComplexSignal& x) const {
        ComplexSignal y = x;
        forward(y);
        return y;
    }

    ComplexSignal inverse_copy(const ComplexSignal& x) const {
        ComplexSignal y = x;
        inverse(y);
        return y;
    }

    static bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

  private:
    void init_pow2(std::size_t n) {
        twiddle_.resize(n / 2);
        for (std::size_t j = 0; j < n / 2; ++j) {
            const double a = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
            twiddle_[j] = {std::cos(a), std::sin(a)};
        }
        bitrev_.resize(n);
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
            bitrev_[i] = r;
        }
    }

    void init_bluestein(std::size_t n) {
        std::size_t m = 1;
        while (m < 2 * n - 1) m <<= 1;
        sub_ = std::make_unique<FftPlan>(m);
        chirp_.resize(n);
        const std::uint64_t modulus = 2 * static_cast<std::uint64_t>(n);
        for (std::size_t k = 0; k < n; ++k) {
            // k^2 mod 2n keeps the chirp angle in range without precision loss
            const std::uint64_t q = (static_cast<std::uint64_t>(k) * k) % modulus;
            const double a = -std::numbers::pi * static_cast<double>(q) / static_cast<double>(n);
            chirp_[k] = {std::cos(a), std::sin(a)};
        }
        // kernel c_l = conj(chirp_|l|) laid out circularly over length m
        ComplexSignal c = ComplexSignal::Zero(static_cast<Eigen::Index>(m));
        c[0] = std::conj(chirp_[0]);
        for (std::size_t l = 1; l < n; ++l) {
            c[static_cast<Eigen::Index>(l)] = std::conj(chirp_[l]);
            c[static_cast<Eigen::Index>(m - l)] = std::conj(chirp_[l]);
        }
        sub_->forward(c);
        kernel_fft_.assign(c.data(), c.data() + m);
    }

    void bluestein(ComplexSignal& x) const {
        const std::size_t m = sub_->size();
        ComplexSignal a = ComplexSignal::Zero(static_cast<Eigen::Index>(m));
        for (std::size_t k = 0; k < n_; ++k) a[static_cast<Eigen::Index>(k)] = x[static_cast<Eigen::Index>(k)] * chirp_[k];
        sub_->forward(a);
        for (std::size_t j = 0; j < m; ++j) a[static_cast<Eigen::Index>(j)] *= kernel_fft_[j];
        sub_->inverse(a);
        for (std::size_t k = 0; k < n_; ++k) x[static_cast<Eigen::Index>(k)] = a[static_cast<Eigen::Index>(k)] * chirp_[k];
    }

    static void radix2(cdouble* x, const std::vector<cdouble>& twiddle,
                       const std::vector<std::uint32_t>& bitrev) {
        const std::size_t n = bitrev.size();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = bitrev[i];
            if (i < j) std::swap(x[i], x[j]);
        }
        for (std::size_t len = 2; len <= n; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t step = n / len;
            for (std::size_t blk = 0; blk < n; blk += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    const cdouble w = twiddle[j * step];
                    const cdouble u = x[blk + j];
                    const cdouble v = x[blk + j + half] * w;
                    x[blk + j] = u + v;
                    x[blk + j + half] = u - v;
                }
            }
        }
    }

    std::size_t n_;
    std::vector<cdouble> twiddle_;
    std::vector<std::uint32_t> bitrev_;
    std::vector<cdouble> chirp_;
    std::vector<cdouble> kernel_fft_;
    std::unique_ptr<FftPlan> sub_;
};

inline ComplexSignal fft(const ComplexSignal& x) { return FftPlan(x.size()).forward_copy(x); }

inline ComplexSignal ifft(const ComplexSignal& x) { return FftPlan(x.size()).inverse_copy(x); }

}  // namespace rfsep
