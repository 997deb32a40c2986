#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "rfsep/fft.hpp"
#include "rfsep/signal.hpp"

namespace rfsep {

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;

/// Hermitian PSD covariance in dense form or in stationary form (an
/// autocovariance sequence with implied Toeplitz structure). The circulant
/// form is the stationary special case whose Toeplitz expansion wraps
/// around exactly; FFT-domain estimators are exact on it.
class CovarianceSpec {
  public:
    enum class Form { Dense, Toeplitz, Circulant };

    static CovarianceSpec dense(CMatrix c) {
        if (c.rows() == 0 || c.rows() != c.cols())
            throw InvalidParameterError("CovarianceSpec: dense matrix must be square, dim >= 1");
        const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
        const double asym = (c - c.adjoint()).cwiseAbs().maxCoeff();
        if (asym > kHermitianTol * scale)
            throw InvalidParameterError("CovarianceSpec: matrix is not Hermitian within tolerance");
        CovarianceSpec s;
        s.form_ = Form::Dense;
        s.dim_ = c.rows();
        s.dense_ = 0.5 * (c + c.adjoint());  // symmetrize round-off
        return s;
    }

    /// Toeplitz covariance from lags r[0..L], L+1 <= dim; unspecified lags are zero.
    static CovarianceSpec toeplitz(ComplexSignal acov, Eigen::Index dim) {
        if (dim < 1) throw InvalidParameterError("CovarianceSpec: dim must be >= 1");
        if (acov.size() < 1 || acov.size() > dim)
            throw InvalidParameterError("CovarianceSpec: autocovariance length must be in [1, dim]");
        check_lag0(acov);
        CovarianceSpec s;
        s.form_ = Form::Toeplitz;
        s.dim_ = dim;
        s.acov_ = std::move(acov);
        s.acov_[0] = cdouble(s.acov_[0].real(), 0.0);
        return s;
    }

    /// Circulant covariance with first column c[0..N-1]; requires the
    /// Hermitian wrap c[N-m] == conj(c[m]).
    static CovarianceSpec circulant(ComplexSignal acov) {
        const Eigen::Index n = acov.size();
        if (n < 1) throw InvalidParameterError("CovarianceSpec: circulant acov must be non-empty");
        check_lag0(acov);
        double scale = 0.0;
        for (Eigen::Index m = 0; m < n; ++m) scale = std::max(scale, std::abs(acov[m]));
        scale = std::max(scale, 1.0);
        for (Eigen::Index m = 1; m < n; ++m) {
            if (std::abs(acov[n - m] - std::conj(acov[m])) > 1e-9 * scale)
                throw InvalidParameterError(
                    "CovarianceSpec: circulant acov violates Hermitian wrap c[N-m] == conj(c[m])");
        }
        CovarianceSpec s;
        s.form_ = Form::Circulant;
        s.dim_ = n;
        s.acov_ = std::move(acov);
        s.acov_[0] = cdouble(s.acov_[0].real(), 0.0);
        return s;
    }

    Form form() const { return form_; }
    Eigen::Index dim() const { return dim_; }
    bool stationary() const { return form_ != Form::Dense; }

    const CMatrix& matrix() const {
        if (form_ != Form::Dense) throw UnsupportedFormError("CovarianceSpec: not in dense form");
        return dense_;
    }

    const ComplexSignal& acov() const {
        if (form_ == Form::Dense) throw UnsupportedFormError("CovarianceSpec: no autocovariance for dense form");
        return acov_;
    }

    CMatrix to_dense() const {
        switch (form_) {
            case Form::Dense:
                return dense_;
            case Form::Toeplitz: {
                CMatrix c = CMatrix::Zero(dim_, dim_);
                for (Eigen::Index i = 0; i < dim_; ++i) {
                    for (Eigen::Index j = 0; j < dim_; ++j) {
                        const Eigen::Index lag = i - j;
                        const Eigen::Index a = lag >= 0 ? lag : -lag;
                        if (a < acov_.size()) c(i, j) = lag >= 0 ? acov_[a] : std::conj(acov_[a]);
                    }
                }
                return c;
            }
            case Form::Circulant: {
                CMatrix c(dim_, dim_);
                for (Eigen::Index i = 0; i < dim_; ++i)
                    for (Eigen::Index j = 0; j < dim_; ++j) c(i, j) = acov_[mod(i - j, dim_)];
                return c;
            }
        }
        throw NumericalError("CovarianceSpec: unreachable form");
    }

    double trace() const {
        if (form_ == Form::Dense) return dense_.real().trace();
        return static_cast<double>(dim_) * acov_[0].real();
    }

    /// Eigenvalues of the circulant form: the DFT of the first column.
    /// Throws NotPsdError if the spectrum has a negative entry beyond tolerance.
    RealVector circulant_spectrum() const {
        if (form_ != Form::Circulant)
            throw UnsupportedFormError("CovarianceSpec: circulant_spectrum requires circulant form");
        return checked_spectrum(acov_, trace());
    }

    /// Circulant embedding of the stationary form for exact sampling:
    /// first column of the embedding (length N for circulant, 2N-1 for
    /// Toeplitz) and its nonnegative spectrum.
    std::pair<ComplexSignal, RealVector> embedding() const {
        if (form_ == Form::Circulant) return {acov_, circulant_spectrum()};
        if (form_ != Form::Toeplitz)
            throw UnsupportedFormError("CovarianceSpec: embedding requires a stationary form");
        const Eigen::Index m = 2 * dim_ - 1;
        ComplexSignal c = ComplexSignal::Zero(m);
        for (Eigen::Index lag = 0; lag < std::min(acov_.size(), dim_); ++lag) {
            c[lag] = acov_[lag];
            if (lag > 0) c[m - lag] = std::conj(acov_[lag]);
        }
        const double tr = static_cast<double>(m) * acov_[0].real();
        return {c, checked_spectrum(c, tr)};
    }

    CovarianceSpec scaled(double s) const {
        if (!(s >= 0.0)) throw InvalidParameterError("CovarianceSpec: scale must be nonnegative");
        CovarianceSpec out = *this;
        if (form_ == Form::Dense)
            out.dense_ *= s;
        else
            out.acov_ *= s;
        return out;
    }

    friend CovarianceSpec operator+(const CovarianceSpec& a, const CovarianceSpec& b) {
        if (a.dim_ != b.dim_) throw InvalidParameterError("CovarianceSpec: dimension mismatch in sum");
        if (a.form_ == b.form_ && a.form_ == Form::Circulant)
            return circulant(a.acov_ + b.acov_);
        if (a.form_ == b.form_ && a.form_ == Form::Toeplitz) {
            const Eigen::Index len = std::max(a.acov_.size(), b.acov_.size());
            ComplexSignal r = ComplexSignal::Zero(len);
            r.head(a.acov_.size()) += a.acov_;
            r.head(b.acov_.size()) += b.acov_;
            return toeplitz(std::move(r), a.dim_);
        }
        return dense(a.to_dense() + b.to_dense());
    }

  private:
    static void check_lag0(const ComplexSignal& acov) {
        const double r0 = std::abs(acov[0]);
        if (std::abs(acov[0].imag()) > kHermitianTol * std::max(1.0, r0))
            throw InvalidParameterError("CovarianceSpec: lag-0 autocovariance must be real");
    }

    static RealVector checked_spectrum(const ComplexSignal& first_col, double tr) {
        ComplexSignal f = fft(first_col);
        RealVector spec(f.size());
        const double tol = kPsdTol * std::max(tr, 1e-300);
        for (Eigen::Index j = 0; j < f.size(); ++j) {
            const double v = f[j].real();
            if (v < -tol)
                throw NotPsdError("CovarianceSpec: negative embedded spectrum (not PSD)");
            spec[j] = std::max(v, 0.0);
        }
        return spec;
    }

    static Eigen::Index mod(Eigen::Index a, Eigen::Index n) {
        const Eigen::Index r = a % n;
        return r < 0 ? r + n : r;
    }

    Form form_ = Form::Dense;
    Eigen::Index dim_ = 0;
    CMatrix dense_;
    ComplexSignal acov_;
};

}  // namespace rfsep
