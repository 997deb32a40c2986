#pragma once

#include <Eigen/Eigenvalues>

#include <memory>

#include "rfsep/covariance.hpp"
#include "rfsep/fft.hpp"
#include "rfsep/rng.hpp"
#include "rfsep/signal.hpp"

namespace rfsep {

inline constexpr Eigen::Index kDenseDimCap = 4096;

/// Draws zero-mean circularly-symmetric Gaussian vectors with a prescribed
/// covariance. Stationary forms sample through the circulant embedding
/// (frequency-domain coloring): exact for the circulant extension; the
/// Toeplitz truncation inherits that exactness as a marginal, up to the
/// clamping of within-tolerance negative spectrum entries. Dense forms use
/// an eigendecomposition factor, capped at kDenseDimCap.
class GaussianSampler {
  public:
    explicit GaussianSampler(const CovarianceSpec& spec, Eigen::Index dense_cap = kDenseDimCap)
        : dim_(spec.dim()) {
        if (spec.stationary()) {
            auto [first_col, spectrum] = spec.embedding();
            const auto m = spectrum.size();
            plan_ = std::make_shared<FftPlan>(static_cast<std::size_t>(m));
            freq_scale_ = (spectrum / static_cast<double>(m)).cwiseSqrt();
        } else {
            if (spec.dim() > dense_cap)
                throw InvalidParameterError("GaussianSampler: dense covariance exceeds dimension cap");
            Eigen::SelfAdjointEigenSolver<CMatrix> eig(spec.matrix());
            if (eig.info() != Eigen::Success)
                throw NumericalError("GaussianSampler: eigendecomposition failed");
            const double tol = kPsdTol * std::max(spec.trace(), 1e-300);
            RealVector vals = eig.eigenvalues();
            for (Eigen::Index i = 0; i < vals.size(); ++i) {
                if (vals[i] < -tol) throw NotPsdError("GaussianSampler: covariance is not PSD");
                vals[i] = std::sqrt(std::max(vals[i], 0.0));
            }
            factor_ = eig.eigenvectors() * vals.asDiagonal();
        }
    }

    Eigen::Index dim() const { return dim_; }

    ComplexSignal draw(Rng& rng) const {
        if (plan_) {
            const auto m = static_cast<Eigen::Index>(plan_->size());
            ComplexSignal u(m);
            for (Eigen::Index j = 0; j < m; ++j) u[j] = freq_scale_[j] * rng.cnormal();
            // z = F^H u, applied as conj(F conj(u))
            u = u.conjugate();
            plan_->forward(u);
            return u.conjugate().head(dim_);
        }
        return factor_ * rng.cnormal_vector(dim_);
    }

  private:
    Eigen::Index dim_;
    std::shared_ptr<FftPlan> plan_;
    RealVector freq_scale_;
    CMatrix factor_;
};

/// Stationary Gaussian vector with autocovariance r[0..L] (Toeplitz
/// truncation; circulant when r wraps Hermitially at length N).
inline ComplexSignal gen_stationary_gaussian(const ComplexSignal& acov, Eigen::Index n,
                                             std::uint64_t seed) {
    if (n < 1) throw InvalidParameterError("gen_stationary_gaussian: N must be >= 1");
    if (acov.size() < 1) throw InvalidParameterError("gen_stationary_gaussian: empty autocovariance");
    ComplexSignal r = acov.head(std::min(acov.size(), n));
    CovarianceSpec spec = CovarianceSpec::toeplitz(std::move(r), n);
    Rng rng(seed);
    return GaussianSampler(spec).draw(rng);
}

/// Exact dense sampler for small-N oracles: L g with L an eigen factor of C.
inline ComplexSignal gen_dense_gaussian(const CMatrix& c, std::uint64_t seed,
                                        Eigen::Index dense_cap = kDenseDimCap) {
    CovarianceSpec spec = CovarianceSpec::dense(c);
    Rng rng(seed);
    return GaussianSampler(spec, dense_cap).draw(rng);
}

}  // namespace rfsep
