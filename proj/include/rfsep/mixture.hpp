#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rfsep/covariance.hpp"
#include "rfsep/fft.hpp"
#include "rfsep/sampling.hpp"
#include "rfsep/signal.hpp"

namespace rfsep {

struct SeparationResult {
    ComplexSignal s_hat;
    std::optional<int> k_hat;
    std::optional<RealVector> posterior;
    std::optional<RealVector> loglik;
};

struct MonteCarloStat {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t trials = 0;
};

/// Gaussian mixture observation model: y = s + b_k with s ~ CN(0, C_s),
/// b_k ~ CN(0, C_bk) and latent type k drawn from the prior vector.
/// Factorizations of every C_yk = C_s + C_bk are cached at construction
/// (Cholesky + log-determinant on the dense path, spectra on the circulant
/// stationary path); estimator and detector calls never re-factorize.
/// Immutable after construction, safe for concurrent use.
class MixtureModel {
  public:
    MixtureModel(RealVector priors, CovarianceSpec c_s, std::vector<CovarianceSpec> c_b,
                 Eigen::Index dense_cap = kDenseDimCap)
        : priors_(std::move(priors)), c_s_(std::move(c_s)), c_b_(std::move(c_b)) {
        const auto k = static_cast<Eigen::Index>(c_b_.size());
        if (k < 1) throw InvalidParameterError("MixtureModel: need at least one interference type");
        if (priors_.size() != k) throw InvalidParameterError("MixtureModel: priors/type count mismatch");
        double sum = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (priors_[i] < -1e-12 || priors_[i] > 1.0 + 1e-12)
                throw InvalidParameterError("MixtureModel: prior out of [0, 1]");
            sum += priors_[i];
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw InvalidParameterError("MixtureModel: priors must sum to 1");
        log_priors_.resize(k);
        for (Eigen::Index i = 0; i < k; ++i)
            log_priors_[i] = priors_[i] > 0.0 ? std::log(priors_[i])
                                              : -std::numeric_limits<double>::infinity();

        for (const auto& cb : c_b_) {
            if (cb.dim() != c_s_.dim())
                throw InvalidParameterError("MixtureModel: covariance dimensions differ");
        }

        stationary_ = c_s_.form() == CovarianceSpec::Form::Circulant;
        for (const auto& cb : c_b_) stationary_ &= cb.form() == CovarianceSpec::Form::Circulant;

        if (stationary_) {
            plan_ = std::make_shared<FftPlan>(static_cast<std::size_t>(dim()));
            spec_s_ = c_s_.circulant_spectrum();
            spec_y_.reserve(c_b_.size());
            logdet_y_.reserve(c_b_.size());
            for (const auto& cb : c_b_) {
                RealVector sy = spec_s_ + cb.circulant_spectrum();
                if (sy.minCoeff() <= 0.0) {
                    // one-shot flat jitter, mirroring the dense retry
                    const double eps = kPsdTol * (c_s_.trace() + cb.trace()) / static_cast<double>(dim());
                    sy.array() += eps;
                    jitter_ = true;
                    if (sy.minCoeff() <= 0.0)
                        throw NumericalError("MixtureModel: singular stationary covariance");
                }
                double ld = 0.0;
                for (Eigen::Index j = 0; j < sy.size(); ++j) ld += std::log(sy[j]);
                logdet_y_.push_back(ld);
                spec_y_.push_back(std::move(sy));
            }
        } else {
            if (dim() > dense_cap)
                throw InvalidParameterError(
                    "MixtureModel: dense path capped at N <= " + std::to_string(dense_cap) +
                    "; use circulant covariances for larger N");
            cs_dense_ = c_s_.to_dense();
            llt_y_.reserve(c_b_.size());
            logdet_y_.reserve(c_b_.size());
            for (const auto& cb : c_b_) {
                CMatrix cy = cs_dense_ + cb.to_dense();
                Eigen::LLT<CMatrix> llt(cy);
                if (llt.info() != Eigen::Success) {
                    const double eps = kPsdTol * cy.real().trace() / static_cast<double>(dim());
                    cy += eps * CMatrix::Identity(dim(), dim());
                    llt.compute(cy);
                    jitter_ = true;
                    if (llt.info() != Eigen::Success)
                        throw NumericalError("MixtureModel: covariance factorization failed");
                }
                double ld = 0.0;
                for (Eigen::Index j = 0; j < dim(); ++j)
                    ld += 2.0 * std::log(llt.matrixLLT()(j, j).real());
                logdet_y_.push_back(ld);
                llt_y_.push_back(std::move(llt));
            }
        }
    }

    int num_types() const { return static_cast<int>(c_b_.size()); }
    Eigen::Index dim() const { return c_s_.dim(); }
    const RealVector& priors() const { return priors_; }
    const CovarianceSpec& soi_cov() const { return c_s_; }
    const CovarianceSpec& interference_cov(int k) const { return c_b_[check_type(k)]; }
    bool stationary_path() const { return stationary_; }
    bool jitter_applied() const { return jitter_; }

    CovarianceSpec cov_y(int k) const { return c_s_ + c_b_[check_type(k)]; }

    /// Per-type Gaussian log-density log p(y | k) = -N log pi - logdet C_yk - y^H C_yk^-1 y.
    RealVector log_likelihoods(const ComplexSignal& y) const { return evaluate(y).loglik; }

    /// Posterior P(k | y), computed in the log domain with max-subtraction.
    RealVector posterior(const ComplexSignal& y) const {
        return posterior_from_loglik(evaluate(y).loglik);
    }

    RealVector posterior_from_loglik(const RealVector& loglik) const {
        if (loglik.size() != priors_.size())
            throw InvalidParameterError("posterior: log-likelihood size mismatch");
        RealVector t = loglik + log_priors_;
        const double m = t.maxCoeff();
        RealVector w(t.size());
        double sum = 0.0;
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            w[i] = std::isfinite(t[i]) ? std::exp(t[i] - m) : 0.0;
            sum += w[i];
        }
        if (!(sum > 0.0)) throw NumericalError("posterior: degenerate weights");
        return w / sum;
    }

    /// Type-conditioned LMMSE estimate C_s (C_s + C_bk)^-1 y.
    ComplexSignal lmmse(const ComplexSignal& y, int k) const {
        check_type(k);
        check_dim(y);
        if (stationary_) {
            Workspace ws = evaluate(y);
            return lmmse_from_fft(ws.y_fft, k);
        }
        return cs_dense_ * llt_y_[static_cast<std::size_t>(k)].solve(y);
    }

    /// FFT-domain Wiener path; requires every covariance to be circulant.
    ComplexSignal stationary_lmmse_fft(const ComplexSignal& y, int k) const {
        if (!stationary_)
            throw UnsupportedFormError("stationary_lmmse_fft: model is not on the stationary path");
        check_type(k);
        check_dim(y);
        ComplexSignal yf = plan_->forward_copy(y);
        return lmmse_from_fft(yf, k);
    }

    /// Exact MMSE estimate: posterior-weighted average of the K LMMSE estimates.
    SeparationResult mmse(const ComplexSignal& y) const {
        Workspace ws = evaluate(y);
        RealVector w = posterior_from_loglik(ws.loglik);
        SeparationResult res;
        if (stationary_) {
            RealVector gain = RealVector::Zero(dim());
            for (int k = 0; k < num_types(); ++k) {
                if (w[k] == 0.0) continue;
                gain += w[k] * (spec_s_.array() / spec_y_[static_cast<std::size_t>(k)].array()).matrix();
            }
            ComplexSignal sf = ws.y_fft.cwiseProduct(gain.cast<cdouble>());
            plan_->inverse(sf);
            res.s_hat = std::move(sf);
        } else {
            ComplexSignal acc = ComplexSignal::Zero(dim());
            for (int k = 0; k < num_types(); ++k) {
                if (w[k] == 0.0) continue;
                acc += w[k] * llt_y_[static_cast<std::size_t>(k)].solve(y);
            }
            res.s_hat = cs_dense_ * acc;
        }
        res.posterior = std::move(w);
        res.loglik = std::move(ws.loglik);
        return res;
    }

    /// MAP type detector: argmax_k log p_k + log p(y | k); ties to the smallest index.
    int map_detect(const ComplexSignal& y) const {
        return argmax_posterior(evaluate(y).loglik);
    }

    /// Detect-then-separate plug-in: LMMSE conditioned on the MAP type.
    SeparationResult dts(const ComplexSignal& y) const {
        Workspace ws = evaluate(y);
        const int khat = argmax_posterior(ws.loglik);
        SeparationResult res;
        if (stationary_) {
            res.s_hat = lmmse_from_fft(ws.y_fft, khat);
        } else {
            res.s_hat = cs_dense_ * llt_y_[static_cast<std::size_t>(khat)].solve(y);
        }
        res.k_hat = khat;
        res.posterior = posterior_from_loglik(ws.loglik);
        res.loglik = std::move(ws.loglik);
        return res;
    }

    /// Diversity statistic psi_N(y, k) = (1/N) y^H C_yk^-1 y - 1.
    double psi(const ComplexSignal& y, int k) const {
        check_type(k);
        check_dim(y);
        if (stationary_) {
            Workspace ws = evaluate(y);
            return ws.quad[k] / static_cast<double>(dim()) - 1.0;
        }
        return quad_dense(y, k) / static_cast<double>(dim()) - 1.0;
    }

    /// argmin_k |psi_N(y, k)|; ties to the smallest index.
    int psi_detect(const ComplexSignal& y) const {
        Workspace ws = evaluate(y);
        int best = 0;
        double best_abs = std::numeric_limits<double>::infinity();
        for (int k = 0; k < num_types(); ++k) {
            const double a = std::abs(ws.quad[k] / static_cast<double>(dim()) - 1.0);
            if (a < best_abs) {
                best_abs = a;
                best = k;
            }
        }
        return best;
    }

  private:
    struct Workspace {
        RealVector loglik;
        RealVector quad;        // y^H C_yk^-1 y per type
        ComplexSignal y_fft;    // stationary path only
    };

    Workspace evaluate(const ComplexSignal& y) const {
        check_dim(y);
        const auto kn = num_types();
        Workspace ws;
        ws.quad.resize(kn);
        ws.loglik.resize(kn);
        const double n = static_cast<double>(dim());
        if (stationary_) {
            ws.y_fft = plan_->forward_copy(y);
            RealVector mag = ws.y_fft.cwiseAbs2();
            for (int k = 0; k < kn; ++k)
                ws.quad[k] = (mag.array() / spec_y_[static_cast<std::size_t>(k)].array()).sum() / n;
        } else {
            for (int k = 0; k < kn; ++k) ws.quad[k] = quad_dense(y, k);
        }
        for (int k = 0; k < kn; ++k)
            ws.loglik[k] = -n * std::log(std::numbers::pi) - logdet_y_[static_cast<std::size_t>(k)] -
                           ws.quad[k];
        return ws;
    }

    double quad_dense(const ComplexSignal& y, int k) const {
        // ||L^-1 y||^2 is real by construction, no imaginary residue to police
        return llt_y_[static_cast<std::size_t>(k)]
            .matrixL()
            .solve(y)
            .squaredNorm();
    }

    ComplexSignal lmmse_from_fft(const ComplexSignal& y_fft, int k) const {
        RealVector gain = (spec_s_.array() / spec_y_[static_cast<std::size_t>(k)].array()).matrix();
        ComplexSignal sf = y_fft.cwiseProduct(gain.cast<cdouble>());
        plan_->inverse(sf);
        return sf;
    }

    int argmax_posterior(const RealVector& loglik) const {
        int best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < num_types(); ++k) {
            const double v = log_priors_[k] + loglik[k];
            if (v > best_v) {
                best_v = v;
                best = k;
            }
        }
        return best;
    }

    int check_type(int k) const {
        if (k < 0 || k >= num_types())
            throw InvalidParameterError("MixtureModel: type index out of range");
        return k;
    }

    void check_dim(const ComplexSignal& y) const {
        if (y.size() != dim()) throw InvalidParameterError("MixtureModel: signal dimension mismatch");
    }

    RealVector priors_;
    RealVector log_priors_;
    CovarianceSpec c_s_;
    std::vector<CovarianceSpec> c_b_;
    bool stationary_ = false;
    bool jitter_ = false;

    CMatrix cs_dense_;
    std::vector<Eigen::LLT<CMatrix>> llt_y_;
    std::vector<double> logdet_y_;

    RealVector spec_s_;
    std::vector<RealVector> spec_y_;
    std::shared_ptr<FftPlan> plan_;
};

/// Monte Carlo estimate of E |psi_N(y, probe)| with y drawn under type
/// true_k: the empirical TDC certificate. Matched probe means should
/// shrink toward zero with N; cross-type means should stay bounded away
/// from it (the limiting gap c^2).
inline MonteCarloStat tdc_gap(const MixtureModel& model, int true_k, int probe, std::size_t trials,
                              std::uint64_t seed) {
    if (trials < 30) throw InvalidParameterError("tdc_gap: need at least 30 trials");
    GaussianSampler sampler(model.cov_y(true_k));
    Rng rng(seed);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const ComplexSignal y = sampler.draw(rng);
        const double a = std::abs(model.psi(y, probe));
        sum += a;
        sum2 += a * a;
    }
    const double n = static_cast<double>(trials);
    MonteCarloStat out;
    out.mean = sum / n;
    const double var = std::max(0.0, (sum2 - n * out.mean * out.mean) / (n - 1.0));
    out.stderr_ = std::sqrt(var / n);
    out.trials = trials;
    return out;
}

}  // namespace rfsep
