#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "rfsep/mixture.hpp"
#include "rfsep/rng.hpp"
#include "rfsep/signal.hpp"

namespace rfsep {

struct LabeledPair {
    ComplexSignal y;
    ComplexSignal s;
    int type = 0;
};

/// Mixture-SOI pairs conditioned on interference type.
struct LabeledDataset {
    std::vector<LabeledPair> pairs;
    int num_types = 0;

    Eigen::Index dim() const { return pairs.empty() ? 0 : pairs.front().y.size(); }

    void validate() const {
        if (pairs.empty()) throw InvalidParameterError("LabeledDataset: empty");
        if (num_types < 1) throw InvalidParameterError("LabeledDataset: num_types must be >= 1");
        const Eigen::Index n = pairs.front().y.size();
        for (const auto& p : pairs) {
            if (p.y.size() != n || p.s.size() != n)
                throw InvalidParameterError("LabeledDataset: inconsistent dimensions");
            if (p.type < 0 || p.type >= num_types)
                throw InvalidParameterError("LabeledDataset: type label out of range");
        }
    }
};

/// Mixture-SOI pairs with no type labels.
struct UnlabeledDataset {
    std::vector<std::pair<ComplexSignal, ComplexSignal>> pairs;  // (y, s)

    Eigen::Index dim() const { return pairs.empty() ? 0 : pairs.front().first.size(); }

    void validate() const {
        if (pairs.empty()) throw InvalidParameterError("UnlabeledDataset: empty");
        const Eigen::Index n = pairs.front().first.size();
        for (const auto& [y, s] : pairs)
            if (y.size() != n || s.size() != n)
                throw InvalidParameterError("UnlabeledDataset: inconsistent dimensions");
    }
};

inline UnlabeledDataset strip_labels(const LabeledDataset& data) {
    UnlabeledDataset out;
    out.pairs.reserve(data.pairs.size());
    for (const auto& p : data.pairs) out.pairs.emplace_back(p.y, p.s);
    return out;
}

/// Default shrinkage weight: keeps small-sample covariances invertible and
/// vanishes as the sample count grows.
inline double default_shrinkage(double count) { return 10.0 / (count + 10.0); }

/// Shrunk second-moment estimate (1-l) (1/D) sum z z^H + l (tr/N) I.
inline CMatrix sample_cov(const std::vector<ComplexSignal>& signals, double shrinkage) {
    if (signals.empty()) throw InvalidParameterError("sample_cov: empty input");
    if (shrinkage < 0.0 || shrinkage > 1.0)
        throw InvalidParameterError("sample_cov: shrinkage must be in [0, 1]");
    const Eigen::Index n = signals.front().size();
    CMatrix acc = CMatrix::Zero(n, n);
    for (const auto& z : signals) {
        if (z.size() != n) throw InvalidParameterError("sample_cov: inconsistent dimensions");
        acc.selfadjointView<Eigen::Lower>().rankUpdate(z, 1.0);
    }
    acc /= static_cast<double>(signals.size());
    CMatrix c = acc.selfadjointView<Eigen::Lower>();
    const double mu = c.real().trace() / static_cast<double>(n);
    return (1.0 - shrinkage) * c + shrinkage * mu * CMatrix::Identity(n, n);
}

enum class LearnedKind { PerTypeLinear, PooledLinear, EmMixture };

struct TrainingDiagnostics {
    int iterations = 0;
    int restarts = 0;
    double final_objective = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> loglik_history;
    std::vector<double> param_delta_history;
};

/// A fitted separator: K per-type filters, one pooled filter, or an
/// EM-learned Gaussian mixture that delegates to the analytical estimators.
struct LearnedModel {
    LearnedKind kind = LearnedKind::PooledLinear;
    std::vector<CMatrix> filters;
    std::optional<MixtureModel> em_model;
    TrainingDiagnostics diagnostics;
};

namespace detail {

// W = C_sy C_y^-1, solved from the Cholesky factor of C_y
inline CMatrix wiener_from_moments(const CMatrix& c_sy, const CMatrix& c_y) {
    Eigen::LLT<CMatrix> llt(c_y);
    if (llt.info() != Eigen::Success)
        throw NumericalError("learning: singular sample covariance; increase shrinkage");
    return llt.solve(c_sy.adjoint()).adjoint();
}

struct MomentPair {
    CMatrix c_y;
    CMatrix c_sy;
    std::size_t count = 0;
};

template <typename Iter>
MomentPair accumulate_moments(Iter begin, Iter end, Eigen::Index n, double shrinkage) {
    MomentPair m;
    m.c_y = CMatrix::Zero(n, n);
    m.c_sy = CMatrix::Zero(n, n);
    for (Iter it = begin; it != end; ++it) {
        const ComplexSignal& y = it->first;
        const ComplexSignal& s = it->second;
        m.c_y.template selfadjointView<Eigen::Lower>().rankUpdate(y, 1.0);
        m.c_sy += s * y.adjoint();
        ++m.count;
    }
    const double d = static_cast<double>(m.count);
    CMatrix cy = m.c_y.template selfadjointView<Eigen::Lower>();
    cy /= d;
    m.c_sy /= d;
    const double lam = shrinkage < 0.0 ? default_shrinkage(d) : shrinkage;
    const double mu = cy.real().trace() / static_cast<double>(n);
    m.c_y = (1.0 - lam) * cy + lam * mu * CMatrix::Identity(n, n);
    return m;
}

}  // namespace detail

/// Per-type linear separators W_k = C_sy_k C_y_k^-1 fitted from labeled
/// pairs; the learned analog of a detect-then-separate ensemble.
/// shrinkage < 0 selects the default 10/(D_k + 10).
inline LearnedModel fit_dts(const LabeledDataset& data, double shrinkage = -1.0) {
    data.validate();
    const Eigen::Index n = data.dim();
    LearnedModel model;
    model.kind = LearnedKind::PerTypeLinear;
    model.filters.resize(static_cast<std::size_t>(data.num_types));
    double objective = 0.0;
    for (int k = 0; k < data.num_types; ++k) {
        std::vector<std::pair<ComplexSignal, ComplexSignal>> group;
        for (const auto& p : data.pairs)
            if (p.type == k) group.emplace_back(p.y, p.s);
        if (group.empty())
            throw InvalidParameterError("fit_dts: no samples for type " + std::to_string(k));
        auto m = detail::accumulate_moments(group.begin(), group.end(), n, shrinkage);
        model.filters[static_cast<std::size_t>(k)] = detail::wiener_from_moments(m.c_sy, m.c_y);
        for (const auto& [y, s] : group)
            objective += (s - model.filters[static_cast<std::size_t>(k)] * y).squaredNorm();
    }
    model.diagnostics.iterations = 1;
    model.diagnostics.final_objective = objective / static_cast<double>(data.pairs.size());
    return model;
}

/// Single pooled linear separator fitted on unconditioned mixtures: the
/// minimal-capacity unified analog.
inline LearnedModel fit_pooled(const UnlabeledDataset& data, double shrinkage = -1.0) {
    data.validate();
    const Eigen::Index n = data.dim();
    auto m = detail::accumulate_moments(data.pairs.begin(), data.pairs.end(), n, shrinkage);
    LearnedModel model;
    model.kind = LearnedKind::PooledLinear;
    model.filters.push_back(detail::wiener_from_moments(m.c_sy, m.c_y));
    double objective = 0.0;
    for (const auto& [y, s] : data.pairs) objective += (s - model.filters[0] * y).squaredNorm();
    model.diagnostics.iterations = 1;
    model.diagnostics.final_objective = objective / static_cast<double>(data.pairs.size());
    return model;
}

struct EmOptions {
    int max_iter = 200;
    double tol = 1e-7;       // stop when the total log-likelihood gain drops below
    int retries = 5;         // restarts allowed on component collapse
    double shrinkage = -1.0; // < 0: default 10/(n_k + 10) per component
    double init_jitter = 0.1;
};

namespace detail {

inline LearnedModel run_em(const std::vector<ComplexSignal>& resid, const CovarianceSpec& c_s,
                           std::vector<CMatrix> comps, RealVector priors, const EmOptions& opts) {
    const Eigen::Index n = resid.front().size();
    const auto kn = static_cast<int>(comps.size());
    const double d = static_cast<double>(resid.size());

    TrainingDiagnostics diag;
    RealVector log_priors(kn);
    std::vector<Eigen::LLT<CMatrix>> llt(static_cast<std::size_t>(kn));
    RealVector logdet(kn);

    Eigen::MatrixXd resp(resid.size(), kn);
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        for (int k = 0; k < kn; ++k) {
            llt[static_cast<std::size_t>(k)].compute(comps[static_cast<std::size_t>(k)]);
            if (llt[static_cast<std::size_t>(k)].info() != Eigen::Success)
                throw NumericalError("fit_em: component covariance lost positive definiteness");
            double ld = 0.0;
            for (Eigen::Index j = 0; j < n; ++j)
                ld += 2.0 * std::log(llt[static_cast<std::size_t>(k)].matrixLLT()(j, j).real());
            logdet[k] = ld;
            log_priors[k] = priors[k] > 0.0 ? std::log(priors[k])
                                            : -std::numeric_limits<double>::infinity();
        }

        // E-step: responsibilities and the total log-likelihood
        double loglik = 0.0;
        for (std::size_t i = 0; i < resid.size(); ++i) {
            RealVector t(kn);
            for (int k = 0; k < kn; ++k) {
                const double quad =
                    llt[static_cast<std::size_t>(k)].matrixL().solve(resid[i]).squaredNorm();
                t[k] = log_priors[k] - static_cast<double>(n) * std::log(std::numbers::pi) -
                       logdet[k] - quad;
            }
            const double m = t.maxCoeff();
            double sum = 0.0;
            for (int k = 0; k < kn; ++k) {
                const double w = std::isfinite(t[k]) ? std::exp(t[k] - m) : 0.0;
                resp(static_cast<Eigen::Index>(i), k) = w;
                sum += w;
            }
            resp.row(static_cast<Eigen::Index>(i)) /= sum;
            loglik += m + std::log(sum);
        }
        diag.loglik_history.push_back(loglik);
        diag.iterations = iter + 1;

        // M-step
        double delta = 0.0;
        for (int k = 0; k < kn; ++k) {
            const double nk = resp.col(k).sum();
            if (nk < static_cast<double>(kn))
                throw NumericalError("fit_em: component collapse");
            CMatrix c = CMatrix::Zero(n, n);
            for (std::size_t i = 0; i < resid.size(); ++i)
                c.selfadjointView<Eigen::Lower>().rankUpdate(
                    resid[i], resp(static_cast<Eigen::Index>(i), k));
            CMatrix full = c.selfadjointView<Eigen::Lower>();
            full /= nk;
            const double lam =
                opts.shrinkage < 0.0 ? default_shrinkage(nk) : opts.shrinkage;
            const double mu = full.real().trace() / static_cast<double>(n);
            full = (1.0 - lam) * full + lam * mu * CMatrix::Identity(n, n);
            delta = std::max(delta, (full - comps[static_cast<std::size_t>(k)]).norm() /
                                        std::max(1e-300, comps[static_cast<std::size_t>(k)].norm()));
            comps[static_cast<std::size_t>(k)] = std::move(full);
            const double new_p = nk / d;
            delta = std::max(delta, std::abs(new_p - priors[k]));
            priors[k] = new_p;
        }
        diag.param_delta_history.push_back(delta);

        if (diag.loglik_history.size() >= 2) {
            const double gain = diag.loglik_history.back() -
                                diag.loglik_history[diag.loglik_history.size() - 2];
            if (gain < opts.tol) break;
        }
    }

    priors /= priors.sum();
    std::vector<CovarianceSpec> c_b;
    c_b.reserve(static_cast<std::size_t>(kn));
    for (auto& c : comps) c_b.push_back(CovarianceSpec::dense(std::move(c)));
    LearnedModel model;
    model.kind = LearnedKind::EmMixture;
    model.em_model.emplace(std::move(priors), c_s, std::move(c_b));
    model.diagnostics = std::move(diag);
    model.diagnostics.final_objective = model.diagnostics.loglik_history.back();
    return model;
}

}  // namespace detail

/// EM fit of a K-component zero-mean Gaussian mixture over interference
/// covariances, run on the residuals y - s (the SOI protocol is known, so
/// C_s is supplied rather than learned). Components are initialized by
/// perturbing the pooled residual covariance with random PSD jitter;
/// collapse triggers a reseeded restart.
inline LearnedModel fit_em(const UnlabeledDataset& data, int num_types, const CovarianceSpec& c_s,
                           std::uint64_t seed, const EmOptions& opts = {}) {
    data.validate();
    if (num_types < 1) throw InvalidParameterError("fit_em: num_types must be >= 1");
    if (data.pairs.size() < static_cast<std::size_t>(num_types))
        throw InvalidParameterError("fit_em: need at least K samples");
    const Eigen::Index n = data.dim();
    if (c_s.dim() != n) throw InvalidParameterError("fit_em: C_s dimension mismatch");

    std::vector<ComplexSignal> resid;
    resid.reserve(data.pairs.size());
    for (const auto& [y, s] : data.pairs) resid.push_back(y - s);

    const CMatrix pooled = sample_cov(resid, default_shrinkage(static_cast<double>(resid.size())));
    const double mu = pooled.real().trace() / static_cast<double>(n);

    int restarts = 0;
    for (int attempt = 0;; ++attempt) {
        Rng rng(derive_trial_seed(seed, "em-init", static_cast<std::uint64_t>(attempt)));
        std::vector<CMatrix> comps;
        comps.reserve(static_cast<std::size_t>(num_types));
        for (int k = 0; k < num_types; ++k) {
            CMatrix g(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.cnormal();
            CMatrix jitter = g * g.adjoint() / static_cast<double>(n);
            comps.push_back(pooled + opts.init_jitter * mu * jitter);
        }
        RealVector priors = RealVector::Constant(num_types, 1.0 / num_types);
        try {
            LearnedModel model = detail::run_em(resid, c_s, std::move(comps), std::move(priors), opts);
            model.diagnostics.restarts = restarts;
            return model;
        } catch (const NumericalError&) {
            if (++restarts > opts.retries) throw;
        }
    }
}

/// EM started from an explicit mixture (e.g. the generating model, for
/// fixed-point checks); no restarts.
inline LearnedModel fit_em(const UnlabeledDataset& data, const MixtureModel& init,
                           const EmOptions& opts = {}) {
    data.validate();
    const Eigen::Index n = data.dim();
    if (init.dim() != n) throw InvalidParameterError("fit_em: init model dimension mismatch");
    std::vector<ComplexSignal> resid;
    resid.reserve(data.pairs.size());
    for (const auto& [y, s] : data.pairs) resid.push_back(y - s);
    std::vector<CMatrix> comps;
    for (int k = 0; k < init.num_types(); ++k) comps.push_back(init.interference_cov(k).to_dense());
    return detail::run_em(resid, init.soi_cov(), std::move(comps), init.priors(), opts);
}

/// Applies a learned separator. Per-type filters need an externally
/// supplied type (oracle or detector); the EM mixture delegates to the
/// analytical MMSE (or DTS when use_dts is set) on the learned model.
inline SeparationResult apply_learned(const ComplexSignal& y, const LearnedModel& model,
                                      std::optional<int> type = std::nullopt, bool use_dts = false) {
    switch (model.kind) {
        case LearnedKind::PerTypeLinear: {
            if (!type)
                throw MissingTypeError("apply_learned: per-type model needs a type index");
            if (*type < 0 || *type >= static_cast<int>(model.filters.size()))
                throw InvalidParameterError("apply_learned: type index out of range");
            const CMatrix& w = model.filters[static_cast<std::size_t>(*type)];
            if (w.cols() != y.size())
                throw InvalidParameterError("apply_learned: dimension mismatch");
            SeparationResult res;
            res.s_hat = w * y;
            res.k_hat = *type;
            return res;
        }
        case LearnedKind::PooledLinear: {
            const CMatrix& w = model.filters.front();
            if (w.cols() != y.size())
                throw InvalidParameterError("apply_learned: dimension mismatch");
            SeparationResult res;
            res.s_hat = w * y;
            return res;
        }
        case LearnedKind::EmMixture: {
            if (!model.em_model) throw InvalidParameterError("apply_learned: missing EM model");
            return use_dts ? model.em_model->dts(y) : model.em_model->mmse(y);
        }
    }
    throw InvalidParameterError("apply_learned: unknown model kind");
}

}  // namespace rfsep
