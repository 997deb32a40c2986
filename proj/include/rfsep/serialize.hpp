#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "rfsep/covariance.hpp"
#include "rfsep/learning.hpp"
#include "rfsep/mixture.hpp"
#include "rfsep/signal.hpp"

namespace rfsep {

using json = nlohmann::json;

inline json complex_vector_to_json(const ComplexSignal& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back({v[i].real(), v[i].imag()});
    return arr;
}

inline ComplexSignal complex_vector_from_json(const json& arr, const std::string& what) {
    if (!arr.is_array()) throw FormatError(what + ": expected an array of [re, im] pairs");
    ComplexSignal v(static_cast<Eigen::Index>(arr.size()));
    Eigen::Index i = 0;
    for (const auto& e : arr) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw FormatError(what + ": entry " + std::to_string(i) + " is not an [re, im] pair");
        v[i++] = cdouble(e[0].get<double>(), e[1].get<double>());
    }
    return v;
}

inline json covariance_to_json(const CovarianceSpec& spec) {
    json j;
    switch (spec.form()) {
        case CovarianceSpec::Form::Dense: {
            j["form"] = "dense";
            j["dim"] = spec.dim();
            json entries = json::array();
            const CMatrix& c = spec.matrix();
            for (Eigen::Index r = 0; r < c.rows(); ++r)
                for (Eigen::Index col = 0; col < c.cols(); ++col)
                    entries.push_back({c(r, col).real(), c(r, col).imag()});
            j["entries"] = std::move(entries);
            break;
        }
        case CovarianceSpec::Form::Toeplitz:
            j["form"] = "stationary";
            j["dim"] = spec.dim();
            j["acov"] = complex_vector_to_json(spec.acov());
            break;
        case CovarianceSpec::Form::Circulant:
            j["form"] = "stationary";
            j["dim"] = spec.dim();
            j["acov"] = complex_vector_to_json(spec.acov());
            j["circulant"] = true;
            break;
    }
    return j;
}

inline CovarianceSpec covariance_from_json(const json& j) {
    if (!j.is_object() || !j.contains("form"))
        throw FormatError("covariance: expected an object with a \"form\" field");
    const std::string form = j["form"].get<std::string>();
    if (form == "dense") {
        const auto dim = j.at("dim").get<Eigen::Index>();
        if (dim < 1) throw FormatError("covariance: dim must be >= 1");
        const auto& entries = j.at("entries");
        if (!entries.is_array() || static_cast<Eigen::Index>(entries.size()) != dim * dim)
            throw FormatError("covariance: dense entry count must equal dim^2 (row-major)");
        CMatrix c(dim, dim);
        Eigen::Index idx = 0;
        for (const auto& e : entries) {
            if (!e.is_array() || e.size() != 2)
                throw FormatError("covariance: dense entries must be [re, im] pairs");
            c(idx / dim, idx % dim) = cdouble(e[0].get<double>(), e[1].get<double>());
            ++idx;
        }
        return CovarianceSpec::dense(std::move(c));
    }
    if (form == "stationary") {
        ComplexSignal acov = complex_vector_from_json(j.at("acov"), "covariance acov");
        const auto dim = j.contains("dim") ? j.at("dim").get<Eigen::Index>() : acov.size();
        if (j.value("circulant", false)) {
            if (acov.size() != dim)
                throw FormatError("covariance: circulant acov length must equal dim");
            return CovarianceSpec::circulant(std::move(acov));
        }
        return CovarianceSpec::toeplitz(std::move(acov), dim);
    }
    throw FormatError("covariance: unknown form \"" + form + "\"");
}

inline json mixture_to_json(const MixtureModel& model) {
    json j;
    j["K"] = model.num_types();
    json priors = json::array();
    for (Eigen::Index i = 0; i < model.priors().size(); ++i) priors.push_back(model.priors()[i]);
    j["priors"] = std::move(priors);
    j["c_s"] = covariance_to_json(model.soi_cov());
    json cb = json::array();
    for (int k = 0; k < model.num_types(); ++k) cb.push_back(covariance_to_json(model.interference_cov(k)));
    j["c_b"] = std::move(cb);
    return j;
}

inline MixtureModel mixture_from_json(const json& j) {
    if (!j.is_object()) throw FormatError("mixture model: expected an object");
    const auto k = j.at("K").get<int>();
    const auto& pj = j.at("priors");
    if (!pj.is_array() || static_cast<int>(pj.size()) != k)
        throw FormatError("mixture model: priors length must equal K");
    RealVector priors(k);
    for (int i = 0; i < k; ++i) priors[i] = pj[static_cast<std::size_t>(i)].get<double>();
    CovarianceSpec c_s = covariance_from_json(j.at("c_s"));
    const auto& cbj = j.at("c_b");
    if (!cbj.is_array() || static_cast<int>(cbj.size()) != k)
        throw FormatError("mixture model: c_b length must equal K");
    std::vector<CovarianceSpec> c_b;
    c_b.reserve(static_cast<std::size_t>(k));
    for (const auto& e : cbj) c_b.push_back(covariance_from_json(e));
    try {
        return MixtureModel(std::move(priors), std::move(c_s), std::move(c_b));
    } catch (const InvalidParameterError& e) {
        throw FormatError(std::string("mixture model: ") + e.what());
    }
}

inline json filter_to_json(const CMatrix& w) {
    json j;
    j["dim"] = w.rows();
    json entries = json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) entries.push_back({w(r, c).real(), w(r, c).imag()});
    j["entries"] = std::move(entries);
    return j;
}

inline CMatrix filter_from_json(const json& j) {
    const auto dim = j.at("dim").get<Eigen::Index>();
    const auto& entries = j.at("entries");
    if (!entries.is_array() || static_cast<Eigen::Index>(entries.size()) != dim * dim)
        throw FormatError("filter: entry count must equal dim^2 (row-major)");
    CMatrix w(dim, dim);
    Eigen::Index idx = 0;
    for (const auto& e : entries) {
        w(idx / dim, idx % dim) = cdouble(e[0].get<double>(), e[1].get<double>());
        ++idx;
    }
    return w;
}

inline json learned_to_json(const LearnedModel& model) {
    json j;
    switch (model.kind) {
        case LearnedKind::PerTypeLinear:
            j["kind"] = "per-type-linear";
            break;
        case LearnedKind::PooledLinear:
            j["kind"] = "pooled-linear";
            break;
        case LearnedKind::EmMixture:
            j["kind"] = "em-mixture";
            break;
    }
    if (!model.filters.empty()) {
        json filters = json::array();
        for (const auto& w : model.filters) filters.push_back(filter_to_json(w));
        j["filters"] = std::move(filters);
    }
    if (model.em_model) j["model"] = mixture_to_json(*model.em_model);
    json diag = {{"iterations", model.diagnostics.iterations},
                 {"restarts", model.diagnostics.restarts},
                 {"loglik_history", model.diagnostics.loglik_history}};
    if (std::isfinite(model.diagnostics.final_objective))
        diag["final_objective"] = model.diagnostics.final_objective;
    j["diagnostics"] = std::move(diag);
    return j;
}

inline LearnedModel learned_from_json(const json& j) {
    LearnedModel model;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "per-type-linear")
        model.kind = LearnedKind::PerTypeLinear;
    else if (kind == "pooled-linear")
        model.kind = LearnedKind::PooledLinear;
    else if (kind == "em-mixture")
        model.kind = LearnedKind::EmMixture;
    else
        throw FormatError("learned model: unknown kind \"" + kind + "\"");
    if (j.contains("filters"))
        for (const auto& f : j["filters"]) model.filters.push_back(filter_from_json(f));
    if (model.kind == LearnedKind::EmMixture) model.em_model.emplace(mixture_from_json(j.at("model")));
    if (j.contains("diagnostics")) {
        const auto& d = j["diagnostics"];
        model.diagnostics.iterations = d.value("iterations", 0);
        model.diagnostics.restarts = d.value("restarts", 0);
        if (d.contains("final_objective") && d["final_objective"].is_number())
            model.diagnostics.final_objective = d["final_objective"].get<double>();
        if (d.contains("loglik_history"))
            model.diagnostics.loglik_history = d["loglik_history"].get<std::vector<double>>();
    }
    return model;
}

}  // namespace rfsep
