#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "rfsep/harness.hpp"
#include "rfsep/serialize.hpp"

namespace rfsep {

namespace cfg {

/// Strict object view: every key must be consumed, unknown keys are
/// rejected by name.
class Obj {
  public:
    Obj(const nlohmann::json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
        if (!j_.is_object()) throw InvalidParameterError(ctx_ + ": expected a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const nlohmann::json& at(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key))
            throw InvalidParameterError(ctx_ + ": missing required key \"" + key + "\"");
        return j_[key];
    }

    const nlohmann::json* find(const std::string& key) {
        used_.insert(key);
        return j_.contains(key) ? &j_[key] : nullptr;
    }

    double number(const std::string& key, double fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (!v->is_number()) throw type_error(key, "a number");
        return v->get<double>();
    }

    std::uint64_t uint(const std::string& key, std::uint64_t fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
            throw type_error(key, "an unsigned integer");
        return v->get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (!v->is_boolean()) throw type_error(key, "a boolean");
        return v->get<bool>();
    }

    std::string str(const std::string& key, const std::string& fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (!v->is_string()) throw type_error(key, "a string");
        return v->get<std::string>();
    }

    std::string required_str(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_string()) throw type_error(key, "a string");
        return v.get<std::string>();
    }

    std::vector<double> number_list(const std::string& key, std::vector<double> fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (!v->is_array()) throw type_error(key, "an array of numbers");
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number()) throw type_error(key, "an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    InvalidParameterError type_error(const std::string& key, const std::string& expected) const {
        return InvalidParameterError(ctx_ + ": key \"" + key + "\" expects " + expected);
    }

    const std::string& context() const { return ctx_; }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            (void)value;
            if (!used_.count(key))
                throw InvalidParameterError(ctx_ + ": unknown key \"" + key + "\"");
        }
    }

  private:
    const nlohmann::json& j_;
    std::string ctx_;
    std::set<std::string> used_;
};

inline RealVector priors_from_json(const nlohmann::json& j, const std::string& ctx) {
    if (!j.is_array() || j.empty())
        throw InvalidParameterError(ctx + ": expects a non-empty array of probabilities");
    RealVector p(static_cast<Eigen::Index>(j.size()));
    double sum = 0.0;
    Eigen::Index i = 0;
    for (const auto& e : j) {
        if (!e.is_number()) throw InvalidParameterError(ctx + ": entries must be numbers");
        p[i] = e.get<double>();
        if (p[i] < 0.0 || p[i] > 1.0)
            throw InvalidParameterError(ctx + ": entries must lie in [0, 1]");
        sum += p[i];
        ++i;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InvalidParameterError(ctx + ": must sum to 1");
    return p;
}

}  // namespace cfg

inline FrameSpec parse_frame(const nlohmann::json& j, const std::string& ctx) {
    cfg::Obj o(j, ctx);
    FrameSpec f;
    f.mod_order = static_cast<int>(o.uint("mod_order", static_cast<std::uint64_t>(f.mod_order)));
    f.symbols_per_frame =
        static_cast<int>(o.uint("symbols_per_frame", static_cast<std::uint64_t>(f.symbols_per_frame)));
    f.sps = static_cast<int>(o.uint("sps", static_cast<std::uint64_t>(f.sps)));
    f.rolloff = o.number("rolloff", f.rolloff);
    f.span_symbols = static_cast<int>(o.uint("span_symbols", static_cast<std::uint64_t>(f.span_symbols)));
    f.offset_samples =
        static_cast<int>(o.uint("offset_samples", static_cast<std::uint64_t>(f.offset_samples)));
    o.finish();
    f.validate();
    return f;
}

inline nlohmann::json frame_echo(const FrameSpec& f) {
    return {{"mod_order", f.mod_order},       {"symbols_per_frame", f.symbols_per_frame},
            {"sps", f.sps},                   {"rolloff", f.rolloff},
            {"span_symbols", f.span_symbols}, {"offset_samples", f.offset_samples}};
}

inline SoiSpec parse_soi(const nlohmann::json& j, const std::string& ctx) {
    cfg::Obj o(j, ctx);
    const std::string kind = o.required_str("kind");
    if (kind == "gaussian-white") {
        o.finish();
        return GaussianSoi{};
    }
    if (kind == "gaussian-ar") {
        GaussianSoi g;
        g.ar_coeff = o.number("coeff", 0.5);
        o.finish();
        return g;
    }
    if (kind == "mpsk") {
        MpskSoi m;
        if (const auto* f = o.find("frame")) m.frame = parse_frame(*f, ctx + ".frame");
        o.finish();
        return m;
    }
    throw InvalidParameterError(ctx + ": unknown SOI kind \"" + kind + "\"");
}

inline nlohmann::json soi_echo(const SoiSpec& soi) {
    if (const auto* g = std::get_if<GaussianSoi>(&soi)) {
        if (g->ar_coeff) return {{"kind", "gaussian-ar"}, {"coeff", *g->ar_coeff}};
        return {{"kind", "gaussian-white"}};
    }
    const auto& m = std::get<MpskSoi>(soi);
    return {{"kind", "mpsk"}, {"frame", frame_echo(m.frame)}};
}

inline InterferenceSpec parse_interference(const nlohmann::json& j, const std::string& ctx) {
    cfg::Obj o(j, ctx);
    const std::string kind = o.required_str("kind");
    if (kind == "ar") {
        ArInterference a;
        a.coeff = o.number("coeff", 0.5);
        o.finish();
        return a;
    }
    if (kind == "white") {
        o.finish();
        return WhiteInterference{};
    }
    if (kind == "acov") {
        AcovInterference a;
        a.acov = complex_vector_from_json(o.at("acov"), ctx + ".acov");
        o.finish();
        return a;
    }
    if (kind == "recording") {
        RecordingInterference r;
        r.data_path = o.required_str("data");
        r.meta_path = o.required_str("meta");
        o.finish();
        return r;
    }
    throw InvalidParameterError(ctx + ": unknown interference kind \"" + kind + "\"");
}

inline nlohmann::json interference_echo(const InterferenceSpec& spec) {
    if (const auto* a = std::get_if<ArInterference>(&spec))
        return {{"kind", "ar"}, {"coeff", a->coeff}};
    if (std::holds_alternative<WhiteInterference>(spec)) return {{"kind", "white"}};
    if (const auto* a = std::get_if<AcovInterference>(&spec))
        return {{"kind", "acov"}, {"acov", complex_vector_to_json(a->acov)}};
    const auto& r = std::get<RecordingInterference>(spec);
    return {{"kind", "recording"}, {"data", r.data_path}, {"meta", r.meta_path}};
}

inline ScenarioSpec parse_scenario(const nlohmann::json& j, const std::string& ctx) {
    cfg::Obj o(j, ctx);
    ScenarioSpec sc;
    if (const auto* s = o.find("soi")) sc.soi = parse_soi(*s, ctx + ".soi");
    if (const auto* iv = o.find("interference")) {
        if (!iv->is_array() || iv->empty())
            throw InvalidParameterError(ctx + ": \"interference\" expects a non-empty array");
        sc.interference.clear();
        std::size_t idx = 0;
        for (const auto& e : *iv)
            sc.interference.push_back(
                parse_interference(e, ctx + ".interference[" + std::to_string(idx++) + "]"));
    }
    if (const auto* s = o.find("snr_db")) {
        if (!s->is_number()) throw o.type_error("snr_db", "a number");
        sc.snr_db = s->get<double>();
    }
    o.finish();
    return sc;
}

inline nlohmann::json scenario_echo(const ScenarioSpec& sc) {
    nlohmann::json iv = nlohmann::json::array();
    for (const auto& e : sc.interference) iv.push_back(interference_echo(e));
    nlohmann::json j{{"soi", soi_echo(sc.soi)}, {"interference", std::move(iv)}};
    if (sc.snr_db) j["snr_db"] = *sc.snr_db;
    return j;
}

inline EmOptions parse_em_options(const nlohmann::json& j, const std::string& ctx) {
    cfg::Obj o(j, ctx);
    EmOptions em;
    em.max_iter = static_cast<int>(o.uint("max_iter", static_cast<std::uint64_t>(em.max_iter)));
    em.tol = o.number("tol", em.tol);
    em.retries = static_cast<int>(o.uint("retries", static_cast<std::uint64_t>(em.retries)));
    em.shrinkage = o.number("shrinkage", em.shrinkage);
    em.init_jitter = o.number("init_jitter", em.init_jitter);
    o.finish();
    return em;
}

inline nlohmann::json em_echo(const EmOptions& em) {
    return {{"max_iter", em.max_iter},
            {"tol", em.tol},
            {"retries", em.retries},
            {"shrinkage", em.shrinkage},
            {"init_jitter", em.init_jitter}};
}

// ---------------------------------------------------------------------------

inline SweepConfig parse_sweep_config(const nlohmann::json& j) {
    cfg::Obj o(j, "sweep config");
    SweepConfig c;
    c.base_seed = o.uint("base_seed", 0);
    c.sinr_grid_db = o.number_list("sinr_grid_db", c.sinr_grid_db);
    c.trials = o.uint("trials", c.trials);
    c.n = static_cast<Eigen::Index>(o.uint("n", 0));
    c.train_size = o.uint("train_size", c.train_size);
    c.workers = o.uint("workers", 0);
    if (const auto* sc = o.find("scenario")) c.scenario = parse_scenario(*sc, "scenario");
    if (const auto* p = o.find("train_priors"))
        c.train_priors = cfg::priors_from_json(*p, "train_priors");
    if (const auto* tp = o.find("test_priors")) {
        if (!tp->is_array() || tp->empty())
            throw InvalidParameterError("test_priors: expects a non-empty array of prior vectors");
        for (const auto& e : *tp) c.test_priors.push_back(cfg::priors_from_json(e, "test_priors"));
    }
    if (const auto* m = o.find("methods")) {
        if (!m->is_array() || m->empty())
            throw InvalidParameterError("methods: expects a non-empty array of method names");
        c.methods.clear();
        for (const auto& e : *m) {
            if (!e.is_string()) throw InvalidParameterError("methods: entries must be strings");
            c.methods.push_back(method_from_name(e.get<std::string>()));
        }
    }
    if (const auto* em = o.find("em")) c.em = parse_em_options(*em, "em");
    o.finish();
    return c;
}

inline nlohmann::json sweep_config_echo(const SweepConfig& c) {
    ResolvedScenario sc = resolve_scenario(c.scenario, c.n > 0 ? c.n : 1);
    const auto kn = static_cast<Eigen::Index>(sc.sources.size());
    RealVector train_p = c.train_priors.size() > 0
                             ? c.train_priors
                             : RealVector::Constant(kn, 1.0 / static_cast<double>(kn));
    nlohmann::json tps = nlohmann::json::array();
    if (c.test_priors.empty()) {
        tps.push_back(std::vector<double>(train_p.data(), train_p.data() + train_p.size()));
    } else {
        for (const auto& p : c.test_priors)
            tps.push_back(std::vector<double>(p.data(), p.data() + p.size()));
    }
    nlohmann::json methods = nlohmann::json::array();
    for (Method m : c.methods) methods.push_back(method_name(m));
    return nlohmann::json{
        {"base_seed", c.base_seed},
        {"sinr_grid_db", c.sinr_grid_db},
        {"trials", c.trials},
        {"n", sc.n},
        {"train_size", c.train_size},
        {"workers", c.workers},
        {"scenario", scenario_echo(c.scenario)},
        {"train_priors", std::vector<double>(train_p.data(), train_p.data() + train_p.size())},
        {"test_priors", std::move(tps)},
        {"methods", std::move(methods)},
        {"em", em_echo(c.em)}};
}

inline AsymptoticsConfig parse_asymptotics_config(const nlohmann::json& j) {
    cfg::Obj o(j, "asymptotics config");
    AsymptoticsConfig c;
    c.base_seed = o.uint("base_seed", 0);
    c.trials = o.uint("trials", c.trials);
    c.sinr_db = o.number("sinr_db", c.sinr_db);
    c.workers = o.uint("workers", 0);
    c.tdc_trials = o.uint("tdc_trials", c.tdc_trials);
    c.min_errors_for_slope = o.uint("min_errors_for_slope", c.min_errors_for_slope);
    if (const auto* g = o.find("n_grid")) {
        if (!g->is_array() || g->empty())
            throw InvalidParameterError("n_grid: expects a non-empty array of lengths");
        c.n_grid.clear();
        for (const auto& e : *g) {
            if (!e.is_number_integer() || e.get<std::int64_t>() < 1)
                throw InvalidParameterError("n_grid: entries must be integers >= 1");
            c.n_grid.push_back(e.get<Eigen::Index>());
        }
    }
    if (const auto* sc = o.find("scenario")) c.scenario = parse_scenario(*sc, "scenario");
    if (const auto* p = o.find("priors")) c.priors = cfg::priors_from_json(*p, "priors");
    o.finish();
    return c;
}

inline nlohmann::json asymptotics_config_echo(const AsymptoticsConfig& c) {
    ResolvedScenario sc = resolve_scenario(c.scenario, c.n_grid.front());
    const auto kn = static_cast<Eigen::Index>(sc.sources.size());
    RealVector priors = c.priors.size() > 0
                            ? c.priors
                            : RealVector::Constant(kn, 1.0 / static_cast<double>(kn));
    return nlohmann::json{
        {"base_seed", c.base_seed},
        {"n_grid", c.n_grid},
        {"trials", c.trials},
        {"sinr_db", c.sinr_db},
        {"workers", c.workers},
        {"tdc_trials", c.tdc_trials},
        {"min_errors_for_slope", c.min_errors_for_slope},
        {"scenario", scenario_echo(c.scenario)},
        {"priors", std::vector<double>(priors.data(), priors.data() + priors.size())}};
}

struct TdcConfig {
    ScenarioSpec scenario{GaussianSoi{}, {ArInterference{0.5}, ArInterference{0.95}}, std::nullopt};
    RealVector priors;
    std::vector<Eigen::Index> n_grid = {64, 256, 1024};
    std::size_t trials = 2000;
    double sinr_db = 0.0;
    std::uint64_t base_seed = 0;
};

inline TdcConfig parse_tdc_config(const nlohmann::json& j) {
    cfg::Obj o(j, "tdc config");
    TdcConfig c;
    c.base_seed = o.uint("base_seed", 0);
    c.trials = o.uint("trials", c.trials);
    c.sinr_db = o.number("sinr_db", c.sinr_db);
    if (const auto* g = o.find("n_grid")) {
        c.n_grid.clear();
        for (const auto& e : *g) c.n_grid.push_back(e.get<Eigen::Index>());
        if (c.n_grid.empty()) throw InvalidParameterError("n_grid: must be non-empty");
    }
    if (const auto* sc = o.find("scenario")) c.scenario = parse_scenario(*sc, "scenario");
    if (const auto* p = o.find("priors")) c.priors = cfg::priors_from_json(*p, "priors");
    o.finish();
    return c;
}

inline nlohmann::json tdc_config_echo(const TdcConfig& c) {
    nlohmann::json j{{"base_seed", c.base_seed},
                     {"n_grid", c.n_grid},
                     {"trials", c.trials},
                     {"sinr_db", c.sinr_db},
                     {"scenario", scenario_echo(c.scenario)}};
    if (c.priors.size() > 0)
        j["priors"] = std::vector<double>(c.priors.data(), c.priors.data() + c.priors.size());
    return j;
}

struct GenConfig {
    enum class Kind { Dataset, Recording, Soi } kind = Kind::Dataset;
    ScenarioSpec scenario;
    RealVector priors;
    double sinr_db = 0.0;
    Eigen::Index n = 0;
    std::size_t count = 1000;
    std::string name = "out";
    // recording kind
    InterferenceSpec source = ArInterference{0.5};
    // soi kind
    FrameSpec frame;
    Eigen::Index symbols = 0;
    std::uint64_t base_seed = 0;
};

inline GenConfig parse_gen_config(const nlohmann::json& j) {
    cfg::Obj o(j, "gen config");
    GenConfig c;
    const std::string kind = o.required_str("kind");
    c.base_seed = o.uint("base_seed", 0);
    c.name = o.str("name", c.name);
    if (kind == "dataset") {
        c.kind = GenConfig::Kind::Dataset;
        if (const auto* sc = o.find("scenario")) c.scenario = parse_scenario(*sc, "scenario");
        if (const auto* p = o.find("priors")) c.priors = cfg::priors_from_json(*p, "priors");
        c.sinr_db = o.number("sinr_db", 0.0);
        c.n = static_cast<Eigen::Index>(o.uint("n", 0));
        c.count = o.uint("count", c.count);
        if (c.count < 1) throw InvalidParameterError("gen config: count must be >= 1");
    } else if (kind == "recording") {
        c.kind = GenConfig::Kind::Recording;
        if (const auto* s = o.find("source")) c.source = parse_interference(*s, "source");
        c.n = static_cast<Eigen::Index>(o.uint("n", 16384));
        c.count = o.uint("count", 1);
        if (c.n < 1 || c.count < 1)
            throw InvalidParameterError("gen config: n and count must be >= 1");
    } else if (kind == "soi") {
        c.kind = GenConfig::Kind::Soi;
        if (const auto* f = o.find("frame")) c.frame = parse_frame(*f, "frame");
        c.symbols = static_cast<Eigen::Index>(o.uint("symbols", 0));
        if (c.symbols < 1) c.symbols = c.frame.symbols_per_frame;
    } else {
        throw InvalidParameterError("gen config: unknown kind \"" + kind + "\"");
    }
    o.finish();
    return c;
}

struct LearnConfig {
    std::filesystem::path dataset_index;
    std::string method = "pooled";  // dts | pooled | em
    double shrinkage = -1.0;
    EmOptions em;
    SoiSpec soi = GaussianSoi{};  // C_s for the em method
    int num_types = 0;            // em component count; 0: take it from the dataset
    std::string name = "model";
    std::uint64_t base_seed = 0;
};

inline LearnConfig parse_learn_config(const nlohmann::json& j) {
    cfg::Obj o(j, "learn config");
    LearnConfig c;
    c.dataset_index = o.required_str("dataset_index");
    c.method = o.str("method", c.method);
    if (c.method != "dts" && c.method != "pooled" && c.method != "em")
        throw InvalidParameterError("learn config: method must be one of dts, pooled, em");
    c.shrinkage = o.number("shrinkage", c.shrinkage);
    c.num_types = static_cast<int>(o.uint("num_types", 0));
    c.name = o.str("name", c.name);
    c.base_seed = o.uint("base_seed", 0);
    if (const auto* em = o.find("em")) c.em = parse_em_options(*em, "em");
    if (const auto* s = o.find("soi")) c.soi = parse_soi(*s, "soi");
    o.finish();
    return c;
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config file: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("config " + path.string() + ": " + e.what());
    }
}

}  // namespace rfsep
