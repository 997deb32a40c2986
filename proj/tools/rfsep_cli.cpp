// rfsep: command-line front end for the RF source-separation benchmark.
//
// Subcommands: gen (synthetic signals/datasets), learn (fit separators from
// dataset files), sweep (SINR sweep), asymptotics (large-N experiments),
// tdc (temporal-diversity certificate).
//
// Exit codes: 0 success, 2 configuration error, 3 data-format error,
// 4 numerical error, 1 anything else.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "rfsep/config.hpp"
#include "rfsep/dataset.hpp"
#include "rfsep/harness.hpp"
#include "rfsep/report.hpp"
#include "rfsep/serialize.hpp"
#include "rfsep/version.hpp"

namespace fs = std::filesystem;
using rfsep::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::string format = "csv";
    std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_format = true) {
    cmd->add_option("--config", args.config_path, "JSON config file")->required();
    cmd->add_option("--out", args.out_dir, "output directory (default: .)");
    cmd->add_option("--seed", args.seed, "override the config base_seed");
    if (with_format)
        cmd->add_option("--format", args.format, "report format: csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--workers", args.workers, "worker thread count (env RFSEP_WORKERS)");
}

std::size_t resolve_workers(const CommonArgs& args, std::size_t from_config) {
    if (args.workers) return *args.workers;
    if (const char* env = std::getenv("RFSEP_WORKERS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end && *end == '\0') return static_cast<std::size_t>(v);
        std::cerr << "warning: ignoring malformed RFSEP_WORKERS=\"" << env << "\"\n";
    }
    return from_config;
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

void write_manifest(const fs::path& out, const std::string& command, const json& echo,
                    std::uint64_t seed) {
    rfsep::write_text_file(out, rfsep::make_manifest(command, echo, seed).dump(2) + "\n");
}

void warn_regime(const rfsep::ScenarioSpec& scenario, const std::vector<double>& sinr_grid) {
    if (!scenario.snr_db) return;
    for (double s : sinr_grid) {
        rfsep::MixSpec probe{s, scenario.snr_db, true};
        if (auto w = probe.consistency_warning()) {
            std::cerr << "warning: sinr " << s << " dB: " << *w << "\n";
            return;
        }
    }
}

int run_sweep_cmd(const CommonArgs& args) {
    rfsep::SweepConfig cfg = rfsep::parse_sweep_config(rfsep::load_json_file(args.config_path));
    if (args.seed) cfg.base_seed = *args.seed;
    cfg.workers = resolve_workers(args, cfg.workers);
    warn_regime(cfg.scenario, cfg.sinr_grid_db);
    const json echo = rfsep::sweep_config_echo(cfg);

    const rfsep::SweepReport report = rfsep::run_sweep(cfg);
    const fs::path out = prepare_out_dir(args.out_dir);
    fs::path report_path;
    if (args.format == "json") {
        report_path = out / "sweep_report.json";
        rfsep::write_text_file(report_path,
                               rfsep::sweep_report_to_json(report, echo).dump(2) + "\n");
    } else {
        report_path = out / "sweep_report.csv";
        rfsep::write_text_file(report_path, rfsep::sweep_report_csv(report));
    }
    write_manifest(out / "sweep_manifest.json", "sweep", echo, cfg.base_seed);
    std::cout << "sweep: " << report.rows.size() << " rows -> " << report_path.string() << "\n";
    return 0;
}

int run_asymptotics_cmd(const CommonArgs& args) {
    rfsep::AsymptoticsConfig cfg =
        rfsep::parse_asymptotics_config(rfsep::load_json_file(args.config_path));
    if (args.seed) cfg.base_seed = *args.seed;
    cfg.workers = resolve_workers(args, cfg.workers);
    const json echo = rfsep::asymptotics_config_echo(cfg);

    const rfsep::AsymptoticsReport report = rfsep::run_asymptotics(cfg);
    if (!report.tdc_certified)
        std::cerr << "warning: model failed the TDC certificate; report flagged\n";
    const fs::path out = prepare_out_dir(args.out_dir);
    fs::path report_path;
    if (args.format == "json") {
        report_path = out / "asymptotics_report.json";
        rfsep::write_text_file(report_path,
                               rfsep::asymptotics_report_to_json(report, echo).dump(2) + "\n");
    } else {
        report_path = out / "asymptotics_report.csv";
        rfsep::write_text_file(report_path, rfsep::asymptotics_report_csv(report));
    }
    write_manifest(out / "asymptotics_manifest.json", "asymptotics", echo, cfg.base_seed);
    std::cout << "asymptotics: " << report.rows.size() << " grid points, TDC "
              << (report.tdc_certified ? "certified" : "UNCERTIFIED") << " -> "
              << report_path.string() << "\n";
    return 0;
}

int run_tdc_cmd(const CommonArgs& args) {
    rfsep::TdcConfig cfg = rfsep::parse_tdc_config(rfsep::load_json_file(args.config_path));
    if (args.seed) cfg.base_seed = *args.seed;
    const json echo = rfsep::tdc_config_echo(cfg);

    std::vector<rfsep::TdcCertRow> rows;
    bool all_pass = true;
    for (const auto n : cfg.n_grid) {
        rfsep::ResolvedScenario sc = rfsep::resolve_scenario(cfg.scenario, n);
        const auto kn = static_cast<Eigen::Index>(sc.sources.size());
        rfsep::RealVector priors =
            cfg.priors.size() > 0 ? cfg.priors
                                  : rfsep::RealVector::Constant(kn, 1.0 / static_cast<double>(kn));
        rfsep::MixtureModel model(priors, sc.c_s, rfsep::effective_interference(sc, cfg.sinr_db));
        std::size_t idx = 0;
        std::vector<rfsep::MonteCarloStat> matched;
        for (int k = 0; k < model.num_types(); ++k)
            matched.push_back(rfsep::tdc_gap(
                model, k, k, cfg.trials,
                rfsep::derive_trial_seed(cfg.base_seed, "tdc|n" + std::to_string(n), idx++)));
        for (int k = 0; k < model.num_types(); ++k) {
            for (int l = 0; l < model.num_types(); ++l) {
                if (k == l) continue;
                const auto gap = rfsep::tdc_gap(
                    model, k, l, cfg.trials,
                    rfsep::derive_trial_seed(cfg.base_seed, "tdc|n" + std::to_string(n), idx++));
                const auto& base = matched[static_cast<std::size_t>(k)];
                rows.push_back({k, l, n, gap.mean, gap.stderr_, base.mean, base.stderr_,
                                rfsep::tdc_pair_passes(gap, base)});
                all_pass &= rows.back().pass;
            }
        }
    }

    const fs::path out = prepare_out_dir(args.out_dir);
    fs::path report_path;
    if (args.format == "json") {
        report_path = out / "tdc_certificate.json";
        json j{{"kind", "tdc"},
               {"version", rfsep::kVersion},
               {"base_seed", cfg.base_seed},
               {"config", echo},
               {"certified", all_pass},
               {"rows", rfsep::tdc_certificate_to_json(rows)}};
        rfsep::write_text_file(report_path, j.dump(2) + "\n");
    } else {
        report_path = out / "tdc_certificate.csv";
        std::string csv = "true_type,probe,N,mean_abs_psi,stderr,matched_mean,matched_stderr,pass\n";
        for (const auto& r : rows)
            csv += std::to_string(r.true_type) + "," + std::to_string(r.probe) + "," +
                   std::to_string(r.n) + "," + rfsep::format_g17(r.mean) + "," +
                   rfsep::format_g17(r.stderr_) + "," + rfsep::format_g17(r.matched_mean) + "," +
                   rfsep::format_g17(r.matched_stderr) + "," + (r.pass ? "1" : "0") + "\n";
        rfsep::write_text_file(report_path, csv);
    }
    write_manifest(out / "tdc_manifest.json", "tdc", echo, cfg.base_seed);
    std::cout << "tdc: " << rows.size() << " cross pairs, "
              << (all_pass ? "certified" : "UNCERTIFIED") << " -> " << report_path.string() << "\n";
    return 0;
}

int run_gen_cmd(const CommonArgs& args) {
    rfsep::GenConfig cfg = rfsep::parse_gen_config(rfsep::load_json_file(args.config_path));
    if (args.seed) cfg.base_seed = *args.seed;
    const fs::path out = prepare_out_dir(args.out_dir);
    const json config_echo = rfsep::load_json_file(args.config_path);

    switch (cfg.kind) {
        case rfsep::GenConfig::Kind::Dataset: {
            rfsep::ResolvedScenario sc = rfsep::resolve_scenario(cfg.scenario, cfg.n);
            const auto kn = static_cast<Eigen::Index>(sc.sources.size());
            rfsep::RealVector priors = cfg.priors.size() > 0
                                           ? cfg.priors
                                           : rfsep::RealVector::Constant(
                                                 kn, 1.0 / static_cast<double>(kn));
            if (priors.size() != kn)
                throw rfsep::InvalidParameterError("gen: priors/interference count mismatch");

            rfsep::LabeledDataset data;
            data.num_types = static_cast<int>(kn);
            rfsep::MixSpec mix_spec;
            mix_spec.sir_db = cfg.sinr_db;
            mix_spec.snr_db = sc.snr_db;
            std::optional<rfsep::GaussianSampler> soi;
            if (!sc.frame) soi.emplace(sc.c_s);
            for (std::size_t i = 0; i < cfg.count; ++i) {
                rfsep::Rng rng(rfsep::derive_trial_seed(cfg.base_seed, "gen-dataset", i));
                rfsep::LabeledPair p;
                if (sc.frame) {
                    p.s = rfsep::gen_mpsk(*sc.frame, sc.frame->symbols_per_frame, rng).signal;
                } else {
                    p.s = soi->draw(rng);
                }
                auto mixed = rfsep::mix(p.s, sc.sources, priors, mix_spec, rng.next_u64());
                p.y = std::move(mixed.y);
                p.type = mixed.type;
                data.pairs.push_back(std::move(p));
            }
            const fs::path index = rfsep::save_dataset(out, cfg.name, data, true);
            write_manifest(out / (cfg.name + "_manifest.json"), "gen", config_echo, cfg.base_seed);
            std::cout << "gen: dataset of " << cfg.count << " pairs -> " << index.string() << "\n";
            return 0;
        }
        case rfsep::GenConfig::Kind::Recording: {
            if (std::holds_alternative<rfsep::RecordingInterference>(cfg.source))
                throw rfsep::InvalidParameterError(
                    "gen: recording kind needs a covariance-type source");
            rfsep::ScenarioSpec one;
            one.soi = rfsep::GaussianSoi{};
            one.interference = {cfg.source};
            rfsep::ResolvedScenario sc = rfsep::resolve_scenario(one, cfg.n);
            rfsep::GaussianSampler sampler(*sc.base[0]);
            rfsep::ComplexSignal all(static_cast<Eigen::Index>(cfg.count) * cfg.n);
            json frames = json::array();
            for (std::size_t i = 0; i < cfg.count; ++i) {
                rfsep::Rng rng(rfsep::derive_trial_seed(cfg.base_seed, "gen-recording", i));
                all.segment(static_cast<Eigen::Index>(i) * cfg.n, cfg.n) = sampler.draw(rng);
                frames.push_back({static_cast<Eigen::Index>(i) * cfg.n,
                                  static_cast<Eigen::Index>(i + 1) * cfg.n});
            }
            const fs::path data_path = out / (cfg.name + ".f32");
            const fs::path meta_path = out / (cfg.name + ".json");
            rfsep::write_iq_f32(data_path, all);
            json meta{{"name", cfg.name}, {"num_samples", all.size()}, {"frames", frames}};
            rfsep::write_text_file(meta_path, meta.dump(2) + "\n");
            write_manifest(out / (cfg.name + "_manifest.json"), "gen", config_echo, cfg.base_seed);
            std::cout << "gen: " << cfg.count << " recording(s) of " << cfg.n << " samples -> "
                      << data_path.string() << "\n";
            return 0;
        }
        case rfsep::GenConfig::Kind::Soi: {
            auto frame = rfsep::gen_mpsk(cfg.frame, cfg.symbols, cfg.base_seed);
            const fs::path data_path = out / (cfg.name + ".f32");
            rfsep::save_recording(data_path, out / (cfg.name + ".json"), frame.signal, cfg.name);
            json bits = json::array();
            for (auto b : frame.bits) bits.push_back(static_cast<int>(b));
            rfsep::write_text_file(out / (cfg.name + "_bits.json"),
                                   json{{"bits", bits}}.dump() + "\n");
            write_manifest(out / (cfg.name + "_manifest.json"), "gen", config_echo, cfg.base_seed);
            std::cout << "gen: " << cfg.symbols << "-symbol SOI -> " << data_path.string() << "\n";
            return 0;
        }
    }
    return 1;
}

int run_learn_cmd(const CommonArgs& args) {
    rfsep::LearnConfig cfg = rfsep::parse_learn_config(rfsep::load_json_file(args.config_path));
    if (args.seed) cfg.base_seed = *args.seed;
    const rfsep::StoredDataset stored = rfsep::load_dataset(cfg.dataset_index);

    rfsep::LearnedModel model;
    if (cfg.method == "dts") {
        if (!stored.labeled)
            throw rfsep::InvalidParameterError("learn: dts needs a labeled dataset");
        model = rfsep::fit_dts(stored.data, cfg.shrinkage);
    } else if (cfg.method == "pooled") {
        model = rfsep::fit_pooled(rfsep::strip_labels(stored.data), cfg.shrinkage);
    } else {
        const int k = cfg.num_types > 0 ? cfg.num_types : std::max(stored.data.num_types, 1);
        rfsep::ScenarioSpec soi_only;
        soi_only.soi = cfg.soi;
        soi_only.interference = {rfsep::WhiteInterference{}};
        rfsep::ResolvedScenario sc = rfsep::resolve_scenario(soi_only, stored.data.dim());
        if (sc.n != stored.data.dim())
            throw rfsep::InvalidParameterError(
                "learn: SOI covariance length does not match the dataset dimension");
        rfsep::EmOptions em = cfg.em;
        if (cfg.shrinkage >= 0.0) em.shrinkage = cfg.shrinkage;
        model = rfsep::fit_em(rfsep::strip_labels(stored.data), k, sc.c_s, cfg.base_seed, em);
    }

    const fs::path out = prepare_out_dir(args.out_dir);
    const fs::path model_path = out / (cfg.name + ".json");
    rfsep::write_text_file(model_path, rfsep::learned_to_json(model).dump(2) + "\n");
    write_manifest(out / (cfg.name + "_manifest.json"), "learn",
                   rfsep::load_json_file(args.config_path), cfg.base_seed);
    std::cout << "learn: " << cfg.method << " fitted on " << stored.data.pairs.size()
              << " pairs (iterations " << model.diagnostics.iterations << ") -> "
              << model_path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RF single-channel source separation benchmark"};
    app.set_version_flag("--version", rfsep::kVersion);
    app.require_subcommand(1);

    CommonArgs gen_args, learn_args, sweep_args, asym_args, tdc_args;
    CLI::App* gen = app.add_subcommand("gen", "generate synthetic signals and datasets");
    add_common(gen, gen_args, false);
    CLI::App* learn = app.add_subcommand("learn", "fit separators from dataset files");
    add_common(learn, learn_args, false);
    CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo SINR sweep");
    add_common(sweep, sweep_args);
    CLI::App* asym = app.add_subcommand("asymptotics", "large-N detector/MSE experiments");
    add_common(asym, asym_args);
    CLI::App* tdc = app.add_subcommand("tdc", "temporal-diversity certificate only");
    add_common(tdc, tdc_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return run_gen_cmd(gen_args);
        if (learn->parsed()) return run_learn_cmd(learn_args);
        if (sweep->parsed()) return run_sweep_cmd(sweep_args);
        if (asym->parsed()) return run_asymptotics_cmd(asym_args);
        if (tdc->parsed()) return run_tdc_cmd(tdc_args);
    } catch (const rfsep::FormatError& e) {
        std::cerr << "data-format error: " << e.what() << "\n";
        return 3;
    } catch (const rfsep::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const rfsep::InvalidParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
