#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "rfsep/harness.hpp"

namespace rfsep {

/// 17 significant digits: binary64 round-trips exactly, so identical
/// reports serialize to identical bytes.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_field(double v) { return std::isnan(v) ? std::string{} : format_g17(v); }

inline constexpr const char* kReportCsvHeader =
    "method,sinr_db|N,mse_mean,mse_stderr,ber_mean,ber_stderr,trials,flags";

inline std::string sweep_report_csv(const SweepReport& report) {
    std::string out{kReportCsvHeader};
    out += "\n";
    for (const auto& r : report.rows) {
        out += r.method + "," + format_g17(r.sinr_db) + "," + csv_field(r.mse_mean) + "," +
               csv_field(r.mse_stderr) + "," + csv_field(r.ber_mean) + "," +
               csv_field(r.ber_stderr) + "," + std::to_string(r.trials) + "," + r.flags + "\n";
    }
    return out;
}

inline nlohmann::json sweep_row_to_json(const SweepRow& r) {
    nlohmann::json j{{"method", r.method},     {"sinr_db", r.sinr_db},
                     {"mse_mean", r.mse_mean}, {"mse_stderr", r.mse_stderr},
                     {"trials", r.trials},     {"flags", r.flags}};
    if (!std::isnan(r.ber_mean)) {
        j["ber_mean"] = r.ber_mean;
        j["ber_stderr"] = r.ber_stderr;
    }
    return j;
}

inline nlohmann::json sweep_report_to_json(const SweepReport& report,
                                           const nlohmann::json& config_echo) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) rows.push_back(sweep_row_to_json(r));
    return nlohmann::json{{"kind", "sweep"},
                          {"version", report.version},
                          {"base_seed", report.base_seed},
                          {"config", config_echo},
                          {"rows", std::move(rows)}};
}

inline SweepReport sweep_report_from_json(const nlohmann::json& j) {
    SweepReport report;
    report.version = j.at("version").get<std::string>();
    report.base_seed = j.at("base_seed").get<std::uint64_t>();
    for (const auto& rj : j.at("rows")) {
        SweepRow r;
        r.method = rj.at("method").get<std::string>();
        r.sinr_db = rj.at("sinr_db").get<double>();
        r.mse_mean = rj.at("mse_mean").get<double>();
        r.mse_stderr = rj.at("mse_stderr").get<double>();
        r.trials = rj.at("trials").get<std::size_t>();
        r.flags = rj.value("flags", "");
        if (rj.contains("ber_mean")) {
            r.ber_mean = rj["ber_mean"].get<double>();
            r.ber_stderr = rj["ber_stderr"].get<double>();
        }
        report.rows.push_back(std::move(r));
    }
    return report;
}

/// Asymptotics rows use the shared CSV schema: the MSE columns carry the
/// mmse/dts means (and their ratio); detector error rates ride in the
/// ber columns, which hold error probabilities either way.
inline std::string asymptotics_report_csv(const AsymptoticsReport& report) {
    std::string out{kReportCsvHeader};
    out += "\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : report.rows) {
        const std::string n = std::to_string(r.n);
        const std::string t = std::to_string(r.trials);
        auto line = [&](const std::string& method, double m, double ms, double b, double bs,
                        const std::string& flags) {
            out += method + "," + n + "," + csv_field(m) + "," + csv_field(ms) + "," +
                   csv_field(b) + "," + csv_field(bs) + "," + t + "," + flags + "\n";
        };
        line("mmse", r.mse_mmse, r.mse_mmse_stderr, nan, nan, "");
        line("dts", r.mse_dts, r.mse_dts_stderr, nan, nan, "");
        line("mmse-to-dts-ratio", r.ratio, r.ratio_stderr, nan, nan, "");
        line("map-detector", nan, nan, r.map_error, r.map_stderr,
             r.map_errors == 0 ? "err<1/trials" : "");
        line("psi-detector", nan, nan, r.psi_error, r.psi_stderr,
             r.psi_errors == 0 ? "err<1/trials" : "");
    }
    return out;
}

inline nlohmann::json tdc_certificate_to_json(const std::vector<TdcCertRow>& cert) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : cert)
        arr.push_back({{"true_type", c.true_type},
                       {"probe", c.probe},
                       {"n", c.n},
                       {"mean", c.mean},
                       {"stderr", c.stderr_},
                       {"matched_mean", c.matched_mean},
                       {"matched_stderr", c.matched_stderr},
                       {"pass", c.pass}});
    return arr;
}

inline nlohmann::json asymptotics_report_to_json(const AsymptoticsReport& report,
                                                 const nlohmann::json& config_echo) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"n", r.n},
                        {"map_error", r.map_error},
                        {"map_stderr", r.map_stderr},
                        {"map_errors", r.map_errors},
                        {"psi_error", r.psi_error},
                        {"psi_stderr", r.psi_stderr},
                        {"psi_errors", r.psi_errors},
                        {"mse_mmse", r.mse_mmse},
                        {"mse_mmse_stderr", r.mse_mmse_stderr},
                        {"mse_dts", r.mse_dts},
                        {"mse_dts_stderr", r.mse_dts_stderr},
                        {"ratio", r.ratio},
                        {"ratio_stderr", r.ratio_stderr},
                        {"trials", r.trials},
                        {"flags", r.flags}});
    }
    nlohmann::json j{{"kind", "asymptotics"},
                     {"version", report.version},
                     {"base_seed", report.base_seed},
                     {"config", config_echo},
                     {"tdc_certified", report.tdc_certified},
                     {"tdc_certificate", tdc_certificate_to_json(report.certificate)},
                     {"slope_defined", report.slope_defined},
                     {"slope_points", report.slope_points},
                     {"rows", std::move(rows)}};
    if (report.slope_defined) j["fitted_slope"] = report.fitted_slope;
    return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw FormatError("write failure on " + path.string());
}

/// Run manifest: everything needed to reproduce the run byte-for-byte.
inline nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config_echo,
                                    std::uint64_t base_seed) {
    return nlohmann::json{{"command", command},
                          {"config", config_echo},
                          {"base_seed", base_seed},
                          {"version", kVersion}};
}

}  // namespace rfsep
