#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "rfsep/learning.hpp"
#include "rfsep/recording.hpp"

namespace rfsep {

struct StoredDataset {
    LabeledDataset data;
    bool labeled = false;
};

/// Dataset layout: one raw I/Q file per signal role (mixtures and SOIs as
/// concatenated length-N records) plus a JSON index.
inline std::filesystem::path save_dataset(const std::filesystem::path& dir, const std::string& name,
                                          const LabeledDataset& data, bool with_labels) {
    data.validate();
    const Eigen::Index n = data.dim();
    const auto d = data.pairs.size();
    ComplexSignal ys(static_cast<Eigen::Index>(d) * n), ss(static_cast<Eigen::Index>(d) * n);
    for (std::size_t i = 0; i < d; ++i) {
        ys.segment(static_cast<Eigen::Index>(i) * n, n) = data.pairs[i].y;
        ss.segment(static_cast<Eigen::Index>(i) * n, n) = data.pairs[i].s;
    }
    std::filesystem::create_directories(dir);
    const std::string y_file = name + "_y.f32";
    const std::string s_file = name + "_s.f32";
    write_iq_f32(dir / y_file, ys);
    write_iq_f32(dir / s_file, ss);

    nlohmann::json index{{"name", name},
                         {"dim", n},
                         {"count", d},
                         {"num_types", data.num_types},
                         {"y_file", y_file},
                         {"s_file", s_file}};
    if (with_labels) {
        nlohmann::json types = nlohmann::json::array();
        for (const auto& p : data.pairs) types.push_back(p.type);
        index["types"] = std::move(types);
    }
    const std::filesystem::path index_path = dir / (name + "_index.json");
    std::ofstream out(index_path, std::ios::trunc);
    if (!out) throw FormatError("cannot write dataset index: " + index_path.string());
    out << index.dump(2) << "\n";
    return index_path;
}

inline StoredDataset load_dataset(const std::filesystem::path& index_path) {
    std::ifstream in(index_path);
    if (!in) throw FormatError("cannot open dataset index: " + index_path.string());
    nlohmann::json index;
    try {
        index = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("dataset index " + index_path.string() + ": " + e.what());
    }
    StoredDataset out;
    const auto n = index.at("dim").get<Eigen::Index>();
    const auto d = index.at("count").get<std::size_t>();
    if (n < 1 || d < 1) throw FormatError("dataset index: dim and count must be >= 1");
    out.data.num_types = index.value("num_types", 1);

    const auto dir = index_path.parent_path();
    const ComplexSignal ys = read_iq_f32(dir / index.at("y_file").get<std::string>());
    const ComplexSignal ss = read_iq_f32(dir / index.at("s_file").get<std::string>());
    if (ys.size() != static_cast<Eigen::Index>(d) * n || ss.size() != static_cast<Eigen::Index>(d) * n)
        throw FormatError("dataset " + index_path.string() +
                          ": file sizes do not match dim*count");

    out.labeled = index.contains("types");
    std::vector<int> types;
    if (out.labeled) {
        types = index["types"].get<std::vector<int>>();
        if (types.size() != d) throw FormatError("dataset index: types length must equal count");
    }
    out.data.pairs.reserve(d);
    for (std::size_t i = 0; i < d; ++i) {
        LabeledPair p;
        p.y = ys.segment(static_cast<Eigen::Index>(i) * n, n);
        p.s = ss.segment(static_cast<Eigen::Index>(i) * n, n);
        p.type = out.labeled ? types[i] : 0;
        out.data.pairs.push_back(std::move(p));
    }
    out.data.validate();
    return out;
}

}  // namespace rfsep
