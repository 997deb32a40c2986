#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfsep/signal.hpp"

namespace rfsep {

/// A set of interference recordings ingested from disk.
struct RecordingPool {
    std::vector<ComplexSignal> recordings;
    std::string name;
};

namespace detail {

inline float read_f32_le(const unsigned char* p) {
    const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                            (static_cast<std::uint32_t>(p[1]) << 8) |
                            (static_cast<std::uint32_t>(p[2]) << 16) |
                            (static_cast<std::uint32_t>(p[3]) << 24);
    return std::bit_cast<float>(u);
}

inline void write_f32_le(std::ofstream& out, float v) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    const unsigned char b[4] = {static_cast<unsigned char>(u & 0xff),
                                static_cast<unsigned char>((u >> 8) & 0xff),
                                static_cast<unsigned char>((u >> 16) & 0xff),
                                static_cast<unsigned char>((u >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

/// Raw recording format: interleaved little-endian IEEE-754 binary32
/// values I0,Q0,I1,Q1,...  Byte count must equal 8 * num_samples.
inline ComplexSignal read_iq_f32(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open recording file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() % 8 != 0)
        throw FormatError("recording " + path.string() + ": byte count " +
                          std::to_string(bytes.size()) + " not divisible by 8 (trailing bytes at offset " +
                          std::to_string(bytes.size() - bytes.size() % 8) + ")");
    const auto n = static_cast<Eigen::Index>(bytes.size() / 8);
    ComplexSignal sig(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const unsigned char* p = bytes.data() + 8 * i;
        sig[i] = cdouble(detail::read_f32_le(p), detail::read_f32_le(p + 4));
    }
    return sig;
}

inline void write_iq_f32(const std::filesystem::path& path, const ComplexSignal& sig) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open recording file for writing: " + path.string());
    for (Eigen::Index i = 0; i < sig.size(); ++i) {
        detail::write_f32_le(out, static_cast<float>(sig[i].real()));
        detail::write_f32_le(out, static_cast<float>(sig[i].imag()));
    }
    if (!out) throw FormatError("write failure on " + path.string());
}

/// Loads a recording pool from a raw I/Q file plus its JSON sidecar
/// {"name": str, "num_samples": int, "frames": optional [[start,end), ...]}.
/// Without "frames" the whole file is a single recording.
inline RecordingPool load_recordings(const std::filesystem::path& data_path,
                                     const std::filesystem::path& meta_path) {
    std::ifstream meta_in(meta_path);
    if (!meta_in) throw FormatError("cannot open metadata file: " + meta_path.string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("metadata " + meta_path.string() + ": " + e.what());
    }
    if (!meta.contains("num_samples") || !meta["num_samples"].is_number_integer())
        throw FormatError("metadata " + meta_path.string() + ": missing integer field \"num_samples\"");
    const auto declared = meta["num_samples"].get<std::int64_t>();
    if (declared < 1)
        throw FormatError("metadata " + meta_path.string() + ": num_samples must be >= 1");

    const ComplexSignal all = read_iq_f32(data_path);
    if (all.size() != declared)
        throw FormatError("recording " + data_path.string() + ": metadata declares " +
                          std::to_string(declared) + " samples but file holds " +
                          std::to_string(all.size()));

    RecordingPool pool;
    pool.name = meta.value("name", data_path.stem().string());
    if (meta.contains("frames")) {
        if (!meta["frames"].is_array())
            throw FormatError("metadata " + meta_path.string() + ": \"frames\" must be an array");
        for (const auto& f : meta["frames"]) {
            if (!f.is_array() || f.size() != 2)
                throw FormatError("metadata " + meta_path.string() + ": each frame must be [start, end)");
            const auto a = f[0].get<std::int64_t>();
            const auto b = f[1].get<std::int64_t>();
            if (a < 0 || b <= a || b > all.size())
                throw FormatError("metadata " + meta_path.string() + ": frame [" + std::to_string(a) +
                                  ", " + std::to_string(b) + ") out of range");
            pool.recordings.push_back(all.segment(a, b - a));
        }
    } else {
        pool.recordings.push_back(all);
    }
    return pool;
}

inline void save_recording(const std::filesystem::path& data_path,
                           const std::filesystem::path& meta_path, const ComplexSignal& sig,
                           const std::string& name) {
    if (sig.size() < 1) throw InvalidParameterError("save_recording: empty signal");
    write_iq_f32(data_path, sig);
    nlohmann::json meta{{"name", name}, {"num_samples", sig.size()}};
    std::ofstream out(meta_path, std::ios::trunc);
    if (!out) throw FormatError("cannot open metadata file for writing: " + meta_path.string());
    out << meta.dump(2) << "\n";
}

}  // namespace rfsep
