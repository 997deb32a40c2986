#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rfsep/covariance.hpp"
#include "rfsep/recording.hpp"
#include "rfsep/rng.hpp"
#include "rfsep/sampling.hpp"
#include "rfsep/signal.hpp"

namespace rfsep {

/// M-PSK framing parameters. Defaults follow the benchmark protocol:
/// 8 symbols per frame oversampled by 16, RRC roll-off 0.5, and an
/// 8-sample leading offset (implemented as leading zeros).
struct FrameSpec {
    int mod_order = 4;
    int symbols_per_frame = 8;
    int sps = 16;
    double rolloff = 0.5;
    int span_symbols = 8;
    int offset_samples = 8;

    int bits_per_symbol() const {
        int b = 0;
        for (int m = mod_order; m > 1; m >>= 1) ++b;
        return b;
    }

    int tap_count() const { return span_symbols * sps + 1; }

    Eigen::Index frame_length(Eigen::Index n_symbols) const {
        return offset_samples + (n_symbols - 1) * sps + tap_count();
    }

    void validate() const {
        const bool pow2 = mod_order > 1 && (mod_order & (mod_order - 1)) == 0;
        if (!pow2 || mod_order > 16)
            throw InvalidParameterError("FrameSpec: constellation order must be in {2, 4, 8, 16}");
        if (sps < 2) throw InvalidParameterError("FrameSpec: sps must be >= 2");
        if (rolloff <= 0.0 || rolloff > 1.0)
            throw InvalidParameterError("FrameSpec: roll-off must be in (0, 1]");
        if (span_symbols < 4 || span_symbols % 2 != 0)
            throw InvalidParameterError("FrameSpec: filter span must be even and >= 4");
        if (symbols_per_frame < 1) throw InvalidParameterError("FrameSpec: symbols_per_frame must be >= 1");
        if (offset_samples < 0) throw InvalidParameterError("FrameSpec: offset must be >= 0");
    }
};

/// Root-raised-cosine taps, odd length span*sps + 1, normalized to unit
/// energy. The removable singularities at t = 0 and t = +-T/(4 beta) are
/// evaluated by their analytic limits.
inline RealVector rrc_taps(double rolloff, int span_symbols, int sps) {
    if (rolloff <= 0.0 || rolloff > 1.0)
        throw InvalidParameterError("rrc_taps: roll-off must be in (0, 1]");
    if (span_symbols < 1 || sps < 1) throw InvalidParameterError("rrc_taps: bad span or sps");
    const int half = span_symbols * sps / 2;
    const int len = span_symbols * sps + 1;
    RealVector h(len);
    const double pi = std::numbers::pi;
    for (int n = -half; n <= half; ++n) {
        const double t = static_cast<double>(n) / sps;
        double v;
        if (n == 0) {
            v = 1.0 + rolloff * (4.0 / pi - 1.0);
        } else if (std::abs(std::abs(4.0 * rolloff * t) - 1.0) < 1e-9) {
            const double x = pi / (4.0 * rolloff);
            v = (rolloff / std::numbers::sqrt2) *
                ((1.0 + 2.0 / pi) * std::sin(x) + (1.0 - 2.0 / pi) * std::cos(x));
        } else {
            const double num = std::sin(pi * t * (1.0 - rolloff)) +
                               4.0 * rolloff * t * std::cos(pi * t * (1.0 + rolloff));
            const double den = pi * t * (1.0 - std::pow(4.0 * rolloff * t, 2));
            v = num / den;
        }
        h[n + half] = v;
    }
    h /= h.norm();
    return h;
}

inline int gray_encode(int v) { return v ^ (v >> 1); }

inline int gray_decode(int g) {
    int v = 0;
    for (; g != 0; g >>= 1) v ^= g;
    return v;
}

/// Constellation point m on the unit circle: e^{i(pi/M + 2 pi m / M)}.
inline cdouble psk_point(int mod_order, int m) {
    const double a = std::numbers::pi / mod_order + 2.0 * std::numbers::pi * m / mod_order;
    return {std::cos(a), std::sin(a)};
}

struct ModulatedFrame {
    ComplexSignal signal;
    std::vector<std::uint8_t> bits;
};

/// Gray-coded M-PSK waveform: random bits -> symbols -> upsample -> RRC
/// shaping, prefixed by offset_samples zeros and scaled to unit empirical
/// mean power (measured over the steady-state region when the frame is
/// long enough to have one, otherwise over the whole frame).
inline ModulatedFrame gen_mpsk(const FrameSpec& frame, Eigen::Index n_symbols, Rng& rng) {
    frame.validate();
    if (n_symbols < 1) throw InvalidParameterError("gen_mpsk: need at least one symbol");
    const int bps = frame.bits_per_symbol();
    const RealVector taps = rrc_taps(frame.rolloff, frame.span_symbols, frame.sps);
    const int ntaps = frame.tap_count();

    ModulatedFrame out;
    out.bits.resize(static_cast<std::size_t>(n_symbols) * bps);
    for (auto& b : out.bits) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);

    const Eigen::Index len = frame.frame_length(n_symbols);
    out.signal = ComplexSignal::Zero(len);
    for (Eigen::Index i = 0; i < n_symbols; ++i) {
        int v = 0;
        for (int b = 0; b < bps; ++b) v = (v << 1) | out.bits[static_cast<std::size_t>(i) * bps + b];
        const cdouble a = psk_point(frame.mod_order, gray_decode(v));
        const Eigen::Index base = frame.offset_samples + i * frame.sps;
        for (int j = 0; j < ntaps; ++j) out.signal[base + j] += a * taps[j];
    }

    const Eigen::Index ss_begin = frame.offset_samples + static_cast<Eigen::Index>(frame.span_symbols) * frame.sps;
    const Eigen::Index ss_end = frame.offset_samples + (n_symbols - 1) * frame.sps + 1;
    double power;
    if (ss_end > ss_begin) {
        power = out.signal.segment(ss_begin, ss_end - ss_begin).squaredNorm() /
                static_cast<double>(ss_end - ss_begin);
    } else {
        power = mean_power(out.signal);
    }
    if (power > 0.0) out.signal /= std::sqrt(power);
    return out;
}

inline ModulatedFrame gen_mpsk(const FrameSpec& frame, Eigen::Index n_symbols, std::uint64_t seed) {
    Rng rng(seed);
    return gen_mpsk(frame, n_symbols, rng);
}

/// Matched-filter demodulation: correlate with the RRC taps at symbol
/// instants, decide the nearest constellation point (ties to the smallest
/// symbol index), Gray-demap to bits.
inline std::vector<std::uint8_t> demod_mpsk(const ComplexSignal& s_hat, const FrameSpec& frame,
                                            Eigen::Index n_symbols) {
    frame.validate();
    if (n_symbols < 1) throw InvalidParameterError("demod_mpsk: need at least one symbol");
    if (s_hat.size() < frame.frame_length(n_symbols))
        throw InvalidParameterError("demod_mpsk: signal too short for requested symbol count");
    const RealVector taps = rrc_taps(frame.rolloff, frame.span_symbols, frame.sps);
    const int ntaps = frame.tap_count();
    const int bps = frame.bits_per_symbol();

    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n_symbols) * bps);
    for (Eigen::Index i = 0; i < n_symbols; ++i) {
        const Eigen::Index base = frame.offset_samples + i * frame.sps;
        cdouble z{0.0, 0.0};
        for (int j = 0; j < ntaps; ++j) z += s_hat[base + j] * taps[j];
        int best = 0;
        double best_metric = -std::numeric_limits<double>::infinity();
        for (int m = 0; m < frame.mod_order; ++m) {
            const double metric = (z * std::conj(psk_point(frame.mod_order, m))).real();
            if (metric > best_metric) {
                best_metric = metric;
                best = m;
            }
        }
        const int v = gray_encode(best);
        for (int b = 0; b < bps; ++b)
            bits[static_cast<std::size_t>(i) * bps + b] =
                static_cast<std::uint8_t>((v >> (bps - 1 - b)) & 1);
    }
    return bits;
}

/// Bit error rate: Hamming distance over length.
inline double ber(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    if (a.size() != b.size() || a.empty())
        throw InvalidParameterError("ber: bit vectors must have equal nonzero length");
    std::size_t errors = 0;
    for (std::size_t i = 0; i < a.size(); ++i) errors += (a[i] != b[i]) ? 1u : 0u;
    return static_cast<double>(errors) / static_cast<double>(a.size());
}

/// Unit-variance AR(1) autocovariance r[m] = a^m, m = 0..len-1.
inline ComplexSignal ar1_autocov(double a, Eigen::Index len) {
    if (!(a >= 0.0 && a < 1.0)) throw InvalidParameterError("ar1_autocov: need 0 <= a < 1");
    if (len < 1) throw InvalidParameterError("ar1_autocov: len must be >= 1");
    ComplexSignal r(len);
    double p = 1.0;
    for (Eigen::Index m = 0; m < len; ++m, p *= a) r[m] = p;
    return r;
}

/// Periodic summation of a Toeplitz autocovariance onto a length-n
/// circulant first column. The wrap of a nonnegative-spectrum acov stays
/// PSD (its spectrum is the sampled original spectrum).
inline ComplexSignal circulant_wrap(const ComplexSignal& acov, Eigen::Index n) {
    if (n < 1) throw InvalidParameterError("circulant_wrap: n must be >= 1");
    ComplexSignal c = ComplexSignal::Zero(n);
    const Eigen::Index lmax = acov.size() - 1;
    for (Eigen::Index l = -lmax; l <= lmax; ++l) {
        const cdouble v = l >= 0 ? acov[l] : std::conj(acov[-l]);
        Eigen::Index idx = l % n;
        if (idx < 0) idx += n;
        c[idx] += v;
    }
    return c;
}

/// Unit-power periodic AR(1) covariance on the length-n circle
/// (closed-form aliasing of r[m] = a^|m|).
inline CovarianceSpec circulant_ar1(double a, Eigen::Index n) {
    if (!(a >= 0.0 && a < 1.0)) throw InvalidParameterError("circulant_ar1: need 0 <= a < 1");
    if (n < 1) throw InvalidParameterError("circulant_ar1: n must be >= 1");
    ComplexSignal c(n);
    const double an = std::pow(a, static_cast<double>(n));
    for (Eigen::Index m = 0; m < n; ++m) {
        const double num = std::pow(a, static_cast<double>(m)) + std::pow(a, static_cast<double>(n - m));
        c[m] = num / (1.0 - an);
    }
    const double c0 = c[0].real();
    return CovarianceSpec::circulant(c / c0);
}

inline CovarianceSpec circulant_white(Eigen::Index n) {
    ComplexSignal c = ComplexSignal::Zero(n);
    c[0] = 1.0;
    return CovarianceSpec::circulant(c);
}

/// Exact second-moment matrix of one shaped M-PSK frame under iid
/// unit-modulus symbols: C = sps * sum_m h_m h_m^T with h_m the m-th
/// shifted tap vector, rescaled so the mean power over the frame is 1.
/// Rank equals the symbol count; it carries the full frame structure
/// (leading offset, symbol lattice, shaping tails) that the stationary
/// wrap below averages away.
inline CovarianceSpec soi_covariance_exact(const FrameSpec& frame, Eigen::Index n_symbols) {
    frame.validate();
    if (n_symbols < 1) throw InvalidParameterError("soi_covariance_exact: need >= 1 symbol");
    const RealVector taps = rrc_taps(frame.rolloff, frame.span_symbols, frame.sps);
    const int ntaps = frame.tap_count();
    const Eigen::Index len = frame.frame_length(n_symbols);
    Eigen::MatrixXd shifted = Eigen::MatrixXd::Zero(len, n_symbols);
    for (Eigen::Index m = 0; m < n_symbols; ++m)
        shifted.block(frame.offset_samples + m * frame.sps, m, ntaps, 1) = taps;
    Eigen::MatrixXd c = shifted * shifted.transpose();
    c *= static_cast<double>(len) / c.trace();
    return CovarianceSpec::dense(c.cast<cdouble>());
}

/// Time-averaged autocovariance of the unit-power shaped M-PSK waveform:
/// the autocorrelation of the RRC taps. Wrapped onto a circulant so the
/// analytical estimators get a stationary Gaussian surrogate for the PSK
/// SOI when the exact dense form is too large.
inline CovarianceSpec soi_covariance(const FrameSpec& frame, Eigen::Index n) {
    frame.validate();
    const RealVector taps = rrc_taps(frame.rolloff, frame.span_symbols, frame.sps);
    const int ntaps = frame.tap_count();
    ComplexSignal rho(ntaps);
    for (int m = 0; m < ntaps; ++m) {
        double acc = 0.0;
        for (int j = 0; j + m < ntaps; ++j) acc += taps[j] * taps[j + m];
        rho[m] = acc;
    }
    ComplexSignal c = circulant_wrap(rho, n);
    const double c0 = c[0].real();
    if (!(c0 > 0.0)) throw NumericalError("soi_covariance: degenerate wrap");
    return CovarianceSpec::circulant(c / c0);
}

/// Mixture scaling parameters (dB). snr_db absent means the interference
/// source already carries its own noise (recorded pools), in which case
/// sir_db is read as the effective SINR.
struct MixSpec {
    double sir_db = 0.0;
    std::optional<double> snr_db;
    bool random_phase = true;

    std::optional<std::string> consistency_warning() const {
        if (snr_db && !(sir_db < *snr_db))
            return "sir_db >= snr_db: outside the low-SIR regime the scaling conventions assume";
        return std::nullopt;
    }
};

using InterferenceSource = std::variant<CovarianceSpec, std::shared_ptr<const RecordingPool>>;

/// Draw one length-N effective-interference realization at the requested
/// SINR (dB, relative to a unit-power SOI).
///
/// Recording sources follow the benchmark protocol: uniformly random crop,
/// scaling exact with respect to the segment's own empirical power, and a
/// uniform random phase rotation. Covariance sources draw an exact
/// Gaussian with the covariance scaled by 10^(-sinr/10) (the spec is
/// treated as the unit-power base); crop and phase do not apply there.
inline ComplexSignal draw_interference(const InterferenceSource& source, Eigen::Index n,
                                       double sinr_db, Rng& rng, bool random_phase = true) {
    if (n < 1) throw InvalidParameterError("draw_interference: N must be >= 1");
    const double target_power = db_to_linear(-sinr_db);
    if (const auto* pool = std::get_if<std::shared_ptr<const RecordingPool>>(&source)) {
        if (!*pool || (*pool)->recordings.empty())
            throw InvalidParameterError("draw_interference: empty recording pool");
        const auto& recs = (*pool)->recordings;
        const auto idx = rng.uniform_below(recs.size());
        const ComplexSignal& rec = recs[idx];
        if (rec.size() < n)
            throw InsufficientLengthError("draw_interference: recording shorter than requested length");
        const auto start = static_cast<Eigen::Index>(rng.uniform_below(
            static_cast<std::uint64_t>(rec.size() - n + 1)));
        ComplexSignal seg = rec.segment(start, n);
        const double p = mean_power(seg);
        if (!(p > 0.0)) throw NumericalError("draw_interference: zero-power segment");
        seg *= std::sqrt(target_power / p);
        if (random_phase) {
            const double phi = 2.0 * std::numbers::pi * rng.uniform();
            seg *= cdouble(std::cos(phi), std::sin(phi));
        }
        return seg;
    }
    const auto& spec = std::get<CovarianceSpec>(source);
    if (spec.dim() < n)
        throw InsufficientLengthError("draw_interference: covariance dimension below requested length");
    GaussianSampler sampler(spec);
    ComplexSignal b = sampler.draw(rng).head(n);
    return b * std::sqrt(target_power);
}

inline ComplexSignal draw_interference(const InterferenceSource& source, Eigen::Index n,
                                       double sinr_db, std::uint64_t seed, bool random_phase = true) {
    Rng rng(seed);
    return draw_interference(source, n, sinr_db, rng, random_phase);
}

struct MixResult {
    ComplexSignal y;
    int type = 0;
};

/// y = s + b_k with k sampled from the prior vector; adds white channel
/// noise at rho_SNR^(-1/2) when snr_db is present. Returns the realized
/// type for oracle/labeled use.
inline MixResult mix(const ComplexSignal& s, const std::vector<InterferenceSource>& sources,
                     const RealVector& priors, const MixSpec& spec, std::uint64_t seed) {
    if (sources.empty()) throw InvalidParameterError("mix: need at least one interference source");
    if (priors.size() != static_cast<Eigen::Index>(sources.size()))
        throw InvalidParameterError("mix: priors/source count mismatch");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < priors.size(); ++i) {
        if (priors[i] < -1e-12) throw InvalidParameterError("mix: negative prior");
        sum += priors[i];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InvalidParameterError("mix: priors must sum to 1");

    Rng rng(seed);
    const double u = rng.uniform();
    int k = 0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < priors.size(); ++i) {
        acc += priors[i];
        if (u < acc) {
            k = static_cast<int>(i);
            break;
        }
        k = static_cast<int>(i);  // saturate at the last type on round-off
    }

    MixResult out;
    out.type = k;
    out.y = s + draw_interference(sources[static_cast<std::size_t>(k)], s.size(), spec.sir_db, rng,
                                  spec.random_phase);
    if (spec.snr_db) {
        const double sigma = std::sqrt(db_to_linear(-*spec.snr_db));
        for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y[i] += sigma * rng.cnormal();
    }
    return out;
}

}  // namespace rfsep
