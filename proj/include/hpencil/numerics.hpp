#ifndef HPENCIL_NUMERICS_HPP
#define HPENCIL_NUMERICS_HPP

///
/// \file numerics.hpp
///
/// Finite-difference derivatives, SNR-calibrated Gaussian noise and
/// single-tone Cramer-Rao bounds.
///

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "model.hpp"

namespace hpencil {

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

///
/// Weights w_j with sum_j w_j f(x + o_j h) = h^order f^(order)(x) + O(h^N),
/// from the Vandermonde moment system sum_j w_j o_j^q = q! [q == order].
///
inline std::vector<double> stencil_weights(std::span<const int> offsets, int order) {
    const auto size = static_cast<Eigen::Index>(offsets.size());
    if (order < 0 || size <= order) {
        throw Error(ErrorCode::shape, "stencil needs more points than the derivative order");
    }
    using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    LMatrix vandermonde(size, size);
    LVector rhs = LVector::Zero(size);
    for (Eigen::Index j = 0; j < size; ++j) {
        long double power = 1.0L;
        for (Eigen::Index q = 0; q < size; ++q) {
            vandermonde(q, j) = power;
            power *= static_cast<long double>(offsets[static_cast<std::size_t>(j)]);
        }
    }
    long double factorial = 1.0L;
    for (int q = 2; q <= order; ++q) {
        factorial *= q;
    }
    rhs(order) = factorial;
    const LVector w = vandermonde.fullPivLu().solve(rhs);
    std::vector<double> out(offsets.size());
    for (Eigen::Index j = 0; j < size; ++j) {
        out[static_cast<std::size_t>(j)] = static_cast<double>(w(j));
    }
    return out;
}

///
/// Derivative of a uniformly sampled series. Central stencils of the given
/// (even) accuracy are used in the interior, one-sided stencils of the same
/// accuracy at the ends.
///
inline Series finite_diff(std::span<const Complex> series, double sample_rate_hz, int order, int accuracy) {
    if (order != 1 && order != 2) {
        throw Error(ErrorCode::invalid_spec, "finite differences support derivative order 1 or 2");
    }
    if (accuracy != 2 && accuracy != 4 && accuracy != 6 && accuracy != 8) {
        throw Error(ErrorCode::invalid_spec, "finite-difference accuracy must be 2, 4, 6 or 8");
    }
    const std::size_t len = series.size();
    if (len <= static_cast<std::size_t>(accuracy + order)) {
        throw Error(ErrorCode::shape, "series of length " + std::to_string(len) + " too short for order "
                                          + std::to_string(order) + " accuracy " + std::to_string(accuracy));
    }
    const int half     = accuracy / 2;
    const int one_side = order + accuracy;
    const double scale = std::pow(sample_rate_hz, order);

    std::vector<int> central_offsets;
    for (int o = -half; o <= half; ++o) {
        central_offsets.push_back(o);
    }
    const auto central = stencil_weights(central_offsets, order);

    Series out(len);
    const auto ilen = static_cast<int>(len);
    for (int i = 0; i < ilen; ++i) {
        Complex acc{};
        if (i >= half && i < ilen - half) {
            for (std::size_t j = 0; j < central.size(); ++j) {
                acc += central[j] * series[static_cast<std::size_t>(i + central_offsets[j])];
            }
        } else {
            const int start = i < half ? 0 : ilen - one_side;
            std::vector<int> offsets(static_cast<std::size_t>(one_side));
            for (int j = 0; j < one_side; ++j) {
                offsets[static_cast<std::size_t>(j)] = start + j - i;
            }
            const auto w = stencil_weights(offsets, order);
            for (int j = 0; j < one_side; ++j) {
                acc += w[static_cast<std::size_t>(j)] * series[static_cast<std::size_t>(start + j)];
            }
        }
        out[static_cast<std::size_t>(i)] = acc * scale;
    }
    return out;
}

/// Replaces the signal's derivative with a finite-difference estimate of the
/// order its pipeline needs (2 for real, 1 for complex).
inline SampledSignal with_fd_derivative(SampledSignal signal, int accuracy) {
    const int order           = signal.kind == SignalKind::real ? 2 : 1;
    auto d                    = finite_diff(signal.values, signal.grid.sample_rate_hz, order, accuracy);
    if (signal.kind == SignalKind::real) {
        for (auto& z : d) {
            z = Complex(z.real(), 0.0);
        }
    }
    signal.derivative            = std::move(d);
    signal.derivative_order      = order;
    signal.derivative_provenance = DerivativeProvenance::finite_difference;
    return signal;
}

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

enum class NoiseKind { complex_circular_gaussian, real_gaussian };

enum class DerivativeMode { independent_noise, differentiate_noisy };

constexpr const char* to_string(DerivativeMode m) noexcept {
    return m == DerivativeMode::independent_noise ? "independent_noise" : "differentiate_noisy";
}

/// SNR = 10 log10(mean |x|^2 / sigma^2); complex noise splits sigma^2 equally
/// between real and imaginary parts. `snr_db = +inf` disables noise.
struct NoiseModel {
    double snr_db      = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
    NoiseKind kind     = NoiseKind::complex_circular_gaussian;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream seed fully determined by a base seed and a list of indices.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> indices) noexcept {
    std::uint64_t s = mix64(seed);
    for (auto i : indices) {
        s = mix64(s ^ mix64(i + 0x632be59bd9b4e019ULL));
    }
    return s;
}

inline double mean_power(std::span<const Complex> x) {
    if (x.empty()) {
        return 0.0;
    }
    double p = 0.0;
    for (const auto& z : x) {
        p += std::norm(z);
    }
    return p / static_cast<double>(x.size());
}

/// Adds white Gaussian noise of total variance `mean_power(x) / 10^(snr/10)` in place.
inline void add_noise_to(Series& x, double snr_db, NoiseKind kind, std::mt19937_64& rng) {
    if (std::isinf(snr_db) && snr_db > 0.0) {
        return;
    }
    const double variance = mean_power(x) / std::pow(10.0, snr_db / 10.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    if (kind == NoiseKind::complex_circular_gaussian) {
        const double sd = std::sqrt(variance / 2.0);
        for (auto& z : x) {
            const double re = normal(rng);
            const double im = normal(rng);
            z += Complex(sd * re, sd * im);
        }
    } else {
        const double sd = std::sqrt(variance);
        for (auto& z : x) {
            z += sd * normal(rng);
        }
    }
}

///
/// Noisy copy of `signal`, deterministic in (model.seed, trial_index).
///
/// `independent_noise` perturbs the existing derivative with its own draw at
/// the same SNR relative to the derivative's power. `differentiate_noisy`
/// recomputes the derivative from the noisy samples by finite differences.
///
inline SampledSignal add_noise(const SampledSignal& signal, const NoiseModel& model, DerivativeMode mode,
                               std::uint64_t trial_index = 0, int fd_accuracy = 8) {
    signal.validate();
    if (signal.kind == SignalKind::real && model.kind != NoiseKind::real_gaussian) {
        throw Error(ErrorCode::invalid_spec, "real signals take real Gaussian noise");
    }
    if (mode == DerivativeMode::independent_noise && !signal.derivative) {
        throw Error(ErrorCode::incomplete_input,
                    "independent derivative noise needs an analytic or external derivative series");
    }
    SampledSignal out = signal;
    const bool noiseless = std::isinf(model.snr_db) && model.snr_db > 0.0;
    if (noiseless) {
        return out;
    }
    std::mt19937_64 values_rng(derive_seed(model.seed, {trial_index, 0}));
    add_noise_to(out.values, model.snr_db, model.kind, values_rng);
    if (mode == DerivativeMode::independent_noise) {
        std::mt19937_64 deriv_rng(derive_seed(model.seed, {trial_index, 1}));
        add_noise_to(*out.derivative, model.snr_db, model.kind, deriv_rng);
    } else {
        out = with_fd_derivative(std::move(out), fd_accuracy);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cramer-Rao bounds
// ---------------------------------------------------------------------------

struct CrbResult {
    double var_freq_hz2   = 0.0;
    double var_amp        = 0.0;
    double var_phase_rad2 = 0.0;
};

///
/// Cramer-Rao bounds for a single complex tone A exp(j(2 pi f k / fs + phi)),
/// k = 0..N-1, in circular white Gaussian noise with SNR = A^2 / sigma^2.
///
/// Closed forms (Rife and Boorstyn, IEEE Trans. IT-20, 1974), with the phase
/// referenced to the first sample:
///   var(f)   = 6 fs^2 / ((2 pi)^2 SNR N (N^2 - 1))
///   var(A)   = A^2 / (2 N SNR)
///   var(phi) = (2N - 1) / (SNR N (N + 1))
///
inline CrbResult crb_single_tone(double snr_db, std::size_t n_samples, double sample_rate_hz, double amplitude = 1.0) {
    if (n_samples < 3) {
        throw Error(ErrorCode::invalid_spec, "Cramer-Rao bounds need at least 3 samples");
    }
    if (!std::isfinite(snr_db)) {
        throw Error(ErrorCode::domain, "Cramer-Rao bounds need a finite SNR");
    }
    const double snr = std::pow(10.0, snr_db / 10.0);
    const double n   = static_cast<double>(n_samples);
    CrbResult out;
    out.var_freq_hz2   = 6.0 * sample_rate_hz * sample_rate_hz / (two_pi * two_pi * snr * n * (n * n - 1.0));
    out.var_amp        = amplitude * amplitude / (2.0 * n * snr);
    out.var_phase_rad2 = (2.0 * n - 1.0) / (snr * n * (n + 1.0));
    return out;
}

} // namespace hpencil

#endif // HPENCIL_NUMERICS_HPP
