#ifndef HPENCIL_MODEL_HPP
#define HPENCIL_MODEL_HPP

///
/// \file model.hpp
///
/// Signal descriptions and exact synthesis of real, complex and FMCW beat
/// signals together with their analytic derivatives.
///

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"

namespace hpencil {

using Complex = std::complex<double>;
using Series  = std::vector<Complex>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

enum class SignalKind { real, complex };

enum class DerivativeProvenance { analytic, finite_difference, external };

constexpr const char* to_string(SignalKind kind) noexcept {
    return kind == SignalKind::real ? "real" : "complex";
}

constexpr const char* to_string(DerivativeProvenance p) noexcept {
    switch (p) {
    case DerivativeProvenance::analytic: return "analytic";
    case DerivativeProvenance::finite_difference: return "finite_difference";
    case DerivativeProvenance::external: return "external";
    }
    return "unknown";
}

/// Wraps an angle into [-pi, pi).
inline double wrap_phase(double phase) noexcept {
    double wrapped = phase - two_pi * std::floor((phase + std::numbers::pi) / two_pi);
    if (wrapped >= std::numbers::pi) {
        wrapped -= two_pi;
    }
    if (wrapped < -std::numbers::pi) {
        wrapped = -std::numbers::pi;
    }
    return wrapped;
}

inline double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// Difference a - b folded onto [-pi, pi).
inline double phase_difference(double a, double b) noexcept { return wrap_phase(a - b); }

///
/// One tone: `amplitude * sin(2 pi f t + phase)` for real signals and
/// `amplitude * exp(j (2 pi f t + phase))` for complex signals.
///
struct SinusoidComponent {
    double amplitude    = 1.0;
    double frequency_hz = 1.0;
    double phase_rad    = 0.0;

    /// Builds a canonical component: a negative amplitude is folded into the
    /// phase and the phase is wrapped into [-pi, pi).
    static SinusoidComponent make(double amplitude, double frequency_hz, double phase_rad) {
        if (!std::isfinite(amplitude) || !std::isfinite(frequency_hz) || !std::isfinite(phase_rad)) {
            throw Error(ErrorCode::invalid_spec, "component parameters must be finite");
        }
        if (amplitude == 0.0) {
            throw Error(ErrorCode::invalid_spec, "component amplitude must be nonzero");
        }
        if (frequency_hz == 0.0) {
            throw Error(ErrorCode::invalid_spec, "component frequency must be nonzero");
        }
        if (amplitude < 0.0) {
            amplitude = -amplitude;
            phase_rad += std::numbers::pi;
        }
        return SinusoidComponent{amplitude, frequency_hz, wrap_phase(phase_rad)};
    }

    [[nodiscard]] double angular_frequency() const noexcept { return two_pi * frequency_hz; }

    friend bool operator==(const SinusoidComponent&, const SinusoidComponent&) = default;
};

///
/// An ordered set of distinct tones of one kind.
///
/// Invariants: at least one component, amplitudes > 0, frequencies nonzero,
/// pairwise distinct and sorted ascending; real signals need f > 0.
///
class SignalSpec {
public:
    static SignalSpec make(SignalKind kind, std::vector<SinusoidComponent> components) {
        if (components.empty()) {
            throw Error(ErrorCode::invalid_spec, "signal needs at least one component");
        }
        for (auto& c : components) {
            c = SinusoidComponent::make(c.amplitude, c.frequency_hz, c.phase_rad);
            if (kind == SignalKind::real && c.frequency_hz <= 0.0) {
                throw Error(ErrorCode::invalid_spec, "real signal components need positive frequencies, got "
                                                         + std::to_string(c.frequency_hz));
            }
        }
        std::ranges::sort(components, {}, &SinusoidComponent::frequency_hz);
        for (std::size_t i = 1; i < components.size(); ++i) {
            if (components[i].frequency_hz == components[i - 1].frequency_hz) {
                throw Error(ErrorCode::invalid_spec,
                            "duplicate component frequency " + std::to_string(components[i].frequency_hz) + " Hz");
            }
        }
        return SignalSpec(kind, std::move(components));
    }

    [[nodiscard]] SignalKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::vector<SinusoidComponent>& components() const noexcept { return components_; }
    [[nodiscard]] std::size_t size() const noexcept { return components_.size(); }

    /// Same tones with every amplitude multiplied by `factor` (> 0).
    [[nodiscard]] SignalSpec scaled(double factor) const {
        auto comps = components_;
        for (auto& c : comps) {
            c.amplitude *= factor;
        }
        return make(kind_, std::move(comps));
    }

private:
    SignalSpec(SignalKind kind, std::vector<SinusoidComponent> components)
        : kind_(kind), components_(std::move(components)) {}

    SignalKind kind_;
    std::vector<SinusoidComponent> components_;
};

/// Uniform sampling: sample k is taken at `start_time_s + k / sample_rate_hz`.
struct SamplingGrid {
    double sample_rate_hz = 1.0;
    std::size_t count     = 1;
    double start_time_s   = 0.0;

    void validate() const {
        if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
            throw Error(ErrorCode::invalid_spec, "sample rate must be positive");
        }
        if (count == 0) {
            throw Error(ErrorCode::invalid_spec, "sample count must be positive");
        }
        if (!std::isfinite(start_time_s)) {
            throw Error(ErrorCode::invalid_spec, "start time must be finite");
        }
    }

    [[nodiscard]] double time(std::size_t k) const noexcept {
        return start_time_s + static_cast<double>(k) / sample_rate_hz;
    }

    /// Hankel dimension n for a pencil built from 2n-1 samples.
    [[nodiscard]] std::size_t pencil_dimension() const noexcept { return (count + 1) / 2; }

    friend bool operator==(const SamplingGrid&, const SamplingGrid&) = default;
};

///
/// Sample series on a grid plus an optional derivative series of the same
/// length. Real signals are stored with zero imaginary parts.
///
struct SampledSignal {
    SamplingGrid grid;
    SignalKind kind = SignalKind::real;
    Series values;
    std::optional<Series> derivative;
    int derivative_order                       = 0; // 0 when no derivative is attached
    DerivativeProvenance derivative_provenance = DerivativeProvenance::analytic;

    void validate() const {
        grid.validate();
        if (values.size() != grid.count) {
            throw Error(ErrorCode::shape, "sample series length " + std::to_string(values.size())
                                              + " does not match grid count " + std::to_string(grid.count));
        }
        if (derivative && derivative->size() != grid.count) {
            throw Error(ErrorCode::shape, "derivative series length does not match sample count");
        }
    }

    [[nodiscard]] std::vector<double> real_values() const {
        std::vector<double> out(values.size());
        std::ranges::transform(values, out.begin(), [](const Complex& z) { return z.real(); });
        return out;
    }
};

/// Samples of `spec` (real kind) and their analytic second derivative.
inline SampledSignal eval_real(const SignalSpec& spec, const SamplingGrid& grid) {
    if (spec.kind() != SignalKind::real) {
        throw Error(ErrorCode::invalid_spec, "eval_real needs a real signal spec");
    }
    grid.validate();
    SampledSignal out{grid, SignalKind::real, Series(grid.count), Series(grid.count), 2, DerivativeProvenance::analytic};
    for (std::size_t k = 0; k < grid.count; ++k) {
        const double t = grid.time(k);
        double x       = 0.0;
        double xdd     = 0.0;
        for (const auto& c : spec.components()) {
            const double w = c.angular_frequency();
            const double s = c.amplitude * std::sin(w * t + c.phase_rad);
            x += s;
            xdd -= w * w * s;
        }
        out.values[k]        = x;
        (*out.derivative)[k] = xdd;
    }
    return out;
}

/// Samples of `spec` (complex kind) and their analytic first derivative.
inline SampledSignal eval_complex(const SignalSpec& spec, const SamplingGrid& grid) {
    if (spec.kind() != SignalKind::complex) {
        throw Error(ErrorCode::invalid_spec, "eval_complex needs a complex signal spec");
    }
    grid.validate();
    SampledSignal out{grid, SignalKind::complex, Series(grid.count), Series(grid.count), 1,
                      DerivativeProvenance::analytic};
    for (std::size_t k = 0; k < grid.count; ++k) {
        const double t = grid.time(k);
        Complex y{};
        Complex yd{};
        for (const auto& c : spec.components()) {
            const double w  = c.angular_frequency();
            const Complex z = std::polar(c.amplitude, w * t + c.phase_rad);
            y += z;
            yd += Complex(0.0, w) * z;
        }
        out.values[k]        = y;
        (*out.derivative)[k] = yd;
    }
    return out;
}

inline SampledSignal synthesize(const SignalSpec& spec, const SamplingGrid& grid) {
    return spec.kind() == SignalKind::real ? eval_real(spec, grid) : eval_complex(spec, grid);
}

///
/// FMCW radar scenario. Defaults are a 24 GHz chirp of 100 MHz over 512 us
/// with a target at 12.3456789 m.
///
struct FmcwConfig {
    double chirp_start_hz  = 24e9;
    double bandwidth_hz    = 100e6;
    double chirp_duration_s = 512e-6;
    double light_speed_m_s = 3e8;
    double target_range_m  = 12.3456789;
    double rx_amplitude    = 1.0; // treated as an amplitude, not a power

    void validate() const {
        const double fields[] = {chirp_start_hz, bandwidth_hz, chirp_duration_s,
                                 light_speed_m_s, target_range_m, rx_amplitude};
        for (double v : fields) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw Error(ErrorCode::invalid_spec, "FMCW configuration fields must be finite and positive");
            }
        }
    }

    /// Meters of range per hertz of beat frequency.
    [[nodiscard]] double range_per_hz() const noexcept {
        return light_speed_m_s * chirp_duration_s / (2.0 * bandwidth_hz);
    }
};

struct BeatParameters {
    double frequency_hz;
    double phase_rad; // wrapped into [-pi, pi)
};

/// Beat tone frequency and phase for the configured range; R = 0 gives (0, 0).
inline BeatParameters beat_parameters(const FmcwConfig& cfg) noexcept {
    const double r   = cfg.target_range_m;
    const double c   = cfg.light_speed_m_s;
    const double f_b = 2.0 * cfg.bandwidth_hz * r / (c * cfg.chirp_duration_s);
    const double phi = 2.0 * two_pi * cfg.chirp_start_hz * r / c
                     + 2.0 * two_pi * cfg.bandwidth_hz * r * r / (c * c * cfg.chirp_duration_s);
    return {f_b, wrap_phase(phi)};
}

/// Single complex beat tone of the mixed transmit/receive chirps (noise-free).
inline SignalSpec fmcw_beat(const FmcwConfig& cfg) {
    if (cfg.target_range_m == 0.0) {
        throw Error(ErrorCode::invalid_spec, "degenerate target range 0 m gives a zero beat frequency");
    }
    cfg.validate();
    const auto beat = beat_parameters(cfg);
    return SignalSpec::make(SignalKind::complex,
                            {SinusoidComponent::make(cfg.rx_amplitude, beat.frequency_hz, beat.phase_rad)});
}

/// Target range for a measured beat frequency.
inline double distance_from_frequency(double beat_hz, const FmcwConfig& cfg) {
    if (!(beat_hz >= 0.0)) {
        throw Error(ErrorCode::domain, "beat frequency must be nonnegative, got " + std::to_string(beat_hz));
    }
    return beat_hz * cfg.range_per_hz();
}

} // namespace hpencil

#endif // HPENCIL_MODEL_HPP
