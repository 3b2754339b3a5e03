#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

namespace oracle {

using ld   = long double;
using LMat = Eigen::Matrix<cld, Eigen::Dynamic, Eigen::Dynamic>;
using LVec = Eigen::Matrix<cld, Eigen::Dynamic, 1>;

namespace {

constexpr ld pi_l = 3.141592653589793238462643383279502884L;

cld det_l(const LMat& m) { return m.fullPivLu().determinant(); }

double angle_distance(double a, double b, SignalKind kind) {
    const double d = std::abs(a - b);
    return kind == SignalKind::real ? d : std::min(d, 2 * std::numbers::pi - d);
}

} // namespace

// ---------------------------------------------------------------------------
// Ten-tone test signal
// ---------------------------------------------------------------------------

const std::vector<Tone>& ten_tones() {
    static const std::vector<Tone> tones{{35, 1.5, 30},  {60, 3.5, 50},  {97, 2, 170},   {97.5, 0.1, 230},
                                         {120, 1.2, 90}, {135, 0.8, 145}, {160, 2.5, 0}, {230, 0.8, 330},
                                         {270, 1, 280},  {290, 0.3, 0}};
    return tones;
}

hpencil::SignalSpec ten_tone_spec(SignalKind kind) {
    std::vector<SinusoidComponent> comps;
    for (const auto& t : ten_tones()) {
        comps.push_back({t.a, t.f, hpencil::deg_to_rad(t.phi_deg)});
    }
    return hpencil::SignalSpec::make(kind, comps);
}

// ---------------------------------------------------------------------------
// Rank by singular values (Jacobi SVD)
// ---------------------------------------------------------------------------

std::vector<double> singular_values(const Eigen::MatrixXcd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto& s = svd.singularValues();
    return {s.data(), s.data() + s.size()};
}

int rank(const Eigen::MatrixXcd& m, double ratio) {
    const auto s = singular_values(m);
    if (s.empty() || s.front() == 0.0) {
        return 0;
    }
    return static_cast<int>(std::count_if(s.begin(), s.end(), [&](double v) { return v > ratio * s.front(); }));
}

// ---------------------------------------------------------------------------
// Characteristic polynomial det(A - lambda B) and its roots
// ---------------------------------------------------------------------------

/// Coefficients c_0..c_n of det(A - lambda B), by interpolation at n+1 nodes
/// spread over [0, scale].
std::vector<cld> char_poly(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, long double scale) {
    const auto n = a.rows();
    const LMat al = a.cast<cld>();
    const LMat bl = b.cast<cld>();
    LMat vander(n + 1, n + 1);
    LVec values(n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) {
        const ld node = scale * static_cast<ld>(i) / static_cast<ld>(n);
        values(i)     = det_l(al - node * bl);
        cld p         = 1;
        for (Eigen::Index q = 0; q <= n; ++q) {
            vander(i, q) = p;
            p *= node;
        }
    }
    const LVec c = vander.fullPivLu().solve(values);
    return {c.data(), c.data() + c.size()};
}

/// Roots by Durand-Kerner iteration in long double.
std::vector<cld> poly_roots(std::vector<cld> c) {
    const std::size_t deg = c.size() - 1;
    for (auto& v : c) {
        v /= c.back();
    }
    auto eval = [&](cld z) {
        cld r = 0;
        for (std::size_t i = c.size(); i-- > 0;) {
            r = r * z + c[i];
        }
        return r;
    };
    std::vector<cld> z(deg);
    ld radius = 0;
    for (std::size_t i = 0; i < deg; ++i) {
        radius = std::max(radius, std::abs(c[i]));
    }
    radius = 1 + radius;
    for (std::size_t i = 0; i < deg; ++i) {
        z[i] = std::polar(radius * 0.5L, 2 * pi_l * (static_cast<ld>(i) + 0.25L) / static_cast<ld>(deg));
    }
    for (int iter = 0; iter < 20000; ++iter) {
        ld change = 0;
        for (std::size_t i = 0; i < deg; ++i) {
            cld den = 1;
            for (std::size_t j = 0; j < deg; ++j) {
                if (j != i) {
                    den *= z[i] - z[j];
                }
            }
            const cld step = eval(z[i]) / den;
            z[i] -= step;
            change = std::max(change, std::abs(step) / std::max<ld>(1, std::abs(z[i])));
        }
        if (change < 1e-18L) {
            break;
        }
    }
    std::ranges::sort(z, {}, [](const cld& v) { return v.real(); });
    return z;
}

// ---------------------------------------------------------------------------
// Least-squares amplitude/phase fit at known frequencies
// ---------------------------------------------------------------------------

/// Real model x_k = sum_i c_i sin(w_i t_k) + s_i cos(w_i t_k), with
/// (c_i, s_i) = a_i (cos phi_i, sin phi_i). Solved in long double.
std::vector<SinusoidComponent> ls_fit_real(std::span<const Complex> samples, const std::vector<double>& freqs,
                                                  double fs, double t0) {
    using RMat = Eigen::Matrix<ld, Eigen::Dynamic, Eigen::Dynamic>;
    using RVec = Eigen::Matrix<ld, Eigen::Dynamic, 1>;
    const auto rows = static_cast<Eigen::Index>(samples.size());
    const auto m    = static_cast<Eigen::Index>(freqs.size());
    RMat design(rows, 2 * m);
    RVec rhs(rows);
    for (Eigen::Index k = 0; k < rows; ++k) {
        const ld t = t0 + static_cast<ld>(k) / fs;
        for (Eigen::Index i = 0; i < m; ++i) {
            const ld w           = 2 * pi_l * freqs[static_cast<std::size_t>(i)];
            design(k, 2 * i)     = std::sin(w * t);
            design(k, 2 * i + 1) = std::cos(w * t);
        }
        rhs(k) = samples[static_cast<std::size_t>(k)].real();
    }
    const RVec sol = design.completeOrthogonalDecomposition().solve(rhs);
    std::vector<SinusoidComponent> out;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double c = static_cast<double>(sol(2 * i));
        const double s = static_cast<double>(sol(2 * i + 1));
        out.push_back({std::hypot(c, s), freqs[static_cast<std::size_t>(i)], hpencil::wrap_phase(std::atan2(s, c))});
    }
    return out;
}

/// Complex model y_k = sum_i g_i exp(j w_i t_k), g_i = a_i exp(j phi_i).
std::vector<SinusoidComponent> ls_fit_complex(std::span<const Complex> samples, const std::vector<double>& freqs,
                                                     double fs, double t0) {
    const auto rows = static_cast<Eigen::Index>(samples.size());
    const auto m    = static_cast<Eigen::Index>(freqs.size());
    LMat design(rows, m);
    LVec rhs(rows);
    for (Eigen::Index k = 0; k < rows; ++k) {
        const ld t = t0 + static_cast<ld>(k) / fs;
        for (Eigen::Index i = 0; i < m; ++i) {
            design(k, i) = std::polar(1.0L, 2 * pi_l * freqs[static_cast<std::size_t>(i)] * t);
        }
        rhs(k) = cld(samples[static_cast<std::size_t>(k)]);
    }
    const LVec g = design.completeOrthogonalDecomposition().solve(rhs);
    std::vector<SinusoidComponent> out;
    for (Eigen::Index i = 0; i < m; ++i) {
        const Complex gi(static_cast<double>(g(i).real()), static_cast<double>(g(i).imag()));
        out.push_back({std::abs(gi), freqs[static_cast<std::size_t>(i)], hpencil::wrap_phase(std::arg(gi))});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fisher information for one complex tone
// ---------------------------------------------------------------------------

/// Inverse of (2 / sigma^2) Re(J^H J) with J the central-difference Jacobian
/// of mu_k = A exp(j(2 pi f k / fs + phi)) in theta = (f, A, phi).
std::array<double, 3> fisher_crb(double snr_db, std::size_t n, double fs, double f, double amp, double phi) {
    const double sigma2 = amp * amp / std::pow(10.0, snr_db / 10.0);
    auto mu             = [&](const std::array<double, 3>& th, std::size_t k) {
        return th[1] * std::polar(1.0, 2 * std::numbers::pi * th[0] * static_cast<double>(k) / fs + th[2]);
    };
    const std::array<double, 3> theta{f, amp, phi};
    const std::array<double, 3> step{fs * 1e-7, amp * 1e-6, 1e-6};
    Eigen::MatrixXcd jac(static_cast<Eigen::Index>(n), 3);
    for (int p = 0; p < 3; ++p) {
        auto hi = theta, lo = theta;
        hi[p] += step[p];
        lo[p] -= step[p];
        for (std::size_t k = 0; k < n; ++k) {
            jac(static_cast<Eigen::Index>(k), p) = (mu(hi, k) - mu(lo, k)) / (2.0 * step[p]);
        }
    }
    const Eigen::Matrix3d fim = (2.0 / sigma2) * (jac.adjoint() * jac).real();
    const Eigen::Matrix3d inv = fim.inverse();
    return {inv(0, 0), inv(1, 1), inv(2, 2)};
}

// ---------------------------------------------------------------------------
// Periodogram peak
// ---------------------------------------------------------------------------

double periodogram_peak(std::span<const Complex> y, double fs, double lo, double hi, std::size_t grid) {
    auto power = [&](double f) {
        Complex acc{};
        for (std::size_t k = 0; k < y.size(); ++k) {
            acc += y[k] * std::polar(1.0, -2 * std::numbers::pi * f * static_cast<double>(k) / fs);
        }
        return std::norm(acc);
    };
    double best_f = lo, best_p = -1.0;
    for (std::size_t i = 0; i <= grid; ++i) {
        const double f = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid);
        if (const double p = power(f); p > best_p) {
            best_p = p, best_f = f;
        }
    }
    // golden-section refinement within one grid cell either side
    const double cell = (hi - lo) / static_cast<double>(grid);
    double a = best_f - cell, b = best_f + cell;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 80; ++it) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        (power(c) > power(d) ? b : a) = (power(c) > power(d) ? d : c);
    }
    return 0.5 * (a + b);
}

// ---------------------------------------------------------------------------
// Random specs
// ---------------------------------------------------------------------------

double digital_angle(double f, double fs, SignalKind kind) {
    double th = std::fmod(2 * std::numbers::pi * f / fs, 2 * std::numbers::pi);
    if (th < 0) {
        th += 2 * std::numbers::pi;
    }
    if (kind == SignalKind::real && th > std::numbers::pi) {
        th = 2 * std::numbers::pi - th;
    }
    return th;
}

RandomCase random_case(std::uint64_t seed, SignalKind kind, std::size_t m, double fs,
                              double min_angle, double max_condition) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> freq(0.0, 2.0 * fs);
    std::uniform_real_distribution<double> log_amp(std::log(0.01), std::log(10.0));
    std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
    for (;;) {
        std::vector<SinusoidComponent> comps;
        std::vector<double> angles;
        bool ok = true;
        for (std::size_t i = 0; i < m && ok; ++i) {
            const double f  = freq(rng);
            const double th = digital_angle(f, fs, kind);
            if (f <= 0.0) {
                ok = false;
            }
            if (kind == SignalKind::real && (th < min_angle || th > std::numbers::pi - min_angle)) {
                ok = false;
            }
            for (std::size_t j = 0; j < comps.size(); ++j) {
                if (std::abs(comps[j].frequency_hz - f) < 0.05 || angle_distance(angles[j], th, kind) < min_angle) {
                    ok = false;
                }
            }
            comps.push_back({std::exp(log_amp(rng)), f, phase(rng)});
            angles.push_back(th);
        }
        if (!ok) {
            continue;
        }
        const std::size_t count = kind == SignalKind::real ? 4 * m - 1 : 2 * m - 1;
        RandomCase out{hpencil::SignalSpec::make(kind, comps), hpencil::SamplingGrid{fs, count, 0.0}};
        const auto signal = hpencil::synthesize(out.spec, out.grid);
        const auto sv     = singular_values(hpencil::hankel(signal.values));
        const auto sd     = singular_values(hpencil::hankel(*signal.derivative));
        if (sv.front() <= max_condition * sv.back() && sd.front() <= max_condition * sd.back()) {
            return out;
        }
    }
}


} // namespace oracle
