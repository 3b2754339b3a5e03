#ifndef HPENCIL_TESTS_SUPPORT_HPP
#define HPENCIL_TESTS_SUPPORT_HPP

// Independent oracles and random spec generators shared by the test suites.
// Nothing here calls into the pencil or eigensolve code paths.

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <hpencil/hpencil.hpp>

namespace oracle {

using hpencil::Complex;
using hpencil::SignalKind;
using hpencil::SinusoidComponent;
using cld = std::complex<long double>;

struct Tone {
    double f, a, phi_deg;
};

const std::vector<Tone>& ten_tones();
hpencil::SignalSpec ten_tone_spec(SignalKind kind);

std::vector<double> singular_values(const Eigen::MatrixXcd& m);

/// Number of singular values above `ratio` times the largest.
int rank(const Eigen::MatrixXcd& m, double ratio);

/// Coefficients c_0..c_n of det(A - lambda B) in long double, by
/// interpolation at n+1 nodes spread over [0, scale].
std::vector<cld> char_poly(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, long double scale);

/// Polynomial roots by Durand-Kerner iteration, sorted by real part.
std::vector<cld> poly_roots(std::vector<cld> coefficients);

/// Least-squares amplitude/phase at known frequencies, in long double.
/// Real model x_k = sum_i c_i sin(w_i t_k) + s_i cos(w_i t_k) with
/// (c_i, s_i) = a_i (cos phi_i, sin phi_i); complex model
/// y_k = sum_i a_i exp(j phi_i) exp(j w_i t_k).
std::vector<SinusoidComponent> ls_fit_real(std::span<const Complex> samples, const std::vector<double>& freqs,
                                           double fs, double t0 = 0.0);
std::vector<SinusoidComponent> ls_fit_complex(std::span<const Complex> samples, const std::vector<double>& freqs,
                                              double fs, double t0 = 0.0);

/// Diagonal of the inverse Fisher information for one complex tone
/// mu_k = A exp(j(2 pi f k / fs + phi)) in circular noise of variance
/// A^2 / SNR, from a central-difference Jacobian in (f, A, phi).
std::array<double, 3> fisher_crb(double snr_db, std::size_t n, double fs, double f, double amp, double phi);

/// Frequency in [lo, hi] maximizing |sum_k y_k exp(-j 2 pi f k / fs)|^2:
/// dense grid search, then golden-section refinement.
double periodogram_peak(std::span<const Complex> y, double fs, double lo, double hi, std::size_t grid = 20000);

struct RandomCase {
    hpencil::SignalSpec spec;
    hpencil::SamplingGrid grid;
};

/// Folded digital angle of a tone: real tones cannot be told apart from
/// their mirror images, complex tones only modulo the sample rate.
double digital_angle(double f, double fs, SignalKind kind);

///
/// m tones with frequencies uniform in (0, 2 fs), separations >= 0.05 Hz,
/// amplitudes log-uniform in [0.01, 10], phases uniform, on the minimum grid
/// (4m - 1 real, 2m - 1 complex samples).
///
/// Draws whose sampled tones coincide after aliasing (digital angles closer
/// than `min_angle`, or real tones within `min_angle` of DC or the folding
/// frequency) are redrawn: such specs make the sample Hankel matrix rank
/// deficient for any method. Draws whose sample or derivative Hankel matrix
/// has a 2-norm condition number above `max_condition` are redrawn too; a
/// backward-stable solver loses about log10(condition) digits on those.
///
RandomCase random_case(std::uint64_t seed, SignalKind kind, std::size_t m, double fs = 100.0,
                       double min_angle = 0.05, double max_condition = 1e3);

} // namespace oracle

#endif // HPENCIL_TESTS_SUPPORT_HPP
