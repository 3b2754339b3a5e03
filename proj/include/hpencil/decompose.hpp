#ifndef HPENCIL_DECOMPOSE_HPP
#define HPENCIL_DECOMPOSE_HPP

///
/// \file decompose.hpp
///
/// End-to-end decomposition of sampled multi-tone signals:
/// pencil -> generalized eigenvalues -> frequencies -> amplitudes and phases.
///
/// Real signals (second derivative available): each tone contributes the
/// double eigenvalue (2 pi f)^2 and amplitude/phase follow from a 2 x 2
/// system built on the two eigenvectors of its eigenspace. Complex signals
/// (first derivative available): each tone contributes the simple eigenvalue
/// 2 pi f and `a e^{j phi} = (v^T Y v) / (v^T G v)`.
///

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "eigensolve.hpp"

namespace hpencil {

/// How surplus candidate clusters (noisy or oversized pencils) are ranked.
enum class CandidateRanking {
    /// Residual of the component whose amplitude/phase come from the eigenvectors.
    eigen_amplitude,
    /// Residual of the best least-squares fit at the candidate frequency.
    least_squares,
};

struct DecomposeOptions {
    SolverOptions solver;
    ClusterOptions cluster;
    std::uint64_t redraw_seed = 0x9e3779b97f4a7c15ULL; // seeds eigenspace re-draws
    int redraw_attempts       = 3;
    double condition_limit    = 1e8; // 2 x 2 amplitude/phase system
    CandidateRanking ranking  = CandidateRanking::eigen_amplitude;
    bool diagnose_model_order = true; // SVD of the sample Hankel matrix
};

/// Options for noisy, overdetermined inputs: cheaper solver route and a
/// looser eigenvalue validity test.
inline DecomposeOptions noisy_decompose_options() {
    DecomposeOptions o;
    o.solver.method          = SolverMethod::standard_reduction;
    o.solver.compute_vectors = false;
    o.cluster.validity_tol   = 1e-1;
    o.ranking                = CandidateRanking::least_squares;
    o.diagnose_model_order   = false;
    return o;
}

/// Options for finite-difference derivatives. Their truncation error splits
/// each real double eigenvalue by up to a few 1e-4 relative (order-8 stencils
/// at fs >= 8 f), and the split can come out as a conjugate pair.
inline DecomposeOptions fd_decompose_options() {
    DecomposeOptions o;
    o.cluster.cluster_tol  = 1e-2;
    o.cluster.validity_tol = 1e-2;
    return o;
}

struct ComponentDiagnostics {
    Complex lambda;
    double eigen_residual = 0.0; // worst member residual
    int multiplicity      = 0;
    double condition      = 1.0; // 2 x 2 system condition (real signals)
    int redraws           = 0;
    double score          = std::numeric_limits<double>::quiet_NaN();
};

struct DecompositionResult {
    std::vector<SinusoidComponent> components; // ascending frequency
    double reconstruction_rms_rel = 0.0;
    std::vector<ComponentDiagnostics> eigen_diagnostics; // parallel to components
    std::vector<FlaggedEigenvalue> excluded;
    std::size_t n = 0;
    SignalKind kind = SignalKind::real;
    std::size_t suggested_m = 0; // singular-value based, diagnostic only
};

struct AmpPhase {
    double amplitude = 0.0;
    double phase_rad = 0.0;
    double condition = 1.0;
    int redraws      = 0;
};

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

inline Series reconstruct(const std::vector<SinusoidComponent>& components, const SamplingGrid& grid,
                          SignalKind kind) {
    Series out(grid.count, Complex{});
    for (std::size_t k = 0; k < grid.count; ++k) {
        const double t = grid.time(k);
        for (const auto& c : components) {
            const double arg = c.angular_frequency() * t + c.phase_rad;
            out[k] += kind == SignalKind::real ? Complex(c.amplitude * std::sin(arg), 0.0) : std::polar(c.amplitude, arg);
        }
    }
    return out;
}

/// ||samples - reconstruction|| / ||samples||.
inline double residual_rel(std::span<const Complex> samples, std::span<const Complex> reconstruction) {
    if (samples.size() != reconstruction.size()) {
        throw Error(ErrorCode::shape, "reconstruction length does not match sample count");
    }
    double diff = 0.0;
    double ref  = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        diff += std::norm(samples[k] - reconstruction[k]);
        ref += std::norm(samples[k]);
    }
    if (ref == 0.0) {
        return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::sqrt(diff / ref);
}

// ---------------------------------------------------------------------------
// Amplitude and phase
// ---------------------------------------------------------------------------

/// Kernel G with `G(k, l) = exp(j 2 pi f (t0 + (k + l) / fs))`. Its imaginary
/// and real parts are the sine and cosine kernels of the real-signal system.
inline Matrix phase_kernel(double frequency_hz, std::size_t n, double sample_rate_hz, double start_time_s = 0.0) {
    const double w = two_pi * frequency_hz;
    Matrix g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < g.rows(); ++k) {
        for (Eigen::Index l = 0; l < g.cols(); ++l) {
            g(k, l) = std::polar(1.0, w * (start_time_s + static_cast<double>(k + l) / sample_rate_hz));
        }
    }
    return g;
}

/// v^T G v without forming G: G is the rank-one product g g^T scaled by
/// exp(j w t0), with g_k = exp(j w k / fs).
inline Complex kernel_form(const Vector& v, double frequency_hz, double sample_rate_hz, double start_time_s) {
    const double w = two_pi * frequency_hz;
    Complex s{};
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        s += std::polar(1.0, w * static_cast<double>(k) / sample_rate_hz) * v(k);
    }
    return std::polar(1.0, w * start_time_s) * s * s;
}

namespace detail {

/// Orthonormal real basis of the span of the real and imaginary parts of the
/// cluster eigenvectors (the real 2-D eigenspace).
inline Eigen::MatrixXd real_eigenspace_basis(const EigenCluster& cluster) {
    const auto n = cluster.members.front().vector.size();
    Eigen::MatrixXd span(n, 2 * static_cast<Eigen::Index>(cluster.members.size()));
    for (std::size_t i = 0; i < cluster.members.size(); ++i) {
        span.col(2 * static_cast<Eigen::Index>(i))     = cluster.members[i].vector.real();
        span.col(2 * static_cast<Eigen::Index>(i) + 1) = cluster.members[i].vector.imag();
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(span, Eigen::ComputeThinU);
    return svd.matrixU().leftCols(2);
}

struct RealSystemSolution {
    double c         = 0.0; // a cos(phi)
    double s         = 0.0; // a sin(phi)
    double condition = std::numeric_limits<double>::infinity();
};

inline RealSystemSolution solve_real_system(const Eigen::VectorXd& u1, const Eigen::VectorXd& u2, const Pencil& p,
                                            double f) {
    const Vector v1 = u1.cast<Complex>();
    const Vector v2 = u2.cast<Complex>();
    const Complex g1 = kernel_form(v1, f, p.sample_rate_hz, p.start_time_s);
    const Complex g2 = kernel_form(v2, f, p.sample_rate_hz, p.start_time_s);
    Eigen::Matrix2d m;
    m << g1.imag(), g1.real(), g2.imag(), g2.real();
    const Eigen::Vector2d rhs(bilinear(v1, p.b_matrix, v1).real(), bilinear(v2, p.b_matrix, v2).real());
    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    RealSystemSolution out;
    // For unit vectors |v^T G v| <= n. Measuring against that bound as well
    // keeps a system whose rows both cancel to rounding noise from passing
    // as well conditioned.
    if (sv(1) > 0.0) {
        out.condition = std::max(sv(0), static_cast<double>(p.n)) / sv(1);
        const Eigen::Vector2d x = svd.solve(rhs);
        out.c = x(0);
        out.s = x(1);
    }
    return out;
}

} // namespace detail

///
/// Amplitude and phase of the real tone owning a double-eigenvalue cluster.
///
/// The two eigenvectors give the rows of
///   [v^T H1 v, v^T H2 v] (a cos phi, a sin phi)^T = v^T X v,
/// with H1 = sin and H2 = cos kernels. If the system is worse conditioned
/// than `condition_limit`, random orthonormal bases of the same eigenspace
/// are drawn from `rng` and tried in turn.
///
inline AmpPhase amp_phase_real(const EigenCluster& cluster, const Pencil& pencil, double f_hz, std::mt19937_64& rng,
                               const DecomposeOptions& options = {}) {
    if (cluster.multiplicity != 2 || cluster.members.size() != 2) {
        throw Error(ErrorCode::invalid_spec, "real amplitude/phase recovery needs a double-eigenvalue cluster");
    }
    if (!(f_hz > 0.0)) {
        throw Error(ErrorCode::domain, "real tone frequency must be positive");
    }
    for (const auto& member : cluster.members) {
        if (!member.has_vector()) {
            throw Error(ErrorCode::incomplete_input, "cluster eigenvectors have not been computed");
        }
    }

    Eigen::VectorXd u1;
    Eigen::VectorXd u2;
    if (cluster.members[0].real_vector && cluster.members[1].real_vector) {
        u1 = cluster.members[0].vector.real();
        u2 = cluster.members[1].vector.real();
    } else {
        const auto basis = detail::real_eigenspace_basis(cluster);
        u1 = basis.col(0);
        u2 = basis.col(1);
    }

    auto sol = detail::solve_real_system(u1, u2, pencil, f_hz);
    int redraws = 0;
    if (!(sol.condition <= options.condition_limit)) {
        Eigen::MatrixXd q(u1.size(), 2);
        q.col(0) = u1;
        q.col(1) = u2;
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
        const Eigen::MatrixXd basis = qr.householderQ() * Eigen::MatrixXd::Identity(u1.size(), 2);
        std::uniform_real_distribution<double> angle(0.0, two_pi);
        while (redraws < options.redraw_attempts && !(sol.condition <= options.condition_limit)) {
            ++redraws;
            const double theta = angle(rng);
            const Eigen::VectorXd r1 = std::cos(theta) * basis.col(0) + std::sin(theta) * basis.col(1);
            const Eigen::VectorXd r2 = -std::sin(theta) * basis.col(0) + std::cos(theta) * basis.col(1);
            sol = detail::solve_real_system(r1, r2, pencil, f_hz);
        }
    }
    if (!(sol.condition <= options.condition_limit)) {
        throw Error(ErrorCode::conditioning, "amplitude/phase system for " + std::to_string(f_hz)
                                                 + " Hz stays ill-conditioned (cond = " + std::to_string(sol.condition)
                                                 + ") after " + std::to_string(redraws) + " eigenspace re-draws");
    }
    return {std::hypot(sol.c, sol.s), std::atan2(sol.s, sol.c), sol.condition, redraws};
}

/// Amplitude and phase of the complex tone owning `pair`: `a e^{j phi} = (v^T Y v) / (v^T G v)`.
inline AmpPhase amp_phase_complex(const EigenPair& pair, const Pencil& pencil, double f_hz) {
    if (!pair.has_vector()) {
        throw Error(ErrorCode::incomplete_input, "eigenvector has not been computed");
    }
    const Complex den    = kernel_form(pair.vector, f_hz, pencil.sample_rate_hz, pencil.start_time_s);
    const double g_scale = static_cast<double>(pencil.n) * pair.vector.squaredNorm(); // ||G||_F ||v||^2
    if (!(std::abs(den) >= 1e-12 * g_scale)) {
        throw Error(ErrorCode::division_degeneracy,
                    "v^T G v vanishes for the " + std::to_string(f_hz) + " Hz eigenvector");
    }
    const Complex ratio = bilinear(pair.vector, pencil.b_matrix, pair.vector) / den;
    return {std::abs(ratio), wrap_phase(std::arg(ratio)), 1.0, 0};
}

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

namespace detail {

inline double frequency_from_lambda(const Complex& lambda_mean, SignalKind kind) {
    if (kind == SignalKind::real) {
        if (!(lambda_mean.real() > 0.0)) {
            throw Error(ErrorCode::nonphysical_eigenvalue,
                        "negative real-pencil eigenvalue " + std::to_string(lambda_mean.real()));
        }
        return std::sqrt(lambda_mean.real()) / two_pi;
    }
    return lambda_mean.real() / two_pi;
}

/// Relative residual of the least-squares single-tone fit at `frequency_hz`.
inline double least_squares_residual(const SampledSignal& signal, double frequency_hz) {
    const double w   = two_pi * frequency_hz;
    const auto count = signal.grid.count;
    double ref       = 0.0;
    for (const auto& y : signal.values) {
        ref += std::norm(y);
    }
    if (ref == 0.0) {
        return 0.0;
    }
    if (signal.kind == SignalKind::complex) {
        Complex proj{};
        for (std::size_t k = 0; k < count; ++k) {
            proj += std::polar(1.0, -w * signal.grid.time(k)) * signal.values[k];
        }
        const double fitted = std::norm(proj) / static_cast<double>(count);
        return std::sqrt(std::max(0.0, ref - fitted) / ref);
    }
    Eigen::Matrix2d normal = Eigen::Matrix2d::Zero();
    Eigen::Vector2d rhs    = Eigen::Vector2d::Zero();
    for (std::size_t k = 0; k < count; ++k) {
        const double t = signal.grid.time(k);
        const Eigen::Vector2d basis(std::sin(w * t), std::cos(w * t));
        normal += basis * basis.transpose();
        rhs += basis * signal.values[k].real();
    }
    const Eigen::Vector2d coeff = normal.completeOrthogonalDecomposition().solve(rhs);
    return std::sqrt(std::max(0.0, ref - coeff.dot(rhs)) / ref);
}

inline SinusoidComponent component_from_cluster(const EigenCluster& cluster, const Pencil& pencil,
                                                std::mt19937_64& rng, const DecomposeOptions& options,
                                                AmpPhase* detail_out = nullptr) {
    const double f = frequency_from_lambda(cluster.lambda_mean, pencil.kind);
    if (f == 0.0) {
        throw Error(ErrorCode::nonphysical_eigenvalue, "zero-frequency eigenvalue");
    }
    AmpPhase ap;
    if (pencil.kind == SignalKind::real) {
        ap = amp_phase_real(cluster, pencil, f, rng, options);
    } else {
        try {
            ap = amp_phase_complex(cluster.members.front(), pencil, f);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::division_degeneracy) {
                throw;
            }
            // Retry with an eigenvector recomputed from a random start vector.
            EigenPair retry = cluster.members.front();
            std::normal_distribution<double> g;
            Vector start(static_cast<Eigen::Index>(pencil.n));
            for (auto& x : start) {
                x = Complex(g(rng), g(rng));
            }
            const Eigen::PartialPivLU<Matrix> lu(pencil.a_matrix - retry.lambda * pencil.b_matrix);
            retry.vector = lu.solve(pencil.b_matrix * start).normalized();
            ap = amp_phase_complex(retry, pencil, f);
            ap.redraws = 1;
        }
    }
    if (detail_out != nullptr) {
        *detail_out = ap;
    }
    return SinusoidComponent::make(ap.amplitude, f, ap.phase_rad);
}

inline DecompositionResult decompose_impl(const SampledSignal& signal, std::size_t m, const DecomposeOptions& options,
                                          SignalKind kind) {
    if (signal.kind != kind) {
        throw Error(ErrorCode::invalid_spec, std::string("expected a ") + to_string(kind) + " signal");
    }
    if (m == 0) {
        throw Error(ErrorCode::invalid_spec, "model order m must be at least 1");
    }
    signal.validate();
    if (signal.grid.count % 2 == 0) {
        throw Error(ErrorCode::shape, "decomposition needs an odd sample count 2n-1, got "
                                          + std::to_string(signal.grid.count));
    }
    const std::size_t n     = signal.grid.pencil_dimension();
    const std::size_t min_n = kind == SignalKind::real ? 2 * m : m;
    if (n < min_n) {
        throw Error(ErrorCode::insufficient_samples,
                    std::to_string(signal.grid.count) + " samples give n = " + std::to_string(n) + " but m = "
                        + std::to_string(m) + " needs n >= " + std::to_string(min_n) + " ("
                        + std::to_string(2 * min_n - 1) + " samples)");
    }

    const Pencil pencil = make_pencil(signal);
    auto pairs          = solve_pencil(pencil, options.solver);
    const bool vectors_for_ranking = options.ranking == CandidateRanking::eigen_amplitude;
    if (vectors_for_ranking) {
        for (auto& pair : pairs) {
            if (is_candidate(pair, kind, options.cluster)) {
                attach_vector(pencil, pair, options.solver.tolerance);
            }
        }
    }

    std::mt19937_64 rng(options.redraw_seed);
    const ClusterScorer scorer = [&](const EigenCluster& c) {
        if (!vectors_for_ranking) {
            return least_squares_residual(signal, frequency_from_lambda(c.lambda_mean, kind));
        }
        std::mt19937_64 local(options.redraw_seed);
        const auto comp = component_from_cluster(c, pencil, local, options);
        return residual_rel(signal.values, reconstruct({comp}, signal.grid, kind));
    };
    auto selection = cluster_eigenvalues(pairs, kind, m, options.cluster, scorer);

    DecompositionResult result;
    result.n           = n;
    result.kind        = kind;
    result.excluded    = std::move(selection.excluded);
    if (options.diagnose_model_order) {
        result.suggested_m = suggest_model_order(pencil);
    }

    std::vector<std::pair<SinusoidComponent, ComponentDiagnostics>> found;
    for (auto& cluster : selection.clusters) {
        for (auto& member : cluster.members) {
            attach_vector(pencil, member, options.solver.tolerance);
        }
        AmpPhase ap;
        const auto comp = component_from_cluster(cluster, pencil, rng, options, &ap);
        ComponentDiagnostics diag;
        diag.lambda       = cluster.lambda_mean;
        diag.multiplicity = cluster.multiplicity;
        diag.condition    = ap.condition;
        diag.redraws      = ap.redraws;
        diag.score        = cluster.score;
        for (const auto& member : cluster.members) {
            diag.eigen_residual = std::max(diag.eigen_residual, member.residual);
        }
        found.emplace_back(comp, diag);
    }
    std::ranges::sort(found, {}, [](const auto& p) { return p.first.frequency_hz; });
    for (auto& [comp, diag] : found) {
        result.components.push_back(comp);
        result.eigen_diagnostics.push_back(diag);
    }
    result.reconstruction_rms_rel
        = residual_rel(signal.values, reconstruct(result.components, signal.grid, kind));
    return result;
}

} // namespace detail

/// Decomposes a real signal with its second derivative; needs 2n-1 samples with n >= 2m.
inline DecompositionResult decompose_real(const SampledSignal& signal, std::size_t m,
                                          const DecomposeOptions& options = {}) {
    return detail::decompose_impl(signal, m, options, SignalKind::real);
}

/// Decomposes a complex signal with its first derivative; needs 2n-1 samples with n >= m.
inline DecompositionResult decompose_complex(const SampledSignal& signal, std::size_t m,
                                             const DecomposeOptions& options = {}) {
    return detail::decompose_impl(signal, m, options, SignalKind::complex);
}

inline DecompositionResult decompose(const SampledSignal& signal, std::size_t m, const DecomposeOptions& options = {}) {
    return signal.kind == SignalKind::real ? decompose_real(signal, m, options) : decompose_complex(signal, m, options);
}

struct ComponentError {
    SinusoidComponent reference;
    SinusoidComponent estimate;
    double abs_freq_hz   = 0.0;
    double abs_amplitude = 0.0;
    double abs_phase_rad = 0.0; // wrapped difference
};

///
/// Pairs each reference tone with a distinct estimate: repeatedly takes the
/// globally closest remaining (reference, estimate) pair in frequency, ties
/// broken by amplitude proximity. Output follows the reference order; unmatched
/// references (fewer estimates) get infinite errors.
///
inline std::vector<ComponentError> match_components(const std::vector<SinusoidComponent>& reference,
                                                    const std::vector<SinusoidComponent>& estimate) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<ComponentError> out(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i) {
        out[i].reference     = reference[i];
        out[i].abs_freq_hz   = inf;
        out[i].abs_amplitude = inf;
        out[i].abs_phase_rad = inf;
    }
    std::vector<bool> ref_used(reference.size()), est_used(estimate.size());
    for (std::size_t round = 0; round < std::min(reference.size(), estimate.size()); ++round) {
        std::size_t bi = 0, bj = 0;
        double bf = inf, ba = inf;
        for (std::size_t i = 0; i < reference.size(); ++i) {
            for (std::size_t j = 0; j < estimate.size() && !ref_used[i]; ++j) {
                if (est_used[j]) {
                    continue;
                }
                const double df = std::abs(reference[i].frequency_hz - estimate[j].frequency_hz);
                const double da = std::abs(reference[i].amplitude - estimate[j].amplitude);
                if (df < bf || (df == bf && da < ba)) {
                    bi = i, bj = j, bf = df, ba = da;
                }
            }
        }
        ref_used[bi] = est_used[bj] = true;
        out[bi].estimate      = estimate[bj];
        out[bi].abs_freq_hz   = bf;
        out[bi].abs_amplitude = ba;
        out[bi].abs_phase_rad = std::abs(phase_difference(estimate[bj].phase_rad, reference[bi].phase_rad));
    }
    return out;
}

} // namespace hpencil

#endif // HPENCIL_DECOMPOSE_HPP
