#ifndef HPENCIL_EIGENSOLVE_HPP
#define HPENCIL_EIGENSOLVE_HPP

///
/// \file eigensolve.hpp
///
/// Dense generalized eigensolver for Hankel pencils and grouping of the
/// resulting eigenvalues into signal clusters.
///
/// Two routes are offered. `SolverMethod::qz` runs the LAPACK generalized
/// Schur (QZ) drivers `dggev`/`zggev` on (A, B) directly and reports infinite
/// or indeterminate eigenvalues through the (alpha, beta) pairs.
/// `SolverMethod::standard_reduction` solves the standard problem B^{-1} A
/// with `zgeev`; it is several times cheaper for large noisy pencils and falls
/// back to QZ when B is numerically singular.
///

#include <complex>
#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pencil.hpp"

namespace hpencil {

enum class SolverMethod { qz, standard_reduction };

enum class EigenStatus { finite, infinite, indeterminate };

constexpr const char* to_string(EigenStatus s) noexcept {
    switch (s) {
    case EigenStatus::finite: return "finite";
    case EigenStatus::infinite: return "infinite";
    case EigenStatus::indeterminate: return "indeterminate";
    }
    return "unknown";
}

struct SolverOptions {
    SolverMethod method  = SolverMethod::qz;
    bool compute_vectors = true;
    double tolerance     = 1e-8; // residual bound for a pair to count as converged
};

struct EigenPair {
    Complex lambda;
    Vector vector; // unit Euclidean norm; empty until computed
    double residual  = std::numeric_limits<double>::infinity();
    EigenStatus status = EigenStatus::finite;
    bool converged   = false;
    // Real pencils only: false when the eigenvector kept a non-negligible
    // imaginary part (e.g. a double eigenvalue split into a conjugate pair).
    bool real_vector = false;

    [[nodiscard]] bool finite() const noexcept { return status == EigenStatus::finite; }
    [[nodiscard]] bool has_vector() const noexcept { return vector.size() > 0; }
};

namespace detail {

using RealMatrix = Eigen::MatrixXd;
using LapackMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

/// Scales to unit norm and rotates so the largest entry is real positive.
inline void canonicalize(Vector& v) {
    const double norm = v.norm();
    if (norm == 0.0 || !std::isfinite(norm)) {
        return;
    }
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    const Complex pivot = v(imax);
    v *= std::conj(pivot) / (std::abs(pivot) * norm);
}

inline EigenStatus classify(Complex alpha, Complex beta, double a_norm, double b_norm, std::size_t n) {
    const double tol     = 100.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon();
    const bool beta_zero  = std::abs(beta) <= tol * b_norm;
    const bool alpha_zero = std::abs(alpha) <= tol * a_norm;
    if (beta_zero && alpha_zero) {
        return EigenStatus::indeterminate;
    }
    return beta_zero ? EigenStatus::infinite : EigenStatus::finite;
}

inline void solver_failure(const char* routine, lapack_int info) {
    throw Error(ErrorCode::solver, std::string(routine) + " failed to converge (info = " + std::to_string(info)
                                       + "); the QZ iteration did not reach a generalized Schur form");
}

inline std::vector<EigenPair> solve_real_qz(const Pencil& p, bool vectors, double a_norm, double b_norm) {
    const auto n = static_cast<lapack_int>(p.n);
    RealMatrix a = p.a_matrix.real();
    RealMatrix b = p.b_matrix.real();
    std::vector<double> alphar(p.n), alphai(p.n), beta(p.n);
    RealMatrix vr(vectors ? n : 1, vectors ? n : 1);
    double dummy    = 0.0;
    const auto info = LAPACKE_dggev(LAPACK_COL_MAJOR, 'N', vectors ? 'V' : 'N', n, a.data(), n, b.data(), n,
                                    alphar.data(), alphai.data(), beta.data(), &dummy, 1, vr.data(), vr.rows());
    if (info != 0) {
        solver_failure("dggev", info);
    }
    std::vector<EigenPair> out(p.n);
    for (lapack_int j = 0; j < n; ++j) {
        const Complex alpha(alphar[j], alphai[j]);
        auto& pair  = out[j];
        pair.status = classify(alpha, beta[j], a_norm, b_norm, p.n);
        pair.lambda = pair.finite() ? alpha / beta[j]
                                    : Complex(std::numeric_limits<double>::infinity(), 0.0);
        if (vectors) {
            if (alphai[j] == 0.0) {
                pair.vector = vr.col(j).cast<Complex>();
            } else if (alphai[j] > 0.0) {
                pair.vector = vr.col(j).cast<Complex>() + Complex(0.0, 1.0) * vr.col(j + 1).cast<Complex>();
            } else {
                pair.vector = vr.col(j - 1).cast<Complex>() - Complex(0.0, 1.0) * vr.col(j).cast<Complex>();
            }
        }
    }
    return out;
}

inline std::vector<EigenPair> solve_complex_qz(const Pencil& p, bool vectors, double a_norm, double b_norm) {
    const auto n = static_cast<lapack_int>(p.n);
    LapackMatrix a = p.a_matrix;
    LapackMatrix b = p.b_matrix;
    std::vector<Complex> alpha(p.n), beta(p.n);
    LapackMatrix vr(vectors ? n : 1, vectors ? n : 1);
    Complex dummy{};
    const auto info = LAPACKE_zggev(LAPACK_COL_MAJOR, 'N', vectors ? 'V' : 'N', n, a.data(), n, b.data(), n,
                                    alpha.data(), beta.data(), &dummy, 1, vr.data(), vr.rows());
    if (info != 0) {
        solver_failure("zggev", info);
    }
    std::vector<EigenPair> out(p.n);
    for (lapack_int j = 0; j < n; ++j) {
        auto& pair  = out[j];
        pair.status = classify(alpha[j], beta[j], a_norm, b_norm, p.n);
        pair.lambda = pair.finite() ? alpha[j] / beta[j]
                                    : Complex(std::numeric_limits<double>::infinity(), 0.0);
        if (vectors) {
            pair.vector = vr.col(j);
        }
    }
    return out;
}

/// Returns an empty result when B is too ill-conditioned for the reduction.
inline std::vector<EigenPair> solve_reduced(const Pencil& p, bool vectors) {
    // LAPACK rather than Eigen for the factor and the n-column solve: this is
    // most of the non-eigensolver cost of a Monte Carlo trial.
    const auto n     = static_cast<lapack_int>(p.n);
    LapackMatrix lu  = p.b_matrix;
    std::vector<lapack_int> piv(p.n);
    const double b_1 = LAPACKE_zlange(LAPACK_COL_MAJOR, '1', n, n, lu.data(), n);
    if (LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, lu.data(), n, piv.data()) != 0) {
        return {};
    }
    double rcond = 0.0;
    if (LAPACKE_zgecon(LAPACK_COL_MAJOR, '1', n, lu.data(), n, b_1, &rcond) != 0 || !(rcond > 1e-12)) {
        return {};
    }
    LapackMatrix c = p.a_matrix;
    if (LAPACKE_zgetrs(LAPACK_COL_MAJOR, 'N', n, n, lu.data(), n, piv.data(), c.data(), n) != 0) {
        return {};
    }
    std::vector<Complex> w(p.n);
    LapackMatrix vr(vectors ? n : 1, vectors ? n : 1);
    Complex dummy{};
    const auto info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', vectors ? 'V' : 'N', n, c.data(), n, w.data(), &dummy, 1,
                                    vr.data(), vr.rows());
    if (info != 0) {
        solver_failure("zgeev", info);
    }
    std::vector<EigenPair> out(p.n);
    for (lapack_int j = 0; j < n; ++j) {
        out[j].lambda = w[j];
        out[j].status = EigenStatus::finite;
        if (vectors) {
            out[j].vector = vr.col(j);
        }
    }
    return out;
}

} // namespace detail

/// Normwise backward residual ||A v - lambda B v|| / (||A|| + |lambda| ||B||) for unit v.
inline double pair_residual(const Pencil& p, const Complex& lambda, const Vector& v) {
    const double denom = p.a_matrix.norm() + std::abs(lambda) * p.b_matrix.norm();
    if (denom == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return (p.a_matrix * v - lambda * (p.b_matrix * v)).norm() / (denom * v.norm());
}

/// Finalizes an eigenvector: canonical scaling, real-pencil imaginary
/// truncation, residual and convergence flag.
inline void finish_pair(const Pencil& p, EigenPair& pair, double tolerance) {
    if (!pair.has_vector() || !pair.finite()) {
        return;
    }
    detail::canonicalize(pair.vector);
    if (p.kind == SignalKind::real) {
        const double imag_norm = pair.vector.imag().norm();
        pair.real_vector       = imag_norm <= 1e-8 * pair.vector.norm();
        if (pair.real_vector) {
            pair.vector = pair.vector.real().cast<Complex>();
            pair.vector.normalize();
        }
    }
    pair.residual  = pair_residual(p, pair.lambda, pair.vector);
    pair.converged = pair.residual <= tolerance;
}

/// Computes the eigenvector of a finite eigenvalue by inverse iteration.
inline void attach_vector(const Pencil& p, EigenPair& pair, double tolerance = 1e-8) {
    if (!pair.finite() || pair.has_vector()) {
        return;
    }
    const auto n = static_cast<lapack_int>(p.n);
    std::vector<lapack_int> piv(p.n);
    detail::LapackMatrix lu = p.a_matrix - pair.lambda * p.b_matrix;
    // An exactly singular shifted matrix only has a zero pivot; nudge the shift.
    if (LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, lu.data(), n, piv.data()) > 0) {
        lu = p.a_matrix - pair.lambda * (1.0 + 1e-14) * p.b_matrix;
        LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, lu.data(), n, piv.data());
    }
    Vector v = Vector::Ones(static_cast<Eigen::Index>(p.n)).normalized();
    for (int it = 0; it < 3; ++it) {
        Vector next = p.b_matrix * v;
        if (LAPACKE_zgetrs(LAPACK_COL_MAJOR, 'N', n, 1, lu.data(), n, piv.data(), next.data(), n) != 0) {
            break;
        }
        const double norm = next.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            break;
        }
        v = next / norm;
    }
    pair.vector = v;
    finish_pair(p, pair, tolerance);
}

///
/// Solves A v = lambda B v. Every one of the n generalized eigenvalues is
/// returned; infinite and indeterminate ones carry their status instead of
/// being dropped.
///
inline std::vector<EigenPair> solve_pencil(const Pencil& pencil, const SolverOptions& options = {}) {
    if (pencil.n == 0 || pencil.degenerate()) {
        throw Error(ErrorCode::degenerate_pencil, "pencil right-hand matrix is identically zero");
    }
    const double a_norm = pencil.a_matrix.norm();
    const double b_norm = pencil.b_matrix.norm();
    std::vector<EigenPair> pairs;
    if (options.method == SolverMethod::standard_reduction) {
        pairs = detail::solve_reduced(pencil, options.compute_vectors);
    }
    if (pairs.empty()) {
        pairs = pencil.kind == SignalKind::real
                  ? detail::solve_real_qz(pencil, options.compute_vectors, a_norm, b_norm)
                  : detail::solve_complex_qz(pencil, options.compute_vectors, a_norm, b_norm);
    }
    for (auto& pair : pairs) {
        finish_pair(pencil, pair, options.tolerance);
    }
    return pairs;
}

// ---------------------------------------------------------------------------
// Clustering
// ---------------------------------------------------------------------------

struct EigenCluster {
    Complex lambda_mean;
    std::vector<EigenPair> members;
    int multiplicity = 0;
    double score     = std::numeric_limits<double>::quiet_NaN(); // ranking residual when one was used
};

enum class ExclusionReason { not_finite, nonphysical, negative, unpaired, not_selected };

constexpr const char* to_string(ExclusionReason r) noexcept {
    switch (r) {
    case ExclusionReason::not_finite: return "not_finite";
    case ExclusionReason::nonphysical: return "nonphysical";
    case ExclusionReason::negative: return "negative";
    case ExclusionReason::unpaired: return "unpaired";
    case ExclusionReason::not_selected: return "not_selected";
    }
    return "unknown";
}

struct FlaggedEigenvalue {
    Complex lambda;
    ExclusionReason reason;
    EigenStatus status = EigenStatus::finite;
};

struct ClusterOptions {
    double cluster_tol  = 1e-6; // relative distance for pairing real-pencil double eigenvalues
    double validity_tol = 1e-4; // max |imag(lambda)| / |lambda|
};

struct ClusterSelection {
    std::vector<EigenCluster> clusters; // m clusters, ascending by real(lambda_mean)
    std::vector<FlaggedEigenvalue> excluded;
};

/// Scores a candidate cluster; lower is better. Throwing disqualifies it.
using ClusterScorer = std::function<double(const EigenCluster&)>;

inline double imaginary_residue(const Complex& lambda) noexcept {
    const double mag = std::abs(lambda);
    return mag > 0.0 ? std::abs(lambda.imag()) / mag : std::numeric_limits<double>::infinity();
}

/// Whether a pair can take part in a signal cluster. Sets `reason` otherwise.
inline bool is_candidate(const EigenPair& pair, SignalKind kind, const ClusterOptions& options,
                         ExclusionReason* reason = nullptr) {
    auto reject = [&](ExclusionReason r) {
        if (reason != nullptr) {
            *reason = r;
        }
        return false;
    };
    if (!pair.finite() || !std::isfinite(pair.lambda.real()) || !std::isfinite(pair.lambda.imag())) {
        return reject(ExclusionReason::not_finite);
    }
    if (imaginary_residue(pair.lambda) > options.validity_tol) {
        return reject(ExclusionReason::nonphysical);
    }
    if (kind == SignalKind::real && pair.lambda.real() <= 0.0) {
        return reject(ExclusionReason::negative);
    }
    return true;
}

///
/// Groups eigenpairs into signal clusters and keeps m of them.
///
/// Real pencils: candidates are paired with their neighbour when within
/// `cluster_tol` relative distance (real-signal double roots). Complex pencils:
/// every candidate is a singleton. When more than m clusters survive, the
/// `scorer` ranks them (reconstruction residual in the decomposition
/// pipeline); without a scorer the smallest imaginary residue wins.
///
inline ClusterSelection cluster_eigenvalues(const std::vector<EigenPair>& pairs, SignalKind kind, std::size_t m,
                                            const ClusterOptions& options = {}, const ClusterScorer& scorer = {}) {
    if (m == 0) {
        throw Error(ErrorCode::invalid_spec, "model order m must be at least 1");
    }
    ClusterSelection result;
    std::vector<const EigenPair*> candidates;
    for (const auto& pair : pairs) {
        ExclusionReason reason{};
        if (is_candidate(pair, kind, options, &reason)) {
            candidates.push_back(&pair);
        } else {
            result.excluded.push_back({pair.lambda, reason, pair.status});
        }
    }
    std::ranges::stable_sort(candidates, {}, [](const EigenPair* p) { return p->lambda.real(); });

    std::vector<EigenCluster> clusters;
    if (kind == SignalKind::complex) {
        for (const auto* p : candidates) {
            clusters.push_back({p->lambda, {*p}, 1});
        }
    } else {
        for (std::size_t i = 0; i < candidates.size();) {
            if (i + 1 < candidates.size()) {
                const Complex mean = 0.5 * (candidates[i]->lambda + candidates[i + 1]->lambda);
                if (std::abs(candidates[i]->lambda - candidates[i + 1]->lambda) <= 2.0 * options.cluster_tol * std::abs(mean)) {
                    clusters.push_back({mean, {*candidates[i], *candidates[i + 1]}, 2});
                    i += 2;
                    continue;
                }
            }
            result.excluded.push_back({candidates[i]->lambda, ExclusionReason::unpaired, candidates[i]->status});
            ++i;
        }
    }

    if (clusters.size() < m) {
        std::string found = "found " + std::to_string(clusters.size()) + " of " + std::to_string(m)
                          + " signal clusters";
        std::string offending;
        bool nonphysical = false;
        for (const auto& f : result.excluded) {
            if (f.reason == ExclusionReason::nonphysical || f.reason == ExclusionReason::negative) {
                nonphysical = true;
                offending += " (" + std::to_string(f.lambda.real()) + (f.lambda.imag() < 0 ? "" : "+")
                           + std::to_string(f.lambda.imag()) + "j)";
            }
        }
        if (nonphysical) {
            throw Error(ErrorCode::nonphysical_eigenvalue, found + "; nonphysical eigenvalues:" + offending);
        }
        throw Error(ErrorCode::insufficient_signal, found);
    }

    if (clusters.size() > m) {
        if (scorer) {
            for (auto& c : clusters) {
                try {
                    c.score = scorer(c);
                    if (std::isnan(c.score)) {
                        c.score = std::numeric_limits<double>::infinity();
                    }
                } catch (const Error&) {
                    c.score = std::numeric_limits<double>::infinity();
                }
            }
            std::ranges::stable_sort(clusters, {}, &EigenCluster::score);
        } else {
            std::ranges::stable_sort(clusters, {}, [](const EigenCluster& c) { return imaginary_residue(c.lambda_mean); });
        }
        for (std::size_t i = m; i < clusters.size(); ++i) {
            result.excluded.push_back({clusters[i].lambda_mean, ExclusionReason::not_selected, EigenStatus::finite});
        }
        clusters.resize(m);
        std::ranges::stable_sort(clusters, {}, [](const EigenCluster& c) { return c.lambda_mean.real(); });
    }
    result.clusters = std::move(clusters);
    return result;
}

/// Bilinear form u^T M v with plain transpose (no conjugation).
inline Complex bilinear(const Vector& u, const Matrix& m, const Vector& v) {
    return (u.transpose() * (m * v))(0, 0);
}

/// Bilinear Rayleigh quotient (v^T A v) / (v^T B v).
inline Complex rayleigh_quotient(const Pencil& p, const Vector& v) {
    return bilinear(v, p.a_matrix, v) / bilinear(v, p.b_matrix, v);
}

} // namespace hpencil

#endif // HPENCIL_EIGENSOLVE_HPP
