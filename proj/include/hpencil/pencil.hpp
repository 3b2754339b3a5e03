#ifndef HPENCIL_PENCIL_HPP
#define HPENCIL_PENCIL_HPP

///
/// \file pencil.hpp
///
/// Square Hankel matrices of sample series and the generalized eigenvalue
/// pencils built from a signal and its derivative:
///
///   real signals:    -D_x v = lambda X v   (second derivative)
///   complex signals: -j D_y v = lambda Y v (first derivative)
///

#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "model.hpp"

namespace hpencil {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// n x n Hankel matrix with `out(k, l) = series[k + l]`; the series length must be 2n - 1.
inline Matrix hankel(std::span<const Complex> series) {
    if (series.empty() || series.size() % 2 == 0) {
        throw Error(ErrorCode::shape,
                    "Hankel construction needs an odd, nonzero series length, got " + std::to_string(series.size()));
    }
    const auto n = static_cast<Eigen::Index>((series.size() + 1) / 2);
    Matrix out(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < n; ++l) {
            out(k, l) = series[static_cast<std::size_t>(k + l)];
        }
    }
    return out;
}

struct Pencil {
    Matrix a_matrix; // -D_x or -j D_y
    Matrix b_matrix; // X or Y
    std::size_t n = 0;
    SignalKind kind = SignalKind::real;
    double sample_rate_hz = 1.0;
    double start_time_s   = 0.0;

    /// True when the right-hand matrix is identically zero.
    [[nodiscard]] bool degenerate() const { return b_matrix.cwiseAbs().maxCoeff() == 0.0; }
};

namespace detail {

inline void require_derivative(const SampledSignal& signal, int order) {
    signal.validate();
    if (!signal.derivative) {
        throw Error(ErrorCode::incomplete_input, "pencil construction needs a derivative series");
    }
    if (signal.derivative_order != order) {
        throw Error(ErrorCode::order_mismatch, "pencil needs a derivative of order " + std::to_string(order)
                                                   + ", got order " + std::to_string(signal.derivative_order));
    }
}

} // namespace detail

inline Pencil real_pencil(const SampledSignal& signal) {
    if (signal.kind != SignalKind::real) {
        throw Error(ErrorCode::invalid_spec, "real pencil needs a real signal");
    }
    detail::require_derivative(signal, 2);
    Pencil p;
    p.b_matrix       = hankel(signal.values).real().cast<Complex>();
    p.a_matrix       = -hankel(*signal.derivative).real().cast<Complex>();
    p.n              = static_cast<std::size_t>(p.b_matrix.rows());
    p.kind           = SignalKind::real;
    p.sample_rate_hz = signal.grid.sample_rate_hz;
    p.start_time_s   = signal.grid.start_time_s;
    return p;
}

inline Pencil complex_pencil(const SampledSignal& signal) {
    if (signal.kind != SignalKind::complex) {
        throw Error(ErrorCode::invalid_spec, "complex pencil needs a complex signal");
    }
    detail::require_derivative(signal, 1);
    Pencil p;
    p.b_matrix       = hankel(signal.values);
    p.a_matrix       = Complex(0.0, -1.0) * hankel(*signal.derivative);
    p.n              = static_cast<std::size_t>(p.b_matrix.rows());
    p.kind           = SignalKind::complex;
    p.sample_rate_hz = signal.grid.sample_rate_hz;
    p.start_time_s   = signal.grid.start_time_s;
    return p;
}

inline Pencil make_pencil(const SampledSignal& signal) {
    return signal.kind == SignalKind::real ? real_pencil(signal) : complex_pencil(signal);
}

/// Number of singular values of `m` above `rel_tol * sigma_max`.
inline std::size_t numerical_rank(const Matrix& m, double rel_tol) {
    const Eigen::BDCSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) {
        return 0;
    }
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > rel_tol * s(0)) {
            ++rank;
        }
    }
    return rank;
}

/// Model-order suggestion from singular-value decay of the sample Hankel
/// matrix. Diagnostic only; decompositions always take m from the caller.
inline std::size_t suggest_model_order(const Pencil& pencil, double rel_tol = 1e-10) {
    const auto rank = numerical_rank(pencil.b_matrix, rel_tol);
    return pencil.kind == SignalKind::real ? rank / 2 : rank;
}

} // namespace hpencil

#endif // HPENCIL_PENCIL_HPP
