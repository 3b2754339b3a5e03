// Randomized round-trip properties over seeded specs.

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace hpencil;

namespace {

constexpr std::uint64_t kSpecs = 200;

struct Draw {
    oracle::RandomCase c;
    SampledSignal signal;
    SignalKind kind;
    std::size_t m;
};

Draw draw(std::uint64_t seed) {
    const auto kind     = seed % 2 ? SignalKind::complex : SignalKind::real;
    const std::size_t m = 1 + (seed / 2) % 6;
    auto c              = oracle::random_case(seed, kind, m);
    auto s              = synthesize(c.spec, c.grid);
    return {std::move(c), std::move(s), kind, m};
}

} // namespace

TEST(RoundTrip, RecoversEveryParameter) {
    for (std::uint64_t seed = 0; seed < kSpecs; ++seed) {
        const auto d  = draw(seed);
        const auto r  = decompose(d.signal, d.m);
        const double fs = d.c.grid.sample_rate_hz;
        ASSERT_EQ(r.components.size(), d.m) << "seed " << seed;
        for (const auto& e : match_components(d.c.spec.components(), r.components)) {
            EXPECT_LE(e.abs_freq_hz, 1e-6 * fs) << "seed " << seed;
            EXPECT_LE(e.abs_amplitude / e.reference.amplitude, 1e-6) << "seed " << seed;
            EXPECT_LE(e.abs_phase_rad, 1e-5) << "seed " << seed;
        }
        EXPECT_LE(r.reconstruction_rms_rel, 1e-8) << "seed " << seed;
    }
}

TEST(RoundTrip, MinimumPencilHasOnlyFiniteSignalEigenvalues) {
    for (std::uint64_t seed = 0; seed < kSpecs; ++seed) {
        const auto d     = draw(seed);
        const auto pairs = solve_pencil(make_pencil(d.signal));
        ASSERT_EQ(pairs.size(), d.kind == SignalKind::real ? 2 * d.m : d.m);
        for (const auto& p : pairs) {
            EXPECT_EQ(p.status, EigenStatus::finite) << "seed " << seed;
        }
    }
}

TEST(RoundTrip, AmplitudesAndPhasesMatchLeastSquares) {
    for (std::uint64_t seed = 0; seed < kSpecs; ++seed) {
        const auto d = draw(seed);
        const auto r = decompose(d.signal, d.m);
        std::vector<double> freqs;
        for (const auto& c : r.components) {
            freqs.push_back(c.frequency_hz);
        }
        const auto ls = d.kind == SignalKind::real ? oracle::ls_fit_real(d.signal.values, freqs, d.c.grid.sample_rate_hz)
                                                   : oracle::ls_fit_complex(d.signal.values, freqs, d.c.grid.sample_rate_hz);
        for (std::size_t i = 0; i < d.m; ++i) {
            EXPECT_LE(std::abs(r.components[i].amplitude - ls[i].amplitude), 1e-8 * ls[i].amplitude) << "seed " << seed;
            EXPECT_LE(std::abs(phase_difference(r.components[i].phase_rad, ls[i].phase_rad)), 1e-8) << "seed " << seed;
        }
    }
}

TEST(RoundTrip, RayleighQuotientAndWeightedOrthogonality) {
    for (std::uint64_t seed = 0; seed < kSpecs; ++seed) {
        const auto d     = draw(seed);
        const auto p     = make_pencil(d.signal);
        const auto pairs = solve_pencil(p);
        for (const auto& pair : pairs) {
            ASSERT_TRUE(pair.converged) << "seed " << seed;
            EXPECT_LE(std::abs(rayleigh_quotient(p, pair.vector) - pair.lambda), 1e-6 * std::abs(pair.lambda))
                << "seed " << seed;
        }
        const auto sel = cluster_eigenvalues(pairs, d.kind, d.m);
        for (std::size_t i = 0; i < sel.clusters.size(); ++i) {
            for (std::size_t k = i + 1; k < sel.clusters.size(); ++k) {
                for (const auto& a : sel.clusters[i].members) {
                    for (const auto& b : sel.clusters[k].members) {
                        const double scale = std::max(std::abs(bilinear(a.vector, p.b_matrix, a.vector)),
                                                      std::abs(bilinear(b.vector, p.b_matrix, b.vector)));
                        EXPECT_LE(std::abs(bilinear(a.vector, p.b_matrix, b.vector)), 1e-8 * scale) << "seed " << seed;
                    }
                }
            }
        }
    }
}

TEST(RoundTrip, StartTimeOffsetIsHonoured) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto d = draw(seed);
        d.c.grid.start_time_s = 0.37;
        const auto s          = synthesize(d.c.spec, d.c.grid);
        const auto r          = decompose(s, d.m);
        for (const auto& e : match_components(d.c.spec.components(), r.components)) {
            EXPECT_LE(e.abs_freq_hz, 1e-6 * d.c.grid.sample_rate_hz) << "seed " << seed;
            EXPECT_LE(e.abs_amplitude / e.reference.amplitude, 1e-6) << "seed " << seed;
            EXPECT_LE(e.abs_phase_rad, 1e-5) << "seed " << seed;
        }
    }
}

TEST(RoundTrip, DecompositionIsDeterministic) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = draw(seed);
        const auto a = decompose(d.signal, d.m);
        const auto b = decompose(d.signal, d.m);
        for (std::size_t i = 0; i < d.m; ++i) {
            EXPECT_EQ(a.components[i].frequency_hz, b.components[i].frequency_hz);
            EXPECT_EQ(a.components[i].amplitude, b.components[i].amplitude);
            EXPECT_EQ(a.components[i].phase_rad, b.components[i].phase_rad);
        }
    }
}

// Order-8 finite-difference second derivatives instead of analytic ones.
TEST(FiniteDifferenceMode, SingleRealToneFrequencyWithin1e4) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ratio(8.0, 40.0), freq(0.5, 500.0), phase(-3.14, 3.14), log_amp(-2.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double f   = freq(rng);
        const double fs  = f * ratio(rng);
        const double a   = std::pow(10.0, log_amp(rng));
        const std::size_t count = std::size_t{11} + 2 * static_cast<std::size_t>(i % 16);
        const auto exact = synthesize(SignalSpec::make(SignalKind::real, {{a, f, phase(rng)}}), {fs, count, 0.0});
        const auto r     = decompose_real(with_fd_derivative(exact, 8), 1, fd_decompose_options());
        EXPECT_LE(std::abs(r.components[0].frequency_hz - f) / f, 1e-4)
            << "f " << f << " fs " << fs << " samples " << count;
    }
}
