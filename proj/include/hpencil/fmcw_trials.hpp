#ifndef HPENCIL_FMCW_TRIALS_HPP
#define HPENCIL_FMCW_TRIALS_HPP

///
/// \file fmcw_trials.hpp
///
/// Monte Carlo ranging experiment: a noisy FMCW beat tone is decomposed with
/// the complex pencil and the recovered frequency converted back to range.
///

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "decompose.hpp"
#include "numerics.hpp"

namespace hpencil {

struct FmcwTrialConfig {
    FmcwConfig radar;
    std::size_t n_samples = 257; // spans one chirp, fs = n_samples / T_c
    std::vector<double> snr_grid_db{-10.0, 0.0, 10.0, 20.0, 30.0};
    std::size_t trials  = 1000;
    std::uint64_t seed  = 42;
    DerivativeMode derivative_mode = DerivativeMode::independent_noise;
    int fd_accuracy = 8;
    std::size_t threads = 0; // 0: one per hardware thread

    [[nodiscard]] SamplingGrid grid() const {
        return {static_cast<double>(n_samples) / radar.chirp_duration_s, n_samples, 0.0};
    }
};

struct ParameterTriple {
    double freq  = 0.0; // Hz^2
    double amp   = 0.0;
    double phase = 0.0; // rad^2
};

struct TrialStatistics {
    double snr_db = 0.0;
    std::size_t trials = 0;
    std::size_t excluded_trials = 0;
    double mean_abs_error_m = 0.0; // |mean(R_i) - R| over included trials
    double mean_rel_error   = 0.0; // mean_abs_error_m / R
    double mse_distance_m2  = 0.0; // mean (R_i - R)^2
    ParameterTriple parameter_mse;
    ParameterTriple crb;           // zero for the noise-free sentinel
    std::size_t negative_frequency_trials = 0;
    std::size_t failed_trials = 0;
};

///
/// Runs `trials` noisy decompositions per SNR. Trial t at SNR index s draws
/// its noise from `derive_seed(seed, {s})` and trial index t, so results do not
/// depend on evaluation order. Trials with a negative beat frequency or a
/// failed decomposition are excluded from the statistics and counted.
///
inline std::vector<TrialStatistics> run_fmcw_trials(const FmcwTrialConfig& config) {
    if (config.trials == 0) {
        throw Error(ErrorCode::invalid_spec, "at least one trial per SNR is required");
    }
    if (config.n_samples % 2 == 0 || config.n_samples < 3) {
        throw Error(ErrorCode::shape, "FMCW sample count must be odd and at least 3");
    }
    const auto spec  = fmcw_beat(config.radar);
    if (spec.components().front().frequency_hz * config.radar.chirp_duration_s < 1.0) {
        throw Error(ErrorCode::invalid_spec, "beat tone completes less than one cycle per chirp");
    }
    const auto truth = spec.components().front();
    const auto grid  = config.grid();
    const auto clean = eval_complex(spec, grid);
    const double range = config.radar.target_range_m;
    const auto options = noisy_decompose_options();

    // Every (SNR, trial) outcome is computed first, possibly on several
    // threads, then reduced in a fixed order: results do not depend on the
    // schedule or the thread count.
    enum class Outcome : unsigned char { used, failed, negative };
    struct Trial {
        Outcome outcome = Outcome::failed;
        SinusoidComponent est;
    };
    const std::size_t total = config.snr_grid_db.size() * config.trials;
    std::vector<Trial> trials(total);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            const std::size_t s = i / config.trials, t = i % config.trials;
            const NoiseModel noise{config.snr_grid_db[s], derive_seed(config.seed, {s}),
                                   NoiseKind::complex_circular_gaussian};
            const auto noisy = add_noise(clean, noise, config.derivative_mode, t, config.fd_accuracy);
            try {
                trials[i].est     = decompose_complex(noisy, 1, options).components.front();
                trials[i].outcome = trials[i].est.frequency_hz < 0.0 ? Outcome::negative : Outcome::used;
            } catch (const Error&) {
                trials[i].outcome = Outcome::failed;
            }
        }
    };
    std::size_t threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, total);
    {
        std::vector<std::jthread> pool;
        for (std::size_t k = 1; k < threads; ++k) {
            pool.emplace_back(worker);
        }
        worker();
    }

    std::vector<TrialStatistics> out;
    for (std::size_t s = 0; s < config.snr_grid_db.size(); ++s) {
        const double snr = config.snr_grid_db[s];
        TrialStatistics st;
        st.snr_db = snr;
        st.trials = config.trials;
        double sum_r = 0.0;
        double sum_se = 0.0;
        ParameterTriple sum_param;
        std::size_t used = 0;
        for (std::size_t t = 0; t < config.trials; ++t) {
            const auto& trial = trials[s * config.trials + t];
            if (trial.outcome == Outcome::failed) {
                ++st.failed_trials;
                continue;
            }
            if (trial.outcome == Outcome::negative) {
                ++st.negative_frequency_trials;
                continue;
            }
            const auto& est = trial.est;
            const double r = distance_from_frequency(est.frequency_hz, config.radar);
            sum_r += r;
            sum_se += (r - range) * (r - range);
            const double df = est.frequency_hz - truth.frequency_hz;
            const double da = est.amplitude - truth.amplitude;
            const double dp = phase_difference(est.phase_rad, truth.phase_rad);
            sum_param.freq += df * df;
            sum_param.amp += da * da;
            sum_param.phase += dp * dp;
            ++used;
        }
        st.excluded_trials = st.failed_trials + st.negative_frequency_trials;
        if (used == 0) {
            throw Error(ErrorCode::statistics, "all " + std::to_string(config.trials) + " trials excluded at SNR "
                                                   + std::to_string(snr) + " dB");
        }
        const double nu      = static_cast<double>(used);
        st.mean_abs_error_m  = std::abs(sum_r / nu - range);
        st.mean_rel_error    = st.mean_abs_error_m / range;
        st.mse_distance_m2   = sum_se / nu;
        st.parameter_mse     = {sum_param.freq / nu, sum_param.amp / nu, sum_param.phase / nu};
        if (std::isfinite(snr)) {
            const auto crb = crb_single_tone(snr, config.n_samples, grid.sample_rate_hz, truth.amplitude);
            st.crb         = {crb.var_freq_hz2, crb.var_amp, crb.var_phase_rad2};
        }
        out.push_back(st);
    }
    return out;
}

} // namespace hpencil

#endif // HPENCIL_FMCW_TRIALS_HPP
