// hpencil: synthesize, decompose and benchmark multi-tone signals.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <hpencil/hpencil.hpp>

namespace {

using namespace hpencil;

constexpr int exit_ok        = 0;
constexpr int exit_tolerance = 1;
constexpr int exit_input     = 2;
constexpr int exit_numerical = 3;

struct DerivSource {
    enum Mode { analytic, fd, columns, none } mode = columns;
    int accuracy = 8;

    [[nodiscard]] std::string str() const {
        switch (mode) {
        case analytic: return "analytic";
        case fd: return "fd:" + std::to_string(accuracy);
        case columns: return "columns";
        case none: return "none";
        }
        return "?";
    }
};

DerivSource parse_deriv(const std::string& text) {
    DerivSource d;
    if (text == "analytic") {
        d.mode = DerivSource::analytic;
    } else if (text == "columns") {
        d.mode = DerivSource::columns;
    } else if (text == "none") {
        d.mode = DerivSource::none;
    } else if (text.rfind("fd:", 0) == 0 || text == "fd") {
        d.mode = DerivSource::fd;
        if (text.size() > 3) {
            const double acc = detail::parse_double(text.substr(3), "finite-difference accuracy");
            d.accuracy       = static_cast<int>(acc);
            if (acc != d.accuracy) {
                throw Error(ErrorCode::parse, "finite-difference accuracy must be an integer");
            }
        }
    } else {
        throw Error(ErrorCode::parse, "--deriv must be analytic, columns, none or fd:N, got '" + text + "'");
    }
    return d;
}

/// Writes to `path`, or stdout when the path is empty or "-".
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::io, "cannot open output file '" + path + "'");
    }
    fn(out);
    if (!out) {
        throw Error(ErrorCode::io, "failed writing '" + path + "'");
    }
}

std::string fmt(double v, const char* spec = "%.3e") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string spec_path;
    std::string output;
    std::optional<double> sample_rate;
    std::optional<std::size_t> samples;
    std::string deriv = "analytic";
};

int cmd_synth(const SynthArgs& a) {
    auto file = read_spec_file(a.spec_path);
    if (a.sample_rate) {
        file.sample_rate_hz = *a.sample_rate;
    }
    if (a.samples) {
        file.samples = *a.samples;
    }
    const auto deriv = parse_deriv(a.deriv);
    if (deriv.mode == DerivSource::columns) {
        throw Error(ErrorCode::invalid_spec, "synth takes --deriv analytic, fd:N or none");
    }
    const auto grid = file.grid();
    auto signal     = synthesize(file.spec, grid);
    if (deriv.mode == DerivSource::fd) {
        signal = with_fd_derivative(std::move(signal), deriv.accuracy);
    }
    HeaderEcho echo{{"command", "synth"},
                    {"spec", a.spec_path},
                    {"kind", to_string(file.spec.kind())},
                    {"sample_rate_hz", format_number(grid.sample_rate_hz)},
                    {"samples", std::to_string(grid.count)},
                    {"start_time_s", format_number(grid.start_time_s)},
                    {"deriv", deriv.str()}};
    for (const auto& c : file.spec.components()) {
        echo.emplace_back("tone", format_number(c.frequency_hz) + ", " + format_number(c.amplitude) + ", "
                                      + format_number(rad_to_deg(c.phase_rad)));
    }
    with_output(a.output, [&](std::ostream& out) {
        write_signal_csv(out, signal, deriv.mode != DerivSource::none, echo);
    });
    return exit_ok;
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

struct DecomposeArgs {
    std::string input;
    std::string output;
    std::string spec_path; // optional truth for tolerance checks
    std::size_t m = 0;
    std::optional<double> sample_rate;
    std::string deriv          = "columns";
    double residual_threshold  = 1e-6;
    double tol_f               = 1e-6;
    double tol_a               = 1e-6;
    double tol_phi_deg         = 1e-5;
};

int cmd_decompose(const DecomposeArgs& a) {
    std::ifstream in(a.input);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open input file '" + a.input + "'");
    }
    auto signal      = read_signal_csv(in, a.sample_rate);
    const auto deriv = parse_deriv(a.deriv);
    if (deriv.mode == DerivSource::fd) {
        signal = with_fd_derivative(std::move(signal), deriv.accuracy);
    } else if (deriv.mode == DerivSource::columns) {
        if (!signal.derivative) {
            throw Error(ErrorCode::incomplete_input,
                        std::string("input has no derivative columns (") + (signal.kind == SignalKind::real ? "d2" : "d1_re,d1_im")
                            + "); add them with 'synth --deriv analytic' or pass --deriv fd:8");
        }
    } else {
        throw Error(ErrorCode::invalid_spec, "decompose takes --deriv columns or fd:N");
    }

    std::optional<SpecFile> truth;
    if (!a.spec_path.empty()) {
        truth = read_spec_file(a.spec_path);
    }
    std::size_t m = a.m;
    if (m == 0) {
        if (!truth) {
            throw Error(ErrorCode::invalid_spec, "model order unknown: pass --m or --spec");
        }
        m = truth->spec.size();
    }

    const auto result = decompose(signal, m, deriv.mode == DerivSource::fd ? fd_decompose_options() : DecomposeOptions{});
    auto doc          = to_json(result);
    doc["config"]     = {{"command", "decompose"},
                         {"input", a.input},
                         {"m", m},
                         {"sample_rate_hz", signal.grid.sample_rate_hz},
                         {"samples", signal.grid.count},
                         {"start_time_s", signal.grid.start_time_s},
                         {"deriv", deriv.str()},
                         {"residual_threshold", a.residual_threshold}};

    bool ok = result.reconstruction_rms_rel <= a.residual_threshold;
    if (truth) {
        const auto& want = truth->spec.components();
        double ef = 0.0, ea = 0.0, ep = 0.0;
        if (truth->spec.kind() != signal.kind) {
            throw Error(ErrorCode::invalid_spec, "reference spec kind does not match the input signal");
        }
        for (const auto& e : match_components(want, result.components)) {
            ef = std::max(ef, e.abs_freq_hz);
            ea = std::max(ea, e.abs_amplitude);
            ep = std::max(ep, rad_to_deg(e.abs_phase_rad));
        }
        const bool within = ef <= a.tol_f && ea <= a.tol_a && ep <= a.tol_phi_deg;
        ok                = ok && within;
        doc["config"]["spec"]      = a.spec_path;
        doc["config"]["tolerance"] = {{"frequency_hz", a.tol_f}, {"amplitude", a.tol_a}, {"phase_deg", a.tol_phi_deg}};
        doc["max_error"] = {{"frequency_hz", ef}, {"amplitude", ea}, {"phase_deg", ep}, {"within_tolerance", within}};
    }
    doc["pass"] = ok;
    with_output(a.output, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
    return ok ? exit_ok : exit_tolerance;
}

// ---------------------------------------------------------------------------
// repro-tables
// ---------------------------------------------------------------------------

struct ReproArgs {
    std::string output;
    std::optional<double> tol_f, tol_a, tol_phi_deg;
};

SignalSpec ten_tone_spec(SignalKind kind) {
    const double f[]   = {35, 60, 97, 97.5, 120, 135, 160, 230, 270, 290};
    const double amp[] = {1.5, 3.5, 2, 0.1, 1.2, 0.8, 2.5, 0.8, 1, 0.3};
    const double phi[] = {30, 50, 170, 230, 90, 145, 0, 330, 280, 0};
    std::vector<SinusoidComponent> comps;
    for (int i = 0; i < 10; ++i) {
        comps.push_back(SinusoidComponent{amp[i], f[i], deg_to_rad(phi[i])});
    }
    return SignalSpec::make(kind, std::move(comps));
}

struct ReproRow {
    double f, df, da, dp_deg;
};

std::vector<ReproRow> repro_errors(SignalKind kind) {
    const auto spec   = ten_tone_spec(kind);
    const std::size_t count = kind == SignalKind::real ? 39 : 19;
    const auto signal = synthesize(spec, SamplingGrid{299.0, count, 0.0});
    const auto result = decompose(signal, spec.size());
    std::vector<ReproRow> rows;
    for (const auto& e : match_components(spec.components(), result.components)) {
        rows.push_back({e.reference.frequency_hz, e.abs_freq_hz, e.abs_amplitude, rad_to_deg(e.abs_phase_rad)});
    }
    return rows;
}

int cmd_repro_tables(const ReproArgs& a) {
    struct Half {
        const char* name;
        SignalKind kind;
        double tf, ta, tp;
        std::vector<ReproRow> rows;
    };
    Half halves[] = {{"real", SignalKind::real, a.tol_f.value_or(1e-6), a.tol_a.value_or(1e-6), a.tol_phi_deg.value_or(1e-5), {}},
                     {"complex", SignalKind::complex, a.tol_f.value_or(1e-5), a.tol_a.value_or(1e-5),
                      a.tol_phi_deg.value_or(1e-4), {}}};
    std::cout << "# command = repro-tables\n# sample_rate_hz = 299\n# samples = 39 (real), 19 (complex)\n# deriv = analytic\n";
    for (auto& h : halves) {
        std::cout << "# tolerance_" << h.name << " = " << fmt(h.tf) << " Hz, " << fmt(h.ta) << ", " << fmt(h.tp)
                  << " deg\n";
        h.rows = repro_errors(h.kind);
    }
    std::cout << "\nAbsolute errors per component\n";
    std::cout << "  f_i [Hz] |  real: df [Hz]   da          dphi [deg] | complex: df [Hz]   da          dphi [deg]\n";
    for (std::size_t i = 0; i < halves[0].rows.size(); ++i) {
        const auto& r = halves[0].rows[i];
        const auto& c = halves[1].rows[i];
        std::cout << "  " << fmt(r.f, "%8.1f") << " |  " << fmt(r.df) << "  " << fmt(r.da) << "  " << fmt(r.dp_deg)
                  << " |          " << fmt(c.df) << "  " << fmt(c.da) << "  " << fmt(c.dp_deg) << '\n';
    }
    bool all_ok = true;
    for (const auto& h : halves) {
        double mf = 0, ma = 0, mp = 0;
        for (const auto& r : h.rows) {
            mf = std::max(mf, r.df);
            ma = std::max(ma, r.da);
            mp = std::max(mp, r.dp_deg);
        }
        const bool ok = mf <= h.tf && ma <= h.ta && mp <= h.tp;
        all_ok        = all_ok && ok;
        std::cout << (ok ? "PASS " : "FAIL ") << h.name << ": max errors " << fmt(mf) << " Hz, " << fmt(ma) << ", "
                  << fmt(mp) << " deg\n";
    }
    if (!a.output.empty()) {
        with_output(a.output, [&](std::ostream& out) {
            out << "kind,frequency_hz,abs_err_f_hz,abs_err_a,abs_err_phi_deg\n";
            for (const auto& h : halves) {
                for (const auto& r : h.rows) {
                    out << h.name << ',' << format_number(r.f) << ',' << format_number(r.df) << ','
                        << format_number(r.da) << ',' << format_number(r.dp_deg) << '\n';
                }
            }
        });
    }
    return all_ok ? exit_ok : exit_tolerance;
}

// ---------------------------------------------------------------------------
// fmcw-sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string output;
    std::vector<std::string> snr{"-10", "0", "10", "20", "30"};
    std::size_t trials = 1000;
    std::uint64_t seed = 42;
    std::size_t samples = 257;
    std::string deriv   = "analytic";
    double range_m      = FmcwConfig{}.target_range_m;
};

int cmd_fmcw_sweep(const SweepArgs& a) {
    FmcwTrialConfig cfg;
    cfg.trials    = a.trials;
    cfg.seed      = a.seed;
    cfg.n_samples = a.samples;
    cfg.radar.target_range_m = a.range_m;
    cfg.snr_grid_db.clear();
    for (const auto& s : a.snr) {
        cfg.snr_grid_db.push_back(detail::parse_double(s, "SNR"));
    }
    const auto deriv = parse_deriv(a.deriv);
    if (deriv.mode == DerivSource::analytic) {
        cfg.derivative_mode = DerivativeMode::independent_noise;
    } else if (deriv.mode == DerivSource::fd) {
        cfg.derivative_mode = DerivativeMode::differentiate_noisy;
        cfg.fd_accuracy     = deriv.accuracy;
    } else {
        throw Error(ErrorCode::invalid_spec, "fmcw-sweep takes --deriv analytic or fd:N");
    }
    cfg.radar.validate();

    std::string snr_list;
    for (std::size_t i = 0; i < cfg.snr_grid_db.size(); ++i) {
        snr_list += (i ? "," : "") + format_number(cfg.snr_grid_db[i]);
    }
    const HeaderEcho echo{{"command", "fmcw-sweep"},
                          {"chirp_start_hz", format_number(cfg.radar.chirp_start_hz)},
                          {"bandwidth_hz", format_number(cfg.radar.bandwidth_hz)},
                          {"chirp_duration_s", format_number(cfg.radar.chirp_duration_s)},
                          {"target_range_m", format_number(cfg.radar.target_range_m)},
                          {"samples", std::to_string(cfg.n_samples)},
                          {"sample_rate_hz", format_number(cfg.grid().sample_rate_hz)},
                          {"snr_db", snr_list},
                          {"trials", std::to_string(cfg.trials)},
                          {"seed", std::to_string(cfg.seed)},
                          {"derivative_mode", to_string(cfg.derivative_mode)}};

    const auto stats = run_fmcw_trials(cfg);
    with_output(a.output, [&](std::ostream& out) { write_statistics_csv(out, stats, echo); });

    // Human-readable summary goes to stderr when the CSV is on stdout.
    std::ostream& report = (a.output.empty() || a.output == "-") ? std::cerr : std::cout;
    bool decreasing = true;
    for (std::size_t i = 1; i < stats.size(); ++i) {
        if (!(stats[i].mse_distance_m2 < stats[i - 1].mse_distance_m2)) {
            decreasing = false;
        }
    }
    report << "sigma_s^2 trend over SNR: " << (decreasing ? "strictly decreasing" : "NOT strictly decreasing") << '\n';
    for (const auto& s : stats) {
        if (!std::isfinite(s.snr_db)) {
            continue;
        }
        report << "  " << fmt(s.snr_db, "%6.1f") << " dB: mse_f/crb_f = " << fmt(s.parameter_mse.freq / s.crb.freq)
               << ", mse_a/crb_a = " << fmt(s.parameter_mse.amp / s.crb.amp)
               << ", mse_phi/crb_phi = " << fmt(s.parameter_mse.phase / s.crb.phase)
               << (s.parameter_mse.freq < s.crb.freq ? "  (frequency MSE below CRB)" : "") << '\n';
    }
    return exit_ok;
}

int report_error(ErrorCode code, const std::string& message) {
    std::cerr << "error: " << to_string(code) << ": " << message << '\n';
    return is_input_error(code) ? exit_input : exit_numerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hankel-pencil sinusoid decomposition"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "write a sampled signal CSV from a spec file");
    s->add_option("--spec", synth.spec_path, "spec file")->required();
    s->add_option("--output,-o", synth.output, "output CSV (default stdout)");
    s->add_option("--sample-rate", synth.sample_rate, "override sample_rate_hz");
    s->add_option("--samples", synth.samples, "override samples");
    s->add_option("--deriv", synth.deriv, "analytic | fd:N | none")->capture_default_str();

    DecomposeArgs dec;
    auto* d = app.add_subcommand("decompose", "decompose a signal CSV, emit result JSON");
    d->add_option("--input,-i", dec.input, "signal CSV")->required();
    d->add_option("--output,-o", dec.output, "output JSON (default stdout)");
    d->add_option("--spec", dec.spec_path, "reference spec for tolerance checks");
    d->add_option("--m", dec.m, "model order (default: tone count in --spec)");
    d->add_option("--sample-rate", dec.sample_rate, "sample rate (default: inferred from t)");
    d->add_option("--deriv", dec.deriv, "columns | fd:N")->capture_default_str();
    d->add_option("--residual-threshold", dec.residual_threshold, "max relative reconstruction residual")
        ->capture_default_str();
    d->add_option("--tolerance-f", dec.tol_f, "frequency tolerance [Hz]")->capture_default_str();
    d->add_option("--tolerance-a", dec.tol_a, "amplitude tolerance")->capture_default_str();
    d->add_option("--tolerance-phi", dec.tol_phi_deg, "phase tolerance [deg]")->capture_default_str();

    ReproArgs repro;
    auto* r = app.add_subcommand("repro-tables", "ten-tone real and complex reproduction with error table");
    r->add_option("--output,-o", repro.output, "also write the error table as CSV");
    r->add_option("--tolerance-f", repro.tol_f, "frequency tolerance [Hz] for both halves");
    r->add_option("--tolerance-a", repro.tol_a, "amplitude tolerance for both halves");
    r->add_option("--tolerance-phi", repro.tol_phi_deg, "phase tolerance [deg] for both halves");

    SweepArgs sweep;
    auto* f = app.add_subcommand("fmcw-sweep", "Monte Carlo FMCW ranging over an SNR grid");
    f->add_option("--output,-o", sweep.output, "statistics CSV (default stdout)");
    f->add_option("--snr", sweep.snr, "SNR grid in dB, comma separated; 'inf' for noise-free")
        ->delimiter(',')
        ->capture_default_str();
    f->add_option("--trials", sweep.trials, "trials per SNR")->capture_default_str();
    f->add_option("--seed", sweep.seed, "base seed")->capture_default_str();
    f->add_option("--samples", sweep.samples, "samples per chirp (odd)")->capture_default_str();
    f->add_option("--deriv", sweep.deriv, "analytic | fd:N")->capture_default_str();
    f->add_option("--range", sweep.range_m, "target range [m]")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        return report_error(ErrorCode::parse, msg);
    }

    try {
        if (s->parsed()) {
            return cmd_synth(synth);
        }
        if (d->parsed()) {
            return cmd_decompose(dec);
        }
        if (r->parsed()) {
            return cmd_repro_tables(repro);
        }
        return cmd_fmcw_sweep(sweep);
    } catch (const Error& e) {
        return report_error(e.code(), e.what());
    } catch (const std::exception& e) {
        return report_error(ErrorCode::solver, e.what());
    }
}
