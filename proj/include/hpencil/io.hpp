#ifndef HPENCIL_IO_HPP
#define HPENCIL_IO_HPP

///
/// \file io.hpp
///
/// File formats: key-value signal specs, signal CSV, result JSON and
/// Monte Carlo statistics CSV.
///
/// Spec files hold one `key = value` per line, `#` starts a comment:
///
///     kind = real              # or complex
///     sample_rate_hz = 299
///     samples = 39
///     start_time_s = 0
///     tone = 35, 1.5, 30       # frequency_hz, amplitude, phase_deg
///
/// Signal CSV: optional `#` comment lines, then a header `t,value[,d2]` for
/// real signals or `t,re,im[,d1_re,d1_im]` for complex signals. Numbers are
/// written with 17 significant digits.
///

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "decompose.hpp"
#include "fmcw_trials.hpp"

namespace hpencil {

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        out.push_back(trim(item));
    }
    if (!s.empty() && s.back() == sep) {
        out.emplace_back();
    }
    return out;
}

inline double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v   = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        if (text == "inf" || text == "+inf") {
            return std::numeric_limits<double>::infinity();
        }
        throw Error(ErrorCode::parse, "cannot parse " + what + " from '" + text + "'");
    }
}

inline std::size_t parse_count(const std::string& text, const std::string& what) {
    const double v = parse_double(text, what);
    if (!(v >= 1.0) || v != std::floor(v)) {
        throw Error(ErrorCode::parse, what + " must be a positive integer, got '" + text + "'");
    }
    return static_cast<std::size_t>(v);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Spec files
// ---------------------------------------------------------------------------

struct SpecFile {
    SignalSpec spec = SignalSpec::make(SignalKind::real, {SinusoidComponent{}});
    std::optional<double> sample_rate_hz;
    std::optional<std::size_t> samples;
    double start_time_s = 0.0;

    /// Grid from the file, with `samples` defaulting to the minimal count
    /// (4m - 1 real, 2m - 1 complex).
    [[nodiscard]] SamplingGrid grid() const {
        if (!sample_rate_hz) {
            throw Error(ErrorCode::invalid_spec, "no sample rate given (set sample_rate_hz or --sample-rate)");
        }
        const std::size_t m   = spec.size();
        const std::size_t def = spec.kind() == SignalKind::real ? 4 * m - 1 : 2 * m - 1;
        SamplingGrid g{*sample_rate_hz, samples.value_or(def), start_time_s};
        g.validate();
        return g;
    }
};

inline SpecFile parse_spec(std::istream& in) {
    std::optional<SignalKind> kind;
    std::vector<SinusoidComponent> tones;
    SpecFile out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::parse, "spec line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const auto key   = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (key == "kind") {
            if (value == "real") {
                kind = SignalKind::real;
            } else if (value == "complex") {
                kind = SignalKind::complex;
            } else {
                throw Error(ErrorCode::parse, "spec line " + std::to_string(line_no) + ": kind must be real or complex");
            }
        } else if (key == "sample_rate_hz") {
            out.sample_rate_hz = detail::parse_double(value, "sample_rate_hz");
        } else if (key == "samples") {
            out.samples = detail::parse_count(value, "samples");
        } else if (key == "start_time_s") {
            out.start_time_s = detail::parse_double(value, "start_time_s");
        } else if (key == "tone") {
            const auto fields = detail::split(value, ',');
            if (fields.size() != 3) {
                throw Error(ErrorCode::parse, "spec line " + std::to_string(line_no)
                                                  + ": tone needs frequency_hz, amplitude, phase_deg");
            }
            tones.push_back(SinusoidComponent{detail::parse_double(fields[1], "amplitude"),
                                              detail::parse_double(fields[0], "frequency_hz"),
                                              deg_to_rad(detail::parse_double(fields[2], "phase_deg"))});
        } else {
            throw Error(ErrorCode::parse, "spec line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    if (!kind) {
        throw Error(ErrorCode::parse, "spec is missing 'kind'");
    }
    out.spec = SignalSpec::make(*kind, std::move(tones));
    return out;
}

inline SpecFile read_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open spec file '" + path + "'");
    }
    return parse_spec(in);
}

inline void write_spec(std::ostream& out, const SpecFile& file) {
    out << "kind = " << to_string(file.spec.kind()) << '\n';
    if (file.sample_rate_hz) {
        out << "sample_rate_hz = " << format_number(*file.sample_rate_hz) << '\n';
    }
    if (file.samples) {
        out << "samples = " << *file.samples << '\n';
    }
    out << "start_time_s = " << format_number(file.start_time_s) << '\n';
    for (const auto& c : file.spec.components()) {
        out << "tone = " << format_number(c.frequency_hz) << ", " << format_number(c.amplitude) << ", "
            << format_number(rad_to_deg(c.phase_rad)) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Signal CSV
// ---------------------------------------------------------------------------

using HeaderEcho = std::vector<std::pair<std::string, std::string>>;

inline void write_signal_csv(std::ostream& out, const SampledSignal& signal, bool with_derivative,
                             const HeaderEcho& echo = {}) {
    for (const auto& [k, v] : echo) {
        out << "# " << k << " = " << v << '\n';
    }
    const bool deriv = with_derivative && signal.derivative.has_value();
    if (signal.kind == SignalKind::real) {
        out << "t,value" << (deriv ? ",d2" : "") << '\n';
    } else {
        out << "t,re,im" << (deriv ? ",d1_re,d1_im" : "") << '\n';
    }
    for (std::size_t k = 0; k < signal.values.size(); ++k) {
        out << format_number(signal.grid.time(k));
        if (signal.kind == SignalKind::real) {
            out << ',' << format_number(signal.values[k].real());
            if (deriv) {
                out << ',' << format_number((*signal.derivative)[k].real());
            }
        } else {
            out << ',' << format_number(signal.values[k].real()) << ',' << format_number(signal.values[k].imag());
            if (deriv) {
                out << ',' << format_number((*signal.derivative)[k].real()) << ','
                    << format_number((*signal.derivative)[k].imag());
            }
        }
        out << '\n';
    }
}

///
/// Reads a signal CSV. The sample rate is taken from `sample_rate_hz` when
/// given, otherwise inferred from the first and last time stamps. Derivative
/// columns, when present, are attached with external provenance.
///
inline SampledSignal read_signal_csv(std::istream& in, std::optional<double> sample_rate_hz = {}) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        header = detail::split(line, ',');
        break;
    }
    if (header.empty()) {
        throw Error(ErrorCode::parse, "signal CSV has no header");
    }
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        return std::nullopt;
    };
    const auto t_col = column("t");
    if (!t_col) {
        throw Error(ErrorCode::parse, "signal CSV header lacks a 't' column");
    }
    SampledSignal sig;
    std::optional<std::size_t> re_col, im_col, d_re_col, d_im_col;
    if (auto v = column("value")) {
        sig.kind = SignalKind::real;
        re_col   = v;
        d_re_col = column("d2");
    } else if (column("re") && column("im")) {
        sig.kind = SignalKind::complex;
        re_col   = column("re");
        im_col   = column("im");
        d_re_col = column("d1_re");
        d_im_col = column("d1_im");
        if (d_re_col.has_value() != d_im_col.has_value()) {
            throw Error(ErrorCode::parse, "complex derivative needs both d1_re and d1_im columns");
        }
    } else {
        throw Error(ErrorCode::parse, "signal CSV header must be 't,value[,d2]' or 't,re,im[,d1_re,d1_im]'");
    }

    std::vector<double> times;
    Series values;
    Series deriv;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto f = detail::split(line, ',');
        if (f.size() != header.size()) {
            throw Error(ErrorCode::parse, "signal CSV row " + std::to_string(row) + " has " + std::to_string(f.size())
                                              + " fields, header has " + std::to_string(header.size()));
        }
        times.push_back(detail::parse_double(f[*t_col], "t"));
        const double re = detail::parse_double(f[*re_col], "sample");
        const double im = im_col ? detail::parse_double(f[*im_col], "sample") : 0.0;
        values.emplace_back(re, im);
        if (d_re_col) {
            const double dre = detail::parse_double(f[*d_re_col], "derivative");
            const double dim = d_im_col ? detail::parse_double(f[*d_im_col], "derivative") : 0.0;
            deriv.emplace_back(dre, dim);
        }
    }
    if (values.empty()) {
        throw Error(ErrorCode::parse, "signal CSV has no samples");
    }
    double fs = 0.0;
    if (sample_rate_hz) {
        fs = *sample_rate_hz;
    } else if (times.size() >= 2 && times.back() > times.front()) {
        fs = static_cast<double>(times.size() - 1) / (times.back() - times.front());
    } else {
        throw Error(ErrorCode::invalid_spec, "cannot infer the sample rate from a single sample; pass --sample-rate");
    }
    sig.grid   = SamplingGrid{fs, values.size(), times.front()};
    sig.values = std::move(values);
    if (d_re_col) {
        sig.derivative            = std::move(deriv);
        sig.derivative_order      = sig.kind == SignalKind::real ? 2 : 1;
        sig.derivative_provenance = DerivativeProvenance::external;
    }
    sig.validate();
    return sig;
}

// ---------------------------------------------------------------------------
// Result JSON
// ---------------------------------------------------------------------------

inline nlohmann::json components_json(const std::vector<SinusoidComponent>& comps) {
    auto arr = nlohmann::json::array();
    for (const auto& c : comps) {
        arr.push_back({{"frequency_hz", c.frequency_hz}, {"amplitude", c.amplitude}, {"phase_deg", rad_to_deg(c.phase_rad)}});
    }
    return arr;
}

inline nlohmann::json to_json(const DecompositionResult& r) {
    nlohmann::json diag;
    diag["kind"]        = to_string(r.kind);
    diag["n"]           = r.n;
    diag["m"]           = r.components.size();
    diag["suggested_m"] = r.suggested_m;
    auto eig            = nlohmann::json::array();
    for (const auto& d : r.eigen_diagnostics) {
        nlohmann::json e{{"lambda_re", d.lambda.real()},
                         {"lambda_im", d.lambda.imag()},
                         {"residual", d.eigen_residual},
                         {"multiplicity", d.multiplicity},
                         {"condition", d.condition},
                         {"redraws", d.redraws}};
        if (std::isfinite(d.score)) {
            e["score"] = d.score;
        }
        eig.push_back(e);
    }
    diag["eigenvalues"] = eig;
    auto excl           = nlohmann::json::array();
    for (const auto& f : r.excluded) {
        nlohmann::json e{{"reason", to_string(f.reason)}, {"status", to_string(f.status)}};
        if (f.status == EigenStatus::finite) {
            e["lambda_re"] = f.lambda.real();
            e["lambda_im"] = f.lambda.imag();
        }
        excl.push_back(e);
    }
    diag["excluded"] = excl;
    return {{"components", components_json(r.components)}, {"residual_rel", r.reconstruction_rms_rel}, {"diagnostics", diag}};
}

// ---------------------------------------------------------------------------
// Statistics CSV
// ---------------------------------------------------------------------------

inline void write_statistics_csv(std::ostream& out, const std::vector<TrialStatistics>& stats,
                                 const HeaderEcho& echo = {}) {
    for (const auto& [k, v] : echo) {
        out << "# " << k << " = " << v << '\n';
    }
    out << "snr_db,trials,excluded,mean_abs_err_m,mean_rel_err,mse_m2,mse_f,mse_a,mse_phi,crb_f,crb_a,crb_phi\n";
    for (const auto& s : stats) {
        out << format_number(s.snr_db) << ',' << s.trials << ',' << s.excluded_trials << ','
            << format_number(s.mean_abs_error_m) << ',' << format_number(s.mean_rel_error) << ','
            << format_number(s.mse_distance_m2) << ',' << format_number(s.parameter_mse.freq) << ','
            << format_number(s.parameter_mse.amp) << ',' << format_number(s.parameter_mse.phase) << ','
            << format_number(s.crb.freq) << ',' << format_number(s.crb.amp) << ',' << format_number(s.crb.phase)
            << '\n';
    }
}

} // namespace hpencil

#endif // HPENCIL_IO_HPP
