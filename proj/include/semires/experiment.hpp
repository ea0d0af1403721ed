#pragma once

// Config-driven experiments: classify, sweep, quasimode, glue, billiard, gevrey.
// Each run produces report.json, data.csv and plot.script in memory; write_artifacts
// commits them to a directory in one rename.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "json.hpp"

#include "billiard_modes.hpp"
#include "config.hpp"
#include "gluing_harness.hpp"
#include "quasimode_builder.hpp"
#include "resolvent_probe.hpp"
#include "scaling_fit.hpp"
#include "trapping_classifier.hpp"
#include "warp_model.hpp"

namespace semires {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum class ExperimentKind { classify, sweep, quasimode, glue, billiard, gevrey };

inline std::string to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::classify: return "classify";
    case ExperimentKind::sweep: return "sweep";
    case ExperimentKind::quasimode: return "quasimode";
    case ExperimentKind::glue: return "glue";
    case ExperimentKind::billiard: return "billiard";
    case ExperimentKind::gevrey: return "gevrey";
    }
    return "unknown";
}

inline std::optional<ExperimentKind> parse_kind(const std::string& s) {
    for (auto k : {ExperimentKind::classify, ExperimentKind::sweep, ExperimentKind::quasimode, ExperimentKind::glue,
                   ExperimentKind::billiard, ExperimentKind::gevrey})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

enum ExitCode : int { exit_ok = 0, exit_error = 1, exit_inconsistent = 2, exit_inconclusive = 3 };

inline int exit_code_for(Verdict v) {
    switch (v) {
    case Verdict::consistent: return exit_ok;
    case Verdict::inconsistent: return exit_inconsistent;
    case Verdict::inconclusive: return exit_inconclusive;
    }
    return exit_error;
}

struct Artifacts {
    Json report;
    std::string csv;
    std::string plot;
    std::vector<std::pair<std::string, std::string>> extra;  // additional files (name, contents)
    std::vector<std::string> warnings;
    int exit_code = exit_ok;
};

struct RunOverrides {
    std::optional<unsigned long long> seed;
    std::optional<int> h_points;
};

// ---------------------------------------------------------------------------
// JSON helpers

inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const CriticalComponent& c) {
    const ScalingLaw law = predicted_law(c);
    Json j;
    j["x_left"] = c.x_left;
    j["x_right"] = c.x_right;
    j["kind"] = to_string(c.kind);
    j["order"] = c.infinite() ? Json("INFINITE") : Json(c.order);
    j["critical_value"] = c.critical_value;
    j["predicted_form"] = to_string(law.form);
    j["predicted_gamma"] = json_number(law.exponent);
    j["fitted_order"] = json_number(c.fitted_order);
    return j;
}

inline Json to_json(const TrappingReport& r) {
    Json j;
    j["components"] = Json::array();
    for (const auto& c : r.components) j["components"].push_back(to_json(c));
    Json g;
    g["case"] = to_string(r.global);
    g["worst_form"] = to_string(r.worst.form);
    g["worst_gamma"] = json_number(r.worst.exponent);
    g["smoothing_order"] = r.smoothing_order ? Json(*r.smoothing_order) : Json(nullptr);
    j["global"] = g;
    return j;
}

inline Json to_json(const ScalingLaw& l) {
    return Json{{"form", to_string(l.form)}, {"gamma", json_number(l.exponent)}};
}

inline Json to_json(const ScalingFitResult& f) {
    Json j;
    j["model"] = to_string(f.model);
    j["gamma"] = f.gamma;
    if (f.model == FitModel::power_log) j["kappa"] = f.kappa;
    j["log_c"] = f.log_c;
    j["r2"] = f.r2;
    j["sse"] = f.sse;
    j["n_points"] = f.n_points;
    j["h_range"] = Json::array({f.h_min, f.h_max});
    if (f.blowups) j["blowups"] = f.blowups;
    if (f.collinear) j["collinear_warning"] = true;
    return j;
}

inline Json to_json(const ResolventSample& s) {
    Json j;
    j["h"] = s.h;
    j["z"] = s.z;
    j["norm"] = s.blowup() ? Json("inf") : Json(s.norm);
    j["iterations"] = s.iterations;
    j["converged"] = s.converged;
    j["grid_n"] = s.grid_n;
    j["cap_eta"] = s.cap_eta;
    if (!s.error.empty()) j["error"] = s.error;
    return j;
}

inline std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// config blocks

namespace detail {

inline const std::set<std::string>& warp_keys() {
    static const std::set<std::string> k{"warp.family", "warp.m",   "warp.m2",   "warp.m2_second", "warp.p",
                                         "warp.a",      "warp.w",   "warp.vmin", "warp.c",         "warp.L",
                                         "warp.n",      "warp.tau", "warp.table", "warp.epsilon",  "warp.r_short"};
    return k;
}

inline std::set<std::string> known_keys(ExperimentKind kind) {
    std::set<std::string> k{"schema_version", "kind", "seed", "output.dir", "grid.half_width", "grid.spacing",
                            "cap.strength", "cap.width_fraction", "cap.ramp_power", "probe.tol", "probe.max_iter",
                            "classifier.deriv_tol", "classifier.merge_cells", "classifier.m_cap"};
    const std::set<std::string> cutoff{"cutoff.center", "cutoff.inner_radius", "cutoff.taper_width"};
    auto add = [&](std::initializer_list<const char*> l) {
        for (auto s : l) k.insert(s);
    };
    if (kind != ExperimentKind::billiard) k.insert(warp_keys().begin(), warp_keys().end());
    switch (kind) {
    case ExperimentKind::classify: break;
    case ExperimentKind::sweep:
        k.insert(cutoff.begin(), cutoff.end());
        add({"sweep.h_list", "sweep.h_max", "sweep.h_min", "sweep.h_points", "sweep.z", "sweep.component",
             "sweep.half_width", "sweep.points_per_wavelength", "sweep.cap_check", "fit.tol_gamma", "fit.min_r2",
             "fit.eta_floor"});
        break;
    case ExperimentKind::quasimode:
        add({"quasimode.h_list", "quasimode.delta", "quasimode.beta", "quasimode.order", "quasimode.half_width",
             "quasimode.weyl_window_lo", "quasimode.weyl_window_hi"});
        break;
    case ExperimentKind::glue:
        k.insert(cutoff.begin(), cutoff.end());
        add({"glue.h", "glue.z", "glue.half_width", "glue.outer_reach", "glue.gap_margin", "glue.tanh_length",
             "glue.energy_band", "glue.ratio_lo", "glue.ratio_hi"});
        break;
    case ExperimentKind::billiard:
        k.insert(cutoff.begin(), cutoff.end());
        add({"billiard.a", "billiard.c", "billiard.q", "billiard.bc", "billiard.outward_left", "billiard.outward_right",
             "billiard.k_list", "billiard.half_width", "billiard.s_lo", "billiard.s_hi", "billiard.scan_points",
             "billiard.gamma_ceiling", "billiard.regime_offset"});
        break;
    case ExperimentKind::gevrey:
        add({"gevrey.x0", "gevrey.k_max", "gevrey.side", "gevrey.d_far", "gevrey.d_near", "gevrey.count",
             "gevrey.expect"});
        break;
    }
    return k;
}

inline RawTable load_table(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("raw_potential: cannot open table '" + path + "'");
    RawTable t;
    std::string line;
    int ln = 0;
    while (std::getline(f, line)) {
        ++ln;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (...) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (t.x.empty()) continue;  // header
            throw ConfigError(path + ":" + std::to_string(ln) + ": non-numeric row");
        }
        if (row.size() < 2) throw ConfigError(path + ":" + std::to_string(ln) + ": need columns x, v0[, v1]");
        t.x.push_back(row[0]);
        t.v0.push_back(row[1]);
        if (row.size() > 2) t.v1.push_back(row[2]);
    }
    if (!t.v1.empty() && t.v1.size() != t.x.size()) throw ConfigError(path + ": v1 column present on some rows only");
    return t;
}

} // namespace detail

inline WarpSpec warp_from_config(const Config& c) {
    const std::string fam = c.require_string("warp.family");
    const auto f = parse_family(fam);
    if (!f) throw c.error(c.line_of("warp.family"), "warp.family: unknown family '" + fam + "'");
    const int n = c.get_int("warp.n", 3);
    if (n < 2) throw c.error(c.line_of("warp.n"), "warp.n must be >= 2");
    auto pos_int = [&](const std::string& key, int fallback) {
        const int v = c.get_int(key, fallback);
        if (v < 1) throw c.error(c.line_of(key), key + " must be a positive integer");
        return v;
    };
    WarpSpec s;
    switch (*f) {
    case WarpFamily::degenerate_bump: s = WarpSpec::degenerate_bump(pos_int("warp.m", 1), n); break;
    case WarpFamily::inflection_profile:
        s = c.has("warp.m2_second") ? WarpSpec::two_inflection_profile(pos_int("warp.m2", 1), pos_int("warp.m2_second", 1), n)
                                    : WarpSpec::inflection_profile(pos_int("warp.m2", 1), n);
        break;
    case WarpFamily::gevrey_flat: {
        const double p = c.get_double("warp.p", 2.0);
        if (!(p > 0.0)) throw c.error(c.line_of("warp.p"), "warp.p must be positive");
        s = WarpSpec::gevrey_flat(p, n);
        break;
    }
    case WarpFamily::constant_plus_bump: {
        const double a = c.get_double("warp.a", 1.0), p = c.get_double("warp.p", 1.0);
        if (!(a > 0.0) || !(p > 0.0)) throw c.error(c.line_of("warp.a"), "warp.a and warp.p must be positive");
        s = WarpSpec::constant_plus_bump(a, p, n);
        break;
    }
    case WarpFamily::well_profile:
        s = WarpSpec::well_profile(c.get_double("warp.vmin", 0.2), c.get_double("warp.c", 0.25), c.get_double("warp.L", 4.0), n);
        break;
    case WarpFamily::raw_potential: {
        if (!c.has("warp.table")) throw ConfigError(c.source() + ": raw_potential: missing v0 table (warp.table)");
        std::filesystem::path p = c.get_string("warp.table", "");
        if (p.is_relative()) p = std::filesystem::path(c.source()).parent_path() / p;
        s = WarpSpec::raw_potential(detail::load_table(p.string()), n);
        break;
    }
    }
    if (c.has("warp.w")) s.params["w"] = c.get_double("warp.w", 1.0);
    if (c.has("warp.tau")) s.tau = c.get_double("warp.tau", 1.0);
    s.epsilon = c.get_double("warp.epsilon", s.epsilon);
    s.r_short = c.get_double("warp.r_short", s.r_short);
    return s;
}

inline CapProfile cap_from_config(const Config& c) {
    CapProfile cap;
    cap.strength = c.get_double("cap.strength", cap.strength);
    cap.width_fraction = c.get_double("cap.width_fraction", cap.width_fraction);
    cap.ramp_power = c.get_int("cap.ramp_power", cap.ramp_power);
    cap.validate();
    return cap;
}

inline ProbeOptions probe_from_config(const Config& c, const RunOverrides& ov = {}) {
    ProbeOptions p;
    p.tol = c.get_double("probe.tol", p.tol);
    p.max_iter = c.get_int("probe.max_iter", p.max_iter);
    p.seed = ov.seed ? *ov.seed : static_cast<unsigned long long>(c.get_double("seed", 42));
    return p;
}

inline ClassifierOptions classifier_from_config(const Config& c) {
    ClassifierOptions o;
    o.deriv_tol_rel = c.get_double("classifier.deriv_tol", o.deriv_tol_rel);
    o.merge_cells = c.get_double("classifier.merge_cells", o.merge_cells);
    o.m_cap = c.get_int("classifier.m_cap", o.m_cap);
    return o;
}

inline Grid classification_grid(const Config& c, const WarpSpec& s) {
    if (s.family == WarpFamily::raw_potential && s.raw) {
        const auto& t = *s.raw;
        return Grid(t.x.front(), t.x.back(), t.x.size());
    }
    const double L = c.get_double("grid.half_width", 10.0);
    const double d = c.get_double("grid.spacing", 0.002);
    return Grid::symmetric(L, d);
}

inline std::optional<CutoffSpec> cutoff_from_config(const Config& c) {
    if (!c.has("cutoff.center") && !c.has("cutoff.inner_radius") && !c.has("cutoff.taper_width")) return std::nullopt;
    CutoffSpec chi;
    chi.center = c.get_double("cutoff.center", 0.0);
    chi.inner_radius = c.get_double("cutoff.inner_radius", 1.0);
    chi.taper_width = c.get_double("cutoff.taper_width", 0.5);
    return chi;
}

/// Default cutoff: centred on the component, inner radius = component width + 1, taper 0.5.
inline CutoffSpec default_cutoff(const CriticalComponent& c) {
    return {0.5 * (c.x_left + c.x_right), (c.x_right - c.x_left) + 1.0, 0.5};
}

inline std::vector<double> h_list_from(const Config& c, const std::string& sec, const RunOverrides& ov,
                                       std::vector<double> fallback) {
    std::vector<double> hs = c.get_list(sec + ".h_list");
    double hmax = c.get_double(sec + ".h_max", 0.0), hmin = c.get_double(sec + ".h_min", 0.0);
    int points = c.get_int(sec + ".h_points", 0);
    if (hs.empty() && hmax > 0.0 && hmin > 0.0) hs = log_spaced(hmax, hmin, static_cast<std::size_t>(points > 0 ? points : 7));
    if (hs.empty()) hs = std::move(fallback);
    if (ov.h_points && *ov.h_points > 0 && !hs.empty()) {
        const double hi = hs.front(), lo = hs.back();
        hs = *ov.h_points == 1 ? std::vector<double>{hi} : log_spaced(hi, lo, static_cast<std::size_t>(*ov.h_points));
    }
    return hs;
}

// ---------------------------------------------------------------------------
// validation

/// Static checks; an empty result means the config is runnable.
inline std::vector<std::string> validate(const Config& c) {
    std::vector<std::string> d;
    auto where = [&](const std::string& key) {
        const int l = c.line_of(key);
        return c.source() + (l ? ":" + std::to_string(l) : std::string()) + ": ";
    };
    if (!c.has("schema_version")) d.push_back(c.source() + ": missing schema_version");
    else {
        try {
            if (c.get_int("schema_version", 0) != kSchemaVersion)
                d.push_back(where("schema_version") + "schema_version must be " + std::to_string(kSchemaVersion));
        } catch (const ConfigError& e) {
            d.push_back(e.what());
        }
    }
    const std::string ks = c.get_string("kind", "");
    const auto kind = parse_kind(ks);
    if (ks.empty()) {
        d.push_back(c.source() + ": kind: missing experiment kind");
        return d;
    }
    if (!kind) {
        d.push_back(where("kind") + "kind: unknown experiment kind '" + ks + "'");
        return d;
    }
    for (const auto& k : c.unknown_keys(detail::known_keys(*kind))) d.push_back(where(k) + "unknown key '" + k + "'");

    // every value must parse
    try {
        if (*kind != ExperimentKind::billiard) {
            const WarpSpec s = warp_from_config(c);
            const std::string w = short_range_warning(s);
            (void)w;
        }
        cap_from_config(c);
        probe_from_config(c);
        classifier_from_config(c);
    } catch (const Error& e) {
        d.push_back(e.what());
    }

    auto check_h = [&](const std::string& sec) {
        try {
            const auto hs = c.get_list(sec + ".h_list");
            for (double h : hs)
                if (!(h > 0.0)) d.push_back(where(sec + ".h_list") + sec + ".h_list entries must be positive");
            for (std::size_t i = 1; i < hs.size(); ++i)
                if (!(hs[i] < hs[i - 1])) {
                    d.push_back(where(sec + ".h_list") + "h_list must be decreasing");
                    break;
                }
            if (c.has(sec + ".h_max") != c.has(sec + ".h_min"))
                d.push_back(c.source() + ": " + sec + ".h_max and " + sec + ".h_min must be given together");
            if (c.has(sec + ".h_max") && !(c.get_double(sec + ".h_max", 0) > c.get_double(sec + ".h_min", 0)))
                d.push_back(where(sec + ".h_max") + sec + ".h_max must exceed " + sec + ".h_min");
        } catch (const Error& e) {
            d.push_back(e.what());
        }
    };
    if (*kind == ExperimentKind::sweep) check_h("sweep");
    if (*kind == ExperimentKind::quasimode) check_h("quasimode");

    // cutoff against the absorbing layer when the domain is fixed
    try {
        const std::map<ExperimentKind, std::string> width_key{
            {ExperimentKind::sweep, "sweep.half_width"}, {ExperimentKind::glue, "glue.half_width"},
            {ExperimentKind::billiard, "billiard.half_width"}};
        auto it = width_key.find(*kind);
        if (it != width_key.end()) {
            const double L = c.get_double(it->second, *kind == ExperimentKind::billiard ? 10.0 : 0.0);
            const auto chi = cutoff_from_config(c);
            if (L > 0.0 && chi) {
                const CapProfile cap = cap_from_config(c);
                const double inner = L - cap.width_fraction * 2.0 * L;
                if (chi->support_lo() < -inner || chi->support_hi() > inner)
                    d.push_back(where("cutoff.inner_radius") + "cutoff support [" + csv_number(chi->support_lo()) +
                                ", " + csv_number(chi->support_hi()) + "] overlaps the cap absorbing layer (interior window [" +
                                csv_number(-inner) + ", " + csv_number(inner) + "] for " + it->second + " = " +
                                csv_number(L) + ")");
            }
        }
    } catch (const Error& e) {
        d.push_back(e.what());
    }
    if (*kind == ExperimentKind::billiard) {
        try {
            const std::string bc = c.get_string("billiard.bc", "dirichlet");
            if (bc != "dirichlet" && bc != "neumann")
                d.push_back(where("billiard.bc") + "billiard.bc must be dirichlet or neumann");
            if (!c.get_bool("billiard.outward_left", true) && !c.get_bool("billiard.outward_right", true))
                d.push_back(c.source() + ": billiard: profile must open outward on at least one side");
            for (double k : c.get_list("billiard.k_list"))
                if (k < 1 || k != std::floor(k)) d.push_back(where("billiard.k_list") + "billiard.k_list entries must be positive integers");
        } catch (const Error& e) {
            d.push_back(e.what());
        }
    }
    if (*kind == ExperimentKind::gevrey) {
        const std::string ex = c.get_string("gevrey.expect", "");
        if (!ex.empty() && ex != "pass" && ex != "fail") d.push_back(where("gevrey.expect") + "gevrey.expect must be pass or fail");
        try {
            if (!c.has("warp.tau") && !warp_from_config(c).tau)
                d.push_back(c.source() + ": gevrey: tau (claimed 0-Gevrey index) missing; set warp.tau");
        } catch (const Error&) {
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// runners

namespace detail {

inline Json config_echo(const Config& c) {
    Json j = Json::object();
    for (const auto& [k, v] : c.values()) j[k] = v.text;
    return j;
}

inline std::string samples_csv(const std::vector<ResolventSample>& s) {
    std::ostringstream os;
    write_samples_csv(os, s);
    return os.str();
}

inline std::string loglog_plot(const std::string& title, const std::string& xcol, const std::string& ycol,
                               const std::string& xlabel, const std::string& ylabel) {
    std::ostringstream os;
    os << "# gnuplot script; run from the output directory: gnuplot plot.script\n"
       << "set datafile separator ','\n"
       << "set terminal pngcairo size 900,600\n"
       << "set output 'plot.png'\n"
       << "set title '" << title << "'\n"
       << "set logscale xy\n"
       << "set xlabel '" << xlabel << "'\n"
       << "set ylabel '" << ylabel << "'\n"
       << "plot 'data.csv' using " << xcol << ":" << ycol << " skip 1 with linespoints title '" << ylabel << "'\n";
    return os.str();
}

/// Worst component whose critical value is within band * scale of z.
inline std::optional<std::size_t> component_at(const TrappingReport& r, double z, double band) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < r.components.size(); ++i) {
        if (std::abs(r.components[i].critical_value - z) > band) continue;
        if (!best || severity(r.per_component_law[i]) > severity(r.per_component_law[*best])) best = i;
    }
    return best;
}

} // namespace detail

struct Prepared {
    WarpSpec spec;
    PotentialProfile profile;
    TrappingReport trapping;
    double scale = 1.0;
};

inline Prepared prepare_warp(const Config& c, Artifacts& art) {
    Prepared p;
    p.spec = warp_from_config(c);
    const std::string w = short_range_warning(p.spec);
    if (!w.empty()) art.warnings.push_back(w);
    p.profile = effective_potential(p.spec, classification_grid(c, p.spec));
    p.trapping = classify_profile(p.profile, classifier_from_config(c));
    p.scale = detail::profile_scale(p.profile);
    return p;
}

inline void run_classify(const Config& c, Artifacts& art) {
    const Prepared p = prepare_warp(c, art);
    art.report["classification"] = to_json(p.trapping);
    std::ostringstream os;
    write_profile_csv(os, p.profile);
    art.csv = os.str();
    art.plot = "# gnuplot script; run from the output directory: gnuplot plot.script\n"
               "set datafile separator ','\nset terminal pngcairo size 900,600\nset output 'plot.png'\n"
               "set xlabel 'x'\nplot 'data.csv' using 1:2 skip 1 with lines title 'V0', "
               "'' using 1:3 skip 1 with lines title 'V1'\n";
    art.exit_code = exit_ok;
}

inline void run_sweep(const Config& c, const RunOverrides& ov, Artifacts& art) {
    const Prepared p = prepare_warp(c, art);
    art.report["classification"] = to_json(p.trapping);
    const double band = 0.05 * p.scale;
    std::optional<std::size_t> ci;
    if (c.has("sweep.component")) {
        const int k = c.get_int("sweep.component", 0);
        if (k < 0 || static_cast<std::size_t>(k) >= p.trapping.components.size())
            throw c.error(c.line_of("sweep.component"), "sweep.component out of range");
        ci = static_cast<std::size_t>(k);
    }
    double z;
    if (c.has("sweep.z")) {
        z = c.get_double("sweep.z", 0.0);
        if (!ci) ci = detail::component_at(p.trapping, z, band);
    } else {
        if (!ci) ci = p.trapping.worst_index;
        if (!ci) throw ConfigError(c.source() + ": sweep.z: no critical component to take z from; set sweep.z");
        z = p.trapping.components[*ci].critical_value;
    }
    ScalingLaw law;
    if (ci && std::abs(p.trapping.components[*ci].critical_value - z) <= band) {
        law = p.trapping.per_component_law[*ci];
    } else {
        const double vmin = *std::min_element(p.profile.v0.begin(), p.profile.v0.end());
        law = z < vmin ? ScalingLaw::elliptic() : ScalingLaw::nontrapping();
    }
    CutoffSpec chi;
    if (auto given = cutoff_from_config(c)) chi = *given;
    else if (ci) chi = default_cutoff(p.trapping.components[*ci]);
    else chi = CutoffSpec{0.0, 1.0, 0.5};

    const std::vector<double> hs =
        h_list_from(c, "sweep", ov, log_spaced(1.0 / 50.0, 1.0 / 400.0, 7));
    SweepOptions so;
    so.half_width = c.get_double("sweep.half_width", 0.0);
    so.points_per_wavelength = c.get_double("sweep.points_per_wavelength", 20.0);
    so.probe = probe_from_config(c, ov);
    const CapProfile cap = cap_from_config(c);
    const PotentialSource src = warp_source(p.spec);

    std::vector<ResolventSample> samples;
    Json capj;
    if (c.get_bool("sweep.cap_check", false)) {
        const CapRobustness r = cap_robustness(src, z, hs, chi, cap, so);
        samples = r.base;
        capj["relative_change"] = Json::array();
        for (double v : r.relative_change) capj["relative_change"].push_back(json_number(v));
        capj["worst_change"] = json_number(r.worst_change);
        capj["passes"] = r.worst_change < 0.1;
    } else {
        samples = h_sweep(src, z, hs, chi, cap, so);
    }

    VerdictOptions vo;
    vo.tol_gamma = c.get_double("fit.tol_gamma", vo.tol_gamma);
    vo.min_r2 = c.get_double("fit.min_r2", vo.min_r2);
    vo.eta_floor = c.get_double("fit.eta_floor", vo.eta_floor);
    Json fits = Json::object();
    Verdict v = Verdict::inconclusive;
    std::string fit_error;
    try {
        const ScalingFitResult pure = fit_power(samples);
        fits["pure_power"] = to_json(pure);
        ScalingFitResult chosen = pure;
        try {
            const ScalingFitResult pl = fit_power_log(samples);
            fits["power_log"] = to_json(pl);
            if (law.form == LawForm::power_log) chosen = pl;
        } catch (const FitError& e) {
            if (law.form == LawForm::power_log) throw;
            art.warnings.push_back(e.what());
        }
        v = verdict(chosen, law, vo);
        fits["used"] = to_string(chosen.model);
    } catch (const FitError& e) {
        fit_error = e.what();
        if (law.superpolynomial()) {
            const bool blow = std::any_of(samples.begin(), samples.end(), [](const ResolventSample& s) { return s.blowup(); });
            if (blow) v = Verdict::consistent;
        }
    }
    Json sw;
    sw["z"] = z;
    sw["component"] = ci ? Json(*ci) : Json(nullptr);
    sw["cutoff"] = Json{{"center", chi.center}, {"inner_radius", chi.inner_radius}, {"taper_width", chi.taper_width}};
    sw["samples"] = Json::array();
    for (const auto& s : samples) sw["samples"].push_back(to_json(s));
    art.report["sweep"] = sw;
    if (!capj.is_null()) art.report["cap_robustness"] = capj;
    Json vj;
    vj["predicted"] = to_json(law);
    vj["fitted"] = fits;
    if (!fit_error.empty()) vj["fit_error"] = fit_error;
    vj["verdict"] = to_string(v);
    vj["tol_gamma"] = vo.tol_gamma;
    art.report["verdict"] = vj;
    art.csv = detail::samples_csv(samples);
    art.plot = detail::loglog_plot("cutoff resolvent norm vs h", "1", "3", "h", "norm");
    art.exit_code = exit_code_for(v);
}

inline void run_quasimode(const Config& c, const RunOverrides& ov, Artifacts& art) {
    const Prepared p = prepare_warp(c, art);
    art.report["classification"] = to_json(p.trapping);
    const CriticalComponent* mn = nullptr;
    for (const auto& comp : p.trapping.components)
        if (comp.kind == ComponentKind::local_min && (!mn || comp.critical_value < mn->critical_value)) mn = &comp;
    if (!mn) throw WellError("quasimode: the potential has no local minimum");
    const WellSpec w = fit_well(p.profile, *mn, c.get_double("quasimode.delta", 0.0), c.get_double("quasimode.beta", 1.0));
    const int N = c.get_int("quasimode.order", 4);
    const std::vector<double> hs = h_list_from(c, "quasimode", ov, {1.0 / 40, 1.0 / 60, 1.0 / 80});
    const CapProfile cap = cap_from_config(c);
    const ProbeOptions probe = probe_from_config(c, ov);
    const PotentialSource src = warp_source(p.spec);

    Json wj{{"center", w.center}, {"v_min", w.v_min}, {"delta", w.delta}, {"a", w.a},
            {"b", w.b},           {"eps", w.eps},     {"beta", w.beta},   {"x_out", w.x_out}};
    art.report["well"] = wj;
    std::vector<Json> rows(hs.size());
    std::vector<std::string> csv_rows(hs.size());
    std::vector<int> ok(hs.size(), 0);
    std::vector<std::string> warn(hs.size());
    std::string profile_csv;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const double h = hs[i];
        const Grid q = quasimode_grid(w, h);
        const auto V = src(q, h);
        const ExtendedPotential ext = extend_convex(q, V, w);
        if (!ext.convex) warn[i] = ext.warning;
        const Quasimode qm = build_quasimode(ext.values, V, h, w, q);
        const double hw = c.get_double("quasimode.half_width", 0.0) > 0.0
                              ? c.get_double("quasimode.half_width", 0.0)
                              : auto_half_width(src, h, qm.energy, covering_cutoff(w), cap);
        const BlowupCheck bc = cross_check_blowup(qm, src, h, w, cap, hw, probe);
        const double hN = std::pow(h, N), hM = std::pow(h, -(N - 1));
        const bool pass = qm.residual <= hN && bc.certified >= hM && bc.passes;
        ok[i] = pass;
        Json r;
        r["h"] = h;
        r["energy"] = qm.energy;
        r["residual"] = qm.residual;
        r["h_pow_N"] = hN;
        r["lower_bound"] = json_number(bc.certified);
        r["h_pow_minus_N_plus_1"] = hM;
        r["measured"] = json_number(bc.measured);
        r["measured_converged"] = bc.sample.converged;
        r["mass_outside"] = qm.mass_outside;
        r["window_count"] = qm.window_count;
        r["passes"] = pass;
        rows[i] = r;
        csv_rows[i] = csv_number(h) + "," + csv_number(qm.energy) + "," + csv_number(qm.residual) + "," +
                      csv_number(bc.certified) + "," + csv_number(bc.measured) + "," + csv_number(qm.mass_outside) + "," +
                      std::to_string(qm.window_count) + "\n";
        if (qm.mass_outside > 10.0 * std::sqrt(qm.residual))
            warn[i] += (warn[i].empty() ? "" : "; ") + std::string("mass outside the well exceeds 10 sqrt(residual)");
        if (i + 1 == hs.size()) {
            std::ostringstream os;
            os << "x,phi,chi_phi\n" << std::setprecision(17);
            for (std::size_t j = 0; j < q.n; ++j) os << q.x(j) << ',' << qm.eigenvector[j] << ',' << qm.vector[j] << '\n';
            profile_csv = os.str();
        }
    }
    for (const auto& s : warn)
        if (!s.empty()) art.warnings.push_back(s);

    // eigenvalue counts at h0, h0/2, h0/4 in the energy window
    const double lo = c.get_double("quasimode.weyl_window_lo", w.energy_lo());
    const double hi = c.get_double("quasimode.weyl_window_hi", w.energy_hi());
    Json weyl = Json::array();
    std::vector<double> lh, lc;
    for (int k = 0; k < 3; ++k) {
        const double h = hs.front() / std::pow(2.0, k);
        const Grid q = quasimode_grid(w, h);
        const auto V = src(q, h);
        const auto ext = extend_convex(q, V, w);
        const auto cnt = self_adjoint_operator(ext.values, h, q).count_below(hi) -
                         self_adjoint_operator(ext.values, h, q).count_below(lo);
        weyl.push_back(Json{{"h", h}, {"count", cnt}});
        lh.push_back(std::log(h));
        lc.push_back(std::log(std::max<double>(1.0, static_cast<double>(cnt))));
    }
    const double slope = detail::ls_slope(lh, lc, 0, lh.size());

    art.report["quasimodes"] = rows;
    art.report["weyl"] = Json{{"window", Json::array({lo, hi})}, {"counts", weyl}, {"slope", slope}};
    const bool all = std::all_of(ok.begin(), ok.end(), [](int v) { return v != 0; });
    const bool weyl_ok = std::abs(slope + 1.0) <= 0.2;
    const Verdict v = all && weyl_ok ? Verdict::consistent : Verdict::inconsistent;
    art.report["verdict"] = Json{{"predicted", to_json(ScalingLaw{LawForm::superpolynomial, INFINITY})},
                                 {"order_N", N},
                                 {"weyl_slope_ok", weyl_ok},
                                 {"verdict", to_string(v)}};
    std::string csv = "h,energy,residual,lower_bound,measured,mass_outside,window_count\n";
    for (const auto& r : csv_rows) csv += r;
    art.csv = csv;
    art.extra.emplace_back("quasimode.csv", profile_csv);
    art.plot = detail::loglog_plot("quasimode residual vs h", "1", "3", "h", "residual");
    art.exit_code = exit_code_for(v);
}

inline void run_glue(const Config& c, const RunOverrides& ov, Artifacts& art) {
    const Prepared p = prepare_warp(c, art);
    art.report["classification"] = to_json(p.trapping);
    GluingOptions go;
    go.outer_reach = c.get_double("glue.outer_reach", go.outer_reach);
    go.gap_margin = c.get_double("glue.gap_margin", go.gap_margin);
    go.tanh_length = c.get_double("glue.tanh_length", go.tanh_length);
    go.energy_band = c.get_double("glue.energy_band", go.energy_band);
    go.half_width = c.get_double("glue.half_width", 0.0);
    go.ratio_lo = c.get_double("glue.ratio_lo", go.ratio_lo);
    go.ratio_hi = c.get_double("glue.ratio_hi", go.ratio_hi);
    go.probe = probe_from_config(c, ov);
    const auto& comps = p.trapping.components;
    double z;
    if (c.has("glue.z")) {
        z = c.get_double("glue.z", 0.0);
    } else {
        // the level shared by the most non-minimum components
        std::size_t best_count = 0;
        z = 0.0;
        for (const auto& a : comps) {
            if (a.kind == ComponentKind::local_min) continue;
            std::size_t n = 0;
            for (const auto& b : comps)
                if (b.kind != ComponentKind::local_min && std::abs(a.critical_value - b.critical_value) <= go.energy_band * p.scale) ++n;
            if (n > best_count) {
                best_count = n;
                z = a.critical_value;
            }
        }
        if (best_count == 0) throw ConfigError(c.source() + ": glue: no trapping component to glue");
    }
    const double h = c.get_double("glue.h", 0.01);
    const auto windows = surgery_windows(comps, z, p.scale, go);
    CutoffSpec chi;
    if (auto given = cutoff_from_config(c)) chi = *given;
    else {
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& w : windows) {
            lo = std::min(lo, comps[w.component].x_left);
            hi = std::max(hi, comps[w.component].x_right);
        }
        chi = {0.5 * (lo + hi), 0.5 * (hi - lo) + 1.5, 0.5};
    }
    const GluingReport g = glued_vs_local(warp_source(p.spec), windows, z, h, chi, cap_from_config(c), go);
    // dominant local norm must belong to the component with the largest predicted exponent
    std::size_t worst = windows.front().component;
    for (const auto& w : windows)
        if (detail::severity(p.trapping.per_component_law[w.component]) > detail::severity(p.trapping.per_component_law[worst]))
            worst = w.component;
    const bool dominant_ok = g.local[g.dominant].window.component == worst;
    const Verdict v = g.within_band && dominant_ok ? Verdict::consistent : Verdict::inconsistent;
    Json j;
    j["h"] = h;
    j["z"] = z;
    j["global_norm"] = json_number(g.global.norm);
    j["local"] = Json::array();
    std::string csv = "component,window_lo,window_hi,norm\n";
    for (const auto& l : g.local) {
        j["local"].push_back(Json{{"component", l.window.component},
                                  {"window", Json::array({l.window.lo, l.window.hi})},
                                  {"predicted_gamma", json_number(p.trapping.per_component_law[l.window.component].exponent)},
                                  {"norm", json_number(l.sample.norm)}});
        csv += std::to_string(l.window.component) + "," + csv_number(l.window.lo) + "," + csv_number(l.window.hi) + "," +
               csv_number(l.sample.norm) + "\n";
    }
    csv += "global," + csv_number(chi.support_lo()) + "," + csv_number(chi.support_hi()) + "," + csv_number(g.global.norm) + "\n";
    j["ratio"] = json_number(g.ratio);
    j["ratio_band"] = Json::array({go.ratio_lo, go.ratio_hi});
    j["dominant_component"] = g.local[g.dominant].window.component;
    j["dominant_is_worst"] = dominant_ok;
    j["verdict"] = to_string(v);
    art.report["glue"] = j;
    art.csv = csv;
    art.plot = "# gnuplot script; run from the output directory: gnuplot plot.script\n"
               "set datafile separator ','\nset terminal pngcairo size 900,600\nset output 'plot.png'\n"
               "set style data histograms\nset style fill solid\nset logscale y\nset ylabel 'norm'\n"
               "plot 'data.csv' using 4:xtic(1) skip 1 title 'cutoff resolvent norm'\n";
    art.exit_code = exit_code_for(v);
}

inline void run_billiard(const Config& c, const RunOverrides& ov, Artifacts& art) {
    BoundaryProfile bp;
    bp.a = c.get_double("billiard.a", 1.0);
    bp.c = c.get_double("billiard.c", 1.0);
    bp.q = c.get_double("billiard.q", 2.0);
    const std::string bc = c.get_string("billiard.bc", "dirichlet");
    if (bc != "dirichlet" && bc != "neumann") throw c.error(c.line_of("billiard.bc"), "billiard.bc must be dirichlet or neumann");
    bp.bc = bc == "dirichlet" ? BoundaryCondition::dirichlet : BoundaryCondition::neumann;
    bp.outward_left = c.get_bool("billiard.outward_left", true);
    bp.outward_right = c.get_bool("billiard.outward_right", true);
    BilliardOptions bo;
    bo.half_width = c.get_double("billiard.half_width", bo.half_width);
    bo.s_lo = c.get_double("billiard.s_lo", bo.s_lo);
    bo.s_hi = c.get_double("billiard.s_hi", bo.s_hi);
    bo.scan_points = static_cast<std::size_t>(c.get_int("billiard.scan_points", static_cast<int>(bo.scan_points)));
    bo.gamma_ceiling = c.get_double("billiard.gamma_ceiling", bo.gamma_ceiling);
    bo.regime_offset = c.get_double("billiard.regime_offset", bo.regime_offset);
    bo.cap = cap_from_config(c);
    bo.probe = probe_from_config(c, ov);
    if (auto given = cutoff_from_config(c)) bo.chi = *given;
    else bo.chi = CutoffSpec{0.0, bp.a + 1.0, 0.5};
    std::vector<int> ks;
    for (double k : c.get_list("billiard.k_list")) ks.push_back(static_cast<int>(k));
    if (ks.empty()) ks = {8, 11, 16, 23, 32, 45, 64};

    const PotentialProfile prof = bp.profile(Grid::symmetric(bo.half_width, c.get_double("grid.spacing", 0.002)));
    const TrappingReport tr = classify_profile(prof, classifier_from_config(c));
    art.report["classification"] = to_json(tr);

    const NonconcentrationReport r = nonconcentration_check(bp, ks, bo);
    Json j;
    j["transverse"] = to_string(bp.bc);
    j["trapped_energy"] = BoundaryProfile::trapped_energy();
    j["modes"] = Json::array();
    std::ostringstream os;
    os << "k,beta_k,h,z_peak,norm,elliptic_norm,hyperbolic_norm\n";
    for (const auto& m : r.rows) {
        j["modes"].push_back(Json{{"k", m.k},
                                  {"beta_k", m.beta_k},
                                  {"h", m.h},
                                  {"z_peak", m.z_peak},
                                  {"norm", json_number(m.norm)},
                                  {"elliptic_norm", m.elliptic_norm},
                                  {"hyperbolic_norm", m.hyperbolic_norm}});
        os << m.k << ',' << csv_number(m.beta_k) << ',' << csv_number(m.h) << ',' << csv_number(m.z_peak) << ','
           << csv_number(m.norm) << ',' << csv_number(m.elliptic_norm) << ',' << csv_number(m.hyperbolic_norm) << '\n';
    }
    if (r.fit_ok) j["fit"] = to_json(r.fit);
    else j["fit_error"] = r.fit_error;
    j["elliptic_spread"] = r.elliptic_spread;
    j["hyperbolic_spread"] = r.hyperbolic_spread;
    j["checks"] = Json{{"trapped_gamma_below_ceiling", r.trapped_ok},
                       {"elliptic_bounded", r.elliptic_ok},
                       {"hyperbolic_nontrapping", r.hyperbolic_ok}};
    Verdict v = r.verdict;
    if (v == Verdict::consistent && !(r.elliptic_ok && r.hyperbolic_ok)) v = Verdict::inconsistent;
    j["gamma_ceiling"] = bo.gamma_ceiling;
    j["verdict"] = to_string(v);
    art.report["billiard"] = j;
    art.csv = os.str();
    art.plot = detail::loglog_plot("billiard mode peak norm vs h", "3", "5", "h", "norm");
    art.exit_code = exit_code_for(v);
}

inline void run_gevrey(const Config& c, Artifacts& art) {
    const WarpSpec s = warp_from_config(c);
    const double x0 = c.get_double("gevrey.x0", 0.0);
    const auto xs = gevrey_samples(x0, c.get_double("gevrey.side", 1.0), c.get_double("gevrey.d_far", 0.5),
                                   c.get_double("gevrey.d_near", 0.05),
                                   static_cast<std::size_t>(c.get_int("gevrey.count", 12)));
    const GevreyReport g = check_gevrey(s, x0, static_cast<std::size_t>(c.get_int("gevrey.k_max", 4)), xs);
    art.report["gevrey"] = Json{{"tau", *s.tau},
                                {"x0", x0},
                                {"passes", g.passes},
                                {"worst_ratio", json_number(g.worst_ratio)},
                                {"threshold", g.threshold}};
    std::ostringstream os;
    os << "k,s,x,ratio\n";
    for (const auto& r : g.samples) os << r.k << ',' << r.s << ',' << csv_number(r.x) << ',' << csv_number(r.ratio) << '\n';
    art.csv = os.str();
    art.plot = "# gnuplot script; run from the output directory: gnuplot plot.script\n"
               "set datafile separator ','\nset terminal pngcairo size 900,600\nset output 'plot.png'\n"
               "set logscale y\nset xlabel 'x'\nset ylabel 'normalized ratio'\n"
               "plot 'data.csv' using 3:4 skip 1 with points title 'R / C'\n";
    const std::string ex = c.get_string("gevrey.expect", "");
    if (ex.empty()) art.exit_code = exit_ok;
    else art.exit_code = ((ex == "pass") == g.passes) ? exit_ok : exit_inconsistent;
}

/// Runs the experiment named by the config (or by kind_override). Throws on error.
inline Artifacts run(const Config& c, const RunOverrides& ov = {}, const std::string& kind_override = "") {
    std::string ks = c.get_string("kind", "");
    if (!kind_override.empty()) {
        if (!ks.empty() && ks != kind_override)
            throw c.error(c.line_of("kind"), "kind: config declares '" + ks + "' but '" + kind_override + "' was requested");
        ks = kind_override;
    }
    const auto kind = parse_kind(ks);
    if (!kind) throw ConfigError(c.source() + (c.line_of("kind") ? ":" + std::to_string(c.line_of("kind")) : "") +
                                 ": kind: unknown experiment kind '" + ks + "'");
    Config eff = c;
    if (!eff.has("kind")) eff.set("kind", ks);
    const auto diags = validate(eff);
    if (!diags.empty()) {
        std::string msg = diags.front();
        for (std::size_t i = 1; i < diags.size(); ++i) msg += "\n" + diags[i];
        throw ConfigError(msg);
    }
    Artifacts art;
    art.report["schema_version"] = kSchemaVersion;
    art.report["kind"] = ks;
    art.report["seed"] = probe_from_config(eff, ov).seed;
    art.report["config"] = detail::config_echo(eff);
    switch (*kind) {
    case ExperimentKind::classify: run_classify(eff, art); break;
    case ExperimentKind::sweep: run_sweep(eff, ov, art); break;
    case ExperimentKind::quasimode: run_quasimode(eff, ov, art); break;
    case ExperimentKind::glue: run_glue(eff, ov, art); break;
    case ExperimentKind::billiard: run_billiard(eff, ov, art); break;
    case ExperimentKind::gevrey: run_gevrey(eff, art); break;
    }
    art.report["warnings"] = art.warnings;
    art.report["exit_code"] = art.exit_code;
    return art;
}

/// Writes every artifact into a fresh sibling directory, then renames it onto dir.
inline void write_artifacts(const std::filesystem::path& dir, const Artifacts& art) {
    namespace fs = std::filesystem;
    const fs::path target = fs::absolute(dir);
    const fs::path parent = target.parent_path();
    fs::create_directories(parent);
    const fs::path tmp = parent / ("." + target.filename().string() + ".partial." + std::to_string(::getpid()));
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    auto put = [&](const std::string& name, const std::string& body) {
        std::ofstream f(tmp / name, std::ios::binary);
        f << body;
        if (!f) throw Error("cannot write " + (tmp / name).string());
    };
    try {
        put("report.json", art.report.dump(2) + "\n");
        put("data.csv", art.csv);
        put("plot.script", art.plot);
        for (const auto& [name, body] : art.extra) put(name, body);
        fs::remove_all(target);
        fs::rename(tmp, target);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }
}

} // namespace semires
