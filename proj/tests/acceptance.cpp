// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any gated criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "semires/experiment.hpp"

#include "oracles.hpp"

using namespace semires;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    bool gated = true;
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

Config shipped(const std::string& name) { return Config::load(std::string(SEMIRES_CONFIG_DIR) + "/" + name); }

Config with(Config c, std::initializer_list<std::pair<const char*, const char*>> kv) {
    for (const auto& [k, v] : kv) c.set(k, v);
    return c;
}

const Json& pure(const Artifacts& a) { return a.report["verdict"]["fitted"]["pure_power"]; }

Outcome exponent_criterion(const std::string& config, double target, double tol) {
    const auto t0 = std::chrono::steady_clock::now();
    const Artifacts a = run(shipped(config));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double g = pure(a)["gamma"].get<double>(), r2 = pure(a)["r2"].get<double>();
    const std::size_t n = a.report["sweep"]["samples"].size();
    Outcome o;
    o.pass = std::abs(g - target) <= tol && r2 >= 0.98 && n == 7 && secs <= 300.0;
    o.detail = "gamma " + fmt(g) + " (target " + fmt(target) + " +- " + fmt(tol) + "), r2 " + fmt(r2, 6) + ", " +
               std::to_string(n) + " h values, " + fmt(secs, 3) + " s";
    return o;
}

Outcome criterion3() {
    const Artifacts a = run(shipped("sweep_nondegenerate.yaml"));
    const Json& f = a.report["verdict"]["fitted"];
    const double gp = f["pure_power"]["gamma"].get<double>(), sp = f["pure_power"]["sse"].get<double>();
    const double gl = f["power_log"]["gamma"].get<double>(), sl = f["power_log"]["sse"].get<double>();
    const double kappa = f["power_log"]["kappa"].get<double>();
    Outcome o;
    o.pass = gp >= 1.0 && gp <= 1.2 && sl < sp && std::abs(gl - 1.0) <= 0.1 && kappa > 0.0;
    o.detail = "pure gamma " + fmt(gp) + " in [1, 1.2]; power_log gamma " + fmt(gl) + ", kappa " + fmt(kappa) +
               ", sse " + fmt(sl, 3) + " < " + fmt(sp, 3);
    return o;
}

Outcome criterion5() {
    const Artifacts plateau = run(shipped("sweep_plateau.yaml"));
    const Config flat = Config::parse_string("schema_version: 1\nkind: sweep\nwarp:\n  family: gevrey_flat\n  p: 2\n"
                                             "sweep:\n  h_max: 1/50\n  h_min: 1/400\n  h_points: 7\n",
                                             "gevrey_flat sweep");
    const Artifacts gev = run(flat);
    const double gp = pure(plateau)["gamma"].get<double>(), gg = pure(gev)["gamma"].get<double>();
    auto in = [](double g) { return g >= 1.7 && g <= 2.6; };
    Outcome o;
    o.gated = false;
    o.pass = true;
    o.detail = "report-only: plateau gamma " + fmt(gp) + (in(gp) ? " in" : " outside") + " [1.7, 2.6]; gevrey_flat gamma " +
               fmt(gg) + (in(gg) ? " in" : " outside") +
               " [1.7, 2.6]; open question: whether the loss is exactly h^-2 or needs every eta > 0";
    return o;
}

Outcome criterion4() {
    const Artifacts a = run(shipped("sweep_nontrapping.yaml"));
    const double g = pure(a)["gamma"].get<double>();
    Outcome o;
    o.pass = std::abs(g - 1.0) <= 0.1;
    o.detail = "gamma " + fmt(g) + " (target 1 +- 0.1), predicted form " +
               a.report["verdict"]["predicted"]["form"].get<std::string>();
    return o;
}

Outcome criterion6_7(const Artifacts& a, bool weyl) {
    Outcome o;
    if (weyl) {
        const double s = a.report["weyl"]["slope"].get<double>();
        std::string counts;
        for (const auto& c : a.report["weyl"]["counts"]) counts += (counts.empty() ? "" : ", ") + std::to_string(c["count"].get<int>());
        o.pass = std::abs(s + 1.0) <= 0.2;
        o.detail = "slope " + fmt(s) + " (target -1 +- 0.2), counts " + counts;
        return o;
    }
    o.pass = a.report["quasimodes"].size() == 3;
    for (const auto& r : a.report["quasimodes"]) {
        const double h = r["h"].get<double>(), res = r["residual"].get<double>();
        const double lb = r["lower_bound"].is_null() ? INFINITY : r["lower_bound"].get<double>();
        const double meas = r["measured"].is_null() ? INFINITY : r["measured"].get<double>();
        const bool ok = res <= std::pow(h, 4) && lb >= std::pow(h, -3) && meas >= 0.5 * lb;
        o.pass = o.pass && ok;
        o.detail += (o.detail.empty() ? "" : "; ") + std::string("h=1/") + fmt(1.0 / h, 3) + " residual " + fmt(res, 3) +
                    " bound " + fmt(lb, 3) + " measured " + fmt(meas, 3);
    }
    return o;
}

Outcome criterion8() {
    auto cases = oracle::probe_cases(100);
    for (auto& c : oracle::structured_cases()) cases.push_back(std::move(c));
    double worst = 0.0;
    std::size_t nmax = 0;
    for (const auto& c : cases) {
        const double ref = oracle::cutoff_norm(c.op, c.z, c.chi);
        const double est = cutoff_resolvent_norm(c.op, c.z, c.chi).norm;
        worst = std::max(worst, std::abs(est - ref) / ref);
        nmax = std::max(nmax, c.op.size());
    }
    std::mt19937_64 rng(1000);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_int_distribution<int> sizes(16, 400);
    double worst_res = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const int n = sizes(rng);
        const Grid g(-1.0, 1.0, static_cast<std::size_t>(n));
        std::vector<double> V(n);
        for (auto& v : V) v = 2.0 * U(rng);
        CapProfile cap;
        cap.strength = 1.0 + U(rng);
        const auto op = build_operator(V, 0.01 + 0.2 * (U(rng) + 1.0), g, cap);
        std::vector<cplx> b(n);
        for (auto& x : b) x = {U(rng), U(rng)};
        const cplx z(U(rng), -0.05 - 0.5 * (U(rng) + 1.0));
        const auto r = op.apply(z, solve(op, z, b));
        double num = 0, den = 0;
        for (int i = 0; i < n; ++i) {
            num += std::norm(r[i] - b[i]);
            den += std::norm(b[i]);
        }
        worst_res = std::max(worst_res, std::sqrt(num / den));
    }
    Outcome o;
    o.pass = cases.size() == 120 && nmax <= 400 && worst <= 0.01 && worst_res <= 1e-10;
    o.detail = std::to_string(cases.size()) + " matrices (n <= " + std::to_string(nmax) + "), worst relative error " +
               fmt(worst, 3) + "; 1000 solves, worst residual " + fmt(worst_res, 3);
    return o;
}

Outcome criterion9() {
    const auto cases = random_propagation_cases(200);
    std::size_t held = 0;
    double min_slack = INFINITY;
    for (const auto& c : cases) {
        const auto r = propagation_inequality_check(c);
        held += r.holds;
        min_slack = std::min(min_slack, r.slack / r.rhs);
    }
    Outcome o;
    o.pass = held == 200;
    o.detail = std::to_string(held) + "/200 hold, smallest relative slack " + fmt(min_slack, 3);
    return o;
}

Outcome criterion10() {
    const Artifacts a = run(shipped("glue_two_inflection.yaml"));
    const Json& g = a.report["glue"];
    const double ratio = g["ratio"].get<double>();
    Outcome o;
    o.pass = ratio >= 1.0 / 3.0 && ratio <= 3.0 && g["dominant_is_worst"].get<bool>() && g["local"].size() >= 2;
    std::string locals;
    for (const auto& l : g["local"])
        locals += (locals.empty() ? "" : ", ") + std::string("gamma ") + fmt(l["predicted_gamma"].get<double>()) + " -> " +
                  fmt(l["norm"].get<double>());
    o.detail = "ratio " + fmt(ratio) + " in [1/3, 3]; local norms " + locals + "; dominant is the higher-gamma component: " +
               (g["dominant_is_worst"].get<bool>() ? "yes" : "no");
    return o;
}

Outcome criterion11() {
    const Artifacts a = run(shipped("billiard_outward.yaml"));
    const Json& b = a.report["billiard"];
    const double es = b["elliptic_spread"].get<double>(), hs = b["hyperbolic_spread"].get<double>();
    const bool fit = b.contains("fit");
    const double g = fit ? b["fit"]["gamma"].get<double>() : INFINITY;
    int kmin = 1 << 30, kmax = 0;
    for (const auto& m : b["modes"]) {
        kmin = std::min(kmin, m["k"].get<int>());
        kmax = std::max(kmax, m["k"].get<int>());
    }
    Outcome o;
    o.pass = fit && es <= 3.0 && hs <= 3.0 && g <= 2.3 && kmin == 8 && kmax == 64;
    o.detail = "k " + std::to_string(kmin) + ".." + std::to_string(kmax) + ": elliptic max/min " + fmt(es) +
               ", hyperbolic norm*h max/min " + fmt(hs) + ", trapped gamma " + fmt(g) + " (<= 2.3)";
    return o;
}

Outcome criterion12() {
    Outcome o;
    o.pass = true;
    for (const char* name : {"sweep_m2.yaml", "sweep_inflection.yaml", "sweep_nondegenerate.yaml"}) {
        const Artifacts a = run(with(shipped(name), {{"sweep.cap_check", "true"}}));
        const double w = a.report["cap_robustness"]["worst_change"].is_null()
                             ? INFINITY
                             : a.report["cap_robustness"]["worst_change"].get<double>();
        o.pass = o.pass && w < 0.1;
        o.detail += (o.detail.empty() ? "" : "; ") + std::string(name) + " worst change " + fmt(w, 3);
    }
    return o;
}

Outcome criterion13() {
    const fs::path root = fs::temp_directory_path() / ("semires_acceptance_" + std::to_string(::getpid()));
    RunOverrides ov;
    ov.seed = 42;
    std::string body[2];
    for (int i = 0; i < 2; ++i) {
        const fs::path dir = root / (i ? "b" : "a");
        write_artifacts(dir, run(shipped("sweep_m2.yaml"), ov));
        std::ifstream f(dir / "report.json", std::ios::binary);
        std::ostringstream os;
        os << f.rdbuf();
        body[i] = os.str();
    }
    fs::remove_all(root);
    Outcome o;
    o.pass = !body[0].empty() && body[0] == body[1];
    o.detail = "report.json " + std::to_string(body[0].size()) + " bytes, " + (o.pass ? "identical" : "differs");
    return o;
}

} // namespace

int main() {
    std::optional<Artifacts> qm;
    auto quasimode = [&]() -> const Artifacts& {
        if (!qm) qm = run(shipped("quasimode_well.yaml"));
        return *qm;
    };
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"degenerate max m=2", [] { return exponent_criterion("sweep_m2.yaml", 4.0 / 3.0, 0.15); }},
        {"inflection m2=1", [] { return exponent_criterion("sweep_inflection.yaml", 6.0 / 5.0, 0.15); }},
        {"nondegenerate max", criterion3},
        {"non-trapping control", criterion4},
        {"infinitely degenerate / cylinder", criterion5},
        {"stable-well blowup", [&] { return criterion6_7(quasimode(), false); }},
        {"Weyl count", [&] { return criterion6_7(quasimode(), true); }},
        {"oracle equivalence", criterion8},
        {"propagation inequality", criterion9},
        {"gluing worst-of", criterion10},
        {"billiard non-concentration", criterion11},
        {"CAP robustness", criterion12},
        {"determinism", criterion13},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        if (!o.pass && o.gated) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << criteria[i].first << "): " << o.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
