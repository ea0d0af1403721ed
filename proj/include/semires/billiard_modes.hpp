#pragma once

// Partially rectangular billiards {(x, y) : |y| < Y(x) / pi} reduced to the
// transverse modes P(h) = -h^2 d^2/dx^2 + Y^-2(x), h = 1 / beta_k.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "discretize.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "resolvent_probe.hpp"
#include "scaling_fit.hpp"
#include "warp_model.hpp"

namespace semires {

enum class BoundaryCondition { dirichlet, neumann };

inline std::string to_string(BoundaryCondition bc) { return bc == BoundaryCondition::dirichlet ? "dirichlet" : "neumann"; }

/// Y(x) = pi + r(x), r = 0 on [-a, a]. With s = |x| - a > 0, an outward side has
/// r = c s^q and an inward side r = -(pi/2)(1 - exp(-c s^q)).
struct BoundaryProfile {
    double a = 1.0;
    double c = 1.0;
    double q = 2.0;
    BoundaryCondition bc = BoundaryCondition::dirichlet;
    bool outward_left = true;
    bool outward_right = true;

    void validate() const {
        if (!(a > 0.0)) throw DomainError("billiard: a must be positive");
        if (!(c >= 0.0) || !(q >= 1.0)) throw DomainError("billiard: need c >= 0 and q >= 1");
    }

    double r(double x) const {
        const double s = std::abs(x) - a;
        if (s <= 0.0) return 0.0;
        const bool out = x > 0.0 ? outward_right : outward_left;
        const double w = c * std::pow(s, q);
        return out ? w : -0.5 * std::numbers::pi * (1.0 - std::exp(-w));
    }
    double Y(double x) const { return std::numbers::pi + r(x); }
    double V(double x) const {
        const double y = Y(x);
        return 1.0 / (y * y);
    }
    std::vector<double> sample(const Grid& g) const {
        std::vector<double> v(g.n);
        for (std::size_t i = 0; i < g.n; ++i) v[i] = V(g.x(i));
        return v;
    }
    PotentialSource source() const {
        return [p = *this](const Grid& g, double) { return p.sample(g); };
    }
    /// V = Y^-2 with closed-form first and second derivatives.
    PotentialProfile profile(const Grid& g) const {
        PotentialProfile pr;
        pr.grid = g;
        pr.v1.assign(g.n, 0.0);
        for (std::size_t i = 0; i < g.n; ++i) {
            const double x = g.x(i);
            const double s = std::abs(x) - a;
            double r0 = 0.0, r1 = 0.0, r2 = 0.0;
            if (s > 0.0) {
                const double sg = x > 0.0 ? 1.0 : -1.0;
                const double w = c * std::pow(s, q), w1 = c * q * std::pow(s, q - 1.0) * sg;
                const double w2 = c * q * (q - 1.0) * std::pow(s, q - 2.0);
                if (x > 0.0 ? outward_right : outward_left) {
                    r0 = w;
                    r1 = w1;
                    r2 = w2;
                } else {
                    const double e = std::exp(-w);
                    r0 = -0.5 * std::numbers::pi * (1.0 - e);
                    r1 = -0.5 * std::numbers::pi * e * w1;
                    r2 = -0.5 * std::numbers::pi * e * (w2 - w1 * w1);
                }
            }
            const double y = std::numbers::pi + r0;
            pr.v0.push_back(1.0 / (y * y));
            pr.v0p.push_back(-2.0 * r1 / (y * y * y));
            pr.v0pp.push_back(6.0 * r1 * r1 / (y * y * y * y) - 2.0 * r2 / (y * y * y));
        }
        return pr;
    }
    static double trapped_energy() { return 1.0 / (std::numbers::pi * std::numbers::pi); }
};

/// beta_k of -d^2/dy^2 on [-1, 1], k = 1..k_max: k pi / 2 (Dirichlet), (k - 1) pi / 2 (Neumann).
inline std::vector<double> transverse_spectrum(BoundaryCondition bc, int k_max) {
    std::vector<double> b;
    for (int k = 1; k <= k_max; ++k)
        b.push_back((bc == BoundaryCondition::dirichlet ? k : k - 1) * std::numbers::pi / 2.0);
    return b;
}

inline double transverse_beta(BoundaryCondition bc, int k) {
    if (k < 1) throw DomainError("billiard: mode index k must be >= 1");
    return (bc == BoundaryCondition::dirichlet ? k : k - 1) * std::numbers::pi / 2.0;
}

struct ModeProblem {
    int k = 1;
    double beta_k = 0.0;
    double h = 0.0;
    double z = 0.0;
    double e_tilde = 0.0;
};

struct ModeOperator {
    ModeProblem problem;
    DiscreteOperator op;
};

struct BilliardOptions {
    double half_width = 10.0;
    CapProfile cap;
    CutoffSpec chi{0.0, 2.0, 0.5};
    double s_lo = -0.05;  // z = pi^-2 (1 + s) scan
    double s_hi = 0.10;
    std::size_t scan_points = 61;
    double regime_offset = 0.2;
    double gamma_ceiling = 2.3;
    double regime_ratio = 3.0;
    ProbeOptions probe;
};

/// Mode operator for transverse index k at energy z = h^2 lambda^2.
inline ModeOperator mode_operator(const BoundaryProfile& p, int k, double z, const BilliardOptions& opt = {}) {
    p.validate();
    ModeOperator m;
    m.problem.k = k;
    m.problem.beta_k = transverse_beta(p.bc, k);
    if (!(m.problem.beta_k > 0.0)) throw DomainError("billiard: beta_k = 0 (constant Neumann mode) has no semiclassical h");
    m.problem.h = 1.0 / m.problem.beta_k;
    m.problem.z = z;
    const double h = m.problem.h;
    const double vmin = p.V(opt.half_width);
    const Grid g = Grid::symmetric(opt.half_width, resolution_delta(h, z, std::min(vmin, p.V(-opt.half_width))));
    m.op = build_operator(p.sample(g), h, g, opt.cap);
    return m;
}

struct ModeRow {
    int k = 0;
    double beta_k = 0.0;
    double h = 0.0;
    double z_peak = 0.0;
    double norm = 0.0;
    double elliptic_norm = 0.0;
    double hyperbolic_norm = 0.0;
    bool converged = false;
};

struct NonconcentrationReport {
    std::vector<ModeRow> rows;
    ScalingFitResult fit;
    bool fit_ok = false;
    std::string fit_error;
    double elliptic_spread = 0.0;      // max / min of elliptic norms
    double hyperbolic_spread = 0.0;    // max / min of norm * h in the hyperbolic regime
    bool trapped_ok = false;
    bool elliptic_ok = false;
    bool hyperbolic_ok = false;
    Verdict verdict = Verdict::inconclusive;
};

/// Peak norm near the trapped energy, plus elliptic (z - offset) and hyperbolic
/// (z + offset) controls, for each k; the peaks are fitted against h.
inline NonconcentrationReport nonconcentration_check(const BoundaryProfile& p, const std::vector<int>& k_list,
                                                     const BilliardOptions& opt = {}) {
    p.validate();
    if (!p.outward_left && !p.outward_right)
        throw DomainError("nonconcentration_check: profile opens inward on both sides; needs an outward side");
    NonconcentrationReport rep;
    rep.rows.resize(k_list.size());
    const double v = BoundaryProfile::trapped_energy();
    parallel_for(k_list.size(), [&](std::size_t i) {
        const int k = k_list[i];
        const ModeOperator m = mode_operator(p, k, v * (1.0 + opt.s_hi), opt);
        ModeRow& row = rep.rows[i];
        row.k = k;
        row.beta_k = m.problem.beta_k;
        row.h = m.problem.h;
        const ResolventSample peak =
            energy_peak(m.op, v * (1.0 + opt.s_lo), v * (1.0 + opt.s_hi), opt.scan_points, opt.chi, opt.probe);
        row.z_peak = peak.z;
        row.norm = peak.norm;
        row.converged = peak.converged;
        const ModeOperator mh = mode_operator(p, k, v + opt.regime_offset, opt);
        row.elliptic_norm = cutoff_resolvent_norm(mh.op, v - opt.regime_offset, opt.chi, opt.probe).norm;
        row.hyperbolic_norm = cutoff_resolvent_norm(mh.op, v + opt.regime_offset, opt.chi, opt.probe).norm;
    });
    std::vector<ResolventSample> samples;
    double emin = INFINITY, emax = 0.0, hmin = INFINITY, hmax = 0.0;
    for (const auto& r : rep.rows) {
        ResolventSample s;
        s.h = r.h;
        s.z = r.z_peak;
        s.norm = r.norm;
        s.converged = r.converged;
        samples.push_back(s);
        emin = std::min(emin, r.elliptic_norm);
        emax = std::max(emax, r.elliptic_norm);
        hmin = std::min(hmin, r.hyperbolic_norm * r.h);
        hmax = std::max(hmax, r.hyperbolic_norm * r.h);
    }
    rep.elliptic_spread = emax / emin;
    rep.hyperbolic_spread = hmax / hmin;
    rep.elliptic_ok = rep.elliptic_spread <= opt.regime_ratio;
    rep.hyperbolic_ok = rep.hyperbolic_spread <= opt.regime_ratio;
    try {
        rep.fit = fit_power(samples);
        rep.fit_ok = true;
        rep.trapped_ok = rep.fit.gamma <= opt.gamma_ceiling;
        rep.verdict = rep.trapped_ok ? Verdict::consistent : Verdict::inconsistent;
    } catch (const FitError& e) {
        rep.fit_error = e.what();
        rep.verdict = Verdict::inconclusive;
    }
    return rep;
}

} // namespace semires
