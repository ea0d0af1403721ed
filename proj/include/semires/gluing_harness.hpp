#pragma once

// The one-dimensional propagation estimate
//   ||u||_(a,a+1) <= sqrt2 K^-1/2 ||u||_(b,b+K) + sqrt2 h^-1 (b+K-a)^1/2 ||h u'||_(a,b+K)
// on band-limited test functions, and the worst-of comparison between a global cutoff
// resolvent norm and the norms of single-component surgery potentials.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "discretize.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "resolvent_probe.hpp"
#include "trapping_classifier.hpp"

namespace semires {

/// u(x) = sum_j c_j exp(i w_j x), with its exact derivative.
struct BandLimited {
    std::vector<double> omega;
    std::vector<cplx> coef;

    cplx value(double x) const {
        cplx s = 0.0;
        for (std::size_t j = 0; j < omega.size(); ++j) s += coef[j] * std::exp(cplx(0.0, omega[j] * x));
        return s;
    }
    cplx derivative(double x) const {
        cplx s = 0.0;
        for (std::size_t j = 0; j < omega.size(); ++j)
            s += coef[j] * cplx(0.0, omega[j]) * std::exp(cplx(0.0, omega[j] * x));
        return s;
    }
    double bandwidth() const {
        double w = 0.0;
        for (double o : omega) w = std::max(w, std::abs(o));
        return w;
    }

    static BandLimited constant(double c = 1.0) { return {{0.0}, {cplx(c, 0.0)}}; }
    static BandLimited plane_wave(double w) { return {{w}, {cplx(1.0, 0.0)}}; }

    /// terms frequencies uniform in [-bandwidth, bandwidth], complex Gaussian coefficients.
    template <typename Rng>
    static BandLimited random(Rng& rng, std::size_t terms, double bandwidth) {
        std::uniform_real_distribution<double> uw(-bandwidth, bandwidth);
        std::normal_distribution<double> g(0.0, 1.0);
        BandLimited u;
        for (std::size_t j = 0; j < terms; ++j) {
            u.omega.push_back(uw(rng));
            u.coef.emplace_back(g(rng), g(rng));
        }
        return u;
    }
};

struct PropagationCase {
    double a = 0.0;
    double b = 1.0;
    double K = 1.0;
    double h = 0.1;
    BandLimited u = BandLimited::constant();
    double spacing = 1e-3;  // quadrature step
};

struct PropagationResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // rhs - lhs
    bool holds = false;
};

namespace detail {

template <typename F>
double l2_trapezoid(F&& f, double lo, double hi, double spacing) {
    const auto cells = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil((hi - lo) / spacing)));
    const double d = (hi - lo) / static_cast<double>(cells);
    double s = 0.0;
    for (std::size_t i = 0; i <= cells; ++i) {
        const double w = (i == 0 || i == cells) ? 0.5 : 1.0;
        s += w * std::norm(f(lo + d * static_cast<double>(i)));
    }
    return std::sqrt(s * d);
}

} // namespace detail

inline PropagationResult propagation_inequality_check(const PropagationCase& c) {
    if (!(c.a < c.b) || !(c.K > 0.0) || !(c.h > 0.0) || !(c.spacing > 0.0))
        throw DomainError("propagation_inequality_check: need a < b, K > 0, h > 0, spacing > 0");
    if (c.u.omega.size() != c.u.coef.size()) throw SizeMismatch("propagation_inequality_check: synthesis terms mismatch");
    if (c.spacing * c.u.bandwidth() > std::numbers::pi / 10.0 * (1.0 + 1e-9))
        throw DomainError("propagation_inequality_check: quadrature spacing too coarse for the synthesis bandwidth");
    const double h = c.h;
    const auto u = [&](double x) { return c.u.value(x); };
    const auto Pu = [&](double x) { return h * c.u.derivative(x); };
    PropagationResult r;
    r.lhs = detail::l2_trapezoid(u, c.a, c.a + 1.0, c.spacing);
    r.rhs = std::sqrt(2.0) / std::sqrt(c.K) * detail::l2_trapezoid(u, c.b, c.b + c.K, c.spacing) +
            std::sqrt(2.0) / h * std::sqrt(c.b + c.K - c.a) * detail::l2_trapezoid(Pu, c.a, c.b + c.K, c.spacing);
    r.slack = r.rhs - r.lhs;
    r.holds = r.lhs <= r.rhs * (1.0 + 1e-6);
    return r;
}

/// Fixed-seed family of random cases with 20 quadrature points per shortest wavelength.
inline std::vector<PropagationCase> random_propagation_cases(std::size_t count, unsigned long long seed = 42) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<PropagationCase> out;
    for (std::size_t i = 0; i < count; ++i) {
        PropagationCase c;
        c.a = -2.0 + 4.0 * U(rng);
        c.b = c.a + 0.25 + 3.0 * U(rng);
        c.K = 0.25 + 5.0 * U(rng);
        c.h = 0.02 + 0.5 * U(rng);
        const auto terms = 1 + static_cast<std::size_t>(8 * U(rng));
        c.u = BandLimited::random(rng, terms, (0.2 + 0.8 * U(rng)) / c.h);
        c.spacing = 2.0 * std::numbers::pi / std::max(c.u.bandwidth(), 1.0) / 20.0;
        out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// worst-of gluing

struct GluingOptions {
    double outer_reach = 2.0;    // window extent on sides without a neighbour
    double gap_margin = 0.5;     // window ends this far past the midpoint to a neighbour
    double tanh_length = 2.0;    // length scale of the monotone continuation
    double energy_band = 0.05;   // components within this * scale of z take part
    double min_separation = 2.0;
    double half_width = 0.0;     // 0 selects the truncation rule
    double ratio_lo = 1.0 / 3.0;
    double ratio_hi = 3.0;
    ProbeOptions probe;
};

struct SurgeryWindow {
    std::size_t component = 0;  // index into the input component list
    double lo = 0.0;
    double hi = 0.0;
};

struct LocalNorm {
    SurgeryWindow window;
    ResolventSample sample;
};

struct GluingReport {
    ResolventSample global;
    std::vector<LocalNorm> local;
    double ratio = 0.0;
    std::size_t dominant = 0;  // index into local
    bool within_band = false;
};

/// V kept on [lo, hi]; outside, v_e + V'(e) L tanh((x - e) / L) from each end e.
inline std::vector<double> surgery_potential(const Grid& g, const std::vector<double>& V, double lo, double hi,
                                             double L) {
    const double d = g.delta();
    auto node = [&](double x) {
        return static_cast<std::size_t>(std::clamp(std::lround((x - g.x_min) / d), 1L, static_cast<long>(g.n) - 2));
    };
    const std::size_t il = node(lo), ih = node(hi);
    if (il >= ih) throw ConfigError("surgery: empty window");
    std::vector<double> out = V;
    const double el = g.x(il), sl = (V[il + 1] - V[il - 1]) / (2 * d);
    const double eh = g.x(ih), sh = (V[ih + 1] - V[ih - 1]) / (2 * d);
    for (std::size_t i = 0; i < il; ++i) out[i] = V[il] + sl * L * std::tanh((g.x(i) - el) / L);
    for (std::size_t i = ih + 1; i < g.n; ++i) out[i] = V[ih] + sh * L * std::tanh((g.x(i) - eh) / L);
    return out;
}

inline void check_windows(const std::vector<SurgeryWindow>& w) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i].lo < w[i].hi)) throw ConfigError("surgery window " + std::to_string(i) + " is empty");
        for (std::size_t j = i + 1; j < w.size(); ++j)
            if (w[i].lo < w[j].hi && w[j].lo < w[i].hi)
                throw ConfigError("surgery windows " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
    }
}

/// Surgery windows for the components near energy z, ordered by position.
inline std::vector<SurgeryWindow> surgery_windows(const std::vector<CriticalComponent>& comps, double z, double scale,
                                                  const GluingOptions& opt = {}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < comps.size(); ++i)
        if (std::abs(comps[i].critical_value - z) <= opt.energy_band * scale) idx.push_back(i);
    if (idx.empty()) throw ConfigError("glued_vs_local: no component within the energy band around z");
    for (std::size_t i : idx)
        if (comps[i].kind == ComponentKind::local_min)
            throw ConfigError("glued_vs_local: components must not be local minima");
    std::sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) { return comps[l].x_center < comps[r].x_center; });
    std::vector<SurgeryWindow> w;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& c = comps[idx[k]];
        SurgeryWindow s{idx[k], c.x_left - opt.outer_reach, c.x_right + opt.outer_reach};
        if (k > 0) {
            const auto& p = comps[idx[k - 1]];
            if (c.x_left - p.x_right < opt.min_separation)
                throw ConfigError("glued_vs_local: components closer than " + std::to_string(opt.min_separation));
            s.lo = 0.5 * (p.x_right + c.x_left) + opt.gap_margin;
        }
        if (k + 1 < idx.size()) s.hi = 0.5 * (c.x_right + comps[idx[k + 1]].x_left) - opt.gap_margin;
        w.push_back(s);
    }
    check_windows(w);
    return w;
}

/// Global cutoff norm against the norms of the single-component surgery potentials,
/// all on the global operator's grid.
inline GluingReport glued_vs_local(const PotentialSource& src, const std::vector<SurgeryWindow>& windows, double z,
                                   double h, const CutoffSpec& chi, const CapProfile& cap, const GluingOptions& opt = {}) {
    check_windows(windows);
    SweepOptions so;
    so.half_width = opt.half_width;
    so.probe = opt.probe;
    const DiscreteOperator global_op = operator_for(src, h, z, chi, cap, so);
    const Grid& g = global_op.grid;
    const std::vector<double> V = src(g, h);
    GluingReport rep;
    rep.global = cutoff_resolvent_norm(global_op, z, chi, opt.probe);
    rep.local.resize(windows.size());
    parallel_for(windows.size(), [&](std::size_t i) {
        const auto Vs = surgery_potential(g, V, windows[i].lo, windows[i].hi, opt.tanh_length);
        rep.local[i].window = windows[i];
        rep.local[i].sample = cutoff_resolvent_norm(build_operator(Vs, h, g, cap), z, chi, opt.probe);
    });
    double best = -1.0;
    for (std::size_t i = 0; i < rep.local.size(); ++i)
        if (rep.local[i].sample.norm > best) {
            best = rep.local[i].sample.norm;
            rep.dominant = i;
        }
    rep.ratio = best > 0.0 ? rep.global.norm / best : std::numeric_limits<double>::infinity();
    rep.within_band = rep.ratio >= opt.ratio_lo && rep.ratio <= opt.ratio_hi;
    return rep;
}

inline GluingReport glued_vs_local(const PotentialSource& src, const std::vector<CriticalComponent>& comps, double scale,
                                   double z, double h, const CutoffSpec& chi, const CapProfile& cap,
                                   const GluingOptions& opt = {}) {
    return glued_vs_local(src, surgery_windows(comps, z, scale, opt), z, h, chi, cap, opt);
}

} // namespace semires
