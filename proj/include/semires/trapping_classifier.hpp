#pragma once

// Critical sets of V0, their degeneracy orders, predicted resolvent scaling laws,
// and the worst-of global verdict.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "warp_model.hpp"

namespace semires {

enum class ComponentKind {
    nondegenerate_max,
    degenerate_max,
    infinitely_degenerate_max,
    cylinder_max,
    inflection,
    infinitely_degenerate_inflection,
    cylinder_inflection,
    local_min,
};

inline std::string to_string(ComponentKind k) {
    switch (k) {
    case ComponentKind::nondegenerate_max: return "nondegenerate_max";
    case ComponentKind::degenerate_max: return "degenerate_max";
    case ComponentKind::infinitely_degenerate_max: return "infinitely_degenerate_max";
    case ComponentKind::cylinder_max: return "cylinder_max";
    case ComponentKind::inflection: return "inflection";
    case ComponentKind::infinitely_degenerate_inflection: return "infinitely_degenerate_inflection";
    case ComponentKind::cylinder_inflection: return "cylinder_inflection";
    case ComponentKind::local_min: return "local_min";
    }
    return "unknown";
}

/// Marker for an estimated order above the cap.
inline constexpr int kInfiniteOrder = -1;

struct CriticalComponent {
    double x_left = 0.0;
    double x_right = 0.0;
    double x_center = 0.0;
    ComponentKind kind = ComponentKind::nondegenerate_max;
    int order = 1;  // m for maxima/minima, m2 for inflections, kInfiniteOrder for INFINITE
    double critical_value = 0.0;
    int left_slope_sign = 0;   // sign of -V0' just left of the component
    int right_slope_sign = 0;  // sign of -V0' just right of it
    int curvature_sign = 0;    // sign of V0'' at the center
    double fitted_order = 0.0;

    bool is_point() const { return x_left == x_right; }
    bool infinite() const { return order == kInfiniteOrder; }
};

enum class LawForm { power, power_log, power_plus_eta, superpolynomial, nontrapping, elliptic };

inline std::string to_string(LawForm f) {
    switch (f) {
    case LawForm::power: return "power";
    case LawForm::power_log: return "power_log";
    case LawForm::power_plus_eta: return "power_plus_eta";
    case LawForm::superpolynomial: return "superpolynomial";
    case LawForm::nontrapping: return "nontrapping";
    case LawForm::elliptic: return "elliptic";
    }
    return "unknown";
}

/// Predicted resolvent growth ~ h^-exponent (times log(1/h) for power_log).
struct ScalingLaw {
    LawForm form = LawForm::nontrapping;
    double exponent = 1.0;

    static ScalingLaw nontrapping() { return {LawForm::nontrapping, 1.0}; }
    static ScalingLaw elliptic() { return {LawForm::elliptic, 0.0}; }
    bool superpolynomial() const { return form == LawForm::superpolynomial; }
};

enum class GlobalCase { case1_almost_bounded, case2_blowup };

inline std::string to_string(GlobalCase c) {
    return c == GlobalCase::case1_almost_bounded ? "case1_almost_bounded" : "case2_blowup";
}

struct TrappingReport {
    std::vector<CriticalComponent> components;
    std::vector<ScalingLaw> per_component_law;
    GlobalCase global = GlobalCase::case1_almost_bounded;
    ScalingLaw worst = ScalingLaw::nontrapping();
    std::optional<std::size_t> worst_index;
    std::optional<double> smoothing_order;
};

struct ClassifierOptions {
    double deriv_tol_rel = 1e-3;  // relative to max |V0'|
    double merge_cells = 5.0;
    int m_cap = 8;
    double window_lo = 1e-8;  // flank window for |V0 - Vc| relative to scale
    double window_hi = 1e-2;
    double core_tol = 1e-13;  // |V0 - Vc| below which samples count as flat
    double drift_ratio = 1.5;
    double floor_rel = 1e-2;  // ignore critical values below floor_rel * max V0
};

inline double gamma_degenerate_max(int m) { return 2.0 * m / (m + 1.0); }
inline double gamma_inflection(int m2) { return (4.0 * m2 + 2.0) / (2.0 * m2 + 3.0); }

namespace detail {

inline int sgn(double v) { return (v > 0.0) - (v < 0.0); }

/// Cubic Hermite evaluation of V0 (using V0') or of V0' (using V0'') on the profile grid.
inline double hermite(const Grid& g, const std::vector<double>& f, const std::vector<double>& fp, double x) {
    const double d = g.delta();
    const double pos = std::clamp((x - g.x_min) / d, 0.0, static_cast<double>(g.n - 1));
    const std::size_t i = std::min(static_cast<std::size_t>(pos), g.n - 2);
    const double t = pos - static_cast<double>(i);
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f[i] + (t3 - 2 * t2 + t) * d * fp[i] + (-2 * t3 + 3 * t2) * f[i + 1] +
           (t3 - t2) * d * fp[i + 1];
}

inline double profile_scale(const PotentialProfile& p) {
    const auto [lo, hi] = std::minmax_element(p.v0.begin(), p.v0.end());
    return std::max(*hi - *lo, 1e-300);
}

inline std::size_t margin_cells(const Grid& g) {
    return std::max<std::size_t>(10, static_cast<std::size_t>(0.02 * static_cast<double>(g.n)));
}

/// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t b, std::size_t e) {
    const double n = static_cast<double>(e - b);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = b; i < e; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

struct FlankFit {
    double order = 0.0;  // +inf when the slope keeps growing toward the component
    int sign = 0;        // sign of V0 - Vc on the flank
    std::size_t usable = 0;
};

/// Slope of log|V0 - Vc| against log(distance from edge) on one side.
inline FlankFit fit_flank(const PotentialProfile& p, double edge, int side, double vc, double scale,
                          const ClassifierOptions& opt) {
    const Grid& g = p.grid;
    const double margin = static_cast<double>(margin_cells(g)) * g.delta();
    const double d_max = side < 0 ? edge - (g.x_min + margin) : (g.x_max - margin) - edge;
    FlankFit out;
    if (d_max <= 0.0) return out;
    const double d_min = std::min(1e-3 * g.delta(), d_max * 1e-6);
    const std::size_t count = 600;
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < count; ++k) {
        const double d = d_min * std::pow(d_max / d_min, static_cast<double>(k) / (count - 1));
        const double dv = hermite(g, p.v0, p.v0p, edge + side * d) - vc;
        const double a = std::abs(dv);
        if (a > opt.window_hi * scale) break;
        if (a < opt.window_lo * scale) continue;
        const int s = sgn(dv);
        if (out.sign == 0) out.sign = s;
        else if (s != out.sign) break;
        lx.push_back(std::log(d));
        ly.push_back(std::log(a));
    }
    out.usable = lx.size();
    if (out.usable < 6) return out;
    const double full = ls_slope(lx, ly, 0, lx.size());
    const std::size_t half = lx.size() / 2;
    const double inner = ls_slope(lx, ly, 0, half);
    const double outer = ls_slope(lx, ly, half, lx.size());
    out.order = (outer > 0.0 && inner > opt.drift_ratio * outer) ? std::numeric_limits<double>::infinity() : full;
    return out;
}

/// Root of f on [a, b] by bisection on the Hermite interpolant (f has a sign change).
inline double hermite_root(const Grid& g, const std::vector<double>& f, const std::vector<double>& fp, double a, double b) {
    double fa = hermite(g, f, fp, a);
    for (int it = 0; it < 100; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = hermite(g, f, fp, m);
        if (fm == 0.0) return m;
        if (sgn(fm) == sgn(fa)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

/// Refined center of a candidate: a sign change of V0', else of V0'', else the
/// parabolic minimum of |V0'|.
inline double refine_center(const PotentialProfile& p, std::size_t i0, std::size_t i1) {
    const Grid& g = p.grid;
    const std::size_t lo = i0 > 0 ? i0 - 1 : 0, hi = std::min(i1 + 1, g.n - 1);
    std::vector<std::size_t> roots;
    for (std::size_t i = lo; i < hi; ++i)
        if (sgn(p.v0p[i]) != sgn(p.v0p[i + 1]) || p.v0p[i] == 0.0) roots.push_back(i);
    if (!roots.empty()) {
        const std::size_t i = roots[roots.size() / 2];
        if (p.v0p[i] == 0.0) return g.x(i);
        return hermite_root(g, p.v0p, p.v0pp, g.x(i), g.x(i + 1));
    }
    for (std::size_t i = lo; i < hi; ++i)
        if (sgn(p.v0pp[i]) != sgn(p.v0pp[i + 1])) {
            const double a = g.x(i), b = g.x(i + 1);
            const double fa = p.v0pp[i], fb = p.v0pp[i + 1];
            return a - fa * (b - a) / (fb - fa);
        }
    std::size_t best = lo;
    for (std::size_t i = lo; i <= hi; ++i)
        if (std::abs(p.v0p[i]) < std::abs(p.v0p[best])) best = i;
    if (best == 0 || best + 1 >= g.n) return g.x(best);
    const double ym = std::abs(p.v0p[best - 1]), y0 = std::abs(p.v0p[best]), yp = std::abs(p.v0p[best + 1]);
    const double den = ym - 2 * y0 + yp;
    const double off = den > 0.0 ? std::clamp(0.5 * (ym - yp) / den, -0.5, 0.5) : 0.0;
    return g.x(best) + off * g.delta();
}

} // namespace detail

/// Maximal intervals with |V0'| <= deriv_tol, merged across gaps shorter than
/// merge_width, refined to a center and annotated with flank slope signs. Intervals
/// reaching the grid margin and near-zero critical values (flat tails) are dropped.
inline std::vector<CriticalComponent> find_critical_components(const PotentialProfile& p, double deriv_tol,
                                                               double merge_width,
                                                               const ClassifierOptions& opt = {}) {
    if (p.v0.empty() || p.v0.size() != p.grid.n || p.v0p.size() != p.grid.n || p.v0pp.size() != p.grid.n)
        throw ClassificationError("find_critical_components: empty or inconsistent profile");
    if (!(deriv_tol > 0.0) || !(merge_width > 0.0))
        throw ClassificationError("find_critical_components: tolerances must be positive");
    const Grid& g = p.grid;
    double dmax = 0.0;
    for (double d : p.v0p) dmax = std::max(dmax, std::abs(d));
    if (deriv_tol >= dmax)
        throw ClassificationError("find_critical_components: deriv_tol exceeds max|V0'|, everything is critical");
    const double vmax = *std::max_element(p.v0.begin(), p.v0.end());

    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t i = 0; i < g.n;) {
        if (std::abs(p.v0p[i]) > deriv_tol) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < g.n && std::abs(p.v0p[j + 1]) <= deriv_tol) ++j;
        runs.emplace_back(i, j);
        i = j + 1;
    }
    // a sign change of V0' between two nodes is critical even if both exceed the tolerance
    for (std::size_t i = 0; i + 1 < g.n; ++i)
        if (detail::sgn(p.v0p[i]) * detail::sgn(p.v0p[i + 1]) < 0) runs.emplace_back(i, i + 1);
    std::sort(runs.begin(), runs.end());

    const auto gap_cells = static_cast<std::size_t>(std::ceil(merge_width / g.delta()));
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (const auto& r : runs) {
        if (!merged.empty() && r.first <= merged.back().second + gap_cells)
            merged.back().second = std::max(merged.back().second, r.second);
        else
            merged.push_back(r);
    }

    const std::size_t margin = detail::margin_cells(g);
    std::vector<CriticalComponent> out;
    for (const auto& [i0, i1] : merged) {
        if (i0 < margin || i1 + margin >= g.n) continue;
        CriticalComponent c;
        c.x_center = detail::refine_center(p, i0, i1);
        c.x_left = c.x_right = c.x_center;
        c.critical_value = detail::hermite(g, p.v0, p.v0p, c.x_center);
        if (c.critical_value < opt.floor_rel * vmax) continue;
        c.left_slope_sign = -detail::sgn(p.v0p[i0 - 1]);
        c.right_slope_sign = -detail::sgn(p.v0p[std::min(i1 + 1, g.n - 1)]);
        const double pos = std::clamp((c.x_center - g.x_min) / g.delta(), 0.0, static_cast<double>(g.n - 1));
        c.curvature_sign = detail::sgn(p.v0pp[static_cast<std::size_t>(std::lround(pos))]);
        out.push_back(c);
    }
    return out;
}

inline std::vector<CriticalComponent> find_critical_components(const PotentialProfile& p,
                                                               const ClassifierOptions& opt = {}) {
    double dmax = 0.0;
    for (double d : p.v0p) dmax = std::max(dmax, std::abs(d));
    return find_critical_components(p, opt.deriv_tol_rel * dmax, opt.merge_cells * p.grid.delta(), opt);
}

/// Kind and order of a component from flank fits of log|V0 - Vc| against log(distance).
/// Also fills the component extent: a flat core wider than the merge width whose
/// point fit is not finite becomes a cylinder interval.
inline CriticalComponent classify_order(const PotentialProfile& p, CriticalComponent comp, int m_cap = 8,
                                        const ClassifierOptions& opt = {}) {
    const Grid& g = p.grid;
    const double scale = detail::profile_scale(p);
    const double vc = comp.critical_value;
    const double cap = 2.0 * m_cap;

    // flat core around the center
    const double flat = opt.core_tol * scale;
    const double step = g.delta() * 0.25;
    const double lim_lo = g.x_min + static_cast<double>(detail::margin_cells(g)) * g.delta();
    const double lim_hi = g.x_max - static_cast<double>(detail::margin_cells(g)) * g.delta();
    double cl = comp.x_center, cr = comp.x_center;
    while (cl - step > lim_lo && std::abs(detail::hermite(g, p.v0, p.v0p, cl - step) - vc) <= flat) cl -= step;
    while (cr + step < lim_hi && std::abs(detail::hermite(g, p.v0, p.v0p, cr + step) - vc) <= flat) cr += step;

    auto fit_both = [&](double el, double er) {
        detail::FlankFit L = detail::fit_flank(p, el, -1, vc, scale, opt);
        detail::FlankFit R = detail::fit_flank(p, er, +1, vc, scale, opt);
        return std::pair{L, R};
    };
    auto [L, R] = fit_both(comp.x_center, comp.x_center);
    const auto finite_point = [&] {
        return L.usable >= 6 && R.usable >= 6 && std::isfinite(L.order) && std::isfinite(R.order) &&
               std::max(L.order, R.order) <= cap;
    };
    const double merge_width = opt.merge_cells * g.delta();
    bool interval = false;
    if (cr - cl > merge_width && !finite_point()) {
        interval = true;
        comp.x_left = cl;
        comp.x_right = cr;
        std::tie(L, R) = fit_both(cl, cr);
    } else {
        comp.x_left = comp.x_right = comp.x_center;
    }
    if (L.usable < 6 || R.usable < 6) {
        throw ClassificationError("classify_order: flank window too short near x = " + std::to_string(comp.x_center) +
                                  " (left " + std::to_string(L.usable) + ", right " + std::to_string(R.usable) +
                                  " usable samples, need 6)");
    }

    const double order = std::max(L.order, R.order);
    comp.fitted_order = order;
    const bool infinite = interval || !std::isfinite(order) || order > cap;
    if (L.sign > 0 && R.sign > 0) {
        comp.kind = ComponentKind::local_min;
        comp.order = infinite ? kInfiniteOrder : std::max(1, static_cast<int>(std::lround(order / 2.0)));
    } else if (L.sign < 0 && R.sign < 0) {
        if (interval) {
            comp.kind = ComponentKind::cylinder_max;
            comp.order = kInfiniteOrder;
        } else if (infinite) {
            comp.kind = ComponentKind::infinitely_degenerate_max;
            comp.order = kInfiniteOrder;
        } else {
            comp.order = std::max(1, static_cast<int>(std::lround(order / 2.0)));
            comp.kind = comp.order == 1 ? ComponentKind::nondegenerate_max : ComponentKind::degenerate_max;
        }
    } else {
        if (interval) {
            comp.kind = ComponentKind::cylinder_inflection;
            comp.order = kInfiniteOrder;
        } else if (infinite) {
            comp.kind = ComponentKind::infinitely_degenerate_inflection;
            comp.order = kInfiniteOrder;
        } else {
            comp.kind = ComponentKind::inflection;
            comp.order = static_cast<int>(std::lround((order - 1.0) / 2.0));
            if (comp.order < 1)
                throw ClassificationError("classify_order: no critical point near x = " + std::to_string(comp.x_center) +
                                          " (fitted order " + std::to_string(order) + ")");
        }
    }
    return comp;
}

/// Inverse of the local commutator lower bound for each kind.
inline ScalingLaw predicted_law(const CriticalComponent& c) {
    switch (c.kind) {
    case ComponentKind::nondegenerate_max: return {LawForm::power_log, 1.0};
    case ComponentKind::degenerate_max: return {LawForm::power, gamma_degenerate_max(c.order)};
    case ComponentKind::inflection: return {LawForm::power, gamma_inflection(c.order)};
    case ComponentKind::infinitely_degenerate_max:
    case ComponentKind::cylinder_max:
    case ComponentKind::infinitely_degenerate_inflection:
    case ComponentKind::cylinder_inflection: return {LawForm::power_plus_eta, 2.0};
    case ComponentKind::local_min: return {LawForm::superpolynomial, std::numeric_limits<double>::infinity()};
    }
    return ScalingLaw::nontrapping();
}

namespace detail {
// power_log with the same exponent counts as worse than power
inline double severity(const ScalingLaw& l) {
    if (l.form == LawForm::superpolynomial) return std::numeric_limits<double>::infinity();
    return l.exponent + (l.form == LawForm::power_log || l.form == LawForm::power_plus_eta ? 1e-9 : 0.0);
}
} // namespace detail

/// Worst-of verdict: a local minimum forces blowup, otherwise the largest exponent wins.
inline TrappingReport global_verdict(const std::vector<CriticalComponent>& components, const std::vector<ScalingLaw>& laws) {
    if (components.size() != laws.size()) throw SizeMismatch("global_verdict: components and laws differ in length");
    TrappingReport r;
    r.components = components;
    r.per_component_law = laws;
    for (std::size_t i = 0; i < laws.size(); ++i) {
        if (!r.worst_index || detail::severity(laws[i]) > detail::severity(r.worst)) {
            r.worst = laws[i];
            r.worst_index = i;
        }
    }
    const bool blowup = std::any_of(components.begin(), components.end(),
                                    [](const CriticalComponent& c) { return c.kind == ComponentKind::local_min; });
    r.global = blowup ? GlobalCase::case2_blowup : GlobalCase::case1_almost_bounded;
    if (!blowup && r.worst.exponent < 2.0) r.smoothing_order = (2.0 - r.worst.exponent) / 2.0;
    return r;
}

/// Full pipeline on a profile: detect, classify, predict, verdict.
inline TrappingReport classify_profile(const PotentialProfile& p, const ClassifierOptions& opt = {}) {
    std::vector<CriticalComponent> comps;
    for (const auto& c : find_critical_components(p, opt)) comps.push_back(classify_order(p, c, opt.m_cap, opt));
    std::vector<ScalingLaw> laws;
    for (const auto& c : comps) laws.push_back(predicted_law(c));
    return global_verdict(comps, laws);
}

} // namespace semires
