#pragma once

// Quasimodes for a potential well: eigenfunctions of a convexified copy of the well,
// cut off inside it, and the resolvent lower bound they certify.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "discretize.hpp"
#include "error.hpp"
#include "resolvent_probe.hpp"
#include "trapping_classifier.hpp"
#include "warp_model.hpp"

namespace semires {

/// Level-set geometry of a well: V0(c - a) = V0(c + b) = v_min + delta and
/// V0 >= v_min + 3 delta / 2 at c - a - eps and c + b + eps.
struct WellSpec {
    double center = 0.0;
    double v_min = 0.0;
    double delta = 0.0;
    double a = 0.0;
    double b = 0.0;
    double eps = 0.0;
    double beta = 1.0;
    double x_out = 0.0;  // distance from center where the parabola beta (x - c)^2 takes over

    double left() const { return center - a; }
    double right() const { return center + b; }
    double energy_lo() const { return v_min + delta / 2.0; }
    double energy_hi() const { return v_min + 2.0 * delta / 3.0; }
};

struct Quasimode {
    double energy = 0.0;
    std::vector<double> eigenvector;  // phi on the grid
    std::vector<double> vector;       // chi phi, unit norm
    std::vector<double> cutoff;       // chi
    double residual = 0.0;
    double mass_outside = 0.0;
    std::size_t window_count = 0;  // eigenvalues of the extension in the energy window
    double eigen_residual = 0.0;
    Grid grid;
};

namespace detail {

inline double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double f = std::exp(-1.0 / t), g = std::exp(-1.0 / (1.0 - t));
    return f / (f + g);
}

/// First crossing of `level` walking from x0 in direction side, on the Hermite interpolant.
inline std::optional<double> level_crossing(const PotentialProfile& p, double x0, int side, double level, double limit) {
    const Grid& g = p.grid;
    const double step = g.delta();
    double x = x0;
    double fx = hermite(g, p.v0, p.v0p, x) - level;
    while (side < 0 ? x - step >= limit : x + step <= limit) {
        const double xn = x + side * step;
        const double fn = hermite(g, p.v0, p.v0p, xn) - level;
        if (sgn(fn) != sgn(fx)) {
            double lo = x, hi = xn, flo = fx;
            for (int it = 0; it < 200; ++it) {
                const double m = 0.5 * (lo + hi);
                const double fm = hermite(g, p.v0, p.v0p, m) - level;
                if (sgn(fm) == sgn(flo)) {
                    lo = m;
                    flo = fm;
                } else {
                    hi = m;
                }
                if (std::abs(hi - lo) < 1e-15 * std::max(1.0, std::abs(m))) break;
            }
            return 0.5 * (lo + hi);
        }
        x = xn;
        fx = fn;
    }
    return std::nullopt;
}

} // namespace detail

/// Largest admissible delta (halving from the initial guess) for the local minimum comp.
/// The default initial guess is half the height of the lower surrounding barrier.
inline WellSpec fit_well(const PotentialProfile& p, const CriticalComponent& comp, double delta0 = 0.0,
                         double beta = 1.0) {
    if (comp.kind != ComponentKind::local_min)
        throw WellError("fit_well: component at x = " + std::to_string(comp.x_center) + " is not a local minimum");
    const Grid& g = p.grid;
    const double c = comp.x_center, vmin = comp.critical_value;
    const double scale = detail::profile_scale(p);
    const double lim_lo = g.x_min + g.delta(), lim_hi = g.x_max - g.delta();
    if (!(delta0 > 0.0)) {
        double top_l = vmin, top_r = vmin;
        for (std::size_t i = 0; i < g.n; ++i) {
            if (g.x(i) < c) top_l = std::max(top_l, p.v0[i]);
            else top_r = std::max(top_r, p.v0[i]);
        }
        delta0 = 0.5 * (std::min(top_l, top_r) - vmin);
    }
    for (double delta = delta0; delta >= 1e-6 * scale; delta *= 0.5) {
        const auto xl = detail::level_crossing(p, c, -1, vmin + delta, lim_lo);
        const auto xr = detail::level_crossing(p, c, +1, vmin + delta, lim_hi);
        if (!xl || !xr) continue;
        if (!(detail::hermite(g, p.v0p, p.v0pp, *xl) < 0.0) || !(detail::hermite(g, p.v0p, p.v0pp, *xr) > 0.0)) continue;
        const auto yl = detail::level_crossing(p, *xl, -1, vmin + 1.5 * delta, lim_lo);
        const auto yr = detail::level_crossing(p, *xr, +1, vmin + 1.5 * delta, lim_hi);
        if (!yl || !yr) continue;
        const double eps = std::max(*xl - *yl, *yr - *xr);
        if (*xl - eps < lim_lo || *xr + eps > lim_hi) continue;
        if (detail::hermite(g, p.v0, p.v0p, *xl - eps) < vmin + 1.5 * delta - 1e-12 * scale) continue;
        if (detail::hermite(g, p.v0, p.v0p, *xr + eps) < vmin + 1.5 * delta - 1e-12 * scale) continue;
        WellSpec w;
        w.center = c;
        w.v_min = vmin;
        w.delta = delta;
        w.a = c - *xl;
        w.b = *xr - c;
        w.eps = eps;
        w.beta = beta;
        w.x_out = std::max(w.a, w.b) + 5.0 * eps;
        return w;
    }
    throw WellError("fit_well: no admissible delta above 1e-6 * scale for the minimum at x = " + std::to_string(c));
}

struct ExtendedPotential {
    std::vector<double> values;
    bool convex = true;
    std::string warning;
};

/// V on [c - a - eps, c + b + eps], beta (x - c)^2 beyond distance x_out, and a cubic
/// Hermite bridge matching value and slope in between. Throws when the bridge is not
/// monotone or when the energy window's sublevel set leaves [c - a, c + b].
inline ExtendedPotential extend_convex(const Grid& g, std::span<const double> V, const WellSpec& w) {
    if (V.size() != g.n) throw SizeMismatch("extend_convex: V length differs from grid size");
    if (g.x_min > w.center - w.a - w.eps || g.x_max < w.center + w.b + w.eps)
        throw ExtensionError("extend_convex: grid does not cover the well window");
    const double d = g.delta();
    ExtendedPotential out;
    out.values.assign(V.begin(), V.end());
    auto node = [&](double x) {
        return static_cast<std::size_t>(std::clamp(std::lround((x - g.x_min) / d), 0L, static_cast<long>(g.n - 1)));
    };
    for (int side : {-1, 1}) {
        const std::size_t j = node(side < 0 ? w.center - w.a - w.eps : w.center + w.b + w.eps);
        if (j == 0 || j + 1 >= g.n) throw ExtensionError("extend_convex: junction at the grid edge");
        const double x1 = g.x(j), v1 = V[j], d1 = (V[j + 1] - V[j - 1]) / (2.0 * d);
        const double X2 = w.center + side * w.x_out;
        const double v2 = w.beta * w.x_out * w.x_out, d2 = 2.0 * w.beta * side * w.x_out;
        const double H = X2 - x1;
        if (side * H <= 0.0) throw ExtensionError("extend_convex: x_out inside the well window; increase x_out");
        for (std::size_t i = 0; i < g.n; ++i) {
            const double x = g.x(i);
            if (side * (x - x1) <= 0.0) continue;
            if (side * (x - X2) >= 0.0) {
                out.values[i] = w.beta * (x - w.center) * (x - w.center);
                continue;
            }
            const double t = (x - x1) / H, t2 = t * t, t3 = t2 * t;
            out.values[i] = (2 * t3 - 3 * t2 + 1) * v1 + (t3 - 2 * t2 + t) * H * d1 + (-2 * t3 + 3 * t2) * v2 +
                            (t3 - t2) * H * d2;
        }
        // outward monotonicity past the junction
        for (std::size_t i = j; side < 0 ? i > 0 : i + 1 < g.n; i = side < 0 ? i - 1 : i + 1) {
            const std::size_t k = side < 0 ? i - 1 : i + 1;
            if (out.values[k] <= out.values[i])
                throw ExtensionError("extend_convex: extension not monotone near x = " + std::to_string(g.x(k)) +
                                     "; increase x_out");
        }
        for (std::size_t i = j + 1; side < 0 ? i >= 2 : i + 1 < g.n; i = side < 0 ? i - 1 : i + 1) {
            const std::size_t k = side < 0 ? i - 1 : i + 1;
            if (k == 0 || k + 1 >= g.n) break;
            if (side * (g.x(k) - X2) >= 0.0) break;
            if (out.values[k + 1] - 2.0 * out.values[k] + out.values[k - 1] < -1e-12 * std::abs(out.values[k])) {
                out.convex = false;
                out.warning = "extend_convex: bridge not convex near x = " + std::to_string(g.x(k));
                break;
            }
        }
    }
    for (std::size_t i = 0; i < g.n; ++i) {
        const double v = out.values[i];
        if (v >= w.energy_lo() && v <= w.energy_hi() && (g.x(i) < w.left() - d || g.x(i) > w.right() + d))
            throw ExtensionError("extend_convex: energy window sublevel set leaves [c - a, c + b] at x = " +
                                 std::to_string(g.x(i)));
    }
    return out;
}

/// Grid covering the extension with the resolution rule at the top of the energy window.
inline Grid quasimode_grid(const WellSpec& w, double h, double ppw = 20.0) {
    const double R = w.x_out + 1.0;
    const double step = resolution_delta(h, w.energy_hi(), w.v_min, ppw);
    const auto cells = static_cast<std::size_t>(std::ceil(2.0 * R / step));
    return Grid(w.center - R, w.center + R, cells + 1);
}

/// C-infinity cutoff, 1 on [c - a, c + b], 0 outside [c - a - eps, c + b + eps].
inline std::vector<double> well_cutoff(const Grid& g, const WellSpec& w, double eps_scale = 1.0) {
    const double e = w.eps * eps_scale;
    std::vector<double> chi(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        const double x = g.x(i);
        if (x < w.left()) chi[i] = detail::smooth_step((x - (w.left() - e)) / e);
        else if (x > w.right()) chi[i] = detail::smooth_step(((w.right() + e) - x) / e);
        else chi[i] = 1.0;
    }
    return chi;
}

struct QuasimodeOptions {
    double eps_scale = 1.0;    // widen the cutoff transition
    bool unit_cutoff = false;  // chi = 1 everywhere
};

/// Eigenpair of (hD)^2 + V_ext in [v_min + delta/2, v_min + 2 delta/3], cut off by chi,
/// keeping the one with the smallest residual against (hD)^2 + V.
inline Quasimode build_quasimode(std::span<const double> V_ext, std::span<const double> V, double h, const WellSpec& w,
                                 const Grid& g, const QuasimodeOptions& opt = {}) {
    if (V_ext.size() != g.n || V.size() != g.n) throw SizeMismatch("build_quasimode: potential length differs from grid");
    const auto pairs = eigen_window(V_ext, h, g, w.energy_lo(), w.energy_hi());
    if (pairs.empty())
        throw QuasimodeError("build_quasimode: no eigenvalue in [" + std::to_string(w.energy_lo()) + ", " +
                             std::to_string(w.energy_hi()) + "] at h = " + std::to_string(h) + "; decrease h");
    const std::vector<double> chi = opt.unit_cutoff ? std::vector<double>(g.n, 1.0) : well_cutoff(g, w, opt.eps_scale);
    const SymTridiagonal T = self_adjoint_operator(V, h, g);
    Quasimode best;
    best.residual = std::numeric_limits<double>::infinity();
    for (const auto& ep : pairs) {
        std::vector<double> u(g.n);
        for (std::size_t i = 0; i < g.n; ++i) u[i] = chi[i] * ep.vector[i];
        const double nu = detail::norm2<double>(u);
        if (nu == 0.0) continue;
        const auto r = T.multiply_shifted(ep.energy, u);
        const double res = detail::norm2<double>(r) / nu;
        if (res < best.residual) {
            best.residual = res;
            best.energy = ep.energy;
            best.eigenvector = ep.vector;
            best.eigen_residual = ep.residual;
            for (auto& x : u) x /= nu;
            best.vector = std::move(u);
        }
    }
    if (best.vector.empty()) throw QuasimodeError("build_quasimode: cutoff annihilates every eigenfunction");
    best.cutoff = chi;
    best.window_count = pairs.size();
    best.grid = g;
    double out = 0.0;
    for (std::size_t i = 0; i < g.n; ++i)
        if (g.x(i) < w.left() || g.x(i) > w.right()) out += best.vector[i] * best.vector[i];
    best.mass_outside = std::sqrt(out);
    return best;
}

/// ||chi phi|| / ||(P - E) chi phi||, a lower bound for ||chi~ R(E) chi~|| when chi~ = 1 on supp chi.
inline double certify_blowup(const Quasimode& qm) {
    if (qm.residual <= std::numeric_limits<double>::min() * 16) return std::numeric_limits<double>::infinity();
    return 1.0 / qm.residual;
}

/// Cutoff equal to 1 on the support of chi with a half-unit taper.
inline CutoffSpec covering_cutoff(const WellSpec& w, double eps_scale = 1.0) {
    CutoffSpec c;
    c.center = w.center + 0.5 * (w.b - w.a);
    c.inner_radius = 0.5 * (w.a + w.b) + w.eps * eps_scale + 0.05;
    c.taper_width = 0.5;
    return c;
}

struct BlowupCheck {
    double certified = 0.0;
    double measured = 0.0;
    bool passes = false;  // measured >= 0.5 * certified
    ResolventSample sample;
};

/// Direct measurement of ||chi~ (P - iW - E)^-1 chi~|| on a grid that extends the
/// quasimode grid node-for-node, so the certified bound applies to the same matrix.
inline BlowupCheck cross_check_blowup(const Quasimode& qm, const PotentialSource& src, double h, const WellSpec& w,
                                      const CapProfile& cap, double half_width, const ProbeOptions& probe = {}) {
    const Grid& q = qm.grid;
    const double d = q.delta();
    const auto extra_lo = static_cast<std::size_t>(std::ceil(std::max(0.0, q.x_min + half_width) / d));
    const auto extra_hi = static_cast<std::size_t>(std::ceil(std::max(0.0, half_width - q.x_max) / d));
    const Grid big(q.x_min - static_cast<double>(extra_lo) * d, q.x_max + static_cast<double>(extra_hi) * d,
                   q.n + extra_lo + extra_hi);
    const DiscreteOperator op = build_operator(src(big, h), h, big, cap);
    BlowupCheck out;
    out.certified = certify_blowup(qm);
    out.sample = cutoff_resolvent_norm(op, qm.energy, covering_cutoff(w), probe);
    out.measured = out.sample.norm;
    out.passes = out.measured >= 0.5 * out.certified;
    return out;
}

} // namespace semires
