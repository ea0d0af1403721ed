#pragma once

// Warp functions A(x) of a two-ended warped product dx^2 + A(x)^2 G_theta and
// the effective one-dimensional potential data V0 = A^-2, V1, V = V0 + h^2 V1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "jet.hpp"

namespace semires {

enum class WarpFamily {
    constant_plus_bump,
    degenerate_bump,
    inflection_profile,
    gevrey_flat,
    well_profile,
    raw_potential,
};

inline std::string to_string(WarpFamily f) {
    switch (f) {
    case WarpFamily::constant_plus_bump: return "constant_plus_bump";
    case WarpFamily::degenerate_bump: return "degenerate_bump";
    case WarpFamily::inflection_profile: return "inflection_profile";
    case WarpFamily::gevrey_flat: return "gevrey_flat";
    case WarpFamily::well_profile: return "well_profile";
    case WarpFamily::raw_potential: return "raw_potential";
    }
    return "unknown";
}

inline std::optional<WarpFamily> parse_family(const std::string& s) {
    for (auto f : {WarpFamily::constant_plus_bump, WarpFamily::degenerate_bump, WarpFamily::inflection_profile,
                   WarpFamily::gevrey_flat, WarpFamily::well_profile, WarpFamily::raw_potential})
        if (to_string(f) == s) return f;
    return std::nullopt;
}

/// Value and first two derivatives of a scalar function at a point.
struct Triple {
    double f = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// Tabulated V0 (and optionally V1) for the raw_potential family.
struct RawTable {
    std::vector<double> x;
    std::vector<double> v0;
    std::vector<double> v1;   // empty means V1 = 0
    std::vector<double> v0p;  // filled by finalize()
    std::vector<double> v0pp;

    /// Sorts nothing; requires strictly increasing, uniformly spaced x. Computes the
    /// derivative tables by fourth-order central differences (second order at the ends).
    void finalize() {
        const std::size_t n = x.size();
        if (n < 5 || v0.size() != n) throw ConfigError("raw_potential: need matching x/v0 tables with at least 5 rows");
        if (!v1.empty() && v1.size() != n) throw ConfigError("raw_potential: v1 length differs from x");
        const double d = (x.back() - x.front()) / static_cast<double>(n - 1);
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(x[i] - x[i - 1] - d) > 1e-8 * std::max(1.0, std::abs(d)))
                throw ConfigError("raw_potential: x must be uniformly spaced and increasing");
        v0p.assign(n, 0.0);
        v0pp.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (i >= 2 && i + 2 < n) {
                v0p[i] = (-v0[i + 2] + 8.0 * v0[i + 1] - 8.0 * v0[i - 1] + v0[i - 2]) / (12.0 * d);
                v0pp[i] = (-v0[i + 2] + 16.0 * v0[i + 1] - 30.0 * v0[i] + 16.0 * v0[i - 1] - v0[i - 2]) / (12.0 * d * d);
            } else if (i >= 1 && i + 1 < n) {
                v0p[i] = (v0[i + 1] - v0[i - 1]) / (2.0 * d);
                v0pp[i] = (v0[i + 1] - 2.0 * v0[i] + v0[i - 1]) / (d * d);
            } else if (i == 0) {
                v0p[i] = (-3.0 * v0[0] + 4.0 * v0[1] - v0[2]) / (2.0 * d);
                v0pp[i] = (2.0 * v0[0] - 5.0 * v0[1] + 4.0 * v0[2] - v0[3]) / (d * d);
            } else {
                v0p[i] = (3.0 * v0[n - 1] - 4.0 * v0[n - 2] + v0[n - 3]) / (2.0 * d);
                v0pp[i] = (2.0 * v0[n - 1] - 5.0 * v0[n - 2] + 4.0 * v0[n - 3] - v0[n - 4]) / (d * d);
            }
        }
    }

    /// Cubic Hermite interpolation of V0 using the derivative table; V0'' and V1 linear.
    Triple eval_v0(double xq) const {
        const std::size_t n = x.size();
        const double d = (x.back() - x.front()) / static_cast<double>(n - 1);
        if (xq < x.front() - 1e-12 * d || xq > x.back() + 1e-12 * d)
            throw DomainError("raw_potential: evaluation outside the table at x = " + std::to_string(xq));
        double pos = std::clamp((xq - x.front()) / d, 0.0, static_cast<double>(n - 1));
        std::size_t i = std::min(static_cast<std::size_t>(pos), n - 2);
        const double t = pos - static_cast<double>(i);
        const double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
        const double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
        Triple r;
        r.f = h00 * v0[i] + h10 * d * v0p[i] + h01 * v0[i + 1] + h11 * d * v0p[i + 1];
        const double g00 = 6 * t * t - 6 * t, g10 = 3 * t * t - 4 * t + 1, g01 = -6 * t * t + 6 * t, g11 = 3 * t * t - 2 * t;
        r.d1 = (g00 * v0[i] + g01 * v0[i + 1]) / d + g10 * v0p[i] + g11 * v0p[i + 1];
        r.d2 = (1 - t) * v0pp[i] + t * v0pp[i + 1];
        return r;
    }

    double eval_v1(double xq) const {
        if (v1.empty()) return 0.0;
        const std::size_t n = x.size();
        const double d = (x.back() - x.front()) / static_cast<double>(n - 1);
        double pos = std::clamp((xq - x.front()) / d, 0.0, static_cast<double>(n - 1));
        std::size_t i = std::min(static_cast<std::size_t>(pos), n - 2);
        const double t = pos - static_cast<double>(i);
        return (1 - t) * v1[i] + t * v1[i + 1];
    }
};

namespace detail {

/// Integer polynomial coefficients of (x + s)^p (x - s)^q, lowest degree first.
inline std::vector<double> two_root_poly(double s, int p, int q) {
    std::vector<double> c{1.0};
    auto mul = [&](double root) {
        std::vector<double> r(c.size() + 1, 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) {
            r[k + 1] += c[k];
            r[k] -= root * c[k];
        }
        c = r;
    };
    for (int i = 0; i < p; ++i) mul(-s);
    for (int i = 0; i < q; ++i) mul(s);
    return c;
}

/// Tail moments T_k(u) = int_u^inf t^k e^{-t^2} dt (upper) or int_-inf^u (lower).
inline std::vector<double> gauss_tail_moments(double u, std::size_t kmax, bool upper) {
    std::vector<double> m(kmax + 1, 0.0);
    const double e = std::exp(-u * u);
    const double half_sqrt_pi = 0.5 * std::sqrt(std::numbers::pi);
    if (upper) {
        m[0] = half_sqrt_pi * std::erfc(u);
        if (kmax >= 1) m[1] = 0.5 * e;
        for (std::size_t k = 2; k <= kmax; ++k)
            m[k] = 0.5 * std::pow(u, static_cast<double>(k - 1)) * e + 0.5 * static_cast<double>(k - 1) * m[k - 2];
    } else {
        m[0] = half_sqrt_pi * std::erfc(-u);
        if (kmax >= 1) m[1] = -0.5 * e;
        for (std::size_t k = 2; k <= kmax; ++k)
            m[k] = -0.5 * std::pow(u, static_cast<double>(k - 1)) * e + 0.5 * static_cast<double>(k - 1) * m[k - 2];
    }
    return m;
}

} // namespace detail

/// V1 = (n-1)/2 A''/A - (n-1)(n-3)/4 (A'/A)^2 from A and its derivatives.
inline double v1_from_warp(const Triple& a, int n) {
    const double nm1 = n - 1.0;
    return 0.5 * nm1 * a.d2 / a.f - 0.25 * nm1 * (n - 3.0) * (a.d1 * a.d1) / (a.f * a.f);
}

/// Closed-form warp specification.
///
/// Families (parameters in brackets, with defaults):
///   degenerate_bump    A = (1 + (x/w)^{2m})^{1/2m}, V0 = (1 + (x/w)^{2m})^{-1/m}; max of order 2m at 0 [m=1, w=1]
///   inflection_profile V0 = (1 - q^2)(a - b q), q = s^n (1 + s^{n+1})^{-n/(n+1)}, s = x - center, n = 2 m2 + 1
///                      [m2=1, a=1, b=1, center=1]; with m2_second > 0 a two-inflection profile instead:
///                      V0 = G(t(x)), t monotone with t' ~ (x+sep)^{2 m2} (x-sep)^{2 m2_second} e^{-x^2/sigma^2},
///                      G(t) = (1 - t^2) e^{kappa t} / max, kappa equalizing the two inflection levels [sep=2, sigma=2]
///   gevrey_flat        A^2 = 1 + (1 + x^2) exp(-|x|^{-p}), flat maximum at 0 [p=2]
///   constant_plus_bump A = 1 on [-a, a], A^2 = 1 + (1 + s^2) exp(-s^{-p}) with s = |x| - a outside [a=1, p=1]
///   well_profile       V0 = (vmin + c x^2) exp(-x^2 / L^2); local minimum vmin at 0 [vmin=0.2, c=0.25, L=4]
///   raw_potential      tabulated V0, V1
struct WarpSpec {
    WarpFamily family = WarpFamily::degenerate_bump;
    std::map<std::string, double> params;
    int n = 3;
    std::optional<double> tau;
    double epsilon = 1e-12;  // lower bound required of A on samples
    double r_short = 8.0;    // start of the short-range sanity window
    std::shared_ptr<const RawTable> raw;

    double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }

    static WarpSpec degenerate_bump(int m, int dim = 3) {
        WarpSpec s;
        s.family = WarpFamily::degenerate_bump;
        s.params["m"] = m;
        s.n = dim;
        return s;
    }
    static WarpSpec inflection_profile(int m2, int dim = 3) {
        WarpSpec s;
        s.family = WarpFamily::inflection_profile;
        s.params["m2"] = m2;
        s.n = dim;
        return s;
    }
    static WarpSpec two_inflection_profile(int m2_left, int m2_right, int dim = 3) {
        WarpSpec s = inflection_profile(m2_left, dim);
        s.params["m2_second"] = m2_right;
        return s;
    }
    static WarpSpec gevrey_flat(double p, int dim = 3) {
        WarpSpec s;
        s.family = WarpFamily::gevrey_flat;
        s.params["p"] = p;
        s.n = dim;
        s.tau = p + 1.0;
        return s;
    }
    static WarpSpec constant_plus_bump(double half_width, double p = 1.0, int dim = 3) {
        WarpSpec s;
        s.family = WarpFamily::constant_plus_bump;
        s.params["a"] = half_width;
        s.params["p"] = p;
        s.n = dim;
        s.tau = p + 1.0;
        return s;
    }
    static WarpSpec well_profile(double vmin = 0.2, double c = 0.25, double width = 4.0, int dim = 3) {
        WarpSpec s;
        s.family = WarpFamily::well_profile;
        s.params["vmin"] = vmin;
        s.params["c"] = c;
        s.params["L"] = width;
        s.n = dim;
        return s;
    }
    static WarpSpec raw_potential(RawTable table, int dim = 3) {
        table.finalize();
        WarpSpec s;
        s.family = WarpFamily::raw_potential;
        s.raw = std::make_shared<const RawTable>(std::move(table));
        s.n = dim;
        return s;
    }

    /// Whether the family's closed form is built from A directly (otherwise from V0).
    bool warp_is_primary() const {
        return family == WarpFamily::degenerate_bump || family == WarpFamily::gevrey_flat ||
               family == WarpFamily::constant_plus_bump;
    }

    /// Taylor jet of the primary closed form (A or V0, see warp_is_primary) at x.
    Jet primary_jet(double x, std::size_t order) const {
        const Jet X = Jet::variable(order, x);
        switch (family) {
        case WarpFamily::degenerate_bump: {
            const int m = static_cast<int>(param("m", 1));
            const double w = param("w", 1.0);
            return pow(1.0 + ipow(X / w, 2 * m), 1.0 / (2.0 * m));
        }
        case WarpFamily::gevrey_flat:
            return sqrt(1.0 + flat_growth(X, 0.0, param("p", 2.0)));
        case WarpFamily::constant_plus_bump: {
            const double a = param("a", 1.0);
            return sqrt(1.0 + flat_growth(X, a, param("p", 1.0)));
        }
        case WarpFamily::well_profile: {
            const double vmin = param("vmin", 0.2), c = param("c", 0.25), L = param("L", 4.0);
            return (vmin + c * X * X) * exp(-(X * X) / (L * L));
        }
        case WarpFamily::inflection_profile:
            if (param("m2_second", 0.0) > 0.0) return two_inflection_jet(x, order);
            return single_inflection_jet(X);
        case WarpFamily::raw_potential: {
            if (!raw) throw ConfigError("raw_potential: missing v0 table");
            const Triple t = raw->eval_v0(x);
            Jet j(order, t.f);
            if (order >= 1) j[1] = t.d1;
            if (order >= 2) j[2] = 0.5 * t.d2;
            return j;
        }
        }
        throw ConfigError("unknown warp family");
    }

    /// V0 with its first two derivatives (closed form for built-in families).
    Triple v0(double x) const {
        Jet j = primary_jet(x, 2);
        if (warp_is_primary()) {
            if (!(j[0] > 0.0) || !std::isfinite(j[0]))
                throw DomainError("warp function non-positive at x = " + std::to_string(x));
            j = pow(j, -2.0);
        }
        if (!(j[0] > 0.0) || !std::isfinite(j[0]))
            throw DomainError("effective potential V0 non-positive at x = " + std::to_string(x));
        return {j[0], j.derivative(1), j.derivative(2)};
    }

    /// A with its first two derivatives.
    Triple warp(double x) const {
        Jet j = primary_jet(x, 2);
        if (!warp_is_primary()) {
            if (!(j[0] > 0.0) || !std::isfinite(j[0]))
                throw DomainError("effective potential V0 non-positive at x = " + std::to_string(x));
            j = pow(j, -0.5);
        }
        if (!(j[0] >= epsilon) || !std::isfinite(j[0]))
            throw DomainError("warp function below epsilon at x = " + std::to_string(x));
        return {j[0], j.derivative(1), j.derivative(2)};
    }

    /// V1 = (n-1)/2 A''/A - (n-1)(n-3)/4 (A'/A)^2.
    double v1(double x) const {
        if (family == WarpFamily::raw_potential) {
            if (!raw) throw ConfigError("raw_potential: missing v0 table");
            return raw->eval_v1(x);
        }
        return v1_from_warp(warp(x), n);
    }

    /// Jet of A(x + t) - A(x0) (coefficientwise difference of Taylor jets), possibly
    /// multiplied by a positive constant common to all coefficients. For the flat
    /// families at their flat point the constant exp(|x - x0|^-p) keeps the jet finite.
    Jet gevrey_increment(double x, double x0, std::size_t order) const {
        if (family == WarpFamily::raw_potential) throw ConfigError("gevrey check needs a closed-form family");
        const bool flat = family == WarpFamily::gevrey_flat || family == WarpFamily::constant_plus_bump;
        if (flat) {
            const double a = family == WarpFamily::constant_plus_bump ? param("a", 1.0) : 0.0;
            const double p = param("p", family == WarpFamily::gevrey_flat ? 2.0 : 1.0);
            const bool at_flat_point = std::abs(std::abs(x0) - a) < 1e-14 && (a > 0.0 || std::abs(x0) < 1e-14);
            if (at_flat_point && std::abs(x) > a) {
                const double sgn = x > 0 ? 1.0 : -1.0;
                const Jet S = sgn * Jet::variable(order, x) - a;  // |x| - a near x
                const double s0 = S[0];
                const double g0 = -std::pow(s0, -p);
                const Jet hat = (1.0 + S * S) * exp(-pow(S, -p) - g0);
                const double scale = std::exp(g0);
                return hat / (1.0 + sqrt(1.0 + scale * hat));
            }
        }
        Jet jx = warp_jet(x, order);
        const Jet j0 = warp_jet(x0, order);
        for (std::size_t k = 0; k <= order; ++k) jx[k] -= j0[k];
        return jx;
    }

    /// Taylor jet of A at x.
    Jet warp_jet(double x, std::size_t order) const {
        Jet j = primary_jet(x, order);
        return warp_is_primary() ? j : pow(j, -0.5);
    }

private:
    /// (1 + s^2) exp(-s^-p) for s = |x| - a > 0, identically zero otherwise.
    static Jet flat_growth(const Jet& X, double a, double p) {
        const double x = X[0];
        if (std::abs(x) <= a) return Jet(X.order(), 0.0);
        const Jet S = (x > 0 ? X : -X) - a;
        if (S[0] <= 0.0) return Jet(X.order(), 0.0);
        return (1.0 + S * S) * exp(-pow(S, -p));
    }

    Jet single_inflection_jet(const Jet& X) const {
        const int m2 = static_cast<int>(param("m2", 1));
        const double a = param("a", 1.0), b = param("b", 1.0), c = param("center", 1.0);
        const int nn = 2 * m2 + 1;
        const Jet S = X - c;
        const Jet q = ipow(S, nn) * pow(1.0 + ipow(S, nn + 1), -static_cast<double>(nn) / (nn + 1));
        return (1.0 - q * q) * (a - b * q);
    }

    struct TwoInflection {
        std::vector<double> poly;  // coefficients of t' numerator in x
        double sigma, total, kappa, gmax;
    };

    TwoInflection two_inflection_setup() const {
        const int ml = static_cast<int>(param("m2", 1)), mr = static_cast<int>(param("m2_second", 1));
        const double sep = param("sep", 2.0), sigma = param("sigma", 2.0);
        TwoInflection t;
        t.poly = detail::two_root_poly(sep, 2 * ml, 2 * mr);
        t.sigma = sigma;
        t.total = 0.0;
        for (std::size_t k = 0; k < t.poly.size(); k += 2)
            t.total += t.poly[k] * std::pow(sigma, static_cast<double>(k + 1)) * std::tgamma((k + 1.0) / 2.0);
        const double lL = lower_upper(t, -sep).first;
        const double uR = lower_upper(t, sep).second;
        const double tL = lL - 1.0, tR = 1.0 - uR;
        // (1 - t^2) at the two levels, evaluated through the tails
        const double gL = (2.0 - lL) * lL, gR = uR * (2.0 - uR);
        t.kappa = std::log(gL / gR) / (tR - tL);
        const double ts = std::abs(t.kappa) < 1e-14 ? 0.0 : (-1.0 + std::sqrt(1.0 + t.kappa * t.kappa)) / t.kappa;
        t.gmax = (1.0 - ts * ts) * std::exp(t.kappa * ts);
        return t;
    }

    /// (1 + t(x), 1 - t(x)) evaluated through the Gaussian tails.
    static std::pair<double, double> lower_upper(const TwoInflection& t, double x) {
        const double u = x / t.sigma;
        const std::size_t deg = t.poly.size() - 1;
        const bool upper = x > 0.0;
        const auto m = detail::gauss_tail_moments(u, deg, upper);
        double tail = 0.0;
        for (std::size_t k = 0; k <= deg; ++k) tail += t.poly[k] * std::pow(t.sigma, static_cast<double>(k + 1)) * m[k];
        const double frac = 2.0 * tail / t.total;
        return upper ? std::pair{2.0 - frac, frac} : std::pair{frac, 2.0 - frac};
    }

    Jet two_inflection_jet(double x, std::size_t order) const {
        const TwoInflection t = two_inflection_setup();
        const auto [lo, up] = lower_upper(t, x);
        // jet of t' = 2 P(x) exp(-x^2/sigma^2) / total
        const Jet X = Jet::variable(order, x);
        Jet P(order, 0.0);
        Jet xp(order, 1.0);
        for (double c : t.poly) {
            P += c * xp;
            xp = xp * X;
        }
        const Jet dt = (2.0 / t.total) * P * exp(-(X * X) / (t.sigma * t.sigma));
        Jet plus(order, lo), minus(order, up);
        for (std::size_t k = 1; k <= order; ++k) {
            plus[k] = dt[k - 1] / static_cast<double>(k);
            minus[k] = -plus[k];
        }
        const Jet tt = plus - 1.0;
        return plus * minus * exp(t.kappa * tt) / t.gmax;
    }
};

/// Sampled potential data on a grid.
struct PotentialProfile {
    Grid grid;
    std::vector<double> v0, v1, v0p, v0pp;
};

/// V0 = A^-2 and V1 on the grid, with closed-form V0', V0''.
inline PotentialProfile effective_potential(const WarpSpec& spec, const Grid& grid) {
    if (spec.family == WarpFamily::raw_potential && !spec.raw) throw ConfigError("raw_potential: missing v0 table");
    PotentialProfile p;
    p.grid = grid;
    p.v0.resize(grid.n);
    p.v1.resize(grid.n);
    p.v0p.resize(grid.n);
    p.v0pp.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        const Triple t = spec.v0(x);
        p.v0[i] = t.f;
        p.v0p[i] = t.d1;
        p.v0pp[i] = t.d2;
        p.v1[i] = spec.v1(x);
    }
    return p;
}

/// h = 1 / lambda_k.
inline double mode_parameters(double lambda_k) {
    if (!(lambda_k > 0.0)) throw DomainError("mode_parameters: lambda_k must be positive");
    return 1.0 / lambda_k;
}

/// V = V0 + h^2 V1 elementwise.
inline std::vector<double> full_potential(const PotentialProfile& profile, double h) {
    std::vector<double> v(profile.v0.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = profile.v0[i] + h * h * profile.v1[i];
    return v;
}

/// Advisory short-range check: x^2 V0(x) stays bounded between r_short and 4 r_short.
/// Returns an empty string when the check passes, otherwise a warning.
inline std::string short_range_warning(const WarpSpec& spec) {
    if (spec.family == WarpFamily::raw_potential) return {};
    double lo = 1e300, hi = 0.0;
    for (double sgn : {-1.0, 1.0}) {
        for (int k = 0; k <= 8; ++k) {
            const double x = sgn * spec.r_short * std::pow(4.0, k / 8.0);
            double v;
            try {
                v = spec.v0(x).f;
            } catch (const DomainError&) {
                return "short-range check: potential not evaluable at x = " + std::to_string(x);
            }
            lo = std::min(lo, x * x * v);
            hi = std::max(hi, x * x * v);
        }
    }
    if (hi > 10.0 * std::max(lo, 1e-300) && hi > 1e-3)
        return "short-range check: x^2 V0 varies by more than 10x on the far window (not asymptotically Euclidean)";
    return {};
}

inline void write_profile_csv(std::ostream& os, const PotentialProfile& p) {
    os << "x,v0,v1,v0p,v0pp\n";
    os.precision(17);
    for (std::size_t i = 0; i < p.grid.n; ++i)
        os << p.grid.x(i) << ',' << p.v0[i] << ',' << p.v1[i] << ',' << p.v0p[i] << ',' << p.v0pp[i] << '\n';
}

// ---------------------------------------------------------------------------
// 0-Gevrey spot check

struct GevreySample {
    std::size_t k, s;
    double x, ratio;
};

struct GevreyReport {
    bool passes = false;
    double worst_ratio = 0.0;
    double threshold = 10.0;
    std::vector<GevreySample> samples;
};

/// Geometric samples x0 + side * d with d from d_far down to d_near.
inline std::vector<double> gevrey_samples(double x0, double side, double d_far, double d_near, std::size_t count) {
    std::vector<double> xs(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        xs[i] = x0 + side * d_far * std::pow(d_near / d_far, t);
    }
    return xs;
}

/// Spot-check of |f^(k)(x) - f^(k)(x0)| <= C |x - x0|^{-tau (k - s)} |f^(s)(x) - f^(s)(x0)|
/// for f = A and 0 <= s < k <= k_max. sample_xs should approach x0 (ordered far to near).
/// For each (k, s) the normalized ratio R = |D_k| |x - x0|^{tau (k-s)} / |D_s| is fitted
/// with C = max R over the outer half of the samples; worst_ratio is max R / C overall.
inline GevreyReport check_gevrey(const WarpSpec& spec, double x0, std::size_t k_max, const std::vector<double>& sample_xs) {
    if (!spec.tau) throw ConfigError("check_gevrey: tau (claimed 0-Gevrey index) missing");
    if (sample_xs.size() < 4) throw ConfigError("check_gevrey: need at least 4 samples");
    const double tau = *spec.tau;
    GevreyReport rep;
    std::vector<std::vector<double>> D;  // D[j][k] = |k-th derivative increment| at sample j
    for (double x : sample_xs) {
        const Jet j = spec.gevrey_increment(x, x0, k_max);
        std::vector<double> row(k_max + 1);
        for (std::size_t k = 0; k <= k_max; ++k) row[k] = std::abs(j.derivative(k));
        D.push_back(row);
    }
    const std::size_t half = sample_xs.size() / 2;
    rep.worst_ratio = 1.0;
    for (std::size_t k = 1; k <= k_max; ++k) {
        for (std::size_t s = 0; s < k; ++s) {
            std::vector<double> R(sample_xs.size(), 0.0);
            bool skip = true;
            for (std::size_t j = 0; j < sample_xs.size(); ++j) {
                const double dist = std::abs(sample_xs[j] - x0);
                if (D[j][s] == 0.0) {
                    R[j] = D[j][k] == 0.0 ? 0.0 : INFINITY;
                } else {
                    skip = false;
                    R[j] = D[j][k] * std::pow(dist, tau * static_cast<double>(k - s)) / D[j][s];
                }
            }
            if (skip) continue;
            double C = 0.0;
            for (std::size_t j = 0; j < half; ++j) C = std::max(C, R[j]);
            if (C == 0.0) C = 1e-300;
            for (std::size_t j = 0; j < sample_xs.size(); ++j) {
                const double r = R[j] / C;
                rep.samples.push_back({k, s, sample_xs[j], r});
                rep.worst_ratio = std::max(rep.worst_ratio, r);
            }
        }
    }
    rep.passes = rep.worst_ratio <= rep.threshold;
    return rep;
}

} // namespace semires
