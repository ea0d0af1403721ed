#pragma once

// Cutoff resolvent norm ||chi (P(h) - iW - z)^-1 chi|| by power iteration on M*M,
// and sweeps of it over h and z.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "discretize.hpp"
#include "parallel.hpp"
#include "warp_model.hpp"

namespace semires {

/// chi = 1 on |x - center| <= inner_radius, cosine taper to 0 over taper_width.
struct CutoffSpec {
    double center = 0.0;
    double inner_radius = 1.0;
    double taper_width = 0.5;

    double operator()(double x) const {
        const double d = std::abs(x - center);
        if (d <= inner_radius) return inner_radius > 0.0 || taper_width > 0.0 ? 1.0 : 0.0;
        if (taper_width <= 0.0 || d >= inner_radius + taper_width) return 0.0;
        return 0.5 * (1.0 + std::cos(std::numbers::pi * (d - inner_radius) / taper_width));
    }

    double support_lo() const { return center - inner_radius - taper_width; }
    double support_hi() const { return center + inner_radius + taper_width; }

    std::vector<double> sample(const Grid& g) const {
        std::vector<double> c(g.n);
        for (std::size_t i = 0; i < g.n; ++i) c[i] = (*this)(g.x(i));
        return c;
    }
};

struct ResolventSample {
    double h = 0.0;
    double z = 0.0;
    double norm = 0.0;  // +inf marks a near-singular solve (blowup)
    int iterations = 0;
    bool converged = false;
    std::size_t grid_n = 0;
    double cap_eta = 0.0;
    std::string error;  // non-empty when the sample failed

    bool blowup() const { return std::isinf(norm); }
};

struct ProbeOptions {
    double tol = 1e-6;  // relative change of successive estimates
    int max_iter = 2000;
    unsigned long long seed = 42;
};

/// Largest singular value of M = chi (op - z)^-1 chi.
///
/// Power iteration on the Hermitian M*M with a Rayleigh-quotient estimate. One
/// application solves with chi v, multiplies by chi^2, applies the adjoint solve, which
/// for the complex-symmetric operator is conj(solve(conj(.))), and multiplies by chi.
inline ResolventSample cutoff_resolvent_norm(const DiscreteOperator& op, double z, const CutoffSpec& chi,
                                             const ProbeOptions& opt = {}) {
    ResolventSample s;
    s.h = op.h;
    s.z = z;
    s.grid_n = op.size();
    s.cap_eta = op.cap_strength;
    const std::vector<double> c = chi.sample(op.grid);
    const std::size_t n = op.size();
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (c[i] != 0.0) {
            any = true;
            if (op.diag[i].imag() != 0.0)
                throw ConfigError("cutoff_resolvent_norm: cutoff support overlaps the absorbing layer");
        }
    }
    if (!any) {
        s.converged = true;
        return s;
    }

    std::optional<ShiftedSolver> solver;
    try {
        solver.emplace(op, cplx(z, 0.0));
    } catch (const NearSingular&) {
        s.norm = std::numeric_limits<double>::infinity();
        s.converged = true;
        return s;
    }

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<cplx> v(n), w(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = cplx(gauss(rng) * c[i], 0.0);
    const double nv = detail::norm2<cplx>(v);
    for (auto& x : v) x /= nv;

    double prev = 0.0, sigma = 0.0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) w[i] = v[i] * c[i];
        w = solver->solve(w);
        for (std::size_t i = 0; i < n; ++i) w[i] = std::conj(w[i] * c[i] * c[i]);
        w = solver->solve(w);
        cplx rq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = std::conj(w[i]) * c[i];
            rq += std::conj(v[i]) * w[i];
        }
        const double nw = detail::norm2<cplx>(w);
        s.iterations = it;
        if (!std::isfinite(nw)) {
            s.norm = std::numeric_limits<double>::infinity();
            s.converged = true;
            return s;
        }
        if (nw == 0.0) {
            s.converged = true;
            return s;
        }
        sigma = std::sqrt(std::max(rq.real(), 0.0));
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
        if (it > 1 && std::abs(sigma - prev) < opt.tol * sigma) {
            s.converged = true;
            break;
        }
        prev = sigma;
    }
    s.norm = sigma;
    return s;
}

/// Potential on a grid at a given h: V = V0 + h^2 V1 for warps, Y^-2 for billiards.
using PotentialSource = std::function<std::vector<double>(const Grid&, double h)>;

inline PotentialSource warp_source(const WarpSpec& spec) {
    return [spec](const Grid& g, double h) { return full_potential(effective_potential(spec, g), h); };
}

struct SweepOptions {
    double half_width = 0.0;  // 0 selects the truncation rule
    double points_per_wavelength = 20.0;
    double search_limit = 60.0;
    ProbeOptions probe;
};

/// Truncation rule: the interior window reaches past every point where V exceeds
/// z - 0.2 * scale on the far tails (scale = max V) and past the cutoff support;
/// the absorbing layers are added outside it.
inline double auto_half_width(const PotentialSource& src, double h, double z, const CutoffSpec& chi,
                              const CapProfile& cap, double search_limit = 60.0) {
    const Grid coarse(-search_limit, search_limit, static_cast<std::size_t>(search_limit * 40) + 1);
    const std::vector<double> V = src(coarse, h);
    const double scale = std::max(1e-12, *std::max_element(V.begin(), V.end()));
    const double level = z - 0.2 * scale;
    const double chi_extent = std::max(std::abs(chi.support_lo()), std::abs(chi.support_hi()));
    double reach = 0.0;
    bool escapes = true;
    for (int side : {-1, 1}) {
        // walk inward from the far end until V first exceeds the level
        std::size_t i = side < 0 ? 0 : coarse.n - 1;
        if (V[i] > level) {
            escapes = false;
            continue;
        }
        bool found = false;
        while (true) {
            if (V[i] > level) {
                found = true;
                break;
            }
            if (side < 0 ? i + 1 >= coarse.n : i == 0) break;
            i = side < 0 ? i + 1 : i - 1;
        }
        if (found) reach = std::max(reach, std::abs(coarse.x(i)));
    }
    double interior = std::max(reach, chi_extent) + 2.0;
    if (!escapes) interior = std::max(interior, chi_extent + 2.0);
    return interior / (1.0 - 2.0 * cap.width_fraction);
}

inline double grid_v_min(const PotentialSource& src, double h, double half_width) {
    const Grid coarse = Grid::symmetric(half_width, 0.02);
    const auto V = src(coarse, h);
    return *std::min_element(V.begin(), V.end());
}

/// Grid and operator for one (h, z) following the resolution and truncation rules.
inline DiscreteOperator operator_for(const PotentialSource& src, double h, double z, const CutoffSpec& chi,
                                     const CapProfile& cap, const SweepOptions& opt) {
    const double L = opt.half_width > 0.0 ? opt.half_width : auto_half_width(src, h, z, chi, cap, opt.search_limit);
    const double vmin = grid_v_min(src, h, L);
    const Grid g = Grid::symmetric(L, resolution_delta(h, z, vmin, opt.points_per_wavelength));
    const auto V = src(g, h);
    return build_operator(V, h, g, cap);
}

/// One sample per h; per-h failures are recorded in the sample, not thrown.
inline std::vector<ResolventSample> h_sweep(const PotentialSource& src, double z, const std::vector<double>& h_list,
                                            const CutoffSpec& chi, const CapProfile& cap, const SweepOptions& opt = {}) {
    for (double h : h_list)
        if (!(h > 0.0)) throw DomainError("h_sweep: h values must be positive");
    for (std::size_t i = 1; i < h_list.size(); ++i)
        if (!(h_list[i] < h_list[i - 1])) throw DomainError("h_sweep: h_list must be decreasing");
    std::vector<ResolventSample> out(h_list.size());
    parallel_for(h_list.size(), [&](std::size_t i) {
        const double h = h_list[i];
        try {
            const DiscreteOperator op = operator_for(src, h, z, chi, cap, opt);
            out[i] = cutoff_resolvent_norm(op, z, chi, opt.probe);
        } catch (const Error& e) {
            out[i].h = h;
            out[i].z = z;
            out[i].cap_eta = cap.strength;
            out[i].error = e.what();
        }
    });
    return out;
}

inline std::vector<ResolventSample> h_sweep(const WarpSpec& spec, double z, const std::vector<double>& h_list,
                                            const CutoffSpec& chi, const CapProfile& cap, const SweepOptions& opt = {}) {
    return h_sweep(warp_source(spec), z, h_list, chi, cap, opt);
}

/// Fixed h, varying z. The grid is sized once for the largest z in the list.
inline std::vector<ResolventSample> energy_scan(const PotentialSource& src, double h, const std::vector<double>& z_list,
                                                const CutoffSpec& chi, const CapProfile& cap, const SweepOptions& opt = {}) {
    std::vector<ResolventSample> out(z_list.size());
    if (z_list.empty()) return out;
    const double zmax = *std::max_element(z_list.begin(), z_list.end());
    const double zmin = *std::min_element(z_list.begin(), z_list.end());
    const double L = opt.half_width > 0.0 ? opt.half_width : auto_half_width(src, h, zmin, chi, cap, opt.search_limit);
    const double vmin = grid_v_min(src, h, L);
    const Grid g = Grid::symmetric(L, resolution_delta(h, zmax, vmin, opt.points_per_wavelength));
    const DiscreteOperator op = build_operator(src(g, h), h, g, cap);
    parallel_for(z_list.size(), [&](std::size_t i) {
        try {
            out[i] = cutoff_resolvent_norm(op, z_list[i], chi, opt.probe);
        } catch (const Error& e) {
            out[i].h = h;
            out[i].z = z_list[i];
            out[i].error = e.what();
        }
    });
    return out;
}

/// Peak of the norm over [z_lo, z_hi]: uniform scan then golden-section refinement
/// around the best scan point.
inline ResolventSample energy_peak(const DiscreteOperator& op, double z_lo, double z_hi, std::size_t scan_points,
                                   const CutoffSpec& chi, const ProbeOptions& probe = {}, int refine_steps = 24) {
    std::vector<double> zs(scan_points);
    std::vector<ResolventSample> s(scan_points);
    for (std::size_t i = 0; i < scan_points; ++i)
        zs[i] = z_lo + (z_hi - z_lo) * static_cast<double>(i) / static_cast<double>(scan_points - 1);
    parallel_for(scan_points, [&](std::size_t i) { s[i] = cutoff_resolvent_norm(op, zs[i], chi, probe); });
    std::size_t best = 0;
    for (std::size_t i = 1; i < scan_points; ++i)
        if (s[i].norm > s[best].norm) best = i;
    if (s[best].blowup()) return s[best];
    double a = zs[best == 0 ? 0 : best - 1], b = zs[std::min(best + 1, scan_points - 1)];
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    ResolventSample sc = cutoff_resolvent_norm(op, c, chi, probe), sd = cutoff_resolvent_norm(op, d, chi, probe);
    ResolventSample top = s[best];
    for (int it = 0; it < refine_steps; ++it) {
        if (sc.norm > top.norm) top = sc;
        if (sd.norm > top.norm) top = sd;
        if (sc.norm > sd.norm) {
            b = d;
            d = c;
            sd = sc;
            c = b - g * (b - a);
            sc = cutoff_resolvent_norm(op, c, chi, probe);
        } else {
            a = c;
            c = d;
            sc = sd;
            d = a + g * (b - a);
            sd = cutoff_resolvent_norm(op, d, chi, probe);
        }
    }
    if (sc.norm > top.norm) top = sc;
    if (sd.norm > top.norm) top = sd;
    return top;
}

struct CapRobustness {
    std::vector<ResolventSample> base;
    std::vector<ResolventSample> doubled;  // twice the domain, half the strength
    std::vector<double> relative_change;
    double worst_change = 0.0;
};

/// Re-runs a sweep with the domain doubled and the absorbing strength halved.
inline CapRobustness cap_robustness(const PotentialSource& src, double z, const std::vector<double>& h_list,
                                    const CutoffSpec& chi, const CapProfile& cap, const SweepOptions& opt = {}) {
    CapRobustness r;
    r.base = h_sweep(src, z, h_list, chi, cap, opt);
    r.doubled.resize(h_list.size());
    CapProfile half = cap;
    half.strength *= 0.5;
    parallel_for(h_list.size(), [&](std::size_t i) {
        SweepOptions o = opt;
        const double L = opt.half_width > 0.0 ? opt.half_width
                                              : auto_half_width(src, h_list[i], z, chi, cap, opt.search_limit);
        o.half_width = 2.0 * L;
        try {
            r.doubled[i] = cutoff_resolvent_norm(operator_for(src, h_list[i], z, chi, half, o), z, chi, o.probe);
        } catch (const Error& e) {
            r.doubled[i].h = h_list[i];
            r.doubled[i].error = e.what();
        }
    });
    for (std::size_t i = 0; i < h_list.size(); ++i) {
        const double a = r.base[i].norm, b = r.doubled[i].norm;
        const double c = (r.base[i].error.empty() && r.doubled[i].error.empty() && a > 0.0)
                             ? std::abs(b - a) / a
                             : std::numeric_limits<double>::infinity();
        r.relative_change.push_back(c);
        r.worst_change = std::max(r.worst_change, c);
    }
    return r;
}

inline void write_samples_csv(std::ostream& os, const std::vector<ResolventSample>& samples) {
    os << "h,z,norm,iterations,converged,grid_n,cap_eta\n";
    os.precision(17);
    for (const auto& s : samples)
        os << s.h << ',' << s.z << ',' << s.norm << ',' << s.iterations << ',' << (s.converged ? 1 : 0) << ','
           << s.grid_n << ',' << s.cap_eta << '\n';
}

} // namespace semires
