#pragma once

// Three-point finite-difference discretization of P(h) = -h^2 d^2/dx^2 + V with a
// complex absorbing layer on both ends, a pivoting tridiagonal solver, and a
// Sturm-bisection eigensolver for the self-adjoint (layer-free) operator.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"
#include "grid.hpp"

namespace semires {

using cplx = std::complex<double>;

struct CapProfile {
    double strength = 1.0;
    double width_fraction = 0.15;
    int ramp_power = 3;

    void validate() const {
        if (!(strength >= 0.0)) throw ConfigError("cap: strength must be >= 0");
        if (!(width_fraction > 0.0 && width_fraction < 0.4)) throw ConfigError("cap: width_fraction must lie in (0, 0.4)");
        if (ramp_power < 2) throw ConfigError("cap: ramp_power must be >= 2");
    }

    double layer_width(const Grid& g) const { return width_fraction * g.length(); }

    /// Absorbing potential W(x) >= 0, zero on the interior window.
    double W(const Grid& g, double x) const {
        const double w = layer_width(g);
        const double lo = g.x_min + w, hi = g.x_max - w;
        if (x < lo) return strength * std::pow((lo - x) / w, ramp_power);
        if (x > hi) return strength * std::pow((x - hi) / w, ramp_power);
        return 0.0;
    }

    /// Interior window [lo, hi] on which W vanishes.
    std::pair<double, double> interior(const Grid& g) const {
        const double w = layer_width(g);
        return {g.x_min + w, g.x_max - w};
    }
};

/// Complex-symmetric tridiagonal representation of P(h) - iW.
struct DiscreteOperator {
    double h = 1.0;
    Grid grid;
    std::vector<cplx> diag;     // 2h^2/delta^2 + V - iW
    std::vector<cplx> offdiag;  // -h^2/delta^2, length n - 1
    double cap_strength = 0.0;

    std::size_t size() const { return diag.size(); }

    /// y = (op - z) u
    std::vector<cplx> apply(cplx z, std::span<const cplx> u) const {
        const std::size_t n = size();
        if (u.size() != n) throw SizeMismatch("apply: vector length differs from operator size");
        std::vector<cplx> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            cplx s = (diag[i] - z) * u[i];
            if (i > 0) s += offdiag[i - 1] * u[i - 1];
            if (i + 1 < n) s += offdiag[i] * u[i + 1];
            y[i] = s;
        }
        return y;
    }

    void write_bands_csv(std::ostream& os) const {
        os << "x,diag_re,diag_im,offdiag\n";
        os.precision(17);
        for (std::size_t i = 0; i < size(); ++i)
            os << grid.x(i) << ',' << diag[i].real() << ',' << diag[i].imag() << ','
               << (i + 1 < size() ? offdiag[i].real() : 0.0) << '\n';
    }
};

inline DiscreteOperator build_operator(std::span<const double> V, double h, const Grid& grid, const CapProfile& cap) {
    if (V.size() != grid.n) throw SizeMismatch("build_operator: V length differs from grid size");
    if (!(h > 0.0)) throw DomainError("build_operator: h must be positive");
    cap.validate();
    DiscreteOperator op;
    op.h = h;
    op.grid = grid;
    op.cap_strength = cap.strength;
    const double k = h * h / (grid.delta() * grid.delta());
    op.diag.resize(grid.n);
    op.offdiag.assign(grid.n - 1, cplx(-k, 0.0));
    for (std::size_t i = 0; i < grid.n; ++i) op.diag[i] = cplx(2.0 * k + V[i], -cap.W(grid, grid.x(i)));
    return op;
}

/// LU factorization with partial pivoting of a general tridiagonal matrix
/// (the LAPACK gttrf scheme: one extra superdiagonal of fill).
template <typename T>
class TridiagonalLU {
public:
    /// sub[i] = A(i+1, i), sup[i] = A(i, i+1).
    TridiagonalLU(std::vector<T> sub, std::vector<T> diag, std::vector<T> sup)
        : dl_(std::move(sub)), d_(std::move(diag)), du_(std::move(sup)) {
        const std::size_t n = d_.size();
        if (n == 0 || dl_.size() + 1 != n || du_.size() + 1 != n) throw SizeMismatch("tridiagonal: band lengths inconsistent");
        double scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = std::abs(d_[i]);
            if (i > 0) r += std::abs(dl_[i - 1]);
            if (i + 1 < n) r += std::abs(du_[i]);
            scale = std::max(scale, r);
        }
        scale_ = scale;
        const double tiny = 1e-30 * std::max(scale, std::numeric_limits<double>::min());
        du2_.assign(n > 2 ? n - 2 : 0, T(0));
        swapped_.assign(n, false);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (std::abs(d_[i]) >= std::abs(dl_[i])) {
                if (std::abs(d_[i]) <= tiny) throw NearSingular("tridiagonal solve: pivot below threshold");
                const T fact = dl_[i] / d_[i];
                dl_[i] = fact;
                d_[i + 1] -= fact * du_[i];
            } else {
                const T fact = d_[i] / dl_[i];
                d_[i] = dl_[i];
                dl_[i] = fact;
                const T temp = du_[i];
                du_[i] = d_[i + 1];
                d_[i + 1] = temp - fact * d_[i + 1];
                if (i + 2 < n) {
                    du2_[i] = du_[i + 1];
                    du_[i + 1] = -fact * du_[i + 1];
                }
                swapped_[i] = true;
            }
        }
        if (std::abs(d_[n - 1]) <= tiny) throw NearSingular("tridiagonal solve: pivot below threshold");
    }

    std::size_t size() const { return d_.size(); }
    double scale() const { return scale_; }

    std::vector<T> solve(std::span<const T> rhs) const {
        const std::size_t n = size();
        if (rhs.size() != n) throw SizeMismatch("tridiagonal solve: rhs length differs");
        std::vector<T> b(rhs.begin(), rhs.end());
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (!swapped_[i]) {
                b[i + 1] -= dl_[i] * b[i];
            } else {
                const T temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - dl_[i] * b[i];
            }
        }
        b[n - 1] /= d_[n - 1];
        if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
        for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(n) - 3; i >= 0; --i) {
            const auto k = static_cast<std::size_t>(i);
            b[k] = (b[k] - du_[k] * b[k + 1] - du2_[k] * b[k + 2]) / d_[k];
        }
        return b;
    }

private:
    std::vector<T> dl_, d_, du_, du2_;
    std::vector<bool> swapped_;
    double scale_ = 0.0;
};

namespace detail {

template <typename T>
double norm2(std::span<const T> v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

} // namespace detail

/// Factorization of (op - z) with a residual-checked solve.
class ShiftedSolver {
public:
    ShiftedSolver(const DiscreteOperator& op, cplx z) : op_(&op), z_(z), lu_(make(op, z)) {}

    /// Solves (op - z) u = rhs; one refinement step when the relative residual exceeds 1e-10.
    std::vector<cplx> solve(std::span<const cplx> rhs) const {
        auto u = lu_.solve(rhs);
        const double nb = detail::norm2(rhs);
        if (nb == 0.0) return u;
        auto r = op_->apply(z_, u);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
        if (detail::norm2<cplx>(r) > 1e-10 * nb) {
            const auto du = lu_.solve(r);
            for (std::size_t i = 0; i < u.size(); ++i) u[i] += du[i];
        }
        return u;
    }

private:
    static TridiagonalLU<cplx> make(const DiscreteOperator& op, cplx z) {
        std::vector<cplx> d(op.diag);
        for (auto& v : d) v -= z;
        return TridiagonalLU<cplx>(op.offdiag, std::move(d), op.offdiag);
    }

    const DiscreteOperator* op_;
    cplx z_;
    TridiagonalLU<cplx> lu_;
};

/// u with (op - z) u = rhs.
inline std::vector<cplx> solve(const DiscreteOperator& op, cplx z, std::span<const cplx> rhs) {
    if (rhs.size() != op.size()) throw SizeMismatch("solve: rhs length differs from operator size");
    return ShiftedSolver(op, z).solve(rhs);
}

// ---------------------------------------------------------------------------
// Self-adjoint eigensolver

struct EigenPair {
    double energy;
    std::vector<double> vector;  // unit l2 norm
    double residual;             // ||(T - E) v|| / ||T||_inf
};

/// Real symmetric tridiagonal matrix d (diagonal), e (off-diagonal).
struct SymTridiagonal {
    std::vector<double> d, e;

    double norm_inf() const {
        double s = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            double r = std::abs(d[i]);
            if (i > 0) r += std::abs(e[i - 1]);
            if (i < e.size()) r += std::abs(e[i]);
            s = std::max(s, r);
        }
        return s;
    }

    /// Number of eigenvalues strictly below x (Sturm sequence).
    std::size_t count_below(double x) const {
        std::size_t c = 0;
        const double guard = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
        double q = d[0] - x;
        if (q < 0.0) ++c;
        for (std::size_t i = 1; i < d.size(); ++i) {
            if (std::abs(q) < guard) q = -guard;
            q = d[i] - x - e[i - 1] * e[i - 1] / q;
            if (q < 0.0) ++c;
        }
        return c;
    }

    std::vector<double> multiply_shifted(double E, std::span<const double> v) const {
        const std::size_t n = d.size();
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = (d[i] - E) * v[i];
            if (i > 0) s += e[i - 1] * v[i - 1];
            if (i + 1 < n) s += e[i] * v[i + 1];
            y[i] = s;
        }
        return y;
    }
};

inline SymTridiagonal self_adjoint_operator(std::span<const double> V, double h, const Grid& grid) {
    if (V.size() != grid.n) throw SizeMismatch("eigen_window: V length differs from grid size");
    if (!(h > 0.0)) throw DomainError("eigen_window: h must be positive");
    const double k = h * h / (grid.delta() * grid.delta());
    SymTridiagonal t;
    t.d.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) t.d[i] = 2.0 * k + V[i];
    t.e.assign(grid.n - 1, -k);
    return t;
}

/// All eigenpairs of the Dirichlet operator -h^2 D^2 + V with E in [E_lo, E_hi],
/// ascending. Bisection on Sturm counts, then inverse iteration.
inline std::vector<EigenPair> eigen_window(const SymTridiagonal& T, double E_lo, double E_hi) {
    std::vector<EigenPair> out;
    if (!(E_lo < E_hi)) return out;
    const std::size_t n = T.d.size();
    const std::size_t i_lo = T.count_below(E_lo), i_hi = T.count_below(E_hi);
    if (i_hi <= i_lo) return out;
    const double tnorm = T.norm_inf();
    const double eps = std::numeric_limits<double>::epsilon();

    std::vector<double> energies;
    for (std::size_t j = i_lo; j < i_hi; ++j) {
        double lo = E_lo, hi = E_hi;
        for (int it = 0; it < 200 && hi - lo > 2.0 * eps * std::max(std::abs(lo) + std::abs(hi), tnorm * 1e-3); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (T.count_below(mid) > j) hi = mid;
            else lo = mid;
        }
        energies.push_back(0.5 * (lo + hi));
    }

    std::mt19937_64 rng(12345);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t idx = 0; idx < energies.size(); ++idx) {
        const double E = energies[idx];
        double shift = E;
        std::vector<double> v(n);
        for (auto& x : v) x = gauss(rng);
        std::optional<TridiagonalLU<double>> lu;
        for (int attempt = 0; attempt < 8 && !lu; ++attempt) {
            std::vector<double> dd(T.d);
            for (auto& x : dd) x -= shift;
            try {
                lu.emplace(T.e, std::move(dd), T.e);
            } catch (const NearSingular&) {
                shift += 1e-13 * tnorm * (attempt + 1);
            }
        }
        if (!lu) throw NearSingular("eigen_window: inverse iteration failed to factor");
        double res = INFINITY;
        for (int it = 0; it < 6; ++it) {
            v = lu->solve(v);
            // orthogonalize against numerically close eigenvectors found earlier
            for (std::size_t p = 0; p < out.size(); ++p) {
                if (std::abs(out[p].energy - E) > 1e-6 * std::max(1.0, tnorm)) continue;
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += out[p].vector[i] * v[i];
                for (std::size_t i = 0; i < n; ++i) v[i] -= dot * out[p].vector[i];
            }
            const double nv = detail::norm2<double>(v);
            for (auto& x : v) x /= nv;
            const auto r = T.multiply_shifted(E, v);
            res = detail::norm2<double>(r) / tnorm;
            if (res < 1e-14 && it >= 1) break;
        }
        // fix the sign convention: largest component positive
        std::size_t imax = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
        if (v[imax] < 0.0)
            for (auto& x : v) x = -x;
        out.push_back({E, std::move(v), res});
    }
    return out;
}

inline std::vector<EigenPair> eigen_window(std::span<const double> V, double h, const Grid& grid, double E_lo, double E_hi) {
    return eigen_window(self_adjoint_operator(V, h, grid), E_lo, E_hi);
}

/// Grid spacing from the resolution rule delta <= h / (ppw sqrt(max(z - V_min, 1))).
inline double resolution_delta(double h, double z, double v_min, double points_per_wavelength = 20.0) {
    return h / (points_per_wavelength * std::sqrt(std::max(z - v_min, 1.0)));
}

} // namespace semires
