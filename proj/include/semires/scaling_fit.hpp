#pragma once

// Least-squares scaling laws norm ~ C h^-gamma (log 1/h)^kappa and verdicts against
// predicted laws.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "error.hpp"
#include "resolvent_probe.hpp"
#include "trapping_classifier.hpp"

namespace semires {

enum class FitModel { pure_power, power_log };

inline std::string to_string(FitModel m) { return m == FitModel::pure_power ? "pure_power" : "power_log"; }

struct ScalingFitResult {
    FitModel model = FitModel::pure_power;
    double gamma = 0.0;
    double kappa = 0.0;
    double log_c = 0.0;
    double r2 = 0.0;
    double sse = 0.0;
    int n_points = 0;
    double h_min = 0.0;
    double h_max = 0.0;
    int blowups = 0;         // +inf samples seen (never fitted)
    bool collinear = false;  // variance inflation of the log-log regressor above 1000
};

enum class Verdict { consistent, inconsistent, inconclusive };

inline std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::consistent: return "consistent";
    case Verdict::inconsistent: return "inconsistent";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "unknown";
}

namespace detail {

struct FitData {
    std::vector<double> h, norm;
    int blowups = 0;
};

/// Converged finite samples sorted by h, so results do not depend on input order.
inline FitData usable_samples(const std::vector<ResolventSample>& samples) {
    std::vector<std::pair<double, double>> hv;
    FitData d;
    for (const auto& s : samples) {
        if (!s.error.empty()) continue;
        if (s.blowup()) {
            ++d.blowups;
            continue;
        }
        if (!s.converged || !(s.norm > 0.0)) continue;
        hv.emplace_back(s.h, s.norm);
    }
    std::sort(hv.begin(), hv.end());
    for (const auto& [h, v] : hv) {
        d.h.push_back(h);
        d.norm.push_back(v);
    }
    return d;
}

inline void check_span(const FitData& d, const char* who) {
    if (d.h.size() < 4) throw FitError(std::string(who) + ": need at least 4 converged samples");
    if (d.h.back() < 4.0 * d.h.front()) throw FitError(std::string(who) + ": h must span at least a factor 4");
}

/// Least squares y = X beta for 2 or 3 columns via normal equations with column scaling.
inline std::vector<double> least_squares(const std::vector<std::vector<double>>& cols, const std::vector<double>& y) {
    const std::size_t p = cols.size(), n = y.size();
    std::vector<double> scale(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        for (double v : cols[j]) scale[j] = std::max(scale[j], std::abs(v));
        if (scale[j] == 0.0) scale[j] = 1.0;
    }
    std::vector<std::vector<double>> A(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            const double xj = cols[j][i] / scale[j];
            for (std::size_t k = 0; k < p; ++k) A[j][k] += xj * cols[k][i] / scale[k];
            A[j][p] += xj * y[i];
        }
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        const double d = A[c][c];
        if (d == 0.0) throw FitError("least squares: singular design");
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c) continue;
            const double f = A[r][c] / d;
            for (std::size_t k = c; k <= p; ++k) A[r][k] -= f * A[c][k];
        }
    }
    std::vector<double> beta(p);
    for (std::size_t j = 0; j < p; ++j) beta[j] = A[j][p] / A[j][j] / scale[j];
    return beta;
}

inline void finish(ScalingFitResult& r, const std::vector<std::vector<double>>& cols, const std::vector<double>& beta,
                   const std::vector<double>& y) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double pred = 0.0;
        for (std::size_t j = 0; j < cols.size(); ++j) pred += beta[j] * cols[j][i];
        sse += (y[i] - pred) * (y[i] - pred);
        sst += (y[i] - mean) * (y[i] - mean);
    }
    r.sse = sse;
    r.r2 = sst > 0.0 ? std::clamp(1.0 - sse / sst, 0.0, 1.0) : 1.0;
}

} // namespace detail

/// log norm = log_c + gamma log(1/h).
inline ScalingFitResult fit_power(const std::vector<ResolventSample>& samples) {
    const auto d = detail::usable_samples(samples);
    detail::check_span(d, "fit_power");
    std::vector<double> one(d.h.size(), 1.0), L(d.h.size()), y(d.h.size());
    for (std::size_t i = 0; i < d.h.size(); ++i) {
        L[i] = std::log(1.0 / d.h[i]);
        y[i] = std::log(d.norm[i]);
    }
    // centred closed form keeps the slope bit-stable under norm rescaling
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < L.size(); ++i) {
        mx += L[i];
        my += y[i];
    }
    mx /= static_cast<double>(L.size());
    my /= static_cast<double>(L.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < L.size(); ++i) {
        sxy += (L[i] - mx) * (y[i] - my);
        sxx += (L[i] - mx) * (L[i] - mx);
    }
    ScalingFitResult r;
    r.model = FitModel::pure_power;
    r.gamma = sxy / sxx;
    r.log_c = my - r.gamma * mx;
    r.n_points = static_cast<int>(d.h.size());
    r.h_min = d.h.front();
    r.h_max = d.h.back();
    r.blowups = d.blowups;
    detail::finish(r, {one, L}, {r.log_c, r.gamma}, y);
    return r;
}

/// log norm = log_c + gamma log(1/h) + kappa log log(1/h). Requires h < 1.
inline ScalingFitResult fit_power_log(const std::vector<ResolventSample>& samples) {
    const auto d = detail::usable_samples(samples);
    detail::check_span(d, "fit_power_log");
    if (d.h.back() >= 1.0) throw FitError("fit_power_log: all h must be < 1");
    const std::size_t n = d.h.size();
    std::vector<double> one(n, 1.0), L(n), LL(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        L[i] = std::log(1.0 / d.h[i]);
        LL[i] = std::log(L[i]);
        y[i] = std::log(d.norm[i]);
    }
    const auto beta = detail::least_squares({one, L, LL}, y);
    // variance inflation of log log(1/h) against (1, log(1/h))
    const auto aux = detail::least_squares({one, L}, LL);
    double res = 0.0, tot = 0.0, mean = 0.0;
    for (double v : LL) mean += v;
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = LL[i] - aux[0] - aux[1] * L[i];
        res += e * e;
        tot += (LL[i] - mean) * (LL[i] - mean);
    }
    ScalingFitResult r;
    r.model = FitModel::power_log;
    r.log_c = beta[0];
    r.gamma = beta[1];
    r.kappa = beta[2];
    r.n_points = static_cast<int>(n);
    r.h_min = d.h.front();
    r.h_max = d.h.back();
    r.blowups = d.blowups;
    r.collinear = res <= 1e-3 * tot;
    detail::finish(r, {one, L, LL}, beta, y);
    return r;
}

struct VerdictOptions {
    double tol_gamma = 0.15;
    double min_r2 = 0.98;
    double min_span = 4.0;
    double eta_floor = 1.7;
    double superpoly_gamma = 3.0;
};

inline Verdict verdict(const ScalingFitResult& fit, const ScalingLaw& law, const VerdictOptions& opt = {}) {
    if (law.form == LawForm::superpolynomial) {
        if (fit.blowups > 0) return Verdict::consistent;
        if (fit.n_points < 4 || fit.h_max < opt.min_span * fit.h_min) return Verdict::inconclusive;
        return fit.gamma >= opt.superpoly_gamma ? Verdict::consistent : Verdict::inconsistent;
    }
    if (fit.n_points < 4 || fit.h_max < opt.min_span * fit.h_min || fit.r2 < opt.min_r2) return Verdict::inconclusive;
    if (law.form == LawForm::power_plus_eta)
        return fit.gamma <= 2.0 + opt.tol_gamma && fit.gamma >= opt.eta_floor ? Verdict::consistent
                                                                               : Verdict::inconsistent;
    return std::abs(fit.gamma - law.exponent) <= opt.tol_gamma ? Verdict::consistent : Verdict::inconsistent;
}

/// Synthetic converged samples norm_i for the given h values, for tests and tools.
inline std::vector<ResolventSample> make_samples(const std::vector<double>& h, const std::vector<double>& norm) {
    if (h.size() != norm.size()) throw SizeMismatch("make_samples: lengths differ");
    std::vector<ResolventSample> out(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        out[i].h = h[i];
        out[i].norm = norm[i];
        out[i].converged = true;
    }
    return out;
}

/// n log-spaced values from hi down to lo.
inline std::vector<double> log_spaced(double hi, double lo, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {hi};
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = hi * std::pow(lo / hi, static_cast<double>(i) / static_cast<double>(n - 1));
    return v;
}

} // namespace semires
