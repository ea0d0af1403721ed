#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace semires {

/// Truncated Taylor series f(x + t) = sum_k c[k] t^k, k <= order.
/// Used for exact higher derivatives of the closed-form warp families.
class Jet {
public:
    Jet() = default;
    Jet(std::size_t order, double value) : c_(order + 1, 0.0) { c_[0] = value; }

    static Jet variable(std::size_t order, double x) {
        Jet j(order, x);
        if (order >= 1) j.c_[1] = 1.0;
        return j;
    }

    std::size_t order() const { return c_.size() - 1; }
    double operator[](std::size_t k) const { return c_[k]; }
    double& operator[](std::size_t k) { return c_[k]; }

    /// k-th derivative at the expansion point.
    double derivative(std::size_t k) const {
        double f = 1.0;
        for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
        return c_[k] * f;
    }

    Jet& operator+=(const Jet& o) {
        for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
        return *this;
    }
    Jet& operator+=(double s) { c_[0] += s; return *this; }
    Jet& operator*=(double s) {
        for (auto& v : c_) v *= s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a += -s; }
    friend Jet operator-(double s, Jet a) { a *= -1.0; return a += s; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator-(Jet a) { return a *= -1.0; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r(a.order(), 0.0);
        for (std::size_t k = 0; k <= r.order(); ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j <= k; ++j) s += a.c_[j] * b.c_[k - j];
            r.c_[k] = s;
        }
        return r;
    }

    friend Jet operator/(const Jet& a, const Jet& b) {
        Jet r(a.order(), 0.0);
        for (std::size_t k = 0; k <= r.order(); ++k) {
            double s = a.c_[k];
            for (std::size_t j = 1; j <= k; ++j) s -= b.c_[j] * r.c_[k - j];
            r.c_[k] = s / b.c_[0];
        }
        return r;
    }
    friend Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }
    friend Jet operator/(double s, const Jet& b) { return Jet(b.order(), s) / b; }

    friend Jet exp(const Jet& a) {
        Jet r(a.order(), std::exp(a.c_[0]));
        for (std::size_t k = 1; k <= r.order(); ++k) {
            double s = 0.0;
            for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * a.c_[j] * r.c_[k - j];
            r.c_[k] = s / static_cast<double>(k);
        }
        return r;
    }

    friend Jet log(const Jet& a) {
        Jet r(a.order(), std::log(a.c_[0]));
        for (std::size_t k = 1; k <= r.order(); ++k) {
            double s = static_cast<double>(k) * a.c_[k];
            for (std::size_t j = 1; j < k; ++j) s -= static_cast<double>(j) * r.c_[j] * a.c_[k - j];
            r.c_[k] = s / (static_cast<double>(k) * a.c_[0]);
        }
        return r;
    }

    /// a^p for a real exponent; requires a[0] > 0.
    friend Jet pow(const Jet& a, double p) {
        Jet r(a.order(), std::pow(a.c_[0], p));
        for (std::size_t k = 1; k <= r.order(); ++k) {
            double s = 0.0;
            for (std::size_t j = 1; j <= k; ++j)
                s += (p * static_cast<double>(j) - static_cast<double>(k - j)) * a.c_[j] * r.c_[k - j];
            r.c_[k] = s / (static_cast<double>(k) * a.c_[0]);
        }
        return r;
    }

    friend Jet sqrt(const Jet& a) {
        Jet r(a.order(), std::sqrt(a.c_[0]));
        for (std::size_t k = 1; k <= r.order(); ++k) {
            double s = a.c_[k];
            for (std::size_t j = 1; j < k; ++j) s -= r.c_[j] * r.c_[k - j];
            r.c_[k] = s / (2.0 * r.c_[0]);
        }
        return r;
    }

    /// Integer power by repeated multiplication (valid for a[0] of any sign).
    friend Jet ipow(const Jet& a, int n) {
        Jet r(a.order(), 1.0);
        for (int i = 0; i < n; ++i) r = r * a;
        return r;
    }

private:
    std::vector<double> c_;
};

} // namespace semires
