#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "error.hpp"

namespace semires {

/// Uniform grid on [x_min, x_max] with n nodes, both endpoints included.
struct Grid {
    double x_min = -1.0;
    double x_max = 1.0;
    std::size_t n = 16;

    Grid() = default;
    Grid(double lo, double hi, std::size_t points) : x_min(lo), x_max(hi), n(points) {
        if (!(lo < hi)) throw DomainError("grid: x_min must be < x_max");
        if (points < 16) throw DomainError("grid: need at least 16 points");
    }

    double delta() const { return (x_max - x_min) / static_cast<double>(n - 1); }
    double x(std::size_t i) const { return x_min + delta() * static_cast<double>(i); }
    double length() const { return x_max - x_min; }

    std::vector<double> points() const {
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i) xs[i] = x(i);
        return xs;
    }

    /// Symmetric grid [-half_width, half_width] with spacing at most max_delta.
    static Grid symmetric(double half_width, double max_delta) {
        if (!(half_width > 0.0) || !(max_delta > 0.0)) throw DomainError("grid: non-positive extent or spacing");
        auto cells = static_cast<std::size_t>(std::ceil(2.0 * half_width / max_delta));
        if (cells < 15) cells = 15;
        return Grid(-half_width, half_width, cells + 1);
    }
};

} // namespace semires
