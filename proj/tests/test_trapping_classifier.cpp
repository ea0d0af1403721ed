#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "semires/trapping_classifier.hpp"

using namespace semires;

namespace {

struct J3 {
    double f, d1, d2;
};

PotentialProfile profile(double lo, double hi, double dx, const std::function<J3(double)>& V) {
    PotentialProfile p;
    p.grid = Grid(lo, hi, static_cast<std::size_t>(std::lround((hi - lo) / dx)) + 1);
    for (std::size_t i = 0; i < p.grid.n; ++i) {
        const J3 j = V(p.grid.x(i));
        p.v0.push_back(j.f);
        p.v0p.push_back(j.d1);
        p.v0pp.push_back(j.d2);
        p.v1.push_back(0.0);
    }
    return p;
}

// 1 - exp(-1/x^2), flat to all orders at 0
J3 flat_max(double x) {
    if (x == 0.0) return {1.0, 0.0, 0.0};
    const double e = std::exp(-1.0 / (x * x));
    const double d1 = 2.0 * e / (x * x * x);
    const double d2 = e * (4.0 / std::pow(x, 6) - 6.0 / std::pow(x, 4));
    return {1.0 - e, -d1, -d2};
}

// plateau 1 on [-0.5, 0.5], quadratic decrease outside
J3 plateau(double x) {
    const double s = std::abs(x) - 0.5;
    if (s <= 0.0) return {1.0, 0.0, 0.0};
    const double sg = x > 0 ? 1.0 : -1.0;
    return {1.0 - s * s, -2.0 * s * sg, -2.0};
}

CriticalComponent single(const PotentialProfile& p) {
    const auto c = find_critical_components(p);
    EXPECT_EQ(c.size(), 1u);
    return c.empty() ? CriticalComponent{} : classify_order(p, c[0]);
}

CriticalComponent classified(CriticalComponent c, ComponentKind k, int order) {
    c.kind = k;
    c.order = order;
    return c;
}

} // namespace

TEST(FindCritical, MonotoneProfileHasNone) {
    const auto p = profile(-2.0, 2.0, 0.002, [](double x) { return J3{2.0 - std::tanh(x), -1.0 / std::pow(std::cosh(x), 2), 0.0}; });
    EXPECT_TRUE(find_critical_components(p).empty());
}

TEST(FindCritical, UniqueMaximum) {
    const auto p = profile(-2.0, 2.0, 0.002, [](double x) { return J3{1.0 - x * x, -2.0 * x, -2.0}; });
    const auto c = find_critical_components(p);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_TRUE(c[0].is_point());
    EXPECT_NEAR(c[0].x_center, 0.0, 1e-9);
    EXPECT_NEAR(c[0].critical_value, 1.0, 1e-12);
    // -V0' is negative on the left and positive on the right
    EXPECT_EQ(c[0].left_slope_sign, -1);
    EXPECT_EQ(c[0].right_slope_sign, 1);
    EXPECT_EQ(c[0].curvature_sign, -1);
}

TEST(FindCritical, PlateauIsOneIntervalWithEndpoints) {
    const auto p = profile(-2.0, 2.0, 0.002, plateau);
    const auto c = single(p);
    EXPECT_FALSE(c.is_point());
    EXPECT_NEAR(c.x_left, -0.5, 2 * p.grid.delta());
    EXPECT_NEAR(c.x_right, 0.5, 2 * p.grid.delta());
    EXPECT_EQ(c.kind, ComponentKind::cylinder_max);
    EXPECT_TRUE(c.infinite());
}

TEST(FindCritical, Errors) {
    PotentialProfile empty;
    EXPECT_THROW(find_critical_components(empty, 1e-3, 1e-2), ClassificationError);
    const auto p = profile(-2.0, 2.0, 0.01, [](double x) { return J3{1.0 - x * x, -2.0 * x, -2.0}; });
    EXPECT_THROW(find_critical_components(p, 10.0, 0.05), ClassificationError);
    EXPECT_THROW(find_critical_components(p, -1.0, 0.05), ClassificationError);
}

TEST(ClassifyOrder, QuadraticMaximum) {
    const auto c = single(profile(-2.0, 2.0, 0.002, [](double x) { return J3{1.0 - x * x, -2.0 * x, -2.0}; }));
    EXPECT_EQ(c.kind, ComponentKind::nondegenerate_max);
    EXPECT_EQ(c.order, 1);
}

TEST(ClassifyOrder, QuarticMaximum) {
    const auto c = single(profile(-1.5, 1.5, 0.002, [](double x) { return J3{1.0 - std::pow(x, 4), -4.0 * std::pow(x, 3), -12.0 * x * x}; }));
    EXPECT_EQ(c.kind, ComponentKind::degenerate_max);
    EXPECT_EQ(c.order, 2);
    EXPECT_NEAR(c.fitted_order, 4.0, 0.2);
}

TEST(ClassifyOrder, CubicInflection) {
    const auto c = single(profile(0.0, 2.0, 0.001, [](double x) {
        const double s = x - 1.0;
        return J3{2.0 - s * s * s, -3.0 * s * s, -6.0 * s};
    }));
    EXPECT_EQ(c.kind, ComponentKind::inflection);
    EXPECT_EQ(c.order, 1);
    EXPECT_NEAR(c.x_center, 1.0, 1e-3);
}

TEST(ClassifyOrder, FlatMaximumIsInfinite) {
    // the core below 1e-13 is wider than the merge width, so it also reads as a cylinder
    const auto p = profile(-2.0, 2.0, 0.002, flat_max);
    const auto c = single(p);
    EXPECT_TRUE(c.kind == ComponentKind::infinitely_degenerate_max || c.kind == ComponentKind::cylinder_max);
    EXPECT_TRUE(c.infinite());
    EXPECT_EQ(predicted_law(c).form, LawForm::power_plus_eta);
    const ClassifierOptions opt;
    for (int side : {-1, 1}) {
        const auto f = detail::fit_flank(p, 0.0, side, 1.0, detail::profile_scale(p), opt);
        EXPECT_GE(f.usable, 6u);
        EXPECT_GT(f.order, 16.0);
    }
}

TEST(ClassifyOrder, LocalMinimum) {
    const auto c = single(profile(-2.0, 2.0, 0.002, [](double x) { return J3{0.5 + x * x, 2.0 * x, 2.0}; }));
    EXPECT_EQ(c.kind, ComponentKind::local_min);
    EXPECT_EQ(c.order, 1);
}

TEST(ClassifyOrder, ShortFlankWindowIsAnError) {
    const auto p = profile(-2.0, 2.0, 0.01, [](double x) { return J3{1.0 - x * x, -2.0 * x, -2.0}; });
    CriticalComponent c;
    c.x_center = c.x_left = c.x_right = p.grid.x(2);
    c.critical_value = p.v0[2];
    try {
        classify_order(p, c);
        FAIL() << "expected ClassificationError";
    } catch (const ClassificationError& e) {
        EXPECT_NE(std::string(e.what()).find("usable samples"), std::string::npos);
    }
}

TEST(ClassifyOrder, BuiltInFamilies) {
    const Grid g = Grid::symmetric(10.0, 0.002);
    for (int m : {1, 2, 3, 4}) {
        const auto r = classify_profile(effective_potential(WarpSpec::degenerate_bump(m), g));
        ASSERT_EQ(r.components.size(), 1u) << "m=" << m;
        EXPECT_EQ(r.components[0].order, m);
        EXPECT_NEAR(r.worst.exponent, m == 1 ? 1.0 : gamma_degenerate_max(m), 1e-12);
    }
    for (int m2 : {1, 2}) {
        // the family also carries a nondegenerate maximum left of the inflection
        const auto r = classify_profile(effective_potential(WarpSpec::inflection_profile(m2), g));
        ASSERT_EQ(r.components.size(), 2u) << "m2=" << m2;
        EXPECT_EQ(r.components[0].kind, ComponentKind::nondegenerate_max);
        EXPECT_EQ(r.components[1].kind, ComponentKind::inflection);
        EXPECT_EQ(r.components[1].order, m2);
        EXPECT_NEAR(r.components[1].x_center, 1.0, 1e-3);
        EXPECT_NEAR(r.worst.exponent, m2 == 1 ? 1.2 : gamma_inflection(2), 1e-12);
    }
    const auto w = classify_profile(effective_potential(WarpSpec::well_profile(), Grid::symmetric(12.0, 0.002)));
    EXPECT_EQ(w.global, GlobalCase::case2_blowup);
    const auto plat = classify_profile(effective_potential(WarpSpec::constant_plus_bump(1.0), g));
    ASSERT_FALSE(plat.components.empty());
    EXPECT_EQ(plat.worst.form, LawForm::power_plus_eta);
}

TEST(ClassifyOrder, ScaleRobust) {
    const Grid g = Grid::symmetric(10.0, 0.002);
    for (const auto& spec : {WarpSpec::degenerate_bump(1), WarpSpec::degenerate_bump(2), WarpSpec::degenerate_bump(3),
                             WarpSpec::inflection_profile(1)}) {
        const auto base = effective_potential(spec, g);
        const auto ref = classify_profile(base);
        ASSERT_FALSE(ref.components.empty());
        const double vc = ref.components.back().critical_value;
        for (double k : {0.5, 0.75, 1.5, 2.0}) {
            PotentialProfile p = base;
            for (std::size_t i = 0; i < p.grid.n; ++i) {
                p.v0[i] = vc + k * (p.v0[i] - vc);
                p.v0p[i] *= k;
                p.v0pp[i] *= k;
            }
            const auto r = classify_profile(p);
            ASSERT_EQ(r.components.size(), ref.components.size());
            for (std::size_t i = 0; i < r.components.size(); ++i) {
                EXPECT_EQ(r.components[i].kind, ref.components[i].kind) << to_string(spec.family) << " k=" << k;
                EXPECT_EQ(r.components[i].order, ref.components[i].order) << to_string(spec.family) << " k=" << k;
            }
        }
    }
}

TEST(ClassifyOrder, ComponentsLieInsideTheInterior) {
    const Grid g = Grid::symmetric(10.0, 0.002);
    const double margin = static_cast<double>(detail::margin_cells(g)) * g.delta();
    for (const auto& spec : {WarpSpec::degenerate_bump(2), WarpSpec::two_inflection_profile(1, 2), WarpSpec::well_profile(),
                             WarpSpec::constant_plus_bump(1.0)}) {
        for (const auto& c : classify_profile(effective_potential(spec, g)).components) {
            EXPECT_GE(c.x_left, g.x_min + margin);
            EXPECT_LE(c.x_right, g.x_max - margin);
        }
    }
}

TEST(PredictedLaw, Examples) {
    CriticalComponent c;
    auto law = predicted_law(classified(c, ComponentKind::nondegenerate_max, 1));
    EXPECT_EQ(law.form, LawForm::power_log);
    EXPECT_DOUBLE_EQ(law.exponent, 1.0);
    law = predicted_law(classified(c, ComponentKind::degenerate_max, 2));
    EXPECT_EQ(law.form, LawForm::power);
    EXPECT_NEAR(law.exponent, 4.0 / 3.0, 1e-15);
    law = predicted_law(classified(c, ComponentKind::inflection, 1));
    EXPECT_NEAR(law.exponent, 6.0 / 5.0, 1e-15);
    for (auto k : {ComponentKind::cylinder_max, ComponentKind::infinitely_degenerate_max,
                   ComponentKind::cylinder_inflection, ComponentKind::infinitely_degenerate_inflection}) {
        law = predicted_law(classified(c, k, kInfiniteOrder));
        EXPECT_EQ(law.form, LawForm::power_plus_eta);
        EXPECT_DOUBLE_EQ(law.exponent, 2.0);
    }
    EXPECT_TRUE(predicted_law(classified(c, ComponentKind::local_min, 1)).superpolynomial());
}

TEST(PredictedLaw, ExponentsIncreaseAndStayBelowTwo) {
    for (int m = 1; m <= 64; ++m) {
        EXPECT_LT(gamma_degenerate_max(m), 2.0);
        EXPECT_LT(gamma_inflection(m), 2.0);
        if (m > 1) {
            EXPECT_GT(gamma_degenerate_max(m), gamma_degenerate_max(m - 1));
            EXPECT_GT(gamma_inflection(m), gamma_inflection(m - 1));
        }
    }
}

TEST(GlobalVerdict, SingleNondegenerateMaximum) {
    const CriticalComponent c = classified({}, ComponentKind::nondegenerate_max, 1);
    const auto r = global_verdict({c}, {predicted_law(c)});
    EXPECT_EQ(r.global, GlobalCase::case1_almost_bounded);
    EXPECT_EQ(r.worst.form, LawForm::power_log);
    ASSERT_TRUE(r.smoothing_order.has_value());
    EXPECT_DOUBLE_EQ(*r.smoothing_order, 0.5);
}

TEST(GlobalVerdict, WorstOfTwo) {
    const CriticalComponent a = classified({}, ComponentKind::degenerate_max, 2);
    const CriticalComponent b = classified({}, ComponentKind::inflection, 1);
    const auto r = global_verdict({a, b}, {predicted_law(a), predicted_law(b)});
    EXPECT_EQ(r.global, GlobalCase::case1_almost_bounded);
    EXPECT_NEAR(r.worst.exponent, 4.0 / 3.0, 1e-15);
    EXPECT_EQ(*r.worst_index, 0u);
    EXPECT_NEAR(*r.smoothing_order, 1.0 / 3.0, 1e-15);
}

TEST(GlobalVerdict, LocalMinimumForcesBlowup) {
    const CriticalComponent a = classified({}, ComponentKind::degenerate_max, 2);
    const CriticalComponent b = classified({}, ComponentKind::local_min, 1);
    const auto r = global_verdict({a, b}, {predicted_law(a), predicted_law(b)});
    EXPECT_EQ(r.global, GlobalCase::case2_blowup);
    EXPECT_TRUE(r.worst.superpolynomial());
    EXPECT_FALSE(r.smoothing_order.has_value());
}

TEST(GlobalVerdict, PermutationInvariant) {
    std::vector<CriticalComponent> cs{classified({}, ComponentKind::degenerate_max, 3), classified({}, ComponentKind::inflection, 2),
                                      classified({}, ComponentKind::nondegenerate_max, 1),
                                      classified({}, ComponentKind::cylinder_inflection, kInfiniteOrder)};
    std::vector<int> idx{0, 1, 2, 3};
    const auto ref = [&] {
        std::vector<ScalingLaw> l;
        for (auto& c : cs) l.push_back(predicted_law(c));
        return global_verdict(cs, l);
    }();
    do {
        std::vector<CriticalComponent> p;
        std::vector<ScalingLaw> l;
        for (int i : idx) {
            p.push_back(cs[i]);
            l.push_back(predicted_law(cs[i]));
        }
        const auto r = global_verdict(p, l);
        EXPECT_EQ(r.global, ref.global);
        EXPECT_EQ(r.worst.form, ref.worst.form);
        EXPECT_DOUBLE_EQ(r.worst.exponent, ref.worst.exponent);
        EXPECT_EQ(p[*r.worst_index].kind, ComponentKind::cylinder_inflection);
    } while (std::next_permutation(idx.begin(), idx.end()));
}

TEST(GlobalVerdict, EmptyIsNonTrapping) {
    const auto r = global_verdict({}, {});
    EXPECT_EQ(r.worst.form, LawForm::nontrapping);
    EXPECT_DOUBLE_EQ(r.worst.exponent, 1.0);
    EXPECT_THROW(global_verdict({CriticalComponent{}}, {}), SizeMismatch);
}
