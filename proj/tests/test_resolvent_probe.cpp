#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "semires/resolvent_probe.hpp"
#include "semires/scaling_fit.hpp"

using namespace semires;

namespace {

PotentialSource constant_source(double c) {
    return [c](const Grid& g, double) { return std::vector<double>(g.n, c); };
}

} // namespace

TEST(Cutoff, ShapeInvariants) {
    const CutoffSpec chi{1.0, 2.0, 0.5};
    EXPECT_DOUBLE_EQ(chi(1.0), 1.0);
    EXPECT_DOUBLE_EQ(chi(3.0), 1.0);
    EXPECT_DOUBLE_EQ(chi(-1.0), 1.0);
    EXPECT_NEAR(chi(3.25), 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(chi(3.5), 0.0);
    EXPECT_DOUBLE_EQ(chi(-10.0), 0.0);
    for (double x = -3.0; x < 5.0; x += 0.01) {
        EXPECT_GE(chi(x), 0.0);
        EXPECT_LE(chi(x), 1.0);
    }
    EXPECT_DOUBLE_EQ(chi.support_lo(), -1.5);
    EXPECT_DOUBLE_EQ(chi.support_hi(), 3.5);
}

TEST(CutoffResolventNorm, ZeroCutoffGivesZero) {
    const Grid g(-5.0, 5.0, 200);
    const auto op = build_operator(std::vector<double>(g.n, 1.0), 0.1, g, CapProfile{});
    const auto s = cutoff_resolvent_norm(op, 0.5, CutoffSpec{0.0, 0.0, 0.0});
    EXPECT_EQ(s.norm, 0.0);
    EXPECT_TRUE(s.converged);
}

TEST(CutoffResolventNorm, ConstantPotentialMatchesDenseSvd) {
    const Grid g(-6.0, 6.0, 400);
    const auto op = build_operator(std::vector<double>(g.n, 1.0), 0.1, g, CapProfile{});
    const CutoffSpec chi{0.0, 1.0, 0.5};
    const auto s = cutoff_resolvent_norm(op, 0.0, chi);
    EXPECT_TRUE(s.converged);
    EXPECT_NEAR(s.norm, oracle::cutoff_norm(op, 0.0, chi), 0.01 * s.norm);
}

TEST(CutoffResolventNorm, OracleEquivalenceOnRandomAndStructuredMatrices) {
    auto cases = oracle::probe_cases(100);
    for (auto& c : oracle::structured_cases()) cases.push_back(std::move(c));
    ASSERT_EQ(cases.size(), 120u);
    std::vector<double> err(cases.size());
    parallel_for(cases.size(), [&](std::size_t i) {
        const auto& c = cases[i];
        const double ref = oracle::cutoff_norm(c.op, c.z, c.chi);
        const double est = cutoff_resolvent_norm(c.op, c.z, c.chi).norm;
        err[i] = std::abs(est - ref) / ref;
    });
    for (std::size_t i = 0; i < err.size(); ++i) EXPECT_LE(err[i], 0.01) << "case " << i << " n=" << cases[i].op.size();
}

TEST(CutoffResolventNorm, CutoffInsideAbsorbingLayerIsRejected) {
    const Grid g(-5.0, 5.0, 200);
    const auto op = build_operator(std::vector<double>(g.n, 1.0), 0.1, g, CapProfile{});
    EXPECT_THROW(cutoff_resolvent_norm(op, 0.5, CutoffSpec{0.0, 4.5, 0.2}), ConfigError);
}

TEST(CutoffResolventNorm, NearSingularSolveIsBlowup) {
    DiscreteOperator op;
    op.grid = Grid(0.0, 1.0, 16);
    op.diag.assign(16, cplx(1.0, 0.0));
    op.offdiag.assign(15, cplx(0.0, 0.0));
    const auto s = cutoff_resolvent_norm(op, 1.0, CutoffSpec{0.5, 0.2, 0.1});
    EXPECT_TRUE(s.blowup());
}

TEST(CutoffResolventNorm, NonConvergenceIsFlagged) {
    const Grid g(-6.0, 6.0, 300);
    std::vector<double> V(g.n);
    for (std::size_t i = 0; i < g.n; ++i) V[i] = 1.0 / (1.0 + g.x(i) * g.x(i));
    const auto op = build_operator(V, 0.1, g, CapProfile{});
    ProbeOptions o;
    o.max_iter = 1;
    const auto s = cutoff_resolvent_norm(op, 0.9, CutoffSpec{0.0, 2.0, 0.5}, o);
    EXPECT_FALSE(s.converged);
    EXPECT_EQ(s.iterations, 1);
    EXPECT_GT(s.norm, 0.0);
}

TEST(CutoffResolventNorm, FixedSeedIsDeterministic) {
    const Grid g(-6.0, 6.0, 300);
    const auto op = build_operator(std::vector<double>(g.n, 0.5), 0.1, g, CapProfile{});
    const CutoffSpec chi{0.0, 1.0, 0.5};
    EXPECT_EQ(cutoff_resolvent_norm(op, 0.9, chi).norm, cutoff_resolvent_norm(op, 0.9, chi).norm);
}

TEST(CutoffResolventNorm, LargerCutoffNeverDecreasesNorm) {
    const auto spec = WarpSpec::degenerate_bump(2);
    const CutoffSpec big{0.0, 2.0, 0.5};
    SweepOptions so;
    const auto op = operator_for(warp_source(spec), 0.02, 1.0, big, CapProfile{}, so);
    double prev = 0.0;
    for (double r : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        const double n = cutoff_resolvent_norm(op, 1.0, CutoffSpec{0.0, r, 0.5}).norm;
        EXPECT_GE(n, prev * (1.0 - 2e-3)) << "r=" << r;
        prev = n;
    }
}

TEST(HSweep, SingletonWrapsSingleProbe) {
    const auto spec = WarpSpec::degenerate_bump(2);
    const CutoffSpec chi{0.0, 1.0, 0.5};
    const auto s = h_sweep(spec, 1.0, {0.02}, chi, CapProfile{});
    ASSERT_EQ(s.size(), 1u);
    SweepOptions so;
    const auto op = operator_for(warp_source(spec), 0.02, 1.0, chi, CapProfile{}, so);
    EXPECT_EQ(s[0].norm, cutoff_resolvent_norm(op, 1.0, chi).norm);
    EXPECT_EQ(s[0].grid_n, op.size());
    EXPECT_DOUBLE_EQ(s[0].cap_eta, 1.0);
}

TEST(HSweep, RejectsBadHLists) {
    const auto spec = WarpSpec::degenerate_bump(2);
    const CutoffSpec chi{0.0, 1.0, 0.5};
    EXPECT_THROW(h_sweep(spec, 1.0, {0.01, 0.02}, chi, CapProfile{}), DomainError);
    EXPECT_THROW(h_sweep(spec, 1.0, {0.02, -0.01}, chi, CapProfile{}), DomainError);
}

TEST(HSweep, PerHFailuresAreRecordedInPlace) {
    const auto spec = WarpSpec::degenerate_bump(2);
    SweepOptions so;
    so.half_width = 2.0;  // interior [-1.4, 1.4] is smaller than the cutoff
    const auto s = h_sweep(spec, 1.0, {0.04, 0.02}, CutoffSpec{0.0, 1.5, 0.5}, CapProfile{}, so);
    ASSERT_EQ(s.size(), 2u);
    for (const auto& x : s) {
        EXPECT_FALSE(x.error.empty());
        EXPECT_DOUBLE_EQ(x.z, 1.0);
    }
    EXPECT_DOUBLE_EQ(s[1].h, 0.02);
}

TEST(HSweep, DegenerateMaximumSlope) {
    const std::vector<double> hs{1.0 / 50, 1.0 / 71, 1.0 / 100, 1.0 / 141, 1.0 / 200, 1.0 / 283, 1.0 / 400};
    const auto s = h_sweep(WarpSpec::degenerate_bump(2), 1.0, hs, CutoffSpec{0.0, 1.0, 0.5}, CapProfile{});
    const auto f = fit_power(s);
    EXPECT_NEAR(f.gamma, 4.0 / 3.0, 0.15);
}

TEST(HSweep, NonTrappingNormTimesHIsBounded) {
    // above the barrier top nothing is trapped at energy z
    const std::vector<double> hs{1.0 / 25, 1.0 / 50, 1.0 / 100, 1.0 / 200};
    const auto s = h_sweep(WarpSpec::degenerate_bump(2), 1.5, hs, CutoffSpec{0.0, 1.0, 0.5}, CapProfile{});
    double lo = INFINITY, hi = 0.0;
    for (const auto& x : s) {
        lo = std::min(lo, x.norm * x.h);
        hi = std::max(hi, x.norm * x.h);
    }
    EXPECT_LE(hi / lo, 3.0);
}

TEST(HSweep, EllipticBelowThePotential) {
    // V0 > 0 everywhere and z = -0.5: (P - z) >= 0.5 on the interior
    const std::vector<double> hs{0.05, 0.02};
    const CutoffSpec chi{0.0, 1.0, 0.5};
    const auto spec = WarpSpec::degenerate_bump(2);
    const auto s = h_sweep(spec, -0.5, hs, chi, CapProfile{});
    for (const auto& x : s) EXPECT_LE(x.norm, 2.0 / 0.5);
    SweepOptions so;
    const auto op = operator_for(warp_source(spec), 0.05, -0.5, chi, CapProfile{}, so);
    EXPECT_NEAR(s[0].norm, oracle::cutoff_norm(op, -0.5, chi), 0.01 * s[0].norm);
}

TEST(HSweep, SeverityOrderingAcrossDegeneracy) {
    const double h = 0.01;
    auto norm = [&](int m) {
        return h_sweep(WarpSpec::degenerate_bump(m), 1.0, {h}, CutoffSpec{0.0, 1.0, 0.5}, CapProfile{})[0].norm;
    };
    const double n1 = norm(1), n2 = norm(2), n3 = norm(3);
    EXPECT_GE(n3, n2);
    EXPECT_GE(n2, 0.5 * n1);
}

TEST(EnergyScan, PeakSitsOnWellEigenvalue) {
    const auto spec = WarpSpec::well_profile();
    const double h = 0.1;
    const Grid inner = Grid::symmetric(3.5, 0.002);
    const auto p = effective_potential(spec, inner);
    const auto ev = eigen_window(full_potential(p, h), h, inner, 0.0, 0.5);
    ASSERT_FALSE(ev.empty());
    const double E0 = ev[0].energy;
    const CutoffSpec chi{0.0, 1.5, 0.5};
    SweepOptions so;
    so.half_width = 12.0;
    const auto op = operator_for(warp_source(spec), h, E0 + 0.05, chi, CapProfile{}, so);
    const auto peak = energy_peak(op, E0 - 0.02, E0 + 0.02, 41, chi);
    EXPECT_NEAR(peak.z, E0, 1e-3);
}

TEST(EnergyScan, NonTrappingVariationIsSmall) {
    std::vector<double> zs;
    for (int i = 0; i <= 8; ++i) zs.push_back(1.3 + 0.05 * i);
    const auto s = energy_scan(warp_source(WarpSpec::degenerate_bump(2)), 0.02, zs, CutoffSpec{0.0, 1.0, 0.5}, CapProfile{});
    double lo = INFINITY, hi = 0.0;
    for (const auto& x : s) {
        EXPECT_TRUE(x.error.empty()) << x.error;
        lo = std::min(lo, x.norm);
        hi = std::max(hi, x.norm);
    }
    EXPECT_LE(hi / lo, 3.0);
}

TEST(EnergyScan, DecreasesFarAboveThePotential) {
    std::vector<double> zs;
    for (int i = 0; i <= 6; ++i) zs.push_back(3.0 + 0.5 * i);
    const auto s = energy_scan(warp_source(WarpSpec::degenerate_bump(2)), 0.05, zs, CutoffSpec{0.0, 1.0, 0.5}, CapProfile{});
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LE(s[i].norm, s[i - 1].norm * 1.05);
}

TEST(CapRobustness, DoubledDomainAndHalvedStrength) {
    const auto r = cap_robustness(warp_source(WarpSpec::degenerate_bump(2)), 1.0, {0.04, 0.02, 0.01},
                                  CutoffSpec{0.0, 1.0, 0.5}, CapProfile{});
    ASSERT_EQ(r.relative_change.size(), 3u);
    EXPECT_LT(r.worst_change, 0.1);
    for (const auto& s : r.doubled) EXPECT_DOUBLE_EQ(s.cap_eta, 0.5);
    EXPECT_GT(r.doubled[0].grid_n, r.base[0].grid_n);
}

TEST(TruncationRule, ReachesPastTheBarrierAndTheCutoff) {
    const auto src = warp_source(WarpSpec::degenerate_bump(2));
    const CapProfile cap;
    const double L = auto_half_width(src, 0.02, 1.0, CutoffSpec{0.0, 1.0, 0.5}, cap);
    const double interior = L * (1.0 - 2.0 * cap.width_fraction);
    EXPECT_GT(interior, 1.5);
    // V at the interior edge sits below z - 0.2 max V
    EXPECT_LT(WarpSpec::degenerate_bump(2).v0(interior).f, 0.8);
    const double Lfar = auto_half_width(constant_source(0.2), 0.02, 1.0, CutoffSpec{5.0, 1.0, 0.5}, cap);
    EXPECT_GE(Lfar * (1.0 - 2.0 * cap.width_fraction), 6.5);
}

TEST(SamplesCsv, Columns) {
    std::vector<ResolventSample> s(2);
    s[0].h = 0.1;
    s[0].norm = 3.0;
    s[1].norm = INFINITY;
    std::ostringstream os;
    write_samples_csv(os, s);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "h,z,norm,iterations,converged,grid_n,cap_eta");
    std::getline(is, line);
    EXPECT_DOUBLE_EQ(std::stod(line.substr(0, line.find(','))), 0.1);
    EXPECT_NE(line.find(",3,"), std::string::npos);
    std::getline(is, line);
    EXPECT_NE(line.find("inf"), std::string::npos);
}
