#include <gtest/gtest.h>

#include "hillspec/spectrum.hpp"

using namespace hillspec;

TEST(Spectrum, UniformGrid) {
  const auto g = uniform_t_grid(5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), pi);
  EXPECT_NEAR(g[2], pi / 2, 1e-15);
  EXPECT_THROW(uniform_t_grid(1), Error);
}

TEST(Spectrum, FreeArcsAreParabolas) {
  SolverConfig cfg;
  const auto arcs = assemble_spectrum(PotentialCoeffs(0.0, 0.0), 3, uniform_t_grid(33), cfg);
  ASSERT_EQ(arcs.size(), 6u);
  for (const auto& arc : arcs) {
    EXPECT_NE(arc.n.n, 0);
    for (const auto& s : arc.samples) {
      const double w = two_pi * arc.n.n + s.t;
      EXPECT_LT(std::abs(s.lambda - w * w), 1e-9 * (1 + w * w)) << "n=" << arc.n.n << " t=" << s.t;
    }
  }
}

TEST(Spectrum, ArcSamplesSatisfyCharacteristicEquation) {
  SolverConfig cfg;
  const PotentialCoeffs p(1.0, cplx(0, 2));
  const SpectralArc arc = trace_arc(3, p, uniform_t_grid(65), cfg);
  ASSERT_GE(arc.samples.size(), 65u);
  for (const auto& s : arc.samples) EXPECT_LT(s.f_residual, 1e-7);
  for (std::size_t i = 1; i < arc.samples.size(); ++i) EXPECT_GT(arc.samples[i].t, arc.samples[i - 1].t);
  EXPECT_EQ(arc.endpoint_0, arc.samples.front().lambda);
  EXPECT_EQ(arc.endpoint_pi, arc.samples.back().lambda);
  // each sample agrees with the labelled Floquet eigenvalue at the same t
  for (std::size_t i = 0; i < arc.samples.size(); i += 8) {
    const auto& s = arc.samples[i];
    const cplx l = solve_pair(p, QuasiMomentum(s.t), 3, cfg).lambda_label();
    EXPECT_LT(std::abs(s.lambda - l), 1e-8 * std::abs(l));
  }
}

TEST(Spectrum, TraceRejectsBadGrid) {
  SolverConfig cfg;
  const PotentialCoeffs p(1.0, 1.0);
  EXPECT_THROW(trace_arc(1, p, {0.0, 1.0}, cfg), Error);
  EXPECT_THROW(trace_arc(1, p, {0.0, 2.0, 1.0, pi}, cfg), Error);
  EXPECT_THROW(assemble_spectrum(p, 30, uniform_t_grid(9), cfg), Error);
}

TEST(Spectrum, GapTableRatiosForEqualCoefficients) {
  SolverConfig cfg;
  const auto rows = gap_table(PotentialCoeffs(2.0, 2.0), 4, cfg);
  ASSERT_EQ(rows.size(), 4u);
  ASSERT_TRUE(rows[0].periodic.ratio && rows[1].periodic.ratio);
  EXPECT_GE(*rows[0].periodic.ratio, 0.5);
  EXPECT_LE(*rows[0].periodic.ratio, 2.0);
  EXPECT_GE(*rows[1].periodic.ratio, 0.8);
  EXPECT_LE(*rows[1].periodic.ratio, 1.25);
  EXPECT_LT(std::abs(*rows[1].periodic.ratio - 1), std::abs(*rows[0].periodic.ratio - 1));
  ASSERT_TRUE(rows[0].antiperiodic.ratio && rows[1].antiperiodic.ratio);
  EXPECT_LT(std::abs(*rows[1].antiperiodic.ratio - 1), std::abs(*rows[0].antiperiodic.ratio - 1));
}

TEST(Spectrum, GapTableMarksUnresolvableRows) {
  SolverConfig cfg;
  const auto rows = gap_table(PotentialCoeffs(1.0, 1.0), 8, cfg);
  for (const auto& r : rows) {
    if (r.n >= 4) {
      EXPECT_FALSE(r.periodic.resolvable) << r.n;
      EXPECT_FALSE(r.periodic.ratio.has_value());
    }
    if (r.periodic.resolvable) {
      EXPECT_GE(r.periodic.predicted, resolvable_factor * r.periodic.noise_floor);
    }
  }
  EXPECT_TRUE(rows[0].periodic.resolvable);
}

TEST(Spectrum, GapTableZeroProduct) {
  SolverConfig cfg;
  for (const auto& r : gap_table(PotentialCoeffs(1.0, 0.0), 3, cfg)) {
    EXPECT_EQ(r.periodic.predicted, 0.0);
    EXPECT_EQ(r.antiperiodic.predicted, 0.0);
    EXPECT_FALSE(r.periodic.resolvable);
  }
}

TEST(Spectrum, SeparationReport) {
  SolverConfig cfg;
  const PotentialCoeffs p(1.0, 1.0);
  const auto arcs = assemble_spectrum(p, 5, uniform_t_grid(33), cfg);
  const SeparationReport rep = separation_report(arcs, p, cfg);
  EXPECT_EQ(rep.gaps.size(), 5u);
  EXPECT_EQ(rep.simplicity.size(), arcs.size());
  // closest arcs meet through a tiny endpoint gap: (n, -n) at t = 0 or (n, -n-1) at t = π
  EXPECT_LT(rep.min_arc_distance, 1e-3);
  EXPECT_LT(rep.closest_a * rep.closest_b, 0);
  EXPECT_LE(std::abs(std::abs(rep.closest_a) - std::abs(rep.closest_b)), 1);
}
