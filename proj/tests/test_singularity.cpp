#include <gtest/gtest.h>

#include "hillspec/singularity.hpp"

using namespace hillspec;

TEST(Singularity, AdjointPotential) {
  const auto p = adjoint_potential(PotentialCoeffs(1.0, 2.0));
  EXPECT_EQ(p.a(), cplx(2, 0));
  EXPECT_EQ(p.b(), cplx(1, 0));
  const auto q = adjoint_potential(PotentialCoeffs(cplx(0, 1), cplx(0, 1)));
  EXPECT_EQ(q.a(), cplx(0, -1));
  EXPECT_EQ(q.b(), cplx(0, -1));
  const PotentialCoeffs sa(cplx(1, 1), cplx(1, -1));
  EXPECT_EQ(adjoint_potential(sa), sa);
}

TEST(Singularity, FreePairingIsOne) {
  SolverConfig cfg;
  for (int n : {-3, 1, 5}) {
    const auto r = pairing_dn(n, PotentialCoeffs(0.0, 0.0), QuasiMomentum(0.4), cfg);
    EXPECT_NEAR(std::abs(r.d), 1.0, 1e-14);
  }
}

TEST(Singularity, SelfAdjointPairingHasUnitModulus) {
  SolverConfig cfg;
  const PotentialCoeffs p(cplx(1, 1), cplx(1, -1));
  for (double t : {0.0, 0.5, 2.0, pi})
    for (int n = -6; n <= 6; ++n) {
      const auto r = pairing_dn(n, p, QuasiMomentum(t), cfg);
      EXPECT_NEAR(std::abs(r.d), 1.0, 1e-6) << "n=" << n << " t=" << t;
    }
}

TEST(Singularity, PairingBoundedByCauchySchwarz) {
  SolverConfig cfg;
  const PotentialCoeffs p(1.0, cplx(0.3, 2));
  for (double t : {0.0, 0.2, 1.5, pi})
    for (int n = -6; n <= 6; ++n) {
      const auto r = pairing_dn(n, p, QuasiMomentum(t), cfg);
      EXPECT_GT(std::abs(r.d), 0.0);
      EXPECT_LE(std::abs(r.d), 1.0 + 1e-8);
      EXPECT_LT(std::abs(r.lambda_adjoint - r.lambda), 1e-8 * (1 + std::abs(r.lambda)));
    }
}

TEST(Singularity, PairingDecayForUnequalModuli) {
  // near-degenerate pair: d_n(0) = 2 sqrt(αβ) / (|α| + |β|) ≈ 2^{1-n} for a=1, b=2
  SolverConfig cfg;
  const PotentialCoeffs p(1.0, 2.0);
  double prev = 2.0;
  for (int n = 3; n <= 10; ++n) {
    const double d = std::abs(pairing_dn(n, p, QuasiMomentum(0.0), cfg).d);
    EXPECT_LT(d, prev);
    EXPECT_NEAR(d * std::pow(2.0, n - 1), 1.0, 0.05) << n;
    prev = d;
  }
  EXPECT_LT(prev, 0.2);
}

TEST(Singularity, ScanVerdicts) {
  SolverConfig cfg;
  const auto grid = uniform_t_grid(9);
  const auto down = scan_singularity_at_infinity(PotentialCoeffs(1.0, 2.0), {4, 5, 6, 7}, grid, cfg);
  EXPECT_EQ(down.verdict, ScanVerdict::trend_to_zero);
  for (const auto& r : down.rows) EXPECT_TRUE(r.t_at_min == 0.0 || r.t_at_min == pi) << r.n;
  const auto flat = scan_singularity_at_infinity(PotentialCoeffs(1.0, 1.0), {4, 5, 6, 7}, grid, cfg);
  EXPECT_EQ(flat.verdict, ScanVerdict::bounded_below);
  const auto short_scan = scan_singularity_at_infinity(PotentialCoeffs(1.0, 1.0), {4}, grid, cfg);
  EXPECT_EQ(short_scan.verdict, ScanVerdict::undecided);
}

TEST(Singularity, ProjectionNormFreeArcIsOne) {
  SolverConfig cfg;
  const PotentialCoeffs zero(0.0, 0.0);
  const auto arc = trace_arc(2, zero, uniform_t_grid(17), cfg);
  EXPECT_NEAR(projection_norm(arc, zero, cfg).norm, 1.0, 1e-12);
}

TEST(Singularity, ProjectionNormSpikeNearExceptionalPoint) {
  SolverConfig cfg;
  const PotentialCoeffs p(1.0, cplx(0, 1));
  const auto arc = trace_arc(1, p, uniform_t_grid(129), cfg);
  const auto pn = projection_norm(arc, p, cfg, 0.0, 0.01);
  const double ts = predicted_critical_t(1, p);
  EXPECT_GT(pn.norm, 10.0);
  EXPECT_LT(pn.t_max, 3 * ts);
  EXPECT_GT(pn.t_max, ts / 3);
}

TEST(Singularity, ClassifierTruthTable) {
  const auto r12 = classify_spectrality(PotentialCoeffs(1.0, 2.0));
  EXPECT_EQ(r12.verdict, SpectralityVerdict::singular_at_infinity);
  const auto r11 = classify_spectrality(PotentialCoeffs(1.0, 1.0));
  EXPECT_EQ(r11.verdict, SpectralityVerdict::asymptotically_spectral);
  ASSERT_TRUE(r11.rational_detection);
  EXPECT_EQ(r11.rational_detection->m, 0);
  EXPECT_EQ(r11.rational_detection->q, 1);
  const auto rm = classify_spectrality(PotentialCoeffs(1.0, -1.0));
  EXPECT_EQ(rm.verdict, SpectralityVerdict::singular_at_infinity);
  ASSERT_TRUE(rm.rational_detection);
  EXPECT_EQ(rm.rational_detection->m, 1);
  EXPECT_EQ(rm.parity_verdict, ParityVerdict::odd_m);
  const auto ri = classify_spectrality(PotentialCoeffs(1.0, cplx(0, 1)));
  EXPECT_EQ(ri.verdict, SpectralityVerdict::singular_at_infinity);
  EXPECT_NEAR(ri.alpha, 0.5, 1e-15);
  ASSERT_TRUE(ri.rational_detection);
  EXPECT_EQ(ri.rational_detection->m, 1);
  EXPECT_EQ(ri.rational_detection->q, 2);
}

TEST(Singularity, ClassifierEvenNumeratorAndReduction) {
  // arg(ab) = 2π/3 → α = 2/3, even m
  const auto r = classify_spectrality(PotentialCoeffs(1.0, std::polar(1.0, 2 * pi / 3)));
  ASSERT_TRUE(r.rational_detection);
  EXPECT_EQ(r.rational_detection->m, 2);
  EXPECT_EQ(r.rational_detection->q, 3);
  EXPECT_EQ(r.verdict, SpectralityVerdict::asymptotically_spectral);
  // arg(ab) = -π/2 → α reduced into [0, 2) is 3/2
  const auto s = classify_spectrality(PotentialCoeffs(1.0, cplx(0, -1)));
  EXPECT_NEAR(s.alpha, 1.5, 1e-15);
  ASSERT_TRUE(s.rational_detection);
  EXPECT_EQ(s.rational_detection->m, 3);
  EXPECT_EQ(s.verdict, SpectralityVerdict::singular_at_infinity);
}

TEST(Singularity, ClassifierIrrationalGivesWitnesses) {
  const double alpha = std::sqrt(2.0) - 1.0;
  const auto r = classify_spectrality(PotentialCoeffs(1.0, std::polar(1.0, pi * alpha)), 1000);
  EXPECT_EQ(r.verdict, SpectralityVerdict::undecided_numerically);
  EXPECT_EQ(r.parity_verdict, ParityVerdict::irrational_like);
  ASSERT_FALSE(r.odd_approx_witnesses.empty());
  for (std::size_t i = 1; i < r.odd_approx_witnesses.size(); ++i)
    EXPECT_LT(r.odd_approx_witnesses[i].residual, r.odd_approx_witnesses[i - 1].residual);
}

TEST(Singularity, ClassifierZeroProduct) {
  const auto r = classify_spectrality(PotentialCoeffs(1.0, 0.0));
  EXPECT_EQ(r.verdict, SpectralityVerdict::undecided_numerically);
  EXPECT_FALSE(r.note.empty());
}

TEST(Singularity, BestOddApproximations) {
  // α = 1/3: q = 3 gives 2p-1 = 1 exactly
  const auto w = best_odd_approximations(1.0 / 3.0, 100);
  ASSERT_FALSE(w.empty());
  EXPECT_EQ(w.back().q, 3);
  EXPECT_EQ(w.back().p, 1);
  EXPECT_NEAR(w.back().residual, 0.0, 1e-15);
  for (const auto& o : w) EXPECT_EQ(std::gcd(2 * o.p - 1, o.q), 1);
  EXPECT_THROW(best_odd_approximations(0.5, 0), Error);
}
