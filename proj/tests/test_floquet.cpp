#include <gtest/gtest.h>

#include <algorithm>

#include "hillspec/floquet.hpp"

using namespace hillspec;

namespace {

std::vector<cplx> sorted_eigs(const PotentialCoeffs& pot, double t, const SolverConfig& cfg) {
  std::vector<cplx> out;
  for (const auto& e : eigen_all(build_matrix(pot, QuasiMomentum(t), cfg.M()), cfg)) out.push_back(e.lambda);
  std::sort(out.begin(), out.end(), [](cplx x, cplx y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return out;
}

}  // namespace

TEST(Floquet, MatrixLayout) {
  const auto m = build_matrix(PotentialCoeffs(cplx(1, 2), 3.0), QuasiMomentum(0.4), 4);
  const auto d = m.dense();
  ASSERT_EQ(d.rows(), 9);
  for (int n = -4; n <= 4; ++n) EXPECT_DOUBLE_EQ(d(n + 4, n + 4).real(), std::pow(two_pi * n + 0.4, 2));
  // row n couples to n+1 through a (q_{-1}) and to n-1 through b (q_1)
  EXPECT_EQ(d(4, 5), cplx(1, 2));
  EXPECT_EQ(d(5, 4), cplx(3, 0));
  EXPECT_EQ(d(0, 2), cplx{});
}

TEST(Floquet, FreeOperatorExact) {
  SolverConfig cfg;
  for (double t : {0.0, 0.7, pi}) {
    const BandMap bands = floquet_bands(PotentialCoeffs(0.0, 0.0), QuasiMomentum(t), cfg);
    ASSERT_EQ(static_cast<int>(bands.size()), 2 * cfg.M() + 1);
    for (const auto& [label, p] : bands) {
      const double w = two_pi * label.n + t;
      EXPECT_LT(std::abs(p.lambda - w * w), 1e-10 * (1 + std::abs(p.lambda))) << "n=" << label.n << " t=" << t;
    }
  }
}

TEST(Floquet, GaugeInvarianceSpectrumDependsOnProduct) {
  SolverConfig cfg;
  for (double t : {0.0, 1.1}) {
    const auto x = sorted_eigs(PotentialCoeffs(1.0, 4.0), t, cfg);
    const auto y = sorted_eigs(PotentialCoeffs(2.0, 2.0), t, cfg);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LT(std::abs(x[i] - y[i]), 1e-9 * (1 + std::abs(x[i])));
  }
}

TEST(Floquet, SelfAdjointSpectrumIsReal) {
  SolverConfig cfg;
  const PotentialCoeffs p(cplx(1, 1), cplx(1, -1));
  for (int i = 0; i <= 16; ++i) {
    const double t = pi * i / 16;
    const BandMap bands = floquet_bands(p, QuasiMomentum(t), cfg);
    for (int n = -8; n <= 8; ++n) {
      const cplx l = bands.at(BandIndex{n}).lambda;
      EXPECT_LT(std::abs(l.imag()), 1e-9 * (1 + std::abs(l)));
    }
  }
}

TEST(Floquet, EigenvectorsHaveSmallResidualAndUnitNorm) {
  SolverConfig cfg;
  const auto mat = build_matrix(PotentialCoeffs(1.0, cplx(0, 2)), QuasiMomentum(0.3), cfg.M());
  for (const auto& e : eigen_all(mat, cfg)) {
    EXPECT_NEAR(e.vector.norm(), 1.0, 1e-12);
    EXPECT_LT(mat.residual(e.lambda, e.vector), 1e-10 * mat.norm());
  }
}

TEST(Floquet, PairSolverAgreesWithDenseSolver) {
  SolverConfig cfg;
  for (const auto& p : {PotentialCoeffs(1.0, 1.0), PotentialCoeffs(1.0, 2.0), PotentialCoeffs(1.0, cplx(0, 1))})
    for (double t : {0.0, 0.01, 1.0, pi - 0.01, pi}) {
      const BandMap bands = floquet_bands(p, QuasiMomentum(t), cfg);
      for (int n = -10; n <= 10; ++n) {
        const PairSolution s = solve_pair(p, QuasiMomentum(t), n, cfg);
        const cplx dense = bands.at(BandIndex{n}).lambda;
        EXPECT_LT(std::abs(s.lambda_label() - dense), 1e-9 * (1 + std::abs(dense))) << "n=" << n << " t=" << t;
      }
    }
}

TEST(Floquet, PairSolverResolvesTinyGapsAgainstClosedForm) {
  // a = b = 1: periodic gap for n = 3 is 2/((2π)^5 5!)^2 to leading order
  SolverConfig cfg;
  const PairSolution s = solve_pair(PotentialCoeffs(1.0, 1.0), QuasiMomentum(0.0), 3, cfg);
  const double f = std::pow(two_pi, 5) * 120.0;
  const double want = 2.0 / (f * f);
  EXPECT_NEAR(s.gap() / want, 1.0, 0.01);
  EXPECT_GT(s.gap(), 1e3 * s.noise_floor);
}

TEST(Floquet, PairVectorsAreEigenvectorsOfTheTruncation) {
  SolverConfig cfg;
  const PotentialCoeffs p(1.0, 2.0);
  const auto mat = build_matrix(p, QuasiMomentum(0.0), cfg.M());
  for (int n : {1, 4, 7}) {
    const PairSolution s = solve_pair(p, QuasiMomentum(0.0), n, cfg);
    EXPECT_LT(mat.residual(s.lambda_label(), s.vec_label), 1e-10 * mat.norm());
    // near-degenerate pair: weights on ±n follow sqrt(b^{2n}/a^{2n}) = 2^n
    const double ratio = std::abs(s.vec_label(-n + cfg.M()) / s.vec_label(n + cfg.M()));
    EXPECT_NEAR(ratio * std::pow(2.0, n), 1.0, 0.1) << n;
  }
}

TEST(Floquet, LabelsFollowFreeValuesAwayFromEndpoints) {
  SolverConfig cfg;
  const BandMap bands = floquet_bands(PotentialCoeffs(1.0, 1.0), QuasiMomentum(1e-4), cfg);
  for (int n = -8; n <= 8; ++n) {
    const double w = two_pi * n + 1e-4;
    EXPECT_LT(std::abs(bands.at(BandIndex{n}).lambda - w * w), localization_radius(n));
  }
  // n = +2 is the upper member of the split pair at small positive t
  EXPECT_GT(bands.at(BandIndex{2}).lambda.real(), bands.at(BandIndex{-2}).lambda.real());
}

TEST(Floquet, TruncationFlag) {
  SolverConfig cfg;
  const BandMap bands = floquet_bands(PotentialCoeffs(1.0, 1.0), QuasiMomentum(0.5), cfg);
  EXPECT_FALSE(bands.at(BandIndex{10}).truncation_unreliable);
  EXPECT_TRUE(bands.at(BandIndex{cfg.M()}).truncation_unreliable);
}

TEST(Floquet, EigenfunctionComponentsFreeCase) {
  SolverConfig cfg;
  const EigenPair e = labeled_eigenpair(PotentialCoeffs(0.0, 0.0), QuasiMomentum(0.5), 3, cfg);
  const auto c = eigenfunction_components(e);
  EXPECT_NEAR(std::abs(c.u), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(c.v), 0.0, 1e-14);
  EXPECT_NEAR(c.h_norm, 0.0, 1e-14);
}

TEST(Floquet, PartnerOf) {
  EXPECT_EQ(partner_of(3, 0.0), -3);
  EXPECT_EQ(partner_of(3, pi), -4);
  EXPECT_EQ(partner_of(-3, pi), 2);
  EXPECT_EQ(partner_of(0, 0.1), -1);
}
