#include <gtest/gtest.h>

#include "hillspec/asymptotics.hpp"
#include "hillspec/floquet.hpp"

using namespace hillspec;

TEST(Asymptotics, GapFormulaClosedForms) {
  // periodic: 2|ab|^n / ((2π)^{2n-1}(2n-1)!)^2; antiperiodic: 2|ab|^{n+1/2} / ((2π)^{2n}(2n)!)^2
  const PotentialCoeffs p(2.0, 2.0);
  const auto [g1, a1] = predict_gaps(1, p);
  EXPECT_NEAR(g1, 2 * 4 / std::pow(two_pi, 2), 1e-15);
  EXPECT_NEAR(a1, 2 * 8 / std::pow(two_pi * two_pi * 2, 2), 1e-15);
  const auto [g2, a2] = predict_gaps(2, p);
  EXPECT_NEAR(g2 / (2 * 16 / std::pow(std::pow(two_pi, 3) * 6, 2)), 1.0, 1e-13);
  EXPECT_NEAR(a2 / (2 * 32 / std::pow(std::pow(two_pi, 4) * 24, 2)), 1.0, 1e-13);
}

TEST(Asymptotics, ZeroProductGivesZeroGaps) {
  for (int n = 1; n <= 3; ++n) {
    const auto [g, a] = predict_gaps(n, PotentialCoeffs(1.0, 0.0));
    EXPECT_EQ(g, 0.0);
    EXPECT_EQ(a, 0.0);
  }
  EXPECT_THROW(gap_predictors(0, PotentialCoeffs(1.0, 1.0)), Error);
}

TEST(Asymptotics, LogSpaceAvoidsUnderflow) {
  const auto g = gap_predictors(40, PotentialCoeffs(1.0, 1.0));
  ASSERT_TRUE(g.log_gap_periodic.has_value());
  EXPECT_LT(*g.log_gap_periodic, -700.0);
  EXPECT_TRUE(std::isfinite(*g.log_gap_periodic));
}

TEST(Asymptotics, SplittingMatchesMeasuredGapImprovingWithN) {
  SolverConfig cfg;
  const PotentialCoeffs p(1.0, 1.0);
  double prev = 1.0;
  for (int n : {2, 3}) {
    const double measured = solve_pair(p, QuasiMomentum(0.0), n, cfg).gap();
    const double err = std::abs(predicted_splitting(n, p) - measured) / measured;
    EXPECT_LT(err, 0.25);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(Asymptotics, LeadingBEqualsBeta) {
  const PotentialCoeffs p(1.0, cplx(0.5, 1));
  for (int n : {1, 2, 4}) {
    const double l0 = std::pow(two_pi * n, 2);
    const auto [B, Bp] = b_leading(n, p, l0, QuasiMomentum(0.0));
    const auto g = gap_predictors(n, p);
    EXPECT_LT(std::abs(B - g.beta()), 1e-12 * std::abs(g.beta()));
    EXPECT_LT(std::abs(Bp - g.alpha()), 1e-12 * std::abs(g.alpha()));
  }
}

TEST(Asymptotics, CriticalTMatchesDefinition) {
  const PotentialCoeffs p(1.0, cplx(0, 1));
  const double ts = predicted_critical_t(1, p);
  const auto g = gap_predictors(1, p);
  EXPECT_NEAR(std::pow(4 * pi * ts, 2), std::abs(g.alpha() * g.beta()), 1e-18);
  EXPECT_NEAR(ts, 2.0e-3, 2e-5);
}

TEST(Asymptotics, ATermBoundDecays) {
  const PotentialCoeffs p(1.0, 1.0);
  const double l = std::pow(two_pi * 6, 2);
  EXPECT_LT(a_term_bound(6, p, l, QuasiMomentum(0.01), 3), a_term_bound(6, p, l, QuasiMomentum(0.01), 1));
}

TEST(Asymptotics, PredictorMatchesFloquetNearZero) {
  SolverConfig cfg;
  const PotentialCoeffs p(1.0, 1.0);
  const QuasiMomentum t(1e-4);
  const EigenPrediction pr = predict_eigenvalues(4, p, t, cfg);
  EXPECT_EQ(pr.regime, PredictionRegime::near_zero);
  const BandMap bands = floquet_bands(p, t, cfg);
  const cplx l4 = bands.at(BandIndex{4}).lambda, lm4 = bands.at(BandIndex{-4}).lambda;
  EXPECT_LT(std::abs(pr.lambda_2 - l4), 1e-5 * (1 + std::abs(l4)));
  EXPECT_LT(std::abs(pr.lambda_1 - lm4), 1e-5 * (1 + std::abs(lm4)));
}

TEST(Asymptotics, PredictorMatchesFloquetNearPi) {
  SolverConfig cfg;
  const PotentialCoeffs p(1.0, cplx(0, 2));
  const QuasiMomentum t(pi - 1e-3);
  const EigenPrediction pr = predict_eigenvalues(5, p, t, cfg);
  EXPECT_EQ(pr.regime, PredictionRegime::near_pi);
  const BandMap bands = floquet_bands(p, t, cfg);
  const cplx l5 = bands.at(BandIndex{5}).lambda, lm6 = bands.at(BandIndex{-6}).lambda;
  EXPECT_LT(std::abs(pr.lambda_2 - l5), 1e-5 * (1 + std::abs(l5)));
  EXPECT_LT(std::abs(pr.lambda_1 - lm6), 1e-5 * (1 + std::abs(lm6)));
}

TEST(Asymptotics, DVanishesNearPredictedCriticalT) {
  // a=1, b=i: α₁β₁ < 0, so D changes from negative to positive real part near t*
  const PotentialCoeffs p(1.0, cplx(0, 1));
  const double ts = predicted_critical_t(1, p);
  const double l = 4 * pi * pi;
  const cplx below = splitting_D(1, p, l, QuasiMomentum(0.5 * ts), 3);
  const cplx above = splitting_D(1, p, l, QuasiMomentum(2.0 * ts), 3);
  EXPECT_LT(below.real(), 0.0);
  EXPECT_GT(above.real(), 0.0);
}
