#include <gtest/gtest.h>

#include "hillspec/model.hpp"

using namespace hillspec;

TEST(Model, FourierCoefficientsHoldOnlyNonzeroModes) {
  const auto q = fourier_coefficients(PotentialCoeffs(1.0, cplx(0, 2)));
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q.at(-1), cplx(1, 0));
  EXPECT_EQ(q.at(1), cplx(0, 2));
  EXPECT_TRUE(fourier_coefficients(PotentialCoeffs(0.0, 0.0)).empty());
  EXPECT_EQ(fourier_coefficients(PotentialCoeffs(0.0, 3.0)).count(-1), 0u);
}

TEST(Model, PotentialEvaluatesClosedForm) {
  const PotentialCoeffs p(cplx(1, 1), cplx(1, -1));
  for (double x : {0.0, 0.1, 0.37, 0.5}) {
    // b = conj(a) gives q(x) = 2 Re(a e^{-2πix}), a real function
    const cplx want = 2.0 * std::real(cplx(1, 1) * std::polar(1.0, -two_pi * x));
    EXPECT_NEAR(std::abs(p(x) - want), 0.0, 1e-14);
  }
  EXPECT_TRUE(p.is_self_adjoint());
  EXPECT_FALSE(PotentialCoeffs(1.0, 2.0).is_self_adjoint());
}

TEST(Model, RejectsNonFiniteCoefficients) {
  EXPECT_THROW(PotentialCoeffs(cplx(NAN, 0), 1.0), Error);
  EXPECT_THROW(PotentialCoeffs(1.0, cplx(0, INFINITY)), Error);
}

TEST(Model, QuasiMomentumNormalizesIntoHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(QuasiMomentum(0.7).value(), 0.7);
  EXPECT_DOUBLE_EQ(QuasiMomentum(pi).value(), pi);
  EXPECT_DOUBLE_EQ(QuasiMomentum(-pi).value(), pi);
  EXPECT_NEAR(QuasiMomentum(two_pi + 0.3).value(), 0.3, 1e-14);
  EXPECT_NEAR(QuasiMomentum(-two_pi - 0.3).value(), -0.3, 1e-14);
  EXPECT_NEAR(QuasiMomentum(3 * pi).value(), pi, 1e-14);
  EXPECT_THROW(QuasiMomentum(NAN), Error);
}

TEST(Model, BandIndexPairRoundTrip) {
  for (int n = -5; n <= 5; ++n) {
    const auto [na, j] = BandIndex{n}.to_pair();
    EXPECT_EQ(BandIndex::from_pair(na, j).n, n);
  }
  EXPECT_EQ(BandIndex::from_pair(3, BandIndex::Sub::one).n, -3);
  EXPECT_THROW(BandIndex::from_pair(-1, BandIndex::Sub::two), Error);
}

TEST(Model, SolverConfigValidation) {
  SolverConfig c;
  EXPECT_NO_THROW(c.validate_for_label(24));
  EXPECT_THROW(c.validate_for_label(25), Error);
  c.ode_tolerance = 0;
  EXPECT_THROW(c.validate(), Error);
  c = SolverConfig{};
  c.truncation_half_width = 0;
  EXPECT_THROW(c.validate(), Error);
}
