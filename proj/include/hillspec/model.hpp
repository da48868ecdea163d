#pragma once

// Domain types shared by every hillspec module.
//
// The operator family is H_t = -d²/dx² + q(x) on [0,1] with quasi-periodic
// boundary conditions y(1) = e^{it} y(0), y'(1) = e^{it} y'(0), and the
// two-term potential q(x) = a e^{-2πix} + b e^{2πix}.

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace hillspec {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Library error. `kind` lets callers branch without parsing messages.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    invalid_argument,
    integration_failure,
    convergence_failure,
    pole_proximity,
    eigen_failure,
    matching_failure,
    tracing_failure,
  };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline bool is_finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// Coefficients of q(x) = a e^{-2πix} + b e^{2πix}.
class PotentialCoeffs {
 public:
  PotentialCoeffs() = default;
  PotentialCoeffs(cplx a, cplx b) : a_(a), b_(b) {
    if (!is_finite(a) || !is_finite(b))
      throw Error(Error::Kind::invalid_argument, "potential coefficients must be finite");
  }

  cplx a() const { return a_; }
  cplx b() const { return b_; }
  cplx product_ab() const { return a_ * b_; }
  bool is_zero() const { return a_ == cplx{} && b_ == cplx{}; }

  /// b = conj(a) makes H_t self-adjoint.
  bool is_self_adjoint(double tol = 0.0) const { return std::abs(b_ - std::conj(a_)) <= tol; }

  /// q(x) at a point of [0,1].
  cplx operator()(double x) const {
    const cplx e = std::polar(1.0, two_pi * x);
    return a_ * std::conj(e) + b_ * e;
  }

  friend bool operator==(const PotentialCoeffs&, const PotentialCoeffs&) = default;

 private:
  cplx a_{};
  cplx b_{};
};

/// Fourier coefficients q_k of the potential; absent keys are zero.
inline std::map<int, cplx> fourier_coefficients(const PotentialCoeffs& pot) {
  std::map<int, cplx> q;
  if (pot.a() != cplx{}) q.emplace(-1, pot.a());
  if (pot.b() != cplx{}) q.emplace(1, pot.b());
  return q;
}

/// Quasi-momentum t, always stored in (-π, π].
class QuasiMomentum {
 public:
  QuasiMomentum() = default;
  explicit QuasiMomentum(double t_raw) : t_(normalize(t_raw)) {}

  double value() const { return t_; }
  operator double() const { return t_; }

  static double normalize(double t_raw) {
    if (!std::isfinite(t_raw))
      throw Error(Error::Kind::invalid_argument, "quasi-momentum must be finite");
    if (t_raw > -pi && t_raw <= pi) return t_raw;
    double r = std::fmod(t_raw, two_pi);  // (-2π, 2π)
    if (r > pi) r -= two_pi;
    if (r <= -pi) r += two_pi;
    // fmod of a rounded multiple of π can land one ulp inside the excluded end
    if (r <= -pi) r = pi;
    return r;
  }

 private:
  double t_ = 0.0;
};

inline QuasiMomentum normalize_quasimomentum(double t_raw) { return QuasiMomentum(t_raw); }

/// Band label. Signed n is primary; (n, j) with j ∈ {1, 2} is the near-endpoint
/// labeling where λ_{n,1} ↔ λ_{-n} and λ_{n,2} ↔ λ_n.
struct BandIndex {
  int n = 0;

  enum class Sub : std::uint8_t { one = 1, two = 2 };

  static BandIndex from_pair(int n_abs, Sub j) {
    if (n_abs < 0) throw Error(Error::Kind::invalid_argument, "paired band label needs n >= 0");
    return BandIndex{j == Sub::one ? -n_abs : n_abs};
  }

  /// (|n|, j); label 0 maps to (0, two).
  std::pair<int, Sub> to_pair() const { return {std::abs(n), n < 0 ? Sub::one : Sub::two}; }

  friend auto operator<=>(const BandIndex&, const BandIndex&) = default;
};

/// Numerical knobs. None of these are the analysis constants of the theory;
/// they are tuned so the convergence tests pass at desk scale.
struct SolverConfig {
  int truncation_half_width = 32;  // Fourier modes -M..M
  double ode_tolerance = 1e-12;
  double newton_tolerance = 1e-10;
  int max_newton_iters = 60;
  double eig_deflation_tol = 1e-10;  // residual bound, relative to the matrix norm

  /// Labels with |n| > M - margin are flagged as truncation-unreliable.
  int localization_margin = 8;
  /// |dF/dλ| below this counts as a critical (possibly multiple) point.
  double critical_df_tol = 1e-8;
  /// Asymptotic regime half-width near t = 0 and t = π.
  double rho = 0.02;
  /// Number of odd A-series terms a_1, a_3, ... summed by the asymptotics.
  int a_series_terms = 3;

  int M() const { return truncation_half_width; }

  void validate() const {
    if (truncation_half_width < 1)
      throw Error(Error::Kind::invalid_argument, "truncation half-width must be >= 1");
    if (!(ode_tolerance > 0) || !(newton_tolerance > 0) || !(eig_deflation_tol > 0) ||
        !(critical_df_tol > 0) || !(rho > 0))
      throw Error(Error::Kind::invalid_argument, "tolerances must be strictly positive");
    if (max_newton_iters < 1)
      throw Error(Error::Kind::invalid_argument, "max_newton_iters must be >= 1");
    if (localization_margin < 0 || a_series_terms < 1)
      throw Error(Error::Kind::invalid_argument, "invalid margin or series length");
  }

  /// Checks that labels up to |n| = max_label are inside the reliable window.
  void validate_for_label(int max_label) const {
    validate();
    if (truncation_half_width < std::abs(max_label) + localization_margin)
      throw Error(Error::Kind::invalid_argument,
                  "truncation half-width M=" + std::to_string(truncation_half_width) +
                      " too small for label " + std::to_string(max_label) + " (need M >= |n| + " +
                      std::to_string(localization_margin) + ")");
  }
};

}  // namespace hillspec
