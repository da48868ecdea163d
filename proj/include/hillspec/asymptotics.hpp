#pragma once

// Closed-form asymptotics for the pair of eigenvalues near (2πn)² (t near 0)
// and near (2πn+π)² (t near π): the constants α_n, β_n, the leading
// off-diagonal terms B, B', the walk series A, A', the splitting function D,
// predicted eigenvalues and predicted gap widths.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hillspec/model.hpp"

namespace hillspec {

struct GapPredictors {
  int n = 0;
  std::optional<cplx> log_beta;               // nullopt: β_n = 0 (b = 0)
  std::optional<cplx> log_alpha;              // nullopt: α_n = 0 (a = 0)
  std::optional<double> log_gap_periodic;     // nullopt: predicted gap is zero
  std::optional<double> log_gap_antiperiodic;

  double gap_periodic() const { return log_gap_periodic ? std::exp(*log_gap_periodic) : 0.0; }
  double gap_antiperiodic() const { return log_gap_antiperiodic ? std::exp(*log_gap_antiperiodic) : 0.0; }
  cplx beta() const { return log_beta ? std::exp(*log_beta) : cplx{}; }
  cplx alpha() const { return log_alpha ? std::exp(*log_alpha) : cplx{}; }
};

namespace detail {

inline double log_factor_periodic(int n) { return (2 * n - 1) * std::log(two_pi) + std::lgamma(2.0 * n); }
inline double log_factor_antiperiodic(int n) { return 2 * n * std::log(two_pi) + std::lgamma(2.0 * n + 1); }

// log(c^p) with the argument carried as p·arg(c), not reduced mod 2π
inline cplx log_power(cplx c, int p) { return cplx(p * std::log(std::abs(c)), p * std::arg(c)); }

}  // namespace detail

inline GapPredictors gap_predictors(int n, const PotentialCoeffs& pot) {
  if (n < 1) throw Error(Error::Kind::invalid_argument, "gap_predictors needs n >= 1");
  GapPredictors g;
  g.n = n;
  const double lf = detail::log_factor_periodic(n);
  if (pot.b() != cplx{}) g.log_beta = detail::log_power(pot.b(), 2 * n) - 2.0 * lf;
  if (pot.a() != cplx{}) g.log_alpha = detail::log_power(pot.a(), 2 * n) - 2.0 * lf;
  const cplx ab = pot.product_ab();
  if (ab != cplx{}) {
    const double lab = std::log(std::abs(ab));
    g.log_gap_periodic = std::log(2.0) + n * lab - 2.0 * lf;
    g.log_gap_antiperiodic = std::log(2.0) + (n + 0.5) * lab - 2.0 * detail::log_factor_antiperiodic(n);
  }
  return g;
}

/// Predicted |λ_n(0) - λ_{-n}(0)| and |λ_n(π) - λ_{-n-1}(π)|.
inline std::pair<double, double> predict_gaps(int n, const PotentialCoeffs& pot) {
  const GapPredictors g = gap_predictors(n, pot);
  return {g.gap_periodic(), g.gap_antiperiodic()};
}

/// Predicted splitting 2·sqrt(α_n β_n) at t = 0, in modulus.
inline double predicted_splitting(int n, const PotentialCoeffs& pot) {
  const GapPredictors g = gap_predictors(n, pot);
  if (!g.log_alpha || !g.log_beta) return 0.0;
  return 2.0 * std::exp(0.5 * (g.log_alpha->real() + g.log_beta->real()));
}

/// Real t > 0 where (4πnt)² = |α_n β_n|, i.e. where D can vanish when
/// α_n β_n is negative real.
inline double predicted_critical_t(int n, const PotentialCoeffs& pot) {
  return predicted_splitting(n, pot) / 2.0 / (4.0 * pi * n);
}

namespace detail {

inline cplx checked_inverse(cplx lambda, double pole) {
  const cplx d = lambda - pole;
  if (std::abs(d) < 1e-8)
    throw Error(Error::Kind::pole_proximity, "lambda within 1e-8 of a series pole at " + std::to_string(pole));
  return 1.0 / d;
}

// Sum over closed walks of k+1 unit steps (k odd, k ≤ 2·terms-1) whose partial
// sums P_1..P_k avoid `forbidden`, weighted by (ab)^{(k+1)/2} Π 1/(λ - pole(P_s)).
inline cplx walk_series(cplx ab, cplx lambda, int terms, const std::function<double(int)>& pole,
                        int forbidden_a, int forbidden_b) {
  if (ab == cplx{}) return cplx{};
  cplx total{};
  for (int m = 0; m < terms; ++m) {
    const int k = 2 * m + 1;
    cplx sum_k{};
    std::function<void(int, int, cplx)> dfs = [&](int depth, int P, cplx prod) {
      if (depth == k) {
        if (P == 1 || P == -1) sum_k += prod;
        return;
      }
      for (int step : {-1, 1}) {
        const int Q = P + step;
        if (Q == 0 || Q == forbidden_a || Q == forbidden_b) continue;
        // the walk must be able to return within the remaining steps
        if (std::abs(Q) - 1 > k - depth - 1) continue;
        dfs(depth + 1, Q, prod * checked_inverse(lambda, pole(Q)));
      }
    };
    dfs(0, 0, cplx(1.0, 0.0));
    cplx w = 1.0;
    for (int i = 0; i < (k + 1) / 2; ++i) w *= ab;
    total += w * sum_k;
  }
  return total;
}

inline cplx pole_product(cplx lambda, int count, const std::function<double(int)>& pole, cplx coeff,
                         int power) {
  if (coeff == cplx{}) return cplx{};
  cplx lg = log_power(coeff, power);
  for (int s = 1; s <= count; ++s) {
    const double p = pole(s);
    const cplx d = lambda - p;
    if (std::abs(d) < 1e-8)
      throw Error(Error::Kind::pole_proximity, "lambda within 1e-8 of a product pole at " + std::to_string(p));
    lg -= std::log(d);
  }
  return std::exp(lg);
}

}  // namespace detail

/// b_{2n-1}(λ,t) and b'_{2n-1}(λ,t).
inline std::pair<cplx, cplx> b_leading(int n, const PotentialCoeffs& pot, cplx lambda, QuasiMomentum t) {
  if (n < 1) throw Error(Error::Kind::invalid_argument, "b_leading needs n >= 1");
  const double tv = t.value();
  auto pB = [&](int s) { const double w = two_pi * (n - s) + tv; return w * w; };
  auto pBp = [&](int s) { const double w = two_pi * (n - s) - tv; return w * w; };
  return {detail::pole_product(lambda, 2 * n - 1, pB, pot.b(), 2 * n),
          detail::pole_product(lambda, 2 * n - 1, pBp, pot.a(), 2 * n)};
}

/// Antiperiodic analogues b̃_{2n}, b̃'_{2n} for the pair (n, -n-1) near t = π.
inline std::pair<cplx, cplx> b_leading_tilde(int n, const PotentialCoeffs& pot, cplx lambda, QuasiMomentum t) {
  if (n < 0) throw Error(Error::Kind::invalid_argument, "b_leading_tilde needs n >= 0");
  const double tv = t.value();
  auto pB = [&](int s) { const double w = two_pi * (n - s) + tv; return w * w; };
  auto pBp = [&](int s) { const double w = two_pi * (n + 1 - s) - tv; return w * w; };
  return {detail::pole_product(lambda, 2 * n, pB, pot.b(), 2 * n + 1),
          detail::pole_product(lambda, 2 * n, pBp, pot.a(), 2 * n + 1)};
}

struct ATerms {
  cplx A{}, Aprime{}, C{};
};

/// Truncated A, A' (odd terms a_1, a_3, ..., a_{2K-1}) and C = (A - A')/2.
inline ATerms a_truncated(int n, const PotentialCoeffs& pot, cplx lambda, QuasiMomentum t, int K_terms) {
  if (n < 1 || K_terms < 1) throw Error(Error::Kind::invalid_argument, "a_truncated needs n >= 1, K >= 1");
  const double tv = t.value();
  const cplx ab = pot.product_ab();
  ATerms r;
  r.A = detail::walk_series(ab, lambda, K_terms, [&](int P) { const double w = two_pi * (n - P) + tv; return w * w; },
                            2 * n, 2 * n);
  r.Aprime = detail::walk_series(ab, lambda, K_terms,
                                 [&](int P) { const double w = two_pi * (n + P) - tv; return w * w; }, -2 * n, -2 * n);
  r.C = 0.5 * (r.A - r.Aprime);
  return r;
}

/// Antiperiodic series Ã, Ã' for the pair (n, -n-1).
inline ATerms a_truncated_tilde(int n, const PotentialCoeffs& pot, cplx lambda, QuasiMomentum t, int K_terms) {
  if (n < 0 || K_terms < 1) throw Error(Error::Kind::invalid_argument, "a_truncated_tilde needs n >= 0, K >= 1");
  const double tv = t.value();
  const cplx ab = pot.product_ab();
  ATerms r;
  r.A = detail::walk_series(ab, lambda, K_terms, [&](int P) { const double w = two_pi * (n - P) + tv; return w * w; },
                            2 * n + 1, 2 * n + 1);
  r.Aprime = detail::walk_series(ab, lambda, K_terms,
                                 [&](int P) { const double w = two_pi * (n + 1 + P) - tv; return w * w; },
                                 -(2 * n + 1), -(2 * n + 1));
  r.C = 0.5 * (r.A - r.Aprime);
  return r;
}

/// Bound on the size of the walk term a_k: 2^k |ab|^{(k+1)/2} / d^k, with d
/// the smallest distance from λ to a pole reachable in k steps.
inline double a_term_bound(int n, const PotentialCoeffs& pot, cplx lambda, QuasiMomentum t, int k) {
  double dmin = std::numeric_limits<double>::infinity();
  for (int P = -k; P <= k; ++P) {
    if (P == 0 || P == 2 * n) continue;
    const double w = two_pi * (n - P) + t.value();
    dmin = std::min(dmin, std::abs(lambda - w * w));
  }
  return std::pow(2.0, k) * std::pow(std::abs(pot.product_ab()), 0.5 * (k + 1)) / std::pow(dmin, k);
}

struct SeriesTerms {
  int n = 0;
  double t = 0.0;
  cplx lambda{};
  cplx A_trunc{}, Aprime_trunc{};
  cplx B_leading{}, Bprime_leading{};
  cplx C{}, D{};
  int truncation_order = 0;  // number of odd A-terms
};

inline SeriesTerms series_terms(int n, const PotentialCoeffs& pot, cplx lambda, QuasiMomentum t, int K_terms) {
  SeriesTerms s;
  s.n = n;
  s.t = t.value();
  s.lambda = lambda;
  s.truncation_order = K_terms;
  const ATerms a = a_truncated(n, pot, lambda, t, K_terms);
  const auto [B, Bp] = b_leading(n, pot, lambda, t);
  s.A_trunc = a.A;
  s.Aprime_trunc = a.Aprime;
  s.C = a.C;
  s.B_leading = B;
  s.Bprime_leading = Bp;
  const cplx lin = 4.0 * pi * n * t.value() + a.C;
  s.D = lin * lin + B * Bp;
  return s;
}

/// D(λ,t) = (4πnt + C)² + B·B'.
inline cplx splitting_D(int n, const PotentialCoeffs& pot, cplx lambda, QuasiMomentum t, int K_terms) {
  return series_terms(n, pot, lambda, t, K_terms).D;
}

/// D̃(λ,t) = (2π(2n+1)(t-π) + C̃)² + B̃·B̃'.
inline cplx splitting_D_tilde(int n, const PotentialCoeffs& pot, cplx lambda, QuasiMomentum t, int K_terms) {
  const ATerms a = a_truncated_tilde(n, pot, lambda, t, K_terms);
  const auto [B, Bp] = b_leading_tilde(n, pot, lambda, t);
  const cplx lin = two_pi * (2 * n + 1) * (t.value() - pi) + a.C;
  return lin * lin + B * Bp;
}

enum class PredictionRegime { near_zero, near_pi, mid_interval };

struct EigenPrediction {
  PredictionRegime regime = PredictionRegime::mid_interval;
  cplx lambda_1{};  // partner: -n near 0 and mid-interval, -n-1 near π
  cplx lambda_2{};  // label n
  int iterations = 0;
};

namespace detail {

// One regime of the fixed-point form: λ = base + S(λ) + sign·w(λ),
// w² = (lin + C(λ))² + BB'(λ), with w taken nearest `w_ref`.
struct PairFormula {
  std::function<cplx(cplx)> shift;  // (A + A')/2 at λ
  std::function<cplx(cplx)> disc;   // D at λ
  cplx base;
};

inline cplx pick_branch(cplx D, cplx w_ref) {
  const cplx w = std::sqrt(D);
  return std::abs(w - w_ref) <= std::abs(-w - w_ref) ? w : -w;
}

inline std::pair<cplx, cplx> fixed_point(const PairFormula& f, double sign, cplx lambda0, cplx w_ref, int& iters) {
  cplx lambda = lambda0, w = w_ref;
  for (int it = 1; it <= 200; ++it) {
    w = pick_branch(f.disc(lambda), w_ref);
    const cplx next = f.base + f.shift(lambda) + sign * w;
    const double step = std::abs(next - lambda);
    lambda = next;
    iters = std::max(iters, it);
    if (step <= 1e-15 * (1.0 + std::abs(lambda))) return {lambda, w};
  }
  throw Error(Error::Kind::convergence_failure, "asymptotic fixed point did not contract");
}

}  // namespace detail

/// Two eigenvalue predictions from the splitting formula near t = 0 (for
/// t ∈ [0, ρ]), its antiperiodic analogue near t = π (for t ∈ [π-ρ, π]), or
/// the free values mid-interval. The square-root branch is continued from
/// the edge of the regime, where D is dominated by its linear term.
inline EigenPrediction predict_eigenvalues(int n, const PotentialCoeffs& pot, QuasiMomentum t, const SolverConfig& cfg) {
  cfg.validate();
  if (n < 1) throw Error(Error::Kind::invalid_argument, "predict_eigenvalues needs n >= 1");
  const double tv = t.value();
  const double rho = cfg.rho;
  const int K = cfg.a_series_terms;
  EigenPrediction out;
  const int march = 32;

  if (tv >= 0 && tv <= rho) {
    out.regime = PredictionRegime::near_zero;
    cplx ref1{}, ref2{};
    cplx l1{}, l2{};
    for (int i = 0; i <= march; ++i) {
      const double ts = rho + (tv - rho) * i / march;
      const QuasiMomentum q(ts);
      const double wn = two_pi * n + ts;
      const double lin = 4.0 * pi * n * ts;
      detail::PairFormula f;
      f.base = wn * wn - lin;
      f.shift = [&](cplx l) {
        const ATerms a = a_truncated(n, pot, l, q, K);
        return 0.5 * (a.A + a.Aprime);
      };
      f.disc = [&](cplx l) { return splitting_D(n, pot, l, q, K); };
      if (i == 0) {
        const double wm = two_pi * n - ts;
        l2 = wn * wn;
        l1 = wm * wm;
        ref1 = ref2 = lin;
      }
      std::tie(l2, ref2) = detail::fixed_point(f, +1.0, l2, ref2, out.iterations);
      std::tie(l1, ref1) = detail::fixed_point(f, -1.0, l1, ref1, out.iterations);
    }
    out.lambda_1 = l1;
    out.lambda_2 = l2;
    return out;
  }
  if (tv >= pi - rho) {
    out.regime = PredictionRegime::near_pi;
    cplx ref1{}, ref2{};
    cplx l1{}, l2{};
    for (int i = 0; i <= march; ++i) {
      const double ts = (pi - rho) + (tv - (pi - rho)) * i / march;
      const QuasiMomentum q(ts);
      const double wn = two_pi * n + ts;
      const double lin = two_pi * (2 * n + 1) * (ts - pi);
      detail::PairFormula f;
      f.base = wn * wn - lin;
      f.shift = [&](cplx l) {
        const ATerms a = a_truncated_tilde(n, pot, l, q, K);
        return 0.5 * (a.A + a.Aprime);
      };
      f.disc = [&](cplx l) { return splitting_D_tilde(n, pot, l, q, K); };
      if (i == 0) {
        const double wm = two_pi * (n + 1) - ts;
        l2 = wn * wn;
        l1 = wm * wm;
        ref1 = ref2 = lin;
      }
      std::tie(l2, ref2) = detail::fixed_point(f, +1.0, l2, ref2, out.iterations);
      std::tie(l1, ref1) = detail::fixed_point(f, -1.0, l1, ref1, out.iterations);
    }
    out.lambda_1 = l1;
    out.lambda_2 = l2;
    return out;
  }
  out.regime = PredictionRegime::mid_interval;
  const double wn = two_pi * n + tv, wm = -two_pi * n + tv;
  out.lambda_1 = wm * wm;
  out.lambda_2 = wn * wn;
  return out;
}

}  // namespace hillspec
