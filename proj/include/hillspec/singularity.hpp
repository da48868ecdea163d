#pragma once

// Biorthogonal pairing d_n(t) = (Ψ_{n,t}, Ψ*_{n,t}), projection norms
// sup 1/|d_n|, the scan for spectral singularities at infinity, and the
// arithmetic classification of |a| = |b| potentials by α = arg(ab)/π.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "hillspec/floquet.hpp"
#include "hillspec/model.hpp"
#include "hillspec/spectrum.hpp"

namespace hillspec {

/// Potential of the adjoint operator: (H_t(q))* = H_t(q̄), i.e. (a, b) → (b̄, ā).
inline PotentialCoeffs adjoint_potential(const PotentialCoeffs& pot) {
  return PotentialCoeffs(std::conj(pot.b()), std::conj(pot.a()));
}

struct PairingRecord {
  BandIndex n;
  double t = 0.0;
  cplx lambda{};
  cplx lambda_adjoint{};  // conj of the matched adjoint eigenvalue
  cplx d{};
  double inv_abs_d = 0.0;
};

/// d_n(t) from the Fourier coefficients of the unit eigenvectors of H_t and
/// of H_t* at the conjugate eigenvalue.
inline PairingRecord pairing_dn(int n, const PotentialCoeffs& pot, QuasiMomentum t, const SolverConfig& cfg) {
  const PairSolution s = solve_pair(pot, t, n, cfg);
  const PairSolution sa = solve_pair(adjoint_potential(pot), t, n, cfg);
  // the adjoint reduction is the conjugate transpose of this one, so the
  // matching branch is the one whose half-splitting is conj(w_label)
  const cplx target_w = std::conj(s.w_label);
  bool use_partner = false;
  if (sa.partner_valid) use_partner = std::abs(sa.w_partner - target_w) < std::abs(sa.w_label - target_w);
  const cplx lam_adj = std::conj(use_partner ? sa.lambda_partner() : sa.lambda_label());
  const Eigen::VectorXcd& y = use_partner ? sa.vec_partner : sa.vec_label;

  PairingRecord r;
  r.n = BandIndex{n};
  r.t = t.value();
  r.lambda = s.lambda_label();
  r.lambda_adjoint = lam_adj;
  const double tol = 1e-8 * (1.0 + std::abs(r.lambda));
  if (!(std::abs(lam_adj - r.lambda) <= tol))
    throw Error(Error::Kind::matching_failure,
                "adjoint eigenvalue does not match the conjugate of lambda for label " + std::to_string(n) +
                    " at t=" + std::to_string(t.value()));
  r.d = y.dot(s.vec_label);  // Σ x_k conj(y_k)
  r.inv_abs_d = std::abs(r.d) > 0 ? 1.0 / std::abs(r.d) : std::numeric_limits<double>::infinity();
  return r;
}

struct ProjectionNorm {
  double norm = 1.0;
  double t_max = 0.0;
  int evaluations = 0;
  bool stabilized = false;  // refinement reached the 1% criterion
};

/// sup of 1/|d_n(t)| over the arc's samples in [t_lo, t_hi], refined on a
/// 64-point sub-grid and then locally around the maximizer until the sup
/// changes by less than 1% on two consecutive levels (after min_depth).
inline ProjectionNorm projection_norm(const SpectralArc& arc, const PotentialCoeffs& pot, const SolverConfig& cfg,
                                      double t_lo = 0.0, double t_hi = pi, int max_depth = 40,
                                      int min_depth = 6) {
  if (!(t_hi >= t_lo)) throw Error(Error::Kind::invalid_argument, "empty t window");
  const int n = arc.n.n;
  ProjectionNorm out;
  out.norm = 0.0;
  std::vector<double> ts;
  for (const auto& s : arc.samples)
    if (s.t >= t_lo && s.t <= t_hi) ts.push_back(s.t);
  for (int i = 0; i <= 64; ++i) ts.push_back(t_lo + (t_hi - t_lo) * i / 64.0);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  auto eval = [&](double t) {
    ++out.evaluations;
    try {
      return pairing_dn(n, pot, QuasiMomentum(t), cfg).inv_abs_d;
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " (projection_norm at t=" + std::to_string(t) + ")");
    }
  };
  std::vector<double> vals(ts.size());
  std::size_t imax = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    vals[i] = eval(ts[i]);
    if (vals[i] > vals[imax]) imax = i;
  }
  out.norm = vals[imax];
  out.t_max = ts[imax];
  double left = imax > 0 ? ts[imax - 1] : ts[imax];
  double right = imax + 1 < ts.size() ? ts[imax + 1] : ts[imax];
  int calm = 0;
  for (int depth = 0; depth < max_depth && right > left; ++depth) {
    double best = out.norm, best_t = out.t_max;
    for (int k = 1; k < 8; ++k) {
      const double t = left + (right - left) * k / 8.0;
      const double v = eval(t);
      if (v > best) {
        best = v;
        best_t = t;
      }
    }
    const double change = (best - out.norm) / out.norm;
    const double h = (right - left) / 8.0;
    out.norm = best;
    out.t_max = best_t;
    left = std::max(t_lo, best_t - h);
    right = std::min(t_hi, best_t + h);
    calm = change < 0.01 ? calm + 1 : 0;
    if (calm >= 2 && depth >= min_depth) {
      out.stabilized = true;
      break;
    }
  }
  return out;
}

enum class ScanVerdict { trend_to_zero, bounded_below, undecided };

inline const char* to_string(ScanVerdict v) {
  switch (v) {
    case ScanVerdict::trend_to_zero: return "trend_to_zero";
    case ScanVerdict::bounded_below: return "bounded_below";
    case ScanVerdict::undecided: return "undecided";
  }
  return "unknown";
}

struct ScanRow {
  int n = 0;
  double min_abs_d = 0.0;
  double t_at_min = 0.0;
};

struct SingularityScan {
  std::vector<ScanRow> rows;
  ScanVerdict verdict = ScanVerdict::undecided;
  double threshold = 0.1;
};

/// Per-n minimum of |d_n(t)| over `t_grid`, with a trend verdict on the last
/// three labels.
inline SingularityScan scan_singularity_at_infinity(const PotentialCoeffs& pot, const std::vector<int>& n_range,
                                                    const std::vector<double>& t_grid, const SolverConfig& cfg,
                                                    double threshold = 0.1) {
  SingularityScan scan;
  scan.threshold = threshold;
  for (int n : n_range) {
    cfg.validate_for_label(n);
    ScanRow row;
    row.n = n;
    row.min_abs_d = std::numeric_limits<double>::infinity();
    for (double t : t_grid) {
      const PairingRecord r = pairing_dn(n, pot, QuasiMomentum(t), cfg);
      if (std::abs(r.d) < row.min_abs_d) {
        row.min_abs_d = std::abs(r.d);
        row.t_at_min = t;
      }
    }
    scan.rows.push_back(row);
  }
  if (scan.rows.size() >= 3) {
    const auto& r = scan.rows;
    const std::size_t k = r.size();
    const bool decreasing = r[k - 1].min_abs_d < r[k - 2].min_abs_d && r[k - 2].min_abs_d < r[k - 3].min_abs_d;
    const double tail_min = std::min({r[k - 1].min_abs_d, r[k - 2].min_abs_d, r[k - 3].min_abs_d});
    if (r[k - 1].min_abs_d < threshold && decreasing)
      scan.verdict = ScanVerdict::trend_to_zero;
    else if (tail_min >= threshold)
      scan.verdict = ScanVerdict::bounded_below;
  }
  return scan;
}

struct OddApproximation {
  std::int64_t q = 0;
  std::int64_t p = 0;
  double residual = 0.0;  // |qα - (2p-1)|
};

/// Record-setting best odd approximations 2p-1 ≈ qα for q ≤ q_cap, with
/// gcd(2p-1, q) = 1.
inline std::vector<OddApproximation> best_odd_approximations(double alpha, std::int64_t q_cap) {
  if (q_cap < 1) throw Error(Error::Kind::invalid_argument, "q_cap must be >= 1");
  if (!std::isfinite(alpha)) throw Error(Error::Kind::invalid_argument, "alpha must be finite");
  std::vector<OddApproximation> out;
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t q = 1; q <= q_cap; ++q) {
    const double x = static_cast<double>(q) * alpha;
    std::int64_t o = 2 * static_cast<std::int64_t>(std::llround((x + 1.0) / 2.0)) - 1;
    if (o < 1) o = 1;
    const double res = std::abs(x - static_cast<double>(o));
    if (res < best && std::gcd(o, q) == 1) {
      best = res;
      out.push_back({q, (o + 1) / 2, res});
      if (res == 0.0) break;
    }
  }
  return out;
}

enum class ParityVerdict { even_m, odd_m, irrational_like, not_applicable };
enum class SpectralityVerdict { singular_at_infinity, asymptotically_spectral, undecided_numerically };

inline const char* to_string(ParityVerdict v) {
  switch (v) {
    case ParityVerdict::even_m: return "even_m";
    case ParityVerdict::odd_m: return "odd_m";
    case ParityVerdict::irrational_like: return "irrational_like";
    case ParityVerdict::not_applicable: return "not_applicable";
  }
  return "unknown";
}

inline const char* to_string(SpectralityVerdict v) {
  switch (v) {
    case SpectralityVerdict::singular_at_infinity: return "singular_at_infinity";
    case SpectralityVerdict::asymptotically_spectral: return "asymptotically_spectral";
    case SpectralityVerdict::undecided_numerically: return "undecided_numerically";
  }
  return "unknown";
}

struct RationalDetection {
  std::int64_t m = 0;
  std::int64_t q = 1;
  double residual = 0.0;  // |α - m/q|
};

struct SpectralityReport {
  double abs_a = 0.0, abs_b = 0.0;
  double alpha = 0.0;  // arg(ab)/π reduced to [0, 2)
  std::optional<RationalDetection> rational_detection;
  ParityVerdict parity_verdict = ParityVerdict::not_applicable;
  std::vector<OddApproximation> odd_approx_witnesses;
  SpectralityVerdict verdict = SpectralityVerdict::undecided_numerically;
  std::string note;
};

/// Continued-fraction convergents of x ≥ 0 with denominator ≤ q_cap; the
/// first one within `tol` of x, if any.
inline std::optional<RationalDetection> detect_rational(double x, std::int64_t q_cap, double tol) {
  std::int64_t p0 = 1, q0 = 0, p1 = static_cast<std::int64_t>(std::floor(x)), q1 = 1;
  double r = x - std::floor(x);
  for (int it = 0; it < 64; ++it) {
    const double res = std::abs(x - static_cast<double>(p1) / static_cast<double>(q1));
    if (res <= tol) return RationalDetection{p1, q1, res};
    if (r <= 0.0) break;
    const double inv = 1.0 / r;
    const double ai_d = std::floor(inv);
    if (ai_d > 1e12) break;
    const auto ai = static_cast<std::int64_t>(ai_d);
    r = inv - ai_d;
    const std::int64_t p2 = ai * p1 + p0, q2 = ai * q1 + q0;
    if (q2 > q_cap) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
  }
  return std::nullopt;
}

/// Classification of the potential by |a| vs |b| and the arithmetic of α.
inline SpectralityReport classify_spectrality(const PotentialCoeffs& pot, std::int64_t q_cap = 1000000,
                                              double rational_tol = 1e-9) {
  if (q_cap < 1 || !(rational_tol > 0)) throw Error(Error::Kind::invalid_argument, "invalid q_cap or tolerance");
  SpectralityReport rep;
  rep.abs_a = std::abs(pot.a());
  rep.abs_b = std::abs(pot.b());
  const cplx ab = pot.product_ab();
  if (ab == cplx{}) {
    rep.note = "ab = 0: all gaps vanish identically and alpha is undefined";
    return rep;
  }
  double alpha = std::arg(ab) / pi;
  alpha = std::fmod(alpha, 2.0);
  if (alpha < 0) alpha += 2.0;
  if (alpha >= 2.0) alpha = 0.0;
  rep.alpha = alpha;
  if (std::abs(rep.abs_a - rep.abs_b) > 1e-12 * std::max(rep.abs_a, rep.abs_b)) {
    rep.verdict = SpectralityVerdict::singular_at_infinity;
    rep.note = "|a| != |b|";
    return rep;
  }
  rep.rational_detection = detect_rational(alpha, q_cap, rational_tol);
  if (rep.rational_detection) {
    const bool odd = (rep.rational_detection->m % 2) != 0;
    rep.parity_verdict = odd ? ParityVerdict::odd_m : ParityVerdict::even_m;
    rep.verdict = odd ? SpectralityVerdict::singular_at_infinity : SpectralityVerdict::asymptotically_spectral;
    rep.note = "alpha rational within tolerance";
    return rep;
  }
  rep.parity_verdict = ParityVerdict::irrational_like;
  rep.odd_approx_witnesses = best_odd_approximations(alpha, q_cap);
  rep.note = "no rational alpha with q <= q_cap within tolerance; odd-approximation witnesses reported";
  return rep;
}

}  // namespace hillspec
