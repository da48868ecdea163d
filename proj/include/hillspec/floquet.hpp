#pragma once

// Truncated Fourier (Floquet) representation of H_t.
//
// In the basis e^{i(2πn+t)x}, n = -M..M, the potential couples neighbouring
// modes only: q·e^{i(2πm+t)x} sends weight a to mode m-1 and b to mode m+1.
// Row n of the matrix therefore reads
//
//     (2πn+t)² c_n + a c_{n+1} + b c_{n-1}
//
// i.e. superdiagonal = a, subdiagonal = b, in n-ascending order. Every
// module (including the shooting oracle's cross-checks) uses this convention.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "hillspec/model.hpp"
#include "hillspec/tridiag.hpp"

namespace hillspec {

struct FloquetMatrix {
  QuasiMomentum t;
  int M = 0;
  std::vector<double> diagonal;  // (2πn+t)², index n+M
  cplx subdiagonal_value{};      // b
  cplx superdiagonal_value{};    // a

  int size() const { return 2 * M + 1; }
  double center(int n) const { return diagonal[static_cast<std::size_t>(n + M)]; }

  Eigen::MatrixXcd dense() const {
    const int N = size();
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N, N);
    for (int i = 0; i < N; ++i) {
      A(i, i) = diagonal[static_cast<std::size_t>(i)];
      if (i + 1 < N) {
        A(i, i + 1) = superdiagonal_value;
        A(i + 1, i) = subdiagonal_value;
      }
    }
    return A;
  }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const {
    const int N = size();
    Eigen::VectorXcd y(N);
    for (int i = 0; i < N; ++i) {
      cplx s = diagonal[static_cast<std::size_t>(i)] * x(i);
      if (i + 1 < N) s += superdiagonal_value * x(i + 1);
      if (i > 0) s += subdiagonal_value * x(i - 1);
      y(i) = s;
    }
    return y;
  }

  /// Infinity norm.
  double norm() const {
    double dmax = 0.0;
    for (double d : diagonal) dmax = std::max(dmax, std::abs(d));
    return dmax + std::abs(subdiagonal_value) + std::abs(superdiagonal_value);
  }

  double residual(cplx lambda, const Eigen::VectorXcd& x) const {
    return (apply(x) - lambda * x).norm();
  }
};

inline FloquetMatrix build_matrix(const PotentialCoeffs& pot, QuasiMomentum t, int M) {
  if (M < 1) throw Error(Error::Kind::invalid_argument, "truncation half-width M must be >= 1");
  FloquetMatrix mat;
  mat.t = t;
  mat.M = M;
  mat.diagonal.resize(static_cast<std::size_t>(2 * M + 1));
  for (int n = -M; n <= M; ++n) {
    const double w = two_pi * n + t.value();
    mat.diagonal[static_cast<std::size_t>(n + M)] = w * w;
  }
  mat.superdiagonal_value = pot.a();
  mat.subdiagonal_value = pot.b();
  return mat;
}

struct EigenSolution {
  cplx lambda;
  Eigen::VectorXcd vector;  // unit Euclidean norm
  double residual = 0.0;
};

namespace detail {

inline Eigen::VectorXcd normalized(Eigen::VectorXcd v) {
  const double nv = v.norm();
  if (nv > 0 && std::isfinite(nv)) v /= nv;
  return v;
}

// Eigenvectors of a bidiagonal matrix (a == 0 or b == 0): the eigenvalues
// are the diagonal entries. When an entry repeats the matrix is defective
// and all copies share one eigenvector.
inline Eigen::VectorXcd bidiagonal_eigenvector(const FloquetMatrix& mat, int k) {
  const int N = mat.size();
  const double lam = mat.diagonal[static_cast<std::size_t>(k)];
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(N);
  const bool lower = mat.superdiagonal_value == cplx{};
  const cplx off = lower ? mat.subdiagonal_value : mat.superdiagonal_value;
  if (lower) {
    int s = k;
    for (int i = N - 1; i > k; --i)
      if (mat.diagonal[static_cast<std::size_t>(i)] == lam) { s = i; break; }
    x(s) = 1.0;
    for (int i = s + 1; i < N; ++i) x(i) = off * x(i - 1) / (lam - mat.diagonal[static_cast<std::size_t>(i)]);
  } else {
    int s = k;
    for (int i = 0; i < k; ++i)
      if (mat.diagonal[static_cast<std::size_t>(i)] == lam) { s = i; break; }
    x(s) = 1.0;
    for (int i = s - 1; i >= 0; --i) x(i) = off * x(i + 1) / (lam - mat.diagonal[static_cast<std::size_t>(i)]);
  }
  return normalized(std::move(x));
}

inline Eigen::VectorXcd inverse_iteration_step(const FloquetMatrix& mat, cplx lambda,
                                               const Eigen::VectorXcd& x0) {
  const int N = mat.size();
  const double eps = std::numeric_limits<double>::epsilon();
  const cplx shift = lambda + cplx(16 * eps * (1 + std::abs(lambda)), 0.0);
  std::vector<cplx> sub(static_cast<std::size_t>(N - 1), mat.subdiagonal_value);
  std::vector<cplx> sup(static_cast<std::size_t>(N - 1), mat.superdiagonal_value);
  std::vector<cplx> diag(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) diag[static_cast<std::size_t>(i)] = mat.diagonal[static_cast<std::size_t>(i)] - shift;
  TridiagLU lu(std::move(sub), std::move(diag), std::move(sup), eps * mat.norm());
  return normalized(lu.solve(x0));
}

}  // namespace detail

/// All 2M+1 eigenpairs of the truncated matrix.
///
/// The matrix is first brought to complex-symmetric form by the diagonal
/// gauge S = diag(c^n), c = sqrt(b/a), which leaves the spectrum unchanged
/// and removes the exponential non-normality of |a| ≠ |b|. Eigenvectors are
/// mapped back through S and polished by one inverse-iteration step on the
/// original matrix.
inline std::vector<EigenSolution> eigen_all(const FloquetMatrix& mat, const SolverConfig& cfg) {
  cfg.validate();
  const int N = mat.size();
  const int M = mat.M;
  const cplx a = mat.superdiagonal_value;
  const cplx b = mat.subdiagonal_value;
  const double tol = cfg.eig_deflation_tol * std::max(1.0, mat.norm());
  std::vector<EigenSolution> out;
  out.reserve(static_cast<std::size_t>(N));

  if (a * b == cplx{}) {
    for (int k = 0; k < N; ++k) {
      EigenSolution s;
      s.lambda = mat.diagonal[static_cast<std::size_t>(k)];
      s.vector = detail::bidiagonal_eigenvector(mat, k);
      s.residual = mat.residual(s.lambda, s.vector);
      out.push_back(std::move(s));
    }
  } else {
    const cplx c = std::sqrt(b / a);
    const cplx off = a * c;
    Eigen::MatrixXcd Ts = Eigen::MatrixXcd::Zero(N, N);
    for (int i = 0; i < N; ++i) {
      Ts(i, i) = mat.diagonal[static_cast<std::size_t>(i)];
      if (i + 1 < N) {
        Ts(i, i + 1) = off;
        Ts(i + 1, i) = off;
      }
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(Ts, true);
    if (solver.info() != Eigen::Success)
      throw Error(Error::Kind::eigen_failure, "complex QR iteration did not converge");

    const double log_c = std::log(std::abs(c));
    const double arg_c = std::arg(c);
    for (int k = 0; k < N; ++k) {
      EigenSolution s;
      s.lambda = solver.eigenvalues()(k);
      const Eigen::VectorXcd& xs = solver.eigenvectors().col(k);
      // x_n = c^n xs_n, evaluated in log form so that |c|^M cannot overflow
      double lmax = -std::numeric_limits<double>::infinity();
      std::vector<double> lmag(static_cast<std::size_t>(N));
      for (int i = 0; i < N; ++i) {
        const double m = std::abs(xs(i));
        lmag[static_cast<std::size_t>(i)] =
            m > 0 ? std::log(m) + (i - M) * log_c : -std::numeric_limits<double>::infinity();
        lmax = std::max(lmax, lmag[static_cast<std::size_t>(i)]);
      }
      Eigen::VectorXcd x(N);
      for (int i = 0; i < N; ++i) {
        const double m = std::exp(lmag[static_cast<std::size_t>(i)] - lmax);
        x(i) = m > 0 ? std::polar(m, std::arg(xs(i)) + (i - M) * arg_c) : cplx{};
      }
      x = detail::normalized(std::move(x));
      const double r0 = mat.residual(s.lambda, x);
      Eigen::VectorXcd y = detail::inverse_iteration_step(mat, s.lambda, x);
      const double r1 = mat.residual(s.lambda, y);
      if (std::isfinite(r1) && r1 < r0) {
        s.vector = std::move(y);
        s.residual = r1;
      } else {
        s.vector = std::move(x);
        s.residual = r0;
      }
      out.push_back(std::move(s));
    }
  }

  std::vector<int> failed;
  for (int k = 0; k < N; ++k)
    if (!(out[static_cast<std::size_t>(k)].residual < tol)) failed.push_back(k);
  if (!failed.empty()) {
    std::string msg = "eigenpair residual above tolerance at indices:";
    for (int k : failed) msg += " " + std::to_string(k);
    throw Error(Error::Kind::eigen_failure, msg);
  }
  return out;
}

/// Orientation of a square-root branch: returns ±w so that w points along
/// `dir` (ties broken towards positive imaginary part).
inline cplx orient(cplx w, cplx dir) {
  const cplx p = w * std::conj(dir);
  if (p.real() < 0 || (p.real() == 0 && p.imag() < 0)) return -w;
  return w;
}

/// Direction in which λ_hi - λ_lo points for a pair of modes whose free
/// values coincide at t; evaluated by moving t towards the interior of
/// [0, π] (or [-π, 0] for negative t).
inline double interior_direction(double t, int lo, int hi) {
  const double tau = pi * (lo + hi) + t;
  if (tau != 0.0) return tau > 0 ? 1.0 : -1.0;
  const double step = (t >= 0) ? (t < pi / 2 ? 1.0 : -1.0) : (t > -pi / 2 ? -1.0 : 1.0);
  return step;
}

struct EigenPair {
  BandIndex label;
  cplx lambda;
  Eigen::VectorXcd coeffs;  // modes -M..M, unit norm
  cplx u{};                 // coefficient at mode +n
  cplx v{};                 // coefficient at mode -n
  double residual_norm = 0.0;
  bool truncation_unreliable = false;
  bool ambiguous = false;
  bool outside_disk = false;

  int M() const { return static_cast<int>((coeffs.size() - 1) / 2); }
};

using BandMap = std::map<BandIndex, EigenPair>;

/// Localization radius used to flag eigenvalues far from their free value.
inline double localization_radius(int n) { return std::max(1.0, 4.0 * pi * std::abs(n) * 0.05); }

/// Assigns each eigenvalue to the nearest free value (2πn+t)² by a global
/// greedy matching on sorted distances. Where two free values coincide
/// (t = 0 or π) the pair is ordered with the same branch rule as the pair
/// solver and both labels are flagged ambiguous.
inline BandMap label_bands(const std::vector<EigenSolution>& eigs, QuasiMomentum t, int M,
                           const SolverConfig& cfg = {}) {
  const int N = 2 * M + 1;
  if (static_cast<int>(eigs.size()) != N)
    throw Error(Error::Kind::invalid_argument, "label_bands: expected 2M+1 eigenvalues");
  std::vector<double> center(static_cast<std::size_t>(N));
  for (int n = -M; n <= M; ++n) {
    const double w = two_pi * n + t.value();
    center[static_cast<std::size_t>(n + M)] = w * w;
  }

  struct Cand {
    double dist;
    int eig;
    int mode;
  };
  std::vector<Cand> cands;
  cands.reserve(static_cast<std::size_t>(N) * static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < N; ++k)
      cands.push_back({std::abs(eigs[static_cast<std::size_t>(i)].lambda - center[static_cast<std::size_t>(k)]), i, k});
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    return std::tie(x.dist, x.mode, x.eig) < std::tie(y.dist, y.mode, y.eig);
  });
  std::vector<int> eig_of_mode(static_cast<std::size_t>(N), -1);
  std::vector<bool> used(static_cast<std::size_t>(N), false);
  int assigned = 0;
  for (const auto& c : cands) {
    if (assigned == N) break;
    if (used[static_cast<std::size_t>(c.eig)] || eig_of_mode[static_cast<std::size_t>(c.mode)] >= 0) continue;
    used[static_cast<std::size_t>(c.eig)] = true;
    eig_of_mode[static_cast<std::size_t>(c.mode)] = c.eig;
    ++assigned;
  }

  std::vector<bool> ambiguous(static_cast<std::size_t>(N), false);
  // coincident free values: modes k and k' with |2πk+t| = |2πk'+t|
  for (int lo = -M; lo <= M; ++lo) {
    for (int hi = lo + 1; hi <= M; ++hi) {
      if (center[static_cast<std::size_t>(lo + M)] != center[static_cast<std::size_t>(hi + M)]) continue;
      const auto ilo = static_cast<std::size_t>(lo + M), ihi = static_cast<std::size_t>(hi + M);
      const cplx l_lo = eigs[static_cast<std::size_t>(eig_of_mode[ilo])].lambda;
      const cplx l_hi = eigs[static_cast<std::size_t>(eig_of_mode[ihi])].lambda;
      const cplx diff = l_hi - l_lo;
      if (orient(diff, interior_direction(t.value(), lo, hi)) != diff)
        std::swap(eig_of_mode[ilo], eig_of_mode[ihi]);
      ambiguous[ilo] = ambiguous[ihi] = true;
    }
  }
  // near-equidistant competitors for the same center
  const double eq_tol = 1e-9;
  for (int k = 0; k < N; ++k) {
    const double c = center[static_cast<std::size_t>(k)];
    const double d0 = std::abs(eigs[static_cast<std::size_t>(eig_of_mode[static_cast<std::size_t>(k)])].lambda - c);
    for (int i = 0; i < N; ++i) {
      if (i == eig_of_mode[static_cast<std::size_t>(k)]) continue;
      const double d1 = std::abs(eigs[static_cast<std::size_t>(i)].lambda - c);
      if (std::abs(d1 - d0) <= eq_tol * (1 + c) && d1 <= localization_radius(k - M)) {
        ambiguous[static_cast<std::size_t>(k)] = true;
        break;
      }
    }
  }

  BandMap out;
  for (int n = -M; n <= M; ++n) {
    const auto k = static_cast<std::size_t>(n + M);
    const EigenSolution& s = eigs[static_cast<std::size_t>(eig_of_mode[k])];
    EigenPair p;
    p.label = BandIndex{n};
    p.lambda = s.lambda;
    p.coeffs = s.vector;
    p.residual_norm = s.residual;
    p.u = s.vector(n + M);
    p.v = (n != 0) ? s.vector(-n + M) : cplx{};
    p.truncation_unreliable = std::abs(n) > M - cfg.localization_margin;
    p.ambiguous = ambiguous[k];
    p.outside_disk = std::abs(s.lambda - center[k]) > localization_radius(n);
    out.emplace(p.label, std::move(p));
  }
  return out;
}

struct EigenComponents {
  cplx u;
  cplx v;
  double h_norm;
};

/// Splits a labelled eigenvector into its ±n Fourier components and the
/// norm of the remainder.
inline EigenComponents eigenfunction_components(const EigenPair& pair) {
  const int M = pair.M();
  const int n = pair.label.n;
  if (std::abs(n) > M) throw Error(Error::Kind::invalid_argument, "label outside truncation");
  EigenComponents c{pair.coeffs(n + M), n != 0 ? pair.coeffs(-n + M) : cplx{}, 0.0};
  double h2 = 0.0;
  for (int k = -M; k <= M; ++k) {
    if (k == n || k == -n) continue;
    h2 += std::norm(pair.coeffs(k + M));
  }
  c.h_norm = std::sqrt(h2);
  return c;
}


/// Mode whose free value |2πk'+t| lies closest to |2πk+t| (k' ≠ k); ties
/// prefer -k.
inline int partner_of(int k, double t) {
  const double wk = std::abs(two_pi * k + t);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c : {-k, -k - 1, -k + 1}) {
    if (c == k) continue;
    const double d = std::abs(std::abs(two_pi * c + t) - wk);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

/// Result of the two-mode reduction for label n and its partner.
struct PairSolution {
  int label = 0;
  int partner = 0;
  double sigma = 0.0;  // (2π·hi+t)², the shift; λ = sigma + z
  cplx z_label{};
  cplx z_partner{};
  Eigen::VectorXcd vec_label;  // modes -M..M, unit norm
  Eigen::VectorXcd vec_partner;
  double noise_floor = 0.0;  // absolute rounding level of the pair
  int iterations = 0;
  bool partner_valid = false;
  // signed half-splitting of each branch, z = mean + w; distinguishes the
  // branches even when z_label and z_partner round to the same value
  cplx w_label{};
  cplx w_partner{};  // the partner branch may not converge when it is itself resonant elsewhere

  cplx lambda_label() const { return sigma + z_label; }
  cplx lambda_partner() const { return sigma + z_partner; }
  double gap() const { return std::abs(z_label - z_partner); }
};

namespace detail {

// Exact Schur reduction of the truncated matrix onto the modes lo < hi.
// Coordinates are shifted by sigma = (2π·hi+t)² and the diagonal is written
// as e_k = 2π(k-hi)·(2π(k-lo)+2τ), τ = π(lo+hi)+t, which is exactly
// mirror-symmetric about (lo+hi)/2 when τ = 0. The outer window is taken
// symmetric about the same centre.
class PairReduction {
 public:
  PairReduction(cplx a, cplx b, double t, int lo, int hi, int M)
      : a_(a), b_(b), ab_(a * b), lo_(lo), hi_(hi), M_(M) {
    L_ = std::min(lo + M, M - hi);
    if (L_ < 0) throw Error(Error::Kind::invalid_argument, "pair outside truncation window");
    tau_ = pi * (lo + hi) + t;
    const double s = pi * (hi - lo) + tau_;
    sigma_ = s * s;
  }

  double sigma() const { return sigma_; }
  double e(int k) const { return (two_pi * (k - hi_)) * (two_pi * (k - lo_) + 2.0 * tau_); }

  struct Reduced {
    cplx X_lo, X_hi, E_lh, E_hl;
  };

  Reduced reduce(cplx z) {
    hl_.assign(static_cast<std::size_t>(L_), cplx{});
    hu_.assign(static_cast<std::size_t>(L_), cplx{});
    // lower chain: modes lo-L .. lo-1, index i = lo-1-k
    cplx h{};
    for (int k = lo_ - L_; k <= lo_ - 1; ++k) {
      h = 1.0 / (e(k) - z - ab_ * h);
      hl_[static_cast<std::size_t>(lo_ - 1 - k)] = h;
    }
    const cplx g_low = L_ > 0 ? hl_[0] : cplx{};
    h = cplx{};
    for (int k = hi_ + L_; k >= hi_ + 1; --k) {
      h = 1.0 / (e(k) - z - ab_ * h);
      hu_[static_cast<std::size_t>(k - hi_ - 1)] = h;
    }
    const cplx g_up = L_ > 0 ? hu_[0] : cplx{};

    Reduced r;
    const int mm = hi_ - lo_ - 1;
    if (mm == 0) {
      r.X_lo = e(lo_) - ab_ * g_low;
      r.X_hi = e(hi_) - ab_ * g_up;
      r.E_lh = a_;
      r.E_hl = b_;
      return r;
    }
    std::vector<cplx> u(static_cast<std::size_t>(mm)), v(static_cast<std::size_t>(mm));
    for (int i = 0; i < mm; ++i) {
      const cplx d = e(lo_ + 1 + i) - z;
      u[static_cast<std::size_t>(i)] = i == 0 ? d : d - ab_ / u[static_cast<std::size_t>(i - 1)];
    }
    for (int i = mm - 1; i >= 0; --i) {
      const cplx d = e(lo_ + 1 + i) - z;
      v[static_cast<std::size_t>(i)] = i == mm - 1 ? d : d - ab_ / v[static_cast<std::size_t>(i + 1)];
    }
    const cplx Gmm = 1.0 / u.back();
    const cplx G11 = 1.0 / v.front();
    cplx G1m = 1.0 / u.front(), Gm1 = 1.0 / u.front();
    for (int i = 1; i < mm; ++i) {
      G1m *= -a_ / u[static_cast<std::size_t>(i)];
      Gm1 *= -b_ / u[static_cast<std::size_t>(i)];
    }
    r.X_lo = e(lo_) - ab_ * (g_low + G11);
    r.X_hi = e(hi_) - ab_ * (g_up + Gmm);
    r.E_lh = -a_ * a_ * G1m;
    r.E_hl = -b_ * b_ * Gm1;
    return r;
  }

  // Eigenvector for z = mu + sw, using the chain data of the last reduce(z)
  // call. The 2x2 part is built from delta and sw to avoid the cancellation
  // in X - z when the splitting is below eps·|X|.
  Eigen::VectorXcd vector(cplx z, const Reduced& r, int own_mode, cplx sw) const {
    const cplx delta = 0.5 * (r.X_hi - r.X_lo);
    cplx c_lo, c_hi;
    if (std::abs(r.E_lh) + std::abs(r.E_hl) + std::abs(delta) + std::abs(sw) == 0.0) {
      c_lo = own_mode == lo_ ? 1.0 : 0.0;
      c_hi = own_mode == hi_ ? 1.0 : 0.0;
    } else if (std::abs(delta + sw) >= std::abs(sw - delta)) {
      c_lo = r.E_lh;
      c_hi = delta + sw;
    } else {
      c_lo = sw - delta;
      c_hi = r.E_hl;
    }
    if (std::abs(c_lo) == 0.0 && std::abs(c_hi) == 0.0) {
      c_lo = own_mode == lo_ ? 1.0 : 0.0;
      c_hi = own_mode == hi_ ? 1.0 : 0.0;
    }
    // rescale so the larger of the two is 1
    const double sc = std::max(std::abs(c_lo), std::abs(c_hi));
    c_lo /= sc;
    c_hi /= sc;

    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(2 * M_ + 1);
    x(lo_ + M_) = c_lo;
    x(hi_ + M_) = c_hi;
    cplx c = c_lo;
    for (int i = 0; i < L_; ++i) {
      c = -a_ * hl_[static_cast<std::size_t>(i)] * c;
      x(lo_ - 1 - i + M_) = c;
    }
    c = c_hi;
    for (int i = 0; i < L_; ++i) {
      c = -b_ * hu_[static_cast<std::size_t>(i)] * c;
      x(hi_ + 1 + i + M_) = c;
    }
    const int mm = hi_ - lo_ - 1;
    if (mm > 0) {
      std::vector<cplx> sub(static_cast<std::size_t>(mm - 1), b_), sup(static_cast<std::size_t>(mm - 1), a_),
          diag(static_cast<std::size_t>(mm));
      for (int i = 0; i < mm; ++i) diag[static_cast<std::size_t>(i)] = e(lo_ + 1 + i) - z;
      Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(mm);
      rhs(0) -= b_ * c_lo;
      rhs(mm - 1) -= a_ * c_hi;
      const double tiny = std::numeric_limits<double>::epsilon() * (1.0 + std::abs(z));
      TridiagLU lu(std::move(sub), std::move(diag), std::move(sup), tiny);
      const Eigen::VectorXcd cm = lu.solve(rhs);
      for (int i = 0; i < mm; ++i) x(lo_ + 1 + i + M_) = cm(i);
    }
    return normalized(std::move(x));
  }

 private:
  cplx a_, b_, ab_;
  int lo_, hi_, M_, L_ = 0;
  double tau_ = 0.0, sigma_ = 0.0;
  std::vector<cplx> hl_, hu_;
};

}  // namespace detail

/// Eigenpair of label n and of its nearest partner mode, computed by an
/// exact two-mode Schur reduction of the truncated matrix. Unlike the dense
/// solver, this resolves splittings far below eps·‖T‖ and gives the
/// eigenvectors of nearly coincident pairs accurately.
inline PairSolution solve_pair(const PotentialCoeffs& pot, QuasiMomentum t, int n, const SolverConfig& cfg) {
  cfg.validate();
  const int M = cfg.M();
  const int p = partner_of(n, t.value());
  if (std::abs(n) > M || std::abs(p) > M)
    throw Error(Error::Kind::invalid_argument, "label " + std::to_string(n) + " outside truncation");
  const int lo = std::min(n, p), hi = std::max(n, p);
  detail::PairReduction red(pot.a(), pot.b(), t.value(), lo, hi, M);
  const double eps = std::numeric_limits<double>::epsilon();
  const double ref = interior_direction(t.value(), lo, hi);

  auto branch = [&](bool upper, int& iters_out, detail::PairReduction::Reduced& r_out, double& floor_out,
                    cplx& w_out, cplx& sw_out) -> std::optional<cplx> {
    cplx z = upper ? red.e(hi) : red.e(lo);
    detail::PairReduction::Reduced r{};
    for (int it = 1; it <= 200; ++it) {
      r = red.reduce(z);
      const cplx mu = 0.5 * (r.X_lo + r.X_hi);
      const cplx delta = 0.5 * (r.X_hi - r.X_lo);
      const double scale = std::abs(r.X_lo) + std::abs(r.X_hi);
      const cplx dir = std::abs(delta) > 64 * eps * scale ? delta : cplx(ref, 0.0);
      const cplx w = orient(std::sqrt(delta * delta + r.E_lh * r.E_hl), dir);
      // orientation picks the branch once; afterwards keep the square root continuous
      cplx sw = upper ? w : -w;
      if (it > 1) sw = std::abs(w - w_out) <= std::abs(w + w_out) ? w : -w;
      const cplx zn = mu + sw;
      w_out = sw;
      const double step = std::abs(zn - z);
      z = zn;
      iters_out = it;
      floor_out = 8 * eps * (scale + std::abs(w));
      if (step <= 4 * eps * (scale + std::abs(w))) break;
    }
    r_out = red.reduce(z);
    const cplx mu = 0.5 * (r_out.X_lo + r_out.X_hi);
    const cplx delta = 0.5 * (r_out.X_hi - r_out.X_lo);
    const cplx w = std::sqrt(delta * delta + r_out.E_lh * r_out.E_hl);
    const double resid = std::min(std::abs(z - mu - w), std::abs(z - mu + w));
    if (!(resid <= 1e3 * floor_out + 1e-13 * std::abs(z))) return std::nullopt;
    sw_out = std::abs(z - mu - w) <= std::abs(z - mu + w) ? w : -w;
    return z;
  };

  PairSolution s;
  s.label = n;
  s.partner = p;
  s.sigma = red.sigma();
  const bool label_hi = n == hi;
  int it_l = 0, it_p = 0;
  double fl_l = 0, fl_p = 0;
  detail::PairReduction::Reduced r_l{}, r_p{};
  cplx sw_l{}, sw_p{};
  const auto z_l = branch(label_hi, it_l, r_l, fl_l, s.w_label, sw_l);
  if (!z_l)
    throw Error(Error::Kind::convergence_failure,
                "pair fixed point did not converge for label " + std::to_string(n));
  s.z_label = *z_l;
  s.vec_label = red.vector(*z_l, r_l, n, sw_l);
  s.iterations = it_l;
  s.noise_floor = fl_l;
  const auto z_p = branch(!label_hi, it_p, r_p, fl_p, s.w_partner, sw_p);
  if (z_p) {
    s.partner_valid = true;
    s.z_partner = *z_p;
    s.vec_partner = red.vector(*z_p, r_p, p, sw_p);
    s.noise_floor = std::max(fl_l, fl_p);
  } else {
    s.z_partner = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
  }
  return s;
}

/// Labelled eigenpair of H_t from the pair solver, in the EigenPair layout.
inline EigenPair labeled_eigenpair(const PotentialCoeffs& pot, QuasiMomentum t, int n, const SolverConfig& cfg) {
  const PairSolution s = solve_pair(pot, t, n, cfg);
  const FloquetMatrix mat = build_matrix(pot, t, cfg.M());
  const int M = cfg.M();
  EigenPair e;
  e.label = BandIndex{n};
  e.lambda = s.lambda_label();
  e.coeffs = s.vec_label;
  e.u = e.coeffs(n + M);
  e.v = n != 0 ? e.coeffs(-n + M) : cplx{};
  e.residual_norm = mat.residual(e.lambda, e.coeffs);
  e.truncation_unreliable = std::abs(n) > M - cfg.localization_margin;
  e.ambiguous = s.partner == -n && t.value() == 0.0;
  e.outside_disk = std::abs(e.lambda - mat.center(n)) > localization_radius(n);
  return e;
}

/// Nearest-center matching can swap the two members of a pair when their
/// common shift exceeds half their splitting (small t). The pair solver
/// follows the label by continuity, so swaps it disagrees with are undone.
/// Returns the number of repaired pairs.
inline int repair_labels(BandMap& bands, const PotentialCoeffs& pot, QuasiMomentum t, const SolverConfig& cfg) {
  const int M = cfg.M();
  const int lim = M - cfg.localization_margin;
  int repaired = 0;
  for (int n = -lim; n <= lim; ++n) {
    const int p = partner_of(n, t.value());
    if (std::abs(p) > lim) continue;
    auto in = bands.find(BandIndex{n});
    auto ip = bands.find(BandIndex{p});
    if (in == bands.end() || ip == bands.end()) continue;
    PairSolution s;
    try {
      s = solve_pair(pot, t, n, cfg);
    } catch (const Error&) {
      continue;
    }
    const cplx ln = s.lambda_label();
    const double d_keep = std::abs(in->second.lambda - ln);
    const double d_swap = std::abs(ip->second.lambda - ln);
    if (d_swap < d_keep && (!s.partner_valid || std::abs(in->second.lambda - s.lambda_partner()) <
                                                     std::abs(ip->second.lambda - s.lambda_partner()))) {
      EigenPair& x = in->second;
      EigenPair& y = ip->second;
      std::swap(x.lambda, y.lambda);
      std::swap(x.coeffs, y.coeffs);
      std::swap(x.residual_norm, y.residual_norm);
      for (EigenPair* e : {&x, &y}) {
        const int k = e->label.n;
        e->u = e->coeffs(k + M);
        e->v = k != 0 ? e->coeffs(-k + M) : cplx{};
        const double w = two_pi * k + t.value();
        e->outside_disk = std::abs(e->lambda - w * w) > localization_radius(k);
      }
      ++repaired;
    }
  }
  return repaired;
}

/// Convenience: build, solve, label and repair in one call.
inline BandMap floquet_bands(const PotentialCoeffs& pot, QuasiMomentum t, const SolverConfig& cfg) {
  const FloquetMatrix mat = build_matrix(pot, t, cfg.M());
  BandMap bands = label_bands(eigen_all(mat, cfg), t, cfg.M(), cfg);
  repair_labels(bands, pot, t, cfg);
  return bands;
}

}  // namespace hillspec
