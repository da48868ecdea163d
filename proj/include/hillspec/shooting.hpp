#pragma once

// Hill discriminant F(λ) = φ'(1,λ) + θ(1,λ) by direct integration of
// -y'' + q y = λ y, with λ-derivatives from the variational equations.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "hillspec/dop853.hpp"
#include "hillspec/model.hpp"

namespace hillspec {

struct DiscriminantSample {
  cplx lambda{};
  cplx theta1{}, theta1p{}, phi1{}, phi1p{};
  cplx F{};
  cplx dF{};
  cplx d2F{};  // only filled by the second-order variant
  double est_error = 0.0;

  cplx wronskian() const { return theta1 * phi1p - theta1p * phi1; }
};

namespace detail {

// State layout, in blocks of four: (θ, θ', φ, φ'), then their λ-derivatives,
// then (optionally) second λ-derivatives.
template <std::size_t Levels>
struct HillRhs {
  cplx a, b, lambda;
  void operator()(double x, const CState<4 * Levels>& y, CState<4 * Levels>& dy) const {
    const cplx e = std::polar(1.0, two_pi * x);
    const cplx qml = a * std::conj(e) + b * e - lambda;
    for (std::size_t blk = 0; blk < Levels; ++blk) {
      const std::size_t o = 4 * blk;
      for (std::size_t f = 0; f < 2; ++f) {
        const std::size_t i = o + 2 * f;
        dy[i] = y[i + 1];
        cplx acc = qml * y[i];
        if (blk >= 1) acc -= static_cast<double>(blk) * y[i - 4];
        dy[i + 1] = acc;
      }
    }
  }
};

template <std::size_t Levels>
CState<4 * Levels> initial_state() {
  CState<4 * Levels> y{};
  y[0] = 1.0;  // θ(0) = 1
  y[3] = 1.0;  // φ'(0) = 1
  return y;
}

template <std::size_t Levels>
DiscriminantSample assemble(cplx lambda, const CState<4 * Levels>& y, double err) {
  DiscriminantSample s;
  s.lambda = lambda;
  s.theta1 = y[0];
  s.theta1p = y[1];
  s.phi1 = y[2];
  s.phi1p = y[3];
  s.F = s.phi1p + s.theta1;
  s.dF = y[7] + y[4];
  if constexpr (Levels >= 3) s.d2F = y[11] + y[8];
  s.est_error = err;
  return s;
}

inline double initial_step(cplx lambda) { return 0.125 / (1.0 + std::sqrt(std::abs(lambda))); }

template <std::size_t Levels>
DiscriminantSample integrate_levels(const PotentialCoeffs& pot, cplx lambda, const SolverConfig& cfg) {
  if (!is_finite(lambda)) throw Error(Error::Kind::invalid_argument, "lambda must be finite");
  Dop853<4 * Levels, HillRhs<Levels>> rk(HillRhs<Levels>{pot.a(), pot.b(), lambda});
  const double tol = cfg.ode_tolerance;
  const auto res = rk.integrate(0.0, 1.0, initial_state<Levels>(), tol, tol, initial_step(lambda));
  if (!res.ok)
    throw Error(Error::Kind::integration_failure,
                "integration failed at lambda=" + std::to_string(lambda.real()) + "+" +
                    std::to_string(lambda.imag()) + "i (step underflow or step cap)");
  double scale = 0.0;
  for (const auto& v : res.y) scale = std::max(scale, std::abs(v));
  return assemble<Levels>(lambda, res.y, res.err_sum * tol * std::max(1.0, scale));
}

}  // namespace detail

/// θ, φ at x = 1 with F and dF/dλ, by adaptive DOP853 at cfg.ode_tolerance.
inline DiscriminantSample integrate_fundamental(const PotentialCoeffs& pot, cplx lambda, const SolverConfig& cfg) {
  return detail::integrate_levels<2>(pot, lambda, cfg);
}

/// As integrate_fundamental, also returning d²F/dλ².
inline DiscriminantSample integrate_fundamental_d2(const PotentialCoeffs& pot, cplx lambda,
                                                   const SolverConfig& cfg) {
  return detail::integrate_levels<3>(pot, lambda, cfg);
}

/// Fixed-step verification run: `steps` and 2·`steps` equal steps combined by
/// Richardson extrapolation for an eighth-order method.
inline DiscriminantSample integrate_fixed_richardson(const PotentialCoeffs& pot, cplx lambda, int steps) {
  if (steps < 1) throw Error(Error::Kind::invalid_argument, "steps must be >= 1");
  detail::Dop853<8, detail::HillRhs<2>> rk(detail::HillRhs<2>{pot.a(), pot.b(), lambda});
  const auto y1 = rk.integrate_fixed(0.0, 1.0, detail::initial_state<2>(), steps);
  const auto y2 = rk.integrate_fixed(0.0, 1.0, detail::initial_state<2>(), 2 * steps);
  detail::CState<8> y{};
  double diff = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    y[i] = y2[i] + (y2[i] - y1[i]) / 255.0;
    diff = std::max(diff, std::abs(y2[i] - y1[i]));
  }
  return detail::assemble<2>(lambda, y, diff / 255.0);
}

enum class NewtonStatus { converged, near_critical, max_iterations, diverged, integration_failure };

inline const char* to_string(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::converged: return "converged";
    case NewtonStatus::near_critical: return "near_critical";
    case NewtonStatus::max_iterations: return "max_iterations";
    case NewtonStatus::diverged: return "diverged";
    case NewtonStatus::integration_failure: return "integration_failure";
  }
  return "unknown";
}

struct NewtonResult {
  cplx lambda{};  // last iterate
  NewtonStatus status = NewtonStatus::max_iterations;
  int iterations = 0;
  double residual = 0.0;  // |F(λ) - 2cos t|
  cplx dF{};
  std::string message;

  bool ok() const { return status == NewtonStatus::converged; }
};

/// Newton iteration for F(λ) = 2cos t starting at `seed`.
inline NewtonResult solve_characteristic(const PotentialCoeffs& pot, QuasiMomentum t, cplx seed,
                                         const SolverConfig& cfg) {
  cfg.validate();
  NewtonResult r;
  r.lambda = seed;
  const cplx target = 2.0 * std::cos(t.value());
  const double tol = cfg.newton_tolerance;
  for (int it = 1; it <= cfg.max_newton_iters; ++it) {
    r.iterations = it;
    DiscriminantSample s;
    try {
      s = integrate_fundamental(pot, r.lambda, cfg);
    } catch (const Error& e) {
      r.status = NewtonStatus::integration_failure;
      r.message = e.what();
      return r;
    }
    const cplx g = s.F - target;
    r.residual = std::abs(g);
    r.dF = s.dF;
    if (std::abs(s.dF) < cfg.critical_df_tol) {
      r.status = NewtonStatus::near_critical;
      r.message = "|dF/dlambda| below critical threshold; possible multiple eigenvalue";
      return r;
    }
    const cplx step = g / s.dF;
    if (r.residual < tol && std::abs(step) < tol * (1.0 + std::abs(r.lambda))) {
      r.lambda -= step;
      r.status = NewtonStatus::converged;
      return r;
    }
    r.lambda -= step;
    if (!is_finite(r.lambda) || std::abs(r.lambda - seed) > 1e3 * (1.0 + std::abs(seed))) {
      r.status = NewtonStatus::diverged;
      r.message = "Newton iterate left the neighbourhood of the seed";
      return r;
    }
  }
  r.status = NewtonStatus::max_iterations;
  r.message = "Newton iteration cap reached";
  return r;
}

/// Throwing form of solve_characteristic.
inline cplx characteristic_root(const PotentialCoeffs& pot, QuasiMomentum t, cplx seed, const SolverConfig& cfg) {
  const NewtonResult r = solve_characteristic(pot, t, seed, cfg);
  if (!r.ok())
    throw Error(Error::Kind::convergence_failure, std::string("characteristic Newton failed (") +
                                                      to_string(r.status) + "): " + r.message);
  return r.lambda;
}

enum class Multiplicity { simple, multiple, indeterminate };

inline const char* to_string(Multiplicity m) {
  switch (m) {
    case Multiplicity::simple: return "simple";
    case Multiplicity::multiple: return "multiple";
    case Multiplicity::indeterminate: return "indeterminate";
  }
  return "unknown";
}

inline Multiplicity multiplicity_check(const PotentialCoeffs& pot, QuasiMomentum t, cplx lambda,
                                       const SolverConfig& cfg) {
  DiscriminantSample s;
  try {
    s = integrate_fundamental(pot, lambda, cfg);
  } catch (const Error&) {
    return Multiplicity::indeterminate;
  }
  const double dF = std::abs(s.dF);
  if (dF > cfg.critical_df_tol) return Multiplicity::simple;
  const double resid = std::abs(s.F - 2.0 * std::cos(t.value()));
  const double resid_tol = std::max(cfg.newton_tolerance, 1e-8);
  if (resid < resid_tol) return Multiplicity::multiple;
  return Multiplicity::indeterminate;
}

struct Rect {
  double re_min, re_max, im_min, im_max;
};

struct CriticalPoint {
  cplx lambda;
  cplx F;
  cplx d2F;
};

struct CriticalSearch {
  std::vector<CriticalPoint> points;
  bool possibly_incomplete = false;
  std::string warning;
};

/// Zeros of dF/dλ inside `region`, by Newton on dF seeded from a
/// grid_density × grid_density grid. Best effort; a coarse grid relative to
/// the oscillation of F (spacing in √λ above π/2) is reported.
inline CriticalSearch find_critical_points(const PotentialCoeffs& pot, Rect region, int grid_density,
                                           const SolverConfig& cfg) {
  cfg.validate();
  if (!(region.re_max >= region.re_min) || !(region.im_max >= region.im_min) || grid_density < 1)
    throw Error(Error::Kind::invalid_argument, "invalid search region or grid density");
  CriticalSearch out;
  const int nre = grid_density, nim = region.im_max > region.im_min ? grid_density : 1;
  const double dre = nre > 1 ? (region.re_max - region.re_min) / (nre - 1) : 0.0;
  const double dim = nim > 1 ? (region.im_max - region.im_min) / (nim - 1) : 0.0;

  double max_sqrt_spacing = 0.0;
  for (int i = 0; i + 1 < nre; ++i) {
    const cplx z0(region.re_min + i * dre, region.im_min), z1(region.re_min + (i + 1) * dre, region.im_min);
    max_sqrt_spacing = std::max(max_sqrt_spacing, std::abs(std::sqrt(z1) - std::sqrt(z0)));
  }
  if (nim > 1) {
    const cplx z0(region.re_min, region.im_min), z1(region.re_min, region.im_min + dim);
    max_sqrt_spacing = std::max(max_sqrt_spacing, std::abs(std::sqrt(z1) - std::sqrt(z0)));
  }
  if (max_sqrt_spacing > pi / 2) {
    out.possibly_incomplete = true;
    out.warning = "grid spacing in sqrt(lambda) exceeds pi/2; critical points may be missed";
  }

  const double diam = std::hypot(region.re_max - region.re_min, region.im_max - region.im_min);
  const double dedupe = 1e-7 * (1.0 + std::max(std::abs(region.re_max), std::abs(region.re_min)));
  auto inside = [&](cplx z) {
    const double slack = 1e-9 * (1.0 + diam);
    return z.real() >= region.re_min - slack && z.real() <= region.re_max + slack &&
           z.imag() >= region.im_min - slack && z.imag() <= region.im_max + slack;
  };
  for (int i = 0; i < nre; ++i) {
    for (int j = 0; j < nim; ++j) {
      cplx z(region.re_min + i * dre, region.im_min + j * dim);
      bool conv = false;
      DiscriminantSample s;
      for (int it = 0; it < cfg.max_newton_iters; ++it) {
        try {
          s = integrate_fundamental_d2(pot, z, cfg);
        } catch (const Error&) {
          break;
        }
        if (s.d2F == cplx{}) break;
        const cplx step = s.dF / s.d2F;
        z -= step;
        if (!is_finite(z) || std::abs(z) > 1e6 * (1.0 + diam)) break;
        if (std::abs(step) < cfg.newton_tolerance * (1.0 + std::abs(z))) {
          conv = true;
          break;
        }
      }
      if (!conv || !inside(z)) continue;
      const bool dup = std::any_of(out.points.begin(), out.points.end(),
                                   [&](const CriticalPoint& p) { return std::abs(p.lambda - z) < dedupe; });
      if (dup) continue;
      s = integrate_fundamental_d2(pot, z, cfg);
      out.points.push_back({z, s.F, s.d2F});
    }
  }
  std::sort(out.points.begin(), out.points.end(), [](const CriticalPoint& x, const CriticalPoint& y) {
    return std::make_pair(x.lambda.real(), x.lambda.imag()) < std::make_pair(y.lambda.real(), y.lambda.imag());
  });
  return out;
}

}  // namespace hillspec
