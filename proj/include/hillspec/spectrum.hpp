#pragma once

// Spectral arcs Γ_n = {λ_n(t) : t ∈ [0, π]} by predictor-corrector
// continuation, and the separation / gap report built from them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hillspec/asymptotics.hpp"
#include "hillspec/floquet.hpp"
#include "hillspec/model.hpp"
#include "hillspec/shooting.hpp"

namespace hillspec {

struct ArcSample {
  double t = 0.0;
  cplx lambda{};
  double abs_dF = 0.0;
  double f_residual = 0.0;  // |F(λ) - 2cos t|
};

struct SpectralArc {
  BandIndex n;
  std::vector<ArcSample> samples;
  cplx endpoint_0{};
  cplx endpoint_pi{};
  double min_dF = std::numeric_limits<double>::infinity();
  double max_step = 0.0;
  bool low_index = false;  // |n| ≤ n0: outside the asymptotic regime
  int resyncs = 0;
  int replaced = 0;  // samples taken from the pair solver instead of Newton
  int refinements = 0;
};

struct TraceOptions {
  int n0 = 3;
  int resync_every = 16;
  int max_bisect_depth = 8;
  double jump_factor = 4.0;
};

class TracingFailure : public Error {
 public:
  TracingFailure(const std::string& what, SpectralArc partial)
      : Error(Error::Kind::tracing_failure, what), partial_(std::move(partial)) {}
  const SpectralArc& partial() const { return partial_; }

 private:
  SpectralArc partial_;
};

/// Uniform grid of `count` points on [0, π], endpoints included.
inline std::vector<double> uniform_t_grid(int count) {
  if (count < 2) throw Error(Error::Kind::invalid_argument, "t grid needs at least 2 points");
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = pi * i / (count - 1);
  g.back() = pi;
  return g;
}

namespace detail {

struct Tracer {
  int n;
  const PotentialCoeffs& pot;
  const SolverConfig& cfg;
  const TraceOptions& opt;
  SpectralArc& arc;

  double max_speed() const { return 2.0 * (two_pi * std::abs(n) + pi); }

  // Corrected eigenvalue at t for predictor `pred`; endpoints and resync
  // points are checked against the pair solver.
  cplx correct(double t, cplx pred, bool resync) {
    const bool endpoint = t == 0.0 || t == pi;
    if (endpoint || resync) {
      const PairSolution s = solve_pair(pot, QuasiMomentum(t), n, cfg);
      const cplx cand[2] = {s.lambda_label(), s.partner_valid ? s.lambda_partner() : s.lambda_label()};
      if (endpoint) {
        ++arc.resyncs;
        return std::abs(cand[0] - pred) <= std::abs(cand[1] - pred) ? cand[0] : cand[1];
      }
      const NewtonResult r = solve_characteristic(pot, QuasiMomentum(t), pred, cfg);
      ++arc.resyncs;
      const double tol = 1e-7 * (1.0 + std::abs(pred));
      if (r.ok() && (std::abs(r.lambda - cand[0]) < tol || std::abs(r.lambda - cand[1]) < tol)) return r.lambda;
      ++arc.replaced;
      return std::abs(cand[0] - pred) <= std::abs(cand[1] - pred) ? cand[0] : cand[1];
    }
    const NewtonResult r = solve_characteristic(pot, QuasiMomentum(t), pred, cfg);
    if (r.ok()) return r.lambda;
    const PairSolution s = solve_pair(pot, QuasiMomentum(t), n, cfg);
    ++arc.replaced;
    const cplx c0 = s.lambda_label(), c1 = s.partner_valid ? s.lambda_partner() : c0;
    return std::abs(c0 - pred) <= std::abs(c1 - pred) ? c0 : c1;
  }

  ArcSample sample(double t, cplx lambda) const {
    ArcSample s;
    s.t = t;
    s.lambda = lambda;
    const DiscriminantSample d = integrate_fundamental(pot, lambda, cfg);
    s.abs_dF = std::abs(d.dF);
    s.f_residual = std::abs(d.F - 2.0 * std::cos(t));
    return s;
  }

  // Advances from (t0, l0) with slope estimate `slope` to t1, bisecting when
  // the jump exceeds the continuation threshold. Appends samples after t0.
  void advance(double t0, cplx l0, cplx slope, double t1, int depth, int& counter, std::vector<ArcSample>& out) {
    const cplx pred = l0 + slope * (t1 - t0);
    const bool resync = (++counter % opt.resync_every) == 0;
    const cplx l1 = correct(t1, pred, resync);
    const double limit = opt.jump_factor * max_speed() * std::abs(t1 - t0);
    if (std::abs(l1 - l0) > limit && std::abs(l1 - l0) > 1e-12 * (1.0 + std::abs(l0))) {
      if (depth >= opt.max_bisect_depth) {
        throw TracingFailure("continuation jump at t=" + std::to_string(t1) + " for label " + std::to_string(n),
                             arc);
      }
      ++arc.refinements;
      const double tm = 0.5 * (t0 + t1);
      advance(t0, l0, slope, tm, depth + 1, counter, out);
      const ArcSample& mid = out.back();
      advance(mid.t, mid.lambda, (mid.lambda - l0) / (mid.t - t0), t1, depth + 1, counter, out);
      return;
    }
    out.push_back(sample(t1, l1));
  }
};

}  // namespace detail

/// Continuation of λ_n(t) over `t_grid` (ascending, containing 0 and π).
/// Tracing starts at the grid point nearest π/2, where the pair is well
/// separated, and proceeds in both directions.
inline SpectralArc trace_arc(int n, const PotentialCoeffs& pot, const std::vector<double>& t_grid,
                             const SolverConfig& cfg, const TraceOptions& opt = {}) {
  cfg.validate_for_label(n);
  if (t_grid.size() < 2 || t_grid.front() != 0.0 || t_grid.back() != pi)
    throw Error(Error::Kind::invalid_argument, "t grid must start at 0 and end at pi");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw Error(Error::Kind::invalid_argument, "t grid must be strictly increasing");

  SpectralArc arc;
  arc.n = BandIndex{n};
  arc.low_index = std::abs(n) <= opt.n0;
  detail::Tracer tr{n, pot, cfg, opt, arc};

  std::size_t i0 = 0;
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    if (std::abs(t_grid[i] - pi / 2) < std::abs(t_grid[i0] - pi / 2)) i0 = i;
  const double ts = t_grid[i0];
  cplx l_start;
  if (ts == 0.0 || ts == pi) {
    l_start = solve_pair(pot, QuasiMomentum(ts), n, cfg).lambda_label();
  } else {
    const cplx seed = solve_pair(pot, QuasiMomentum(ts), n, cfg).lambda_label();
    const NewtonResult r = solve_characteristic(pot, QuasiMomentum(ts), seed, cfg);
    l_start = r.ok() ? r.lambda : seed;
  }
  const ArcSample start = tr.sample(ts, l_start);
  const double w0 = two_pi * n + ts;
  const cplx slope0 = 2.0 * w0;

  std::vector<ArcSample> fwd, bwd;
  int counter = 0;
  {
    double tp = ts;
    cplx lp = l_start, slope = slope0;
    for (std::size_t i = i0 + 1; i < t_grid.size(); ++i) {
      tr.advance(tp, lp, slope, t_grid[i], 0, counter, fwd);
      const ArcSample& last = fwd.back();
      slope = (last.lambda - lp) / (last.t - tp);
      tp = last.t;
      lp = last.lambda;
    }
  }
  counter = 0;
  {
    double tp = ts;
    cplx lp = l_start, slope = slope0;
    for (std::size_t i = i0; i-- > 0;) {
      tr.advance(tp, lp, slope, t_grid[i], 0, counter, bwd);
      const ArcSample& last = bwd.back();
      slope = (last.lambda - lp) / (last.t - tp);
      tp = last.t;
      lp = last.lambda;
    }
  }
  std::reverse(bwd.begin(), bwd.end());
  arc.samples = std::move(bwd);
  arc.samples.push_back(start);
  arc.samples.insert(arc.samples.end(), fwd.begin(), fwd.end());
  std::sort(arc.samples.begin(), arc.samples.end(), [](const ArcSample& x, const ArcSample& y) { return x.t < y.t; });

  for (std::size_t i = 0; i < arc.samples.size(); ++i) {
    arc.min_dF = std::min(arc.min_dF, arc.samples[i].abs_dF);
    if (i > 0) arc.max_step = std::max(arc.max_step, std::abs(arc.samples[i].lambda - arc.samples[i - 1].lambda));
  }
  arc.endpoint_0 = arc.samples.front().lambda;
  arc.endpoint_pi = arc.samples.back().lambda;
  return arc;
}

/// Arcs for labels -n_max..-1, 1..n_max; label 0 is available via trace_arc.
inline std::vector<SpectralArc> assemble_spectrum(const PotentialCoeffs& pot, int n_max, const std::vector<double>& t_grid,
                                                  const SolverConfig& cfg, const TraceOptions& opt = {}) {
  if (n_max < 1) throw Error(Error::Kind::invalid_argument, "n_max must be >= 1");
  cfg.validate_for_label(n_max);
  std::vector<SpectralArc> arcs;
  for (int n = -n_max; n <= n_max; ++n)
    if (n != 0) arcs.push_back(trace_arc(n, pot, t_grid, cfg, opt));
  return arcs;
}

struct GapEntry {
  double measured = 0.0;
  double predicted = 0.0;
  double noise_floor = 0.0;
  bool resolvable = false;  // predicted and measured both above 10³ × noise floor
  std::optional<double> ratio;  // measured / predicted, only when resolvable
};

struct GapRow {
  int n = 0;
  GapEntry periodic;      // |λ_n(0) - λ_{-n}(0)|
  GapEntry antiperiodic;  // |λ_n(π) - λ_{-n-1}(π)|
};

inline constexpr double resolvable_factor = 1e3;

namespace detail {

inline GapEntry gap_entry(const PotentialCoeffs& pot, double t, int n, double predicted, const SolverConfig& cfg) {
  GapEntry g;
  g.predicted = predicted;
  const PairSolution s = solve_pair(pot, QuasiMomentum(t), n, cfg);
  g.noise_floor = s.noise_floor;
  g.measured = s.partner_valid ? s.gap() : std::numeric_limits<double>::quiet_NaN();
  const double bar = resolvable_factor * g.noise_floor;
  g.resolvable = s.partner_valid && predicted > bar && g.measured > bar;
  if (g.resolvable) g.ratio = g.measured / predicted;
  return g;
}

}  // namespace detail

/// Endpoint gaps measured by the pair solver against the closed forms.
inline std::vector<GapRow> gap_table(const PotentialCoeffs& pot, int n_max, const SolverConfig& cfg) {
  cfg.validate_for_label(n_max);
  std::vector<GapRow> rows;
  for (int n = 1; n <= n_max; ++n) {
    const auto [gp, ga] = predict_gaps(n, pot);
    GapRow r;
    r.n = n;
    r.periodic = detail::gap_entry(pot, 0.0, n, gp, cfg);
    r.antiperiodic = detail::gap_entry(pot, pi, n, ga, cfg);
    rows.push_back(r);
  }
  return rows;
}

struct SeparationReport {
  double min_arc_distance = std::numeric_limits<double>::infinity();
  int closest_a = 0, closest_b = 0;
  std::vector<GapRow> gaps;
  struct Simplicity {
    int n;
    double min_dF;
    bool simple;
  };
  std::vector<Simplicity> simplicity;
};

inline SeparationReport separation_report(const std::vector<SpectralArc>& arcs, const PotentialCoeffs& pot,
                                          const SolverConfig& cfg, int n0 = 3) {
  if (arcs.size() < 2) throw Error(Error::Kind::invalid_argument, "separation_report needs at least 2 arcs");
  SeparationReport rep;
  int n_max = 0;
  for (const auto& a : arcs) n_max = std::max(n_max, a.n.n);
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    rep.simplicity.push_back({arcs[i].n.n, arcs[i].min_dF, arcs[i].min_dF > cfg.critical_df_tol});
    if (std::abs(arcs[i].n.n) <= n0) continue;
    for (std::size_t j = i + 1; j < arcs.size(); ++j) {
      if (std::abs(arcs[j].n.n) <= n0) continue;
      for (const auto& x : arcs[i].samples)
        for (const auto& y : arcs[j].samples) {
          const double d = std::abs(x.lambda - y.lambda);
          if (d < rep.min_arc_distance) {
            rep.min_arc_distance = d;
            rep.closest_a = arcs[i].n.n;
            rep.closest_b = arcs[j].n.n;
          }
        }
    }
  }
  if (n_max >= 1) rep.gaps = gap_table(pot, n_max, cfg);
  return rep;
}

}  // namespace hillspec
