#pragma once

// Command-line front end. Each subcommand writes CSV/JSON files (atomically,
// with an embedded run manifest) into the output directory.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hillspec/hillspec.hpp"

namespace hillspec::cli {

using json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;
inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;

/// Parses "re,im" (or a bare real "re").
inline cplx parse_complex(const std::string& s) {
  const auto comma = s.find(',');
  auto num = [&](const std::string& part) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      throw Error(Error::Kind::invalid_argument, "not a complex number \"re,im\": " + s);
    }
    if (used != part.size() || !std::isfinite(v))
      throw Error(Error::Kind::invalid_argument, "not a complex number \"re,im\": " + s);
    return v;
  };
  if (comma == std::string::npos) return {num(s), 0.0};
  return {num(s.substr(0, comma)), num(s.substr(comma + 1))};
}

/// "lo:hi" or a single integer.
inline std::pair<int, int> parse_int_range(const std::string& s) {
  auto num = [&](const std::string& part) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(part, &used);
    } catch (const std::exception&) {
      throw Error(Error::Kind::invalid_argument, "not an integer range \"lo:hi\": " + s);
    }
    if (used != part.size()) throw Error(Error::Kind::invalid_argument, "not an integer range \"lo:hi\": " + s);
    return v;
  };
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    const int v = num(s);
    return {v, v};
  }
  const int lo = num(s.substr(0, colon)), hi = num(s.substr(colon + 1));
  if (hi < lo) throw Error(Error::Kind::invalid_argument, "empty range: " + s);
  return {lo, hi};
}

inline std::vector<double> parse_reals(const std::string& s, std::size_t count) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size() || !std::isfinite(v))
      throw Error(Error::Kind::invalid_argument, "bad real list: " + s);
    out.push_back(v);
  }
  if (out.size() != count)
    throw Error(Error::Kind::invalid_argument, "expected " + std::to_string(count) + " comma-separated reals: " + s);
  return out;
}

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline const char* kind_name(Error::Kind k) {
  switch (k) {
    case Error::Kind::invalid_argument: return "invalid_argument";
    case Error::Kind::integration_failure: return "integration_failure";
    case Error::Kind::convergence_failure: return "convergence_failure";
    case Error::Kind::pole_proximity: return "pole_proximity";
    case Error::Kind::eigen_failure: return "eigen_failure";
    case Error::Kind::matching_failure: return "matching_failure";
    case Error::Kind::tracing_failure: return "tracing_failure";
  }
  return "unknown";
}

/// Writes `content` to dir/name via a temporary file and rename.
inline std::filesystem::path write_atomic(const std::filesystem::path& dir, const std::string& name,
                                          const std::string& content) {
  std::filesystem::create_directories(dir);
  const auto target = dir / name;
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
  return target;
}

/// CSV with a versioned header comment and the manifest on the second line.
class CsvWriter {
 public:
  CsvWriter(const std::string& kind, const json& manifest, const std::vector<std::string>& columns) {
    os_ << "# hillspec-" << kind << "-csv v" << schema_version << "\n";
    os_ << "# manifest: " << manifest.dump() << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
    os_ << "\n";
  }
  CsvWriter& row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << "\n";
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

/// Options shared by all subcommands.
struct Common {
  std::string a, b;
  int M = 32;
  double ode_tol = 1e-12;
  double newton_tol = 1e-10;
  std::string out;

  PotentialCoeffs pot() const { return PotentialCoeffs(parse_complex(a), parse_complex(b)); }
  SolverConfig config() const {
    SolverConfig c;
    c.truncation_half_width = M;
    c.ode_tolerance = ode_tol;
    c.newton_tolerance = newton_tol;
    c.validate();
    return c;
  }
  std::filesystem::path out_dir() const {
    if (!out.empty()) return out;
    if (const char* env = std::getenv("HILLSPEC_OUT_DIR"); env && *env) return env;
    return ".";
  }
};

inline void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--a", c.a, "coefficient a as re,im")->required();
  sub->add_option("--b", c.b, "coefficient b as re,im")->required();
  sub->add_option("--M", c.M, "Fourier truncation half-width")->capture_default_str();
  sub->add_option("--ode-tol", c.ode_tol, "ODE relative tolerance")->capture_default_str();
  sub->add_option("--newton-tol", c.newton_tol, "Newton tolerance")->capture_default_str();
  sub->add_option("--out", c.out, "output directory (default: $HILLSPEC_OUT_DIR or .)");
}

inline json manifest(const std::string& command, const Common& c, const PotentialCoeffs& pot, json extra) {
  json params;
  params["a"] = cjson(pot.a());
  params["b"] = cjson(pot.b());
  params["M"] = c.M;
  params["ode_tolerance"] = c.ode_tol;
  params["newton_tolerance"] = c.newton_tol;
  for (auto& [k, v] : extra.items()) params[k] = v;
  json m;
  m["schema_version"] = schema_version;
  m["command"] = command;
  m["params"] = params;
  m["tool_version"] = tool_version;
  m["timestamp"] = utc_timestamp();
  return m;
}

inline json gap_entry_json(const GapEntry& g) {
  json j;
  j["measured"] = g.measured;
  j["predicted"] = g.predicted;
  j["noise_floor"] = g.noise_floor;
  j["status"] = g.resolvable ? "resolved" : "unresolvable";
  j["ratio"] = g.ratio ? json(*g.ratio) : json(nullptr);
  return j;
}

inline json gap_table_json(const std::vector<GapRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) arr.push_back({{"n", r.n}, {"periodic", gap_entry_json(r.periodic)},
                                            {"antiperiodic", gap_entry_json(r.antiperiodic)}});
  return arr;
}

inline std::string gap_csv(const std::vector<GapRow>& rows, const json& m) {
  CsvWriter w("gaps", m,
              {"n", "periodic_measured", "periodic_predicted", "periodic_noise_floor", "periodic_status",
               "periodic_ratio", "antiperiodic_measured", "antiperiodic_predicted", "antiperiodic_noise_floor",
               "antiperiodic_status", "antiperiodic_ratio"});
  auto cells = [](const GapEntry& g) {
    return std::vector<std::string>{fmt(g.measured), fmt(g.predicted), fmt(g.noise_floor),
                                    g.resolvable ? "resolved" : "unresolvable", g.ratio ? fmt(*g.ratio) : ""};
  };
  for (const auto& r : rows) {
    std::vector<std::string> row{std::to_string(r.n)};
    for (auto& c : cells(r.periodic)) row.push_back(c);
    for (auto& c : cells(r.antiperiodic)) row.push_back(c);
    w.row(row);
  }
  return w.str();
}

inline std::string arc_file_name(int n) { return "arc_n" + std::to_string(n) + ".csv"; }

struct Context {
  std::filesystem::path out_dir;
  json manifest;
  std::vector<std::string> written;

  void write(const std::string& name, const std::string& content) {
    written.push_back(write_atomic(out_dir, name, content).string());
  }
  void write_json(const std::string& name, json body) {
    json doc;
    doc["manifest"] = manifest;
    for (auto& [k, v] : body.items()) doc[k] = v;
    write(name, doc.dump(2) + "\n");
  }
};

inline void cmd_spectrum(Context& ctx, const PotentialCoeffs& pot, const SolverConfig& cfg, int nmax, int grid) {
  const auto t_grid = uniform_t_grid(grid);
  const auto arcs = assemble_spectrum(pot, nmax, t_grid, cfg);
  json arcs_json = json::array();
  for (const auto& arc : arcs) {
    CsvWriter w("arc", ctx.manifest, {"t", "re_lambda", "im_lambda", "abs_dF", "f_residual"});
    for (const auto& s : arc.samples)
      w.row({fmt(s.t), fmt(s.lambda.real()), fmt(s.lambda.imag()), fmt(s.abs_dF), fmt(s.f_residual)});
    const std::string name = arc_file_name(arc.n.n);
    ctx.write(name, w.str());
    arcs_json.push_back({{"n", arc.n.n},
                         {"file", name},
                         {"samples", arc.samples.size()},
                         {"endpoint_0", cjson(arc.endpoint_0)},
                         {"endpoint_pi", cjson(arc.endpoint_pi)},
                         {"min_abs_dF", arc.min_dF},
                         {"max_step", arc.max_step},
                         {"low_index", arc.low_index},
                         {"resyncs", arc.resyncs},
                         {"pair_replacements", arc.replaced},
                         {"refinements", arc.refinements}});
  }
  const SeparationReport sep = separation_report(arcs, pot, cfg);
  json simp = json::array();
  for (const auto& s : sep.simplicity) simp.push_back({{"n", s.n}, {"min_abs_dF", s.min_dF}, {"simple", s.simple}});
  json sep_json;
  sep_json["min_arc_distance"] = sep.min_arc_distance;
  sep_json["closest_pair"] = json::array({sep.closest_a, sep.closest_b});
  sep_json["simplicity"] = simp;
  ctx.write_json("spectrum_summary.json",
                 {{"arcs", arcs_json}, {"gap_table", gap_table_json(sep.gaps)}, {"separation", sep_json}});
}

inline void cmd_gaps(Context& ctx, const PotentialCoeffs& pot, const SolverConfig& cfg, int nmax) {
  const auto rows = gap_table(pot, nmax, cfg);
  ctx.write("gaps.csv", gap_csv(rows, ctx.manifest));
  ctx.write_json("gaps.json", {{"rows", gap_table_json(rows)}, {"resolvable_factor", resolvable_factor}});
}

inline json report_json(const SpectralityReport& r) {
  json j;
  j["abs_a"] = r.abs_a;
  j["abs_b"] = r.abs_b;
  j["alpha"] = r.alpha;
  if (r.rational_detection)
    j["rational_detection"] = {{"m", r.rational_detection->m},
                               {"q", r.rational_detection->q},
                               {"residual", r.rational_detection->residual}};
  else
    j["rational_detection"] = nullptr;
  j["parity_verdict"] = to_string(r.parity_verdict);
  json w = json::array();
  for (const auto& o : r.odd_approx_witnesses) w.push_back({{"q", o.q}, {"p", o.p}, {"residual", o.residual}});
  j["odd_approx_witnesses"] = w;
  j["verdict"] = to_string(r.verdict);
  j["note"] = r.note;
  return j;
}

inline json cmd_classify(Context& ctx, const PotentialCoeffs& pot, std::int64_t q_cap, double rtol) {
  const json rep = report_json(classify_spectrality(pot, q_cap, rtol));
  ctx.write_json("classify.json", {{"report", rep}});
  return rep;
}

inline void cmd_pairing(Context& ctx, const PotentialCoeffs& pot, const SolverConfig& cfg, std::pair<int, int> nr,
                        const std::vector<double>& t_grid, double threshold) {
  CsvWriter w("pairing", ctx.manifest,
              {"n", "t", "re_lambda", "im_lambda", "re_d", "im_d", "abs_d", "inv_abs_d"});
  std::vector<int> ns;
  for (int n = nr.first; n <= nr.second; ++n) {
    cfg.validate_for_label(n);
    ns.push_back(n);
    for (double t : t_grid) {
      const PairingRecord r = pairing_dn(n, pot, QuasiMomentum(t), cfg);
      w.row({std::to_string(n), fmt(r.t), fmt(r.lambda.real()), fmt(r.lambda.imag()), fmt(r.d.real()),
             fmt(r.d.imag()), fmt(std::abs(r.d)), fmt(r.inv_abs_d)});
    }
  }
  ctx.write("pairing.csv", w.str());
  const SingularityScan scan = scan_singularity_at_infinity(pot, ns, t_grid, cfg, threshold);
  json rows = json::array();
  for (const auto& r : scan.rows) rows.push_back({{"n", r.n}, {"min_abs_d", r.min_abs_d}, {"t_at_min", r.t_at_min}});
  ctx.write_json("pairing.json", {{"scan", rows}, {"threshold", scan.threshold}, {"verdict", to_string(scan.verdict)}});
}

struct DiscriminantArgs {
  std::string line, rect;
  int samples = 101;
  int density = 16;
  int oracle_steps = 0;
  bool critical = false;
};

inline void cmd_discriminant(Context& ctx, const PotentialCoeffs& pot, const SolverConfig& cfg,
                             const DiscriminantArgs& d) {
  std::vector<cplx> pts;
  Rect box{};
  if (!d.line.empty()) {
    const auto colon = d.line.find(':');
    if (colon == std::string::npos) throw Error(Error::Kind::invalid_argument, "--line expects re0,im0:re1,im1");
    const cplx z0 = parse_complex(d.line.substr(0, colon)), z1 = parse_complex(d.line.substr(colon + 1));
    if (d.samples < 2) throw Error(Error::Kind::invalid_argument, "--samples must be >= 2");
    for (int i = 0; i < d.samples; ++i) pts.push_back(z0 + (z1 - z0) * (static_cast<double>(i) / (d.samples - 1)));
    box = {std::min(z0.real(), z1.real()), std::max(z0.real(), z1.real()), std::min(z0.imag(), z1.imag()),
           std::max(z0.imag(), z1.imag())};
  } else {
    const auto v = parse_reals(d.rect, 4);
    box = {v[0], v[1], v[2], v[3]};
    if (!(box.re_max >= box.re_min) || !(box.im_max >= box.im_min) || d.density < 1)
      throw Error(Error::Kind::invalid_argument, "invalid --rect or --density");
    const int nre = d.density, nim = box.im_max > box.im_min ? d.density : 1;
    for (int j = 0; j < nim; ++j)
      for (int i = 0; i < nre; ++i) {
        const double re = nre > 1 ? box.re_min + (box.re_max - box.re_min) * i / (nre - 1) : box.re_min;
        const double im = nim > 1 ? box.im_min + (box.im_max - box.im_min) * j / (nim - 1) : box.im_min;
        pts.push_back({re, im});
      }
  }
  std::vector<std::string> cols{"re_lambda", "im_lambda", "re_F", "im_F", "re_dF", "im_dF", "est_error"};
  if (d.oracle_steps > 0) {
    cols.push_back("re_F_oracle");
    cols.push_back("im_F_oracle");
  }
  CsvWriter w("discriminant", ctx.manifest, cols);
  for (cplx z : pts) {
    const DiscriminantSample s = integrate_fundamental(pot, z, cfg);
    std::vector<std::string> row{fmt(z.real()), fmt(z.imag()), fmt(s.F.real()), fmt(s.F.imag()),
                                 fmt(s.dF.real()), fmt(s.dF.imag()), fmt(s.est_error)};
    if (d.oracle_steps > 0) {
      const DiscriminantSample o = integrate_fixed_richardson(pot, z, d.oracle_steps);
      row.push_back(fmt(o.F.real()));
      row.push_back(fmt(o.F.imag()));
    }
    w.row(row);
  }
  ctx.write("discriminant.csv", w.str());
  if (d.critical) {
    const CriticalSearch cs = find_critical_points(pot, box, d.density, cfg);
    json pts_json = json::array();
    for (const auto& p : cs.points)
      pts_json.push_back({{"lambda", cjson(p.lambda)}, {"F", cjson(p.F)}, {"d2F", cjson(p.d2F)}});
    ctx.write_json("critical.json", {{"region", {box.re_min, box.re_max, box.im_min, box.im_max}},
                                     {"points", pts_json},
                                     {"possibly_incomplete", cs.possibly_incomplete},
                                     {"warning", cs.warning}});
  }
}

/// Entry point; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Spectral computations for the Mathieu-Hill operator with q(x) = a e^{-2pi i x} + b e^{2pi i x}"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version);

  Common c;
  int nmax = 6, grid = 129;
  std::int64_t q_cap = 1000000;
  double rtol = 1e-9, threshold = 0.1;
  std::string n_range, t_list;
  int pairing_grid = 0;
  DiscriminantArgs disc;

  auto* spectrum = app.add_subcommand("spectrum", "trace spectral arcs and write one CSV per arc plus a summary");
  add_common(spectrum, c);
  spectrum->add_option("--nmax", nmax, "labels -nmax..-1, 1..nmax")->capture_default_str();
  spectrum->add_option("--grid", grid, "points of the uniform t grid on [0, pi]")->capture_default_str();

  auto* gaps = app.add_subcommand("gaps", "measured vs predicted periodic/antiperiodic gaps");
  add_common(gaps, c);
  gaps->add_option("--nmax", nmax, "rows n = 1..nmax")->capture_default_str();

  auto* classify = app.add_subcommand("classify", "spectrality verdict from |a|, |b| and alpha = arg(ab)/pi");
  add_common(classify, c);
  classify->add_option("--qcap", q_cap, "largest denominator tried")->capture_default_str();
  classify->add_option("--rtol", rtol, "rational detection tolerance")->capture_default_str();

  auto* pairing = app.add_subcommand("pairing", "d_n(t) table and singularity-at-infinity scan");
  add_common(pairing, c);
  pairing->add_option("--n", n_range, "label or range lo:hi")->required();
  auto* t_opt = pairing->add_option("--t", t_list, "comma-separated t values");
  auto* g_opt = pairing->add_option("--grid", pairing_grid, "uniform t grid on [0, pi]");
  t_opt->excludes(g_opt);
  pairing->add_option("--threshold", threshold, "trend threshold for |d|")->capture_default_str();

  auto* discriminant = app.add_subcommand("discriminant", "F(lambda) samples on a segment or rectangle");
  add_common(discriminant, c);
  auto* l_opt = discriminant->add_option("--line", disc.line, "segment re0,im0:re1,im1");
  auto* r_opt = discriminant->add_option("--rect", disc.rect, "rectangle re_min,re_max,im_min,im_max");
  l_opt->excludes(r_opt);
  discriminant->add_option("--samples", disc.samples, "points on the segment")->capture_default_str();
  discriminant->add_option("--density", disc.density, "grid points per side of the rectangle")
      ->capture_default_str();
  discriminant->add_option("--oracle-steps", disc.oracle_steps, "fixed-step Richardson oracle column (0: off)")
      ->capture_default_str();
  discriminant->add_flag("--critical", disc.critical, "also list zeros of dF/dlambda in the region");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return exit_ok;
    }
    app.exit(e, out, err);
    return exit_usage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  Context ctx;
  PotentialCoeffs pot;
  SolverConfig cfg;
  try {
    pot = c.pot();
    cfg = c.config();
    ctx.out_dir = c.out_dir();
    json extra;
    if (name == "spectrum") {
      extra = {{"nmax", nmax}, {"grid", grid}};
    } else if (name == "gaps") {
      extra = {{"nmax", nmax}};
    } else if (name == "classify") {
      extra = {{"q_cap", q_cap}, {"rational_tolerance", rtol}};
    } else if (name == "pairing") {
      extra = {{"n", n_range}, {"threshold", threshold}};
      if (!t_list.empty()) extra["t"] = t_list;
      else extra["grid"] = pairing_grid;
    } else {
      extra = {{"line", disc.line}, {"rect", disc.rect}, {"samples", disc.samples}, {"density", disc.density},
               {"oracle_steps", disc.oracle_steps}, {"critical", disc.critical}};
    }
    ctx.manifest = manifest(name, c, pot, extra);
  } catch (const Error& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_usage;
  }

  try {
    if (name == "spectrum") {
      if (nmax < 1 || grid < 2) throw Error(Error::Kind::invalid_argument, "--nmax must be >= 1 and --grid >= 2");
      cmd_spectrum(ctx, pot, cfg, nmax, grid);
    } else if (name == "gaps") {
      if (nmax < 1) throw Error(Error::Kind::invalid_argument, "--nmax must be >= 1");
      cmd_gaps(ctx, pot, cfg, nmax);
    } else if (name == "classify") {
      out << cmd_classify(ctx, pot, q_cap, rtol).dump(2) << "\n";
    } else if (name == "pairing") {
      std::vector<double> ts;
      if (!t_list.empty()) {
        std::stringstream ss(t_list);
        std::string part;
        while (std::getline(ss, part, ',')) ts.push_back(parse_reals(part, 1)[0]);
      } else if (pairing_grid >= 2) {
        ts = uniform_t_grid(pairing_grid);
      } else {
        throw Error(Error::Kind::invalid_argument, "pairing needs --t or --grid >= 2");
      }
      cmd_pairing(ctx, pot, cfg, parse_int_range(n_range), ts, threshold);
    } else {
      if (disc.line.empty() == disc.rect.empty())
        throw Error(Error::Kind::invalid_argument, "discriminant needs exactly one of --line or --rect");
      cmd_discriminant(ctx, pot, cfg, disc);
    }
  } catch (const Error& e) {
    if (e.kind() == Error::Kind::invalid_argument) {
      err << "usage error: " << e.what() << "\n";
      return exit_usage;
    }
    json diag;
    diag["manifest"] = ctx.manifest;
    diag["error"] = {{"kind", kind_name(e.kind())}, {"message", e.what()}};
    if (const auto* tf = dynamic_cast<const TracingFailure*>(&e))
      diag["error"]["partial_arc"] = {{"n", tf->partial().n.n}, {"samples", tf->partial().samples.size()}};
    err << diag.dump(2) << "\n";
    try {
      write_atomic(ctx.out_dir, "error.json", diag.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    return exit_failure;
  } catch (const std::exception& e) {
    json diag;
    diag["manifest"] = ctx.manifest;
    diag["error"] = {{"kind", "internal"}, {"message", e.what()}};
    err << diag.dump(2) << "\n";
    return exit_failure;
  }
  for (const auto& f : ctx.written) out << f << "\n";
  return exit_ok;
}

}  // namespace hillspec::cli
