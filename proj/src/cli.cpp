#include "ehrelay/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ehrelay/closed_form.hpp"
#include "ehrelay/errors.hpp"
#include "ehrelay/oracle.hpp"

namespace ehrelay {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kCheckSlack = 1e-6;

std::string g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Doubles are rounded to 12 significant digits before serialisation; the
// JSON writer then emits the shortest round-trip form of the rounded value.
double r12(double v) { return std::isfinite(v) ? std::stod(g12(v)) : v; }

ordered_json vec12(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(r12(x));
  return a;
}

struct Options {
  std::string input;
  std::string schedule;
  std::string solver_case = "auto";
  std::string out_dir = ".";
  SolverConfig cfg;
  GridConfig grid;
};

class Run {
 public:
  Run(std::string command, std::ostream& out) : command_(std::move(command)), out_(out) {}

  void add_output(const fs::path& p) { outputs_.push_back(p.string()); }

  ordered_json manifest(const Options& o, const ordered_json& config) const {
    ordered_json m;
    m["input"] = o.input;
    m["command"] = command_;
    m["config"] = config;
    m["outputs"] = outputs_;
    m["version"] = kVersion;
    m["duration_s"] =
        r12(std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
    return m;
  }

  std::ostream& out() { return out_; }

 private:
  std::string command_;
  std::ostream& out_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_file(const fs::path& path, const std::string& text) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

Problem load_valid(const std::string& path) {
  Problem pr = load_problem(path);
  try {
    validate(pr.channel);
  } catch (const DomainError& e) {
    throw ValidationError({e.what()});
  }
  validate(pr.profile);
  return pr;
}

bool single_event_at_zero(const HarvestProfile& p, Node node) {
  const auto e = energies(p, node);
  if (!(e[0] > 0.0)) return false;
  for (std::size_t k = 1; k < e.size(); ++k) {
    if (e[k] != 0.0) return false;
  }
  return true;
}

std::string detect_case(const HarvestProfile& p) {
  if (proportionality(p)) return "proportional";
  if (single_event_at_zero(p, Node::Source)) return "relay-only";
  if (single_event_at_zero(p, Node::Relay)) return "source-only";
  return "general";
}

Solution solve_case(const Problem& pr, const Options& o, std::string& chosen) {
  chosen = o.solver_case == "auto" ? detect_case(pr.profile) : o.solver_case;
  if (chosen == "proportional") {
    const auto g = proportionality(pr.profile);
    if (!g) throw PreconditionError("profile is not proportional");
    return solve_proportional(pr.channel, pr.profile, *g);
  }
  if (chosen == "relay-only") return solve_relay_only(pr.channel, pr.profile);
  if (chosen == "source-only") return solve_source_only(pr.channel, pr.profile);
  return solve_minmax(pr.channel, pr.profile, o.cfg);
}

ordered_json solver_config_json(const Options& o, const std::string& chosen) {
  ordered_json c;
  c["case"] = o.solver_case;
  c["dispatched"] = chosen;
  c["tol_inner"] = o.cfg.tol_inner;
  c["tol_outer"] = o.cfg.tol_outer;
  c["max_iter_outer"] = o.cfg.max_iter_outer;
  c["max_iter_inner"] = o.cfg.max_iter_inner;
  c["seed"] = o.cfg.seed;
  return c;
}

ordered_json schedule_json(const Problem& pr, const Solution& s) {
  const auto ep = epochs(pr.profile);
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < ep.size(); ++i) {
    ordered_json r;
    r["epoch"] = ep[i].index;
    r["t_start"] = r12(ep[i].start);
    r["t_end"] = r12(ep[i].end);
    r["p1"] = r12(s.allocation.p1[i]);
    r["p2"] = r12(s.allocation.p2[i]);
    r["lambda"] = r12(s.lambda[i]);
    r["rate_bits"] = r12(s.rates[i].value);
    r["active_branch"] = std::string(to_string(s.rates[i].active));
    r["bits"] = r12(s.rates[i].value * ep[i].len);
    rows.push_back(std::move(r));
  }
  return rows;
}

int cmd_solve(const Options& o, Run& run) {
  const Problem pr = load_valid(o.input);
  validate(o.cfg);
  std::string chosen;
  const Solution s = solve_case(pr, o, chosen);

  const fs::path path = fs::path(o.out_dir) / "schedule.json";
  run.add_output(path);
  ordered_json doc;
  doc["units"] = {{"time", "s"}, {"energy", "J"}, {"power", "W"}, {"rate", "bits/use"},
                  {"total", "bits"}};
  doc["schedule"] = schedule_json(pr, s);
  doc["total_bits"] = r12(s.total_bits);
  doc["kkt_residual"] = r12(s.kkt_residual);
  doc["kkt"] = {{"stationarity", r12(s.kkt.stationarity)},
                {"slackness", r12(s.kkt.slackness)},
                {"feasibility", r12(s.kkt.feasibility)}};
  doc["minmax_gap"] = r12(s.minmax_gap);
  doc["fstar"] = r12(s.fstar);
  doc["method"] = s.method;
  doc["converged"] = s.converged;
  doc["iterations"] = {{"inner", s.inner_iterations}, {"outer", s.outer_iterations}};
  doc["duals"] = {{"xi", vec12(s.duals.xi)},
                  {"mu", vec12(s.duals.mu)},
                  {"vartheta", vec12(s.duals.vartheta)},
                  {"eta", vec12(s.duals.eta)}};
  doc["warnings"] = s.warnings;
  doc["manifest"] = run.manifest(o, solver_config_json(o, chosen));
  write_file(path, doc.dump(2) + "\n");

  run.out() << "method " << s.method << "\n"
            << "total_bits " << g12(s.total_bits) << "\n"
            << "kkt_residual " << g12(s.kkt_residual) << "\n"
            << "minmax_gap " << g12(s.minmax_gap) << "\n";
  for (const auto& w : s.warnings) run.out() << "warning: " << w << "\n";
  run.out() << "wrote " << path.string() << "\n";
  if (!s.converged) {
    run.out() << "not converged\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_oracle(const Options& o, Run& run) {
  const Problem pr = load_valid(o.input);
  const GridResult g = grid_search(pr.channel, pr.profile, o.grid);
  const fs::path path = fs::path(o.out_dir) / "oracle.json";
  run.add_output(path);
  ordered_json doc;
  doc["units"] = {{"power", "W"}, {"total", "bits"}};
  doc["p1"] = vec12(g.best.p1);
  doc["p2"] = vec12(g.best.p2);
  doc["best_bits"] = r12(g.best_bits);
  doc["slack_bits"] = r12(g.slack);
  doc["evaluations"] = g.evaluations;
  ordered_json cfg;
  cfg["grid"] = o.grid.points_per_dim;
  cfg["refine"] = o.grid.refinement_rounds;
  cfg["budget"] = o.grid.budget;
  doc["manifest"] = run.manifest(o, cfg);
  write_file(path, doc.dump(2) + "\n");
  run.out() << "best_bits " << g12(g.best_bits) << "\n"
            << "slack_bits " << g12(g.slack) << "\n"
            << "wrote " << path.string() << "\n";
  return kExitOk;
}

// Reads p1, p2 and the reported rates from a schedule file and checks them
// against the profile.
int cmd_check(const Options& o, Run& run) {
  const Problem pr = load_valid(o.input);
  ordered_json doc;
  {
    std::ifstream f(o.schedule);
    if (!f) throw ParseError("cannot open " + o.schedule);
    try {
      doc = ordered_json::parse(f);
    } catch (const ordered_json::parse_error& e) {
      throw ParseError(std::string("malformed schedule JSON: ") + e.what());
    }
  }
  if (!doc.is_object() || !doc.contains("schedule") || !doc["schedule"].is_array()) {
    throw ParseError("missing field schedule");
  }
  const auto ep = epochs(pr.profile);
  const auto& rows = doc["schedule"];
  if (rows.size() != ep.size()) {
    throw ValidationError({"schedule has " + std::to_string(rows.size()) + " epochs, profile has " +
                           std::to_string(ep.size())});
  }
  Allocation a;
  std::vector<double> reported;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    auto field = [&](const char* k) {
      if (!r.contains(k) || !r[k].is_number()) {
        throw ParseError("field schedule[" + std::to_string(i) + "]." + k + " must be a number");
      }
      return r[k].get<double>();
    };
    const double ts = field("t_start");
    const double te = field("t_end");
    if (std::abs(ts - ep[i].start) > 1e-9 * pr.profile.horizon ||
        std::abs(te - ep[i].end) > 1e-9 * pr.profile.horizon) {
      throw ValidationError({"epoch " + std::to_string(i + 1) + " boundaries do not match profile"});
    }
    a.p1.push_back(field("p1"));
    a.p2.push_back(field("p2"));
    reported.push_back(r.contains("rate_bits") ? field("rate_bits") : std::nan(""));
  }

  bool all = true;
  auto line = [&](bool pass, const std::string& name, double residual, const std::string& detail) {
    all = all && pass;
    run.out() << (pass ? "PASS " : "FAIL ") << name << " residual=" << g12(residual)
              << (detail.empty() ? "" : " " + detail) << "\n";
  };

  const auto viol = feasibility_violations(pr.profile, a);
  {
    double excess = 0.0;
    for (Node node : {Node::Source, Node::Relay}) {
      const auto& p = node == Node::Source ? a.p1 : a.p2;
      const auto c = cumulative_energies(pr.profile, node);
      double used = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        used += p[i] * ep[i].len;
        excess = std::max({excess, used - c[i], -p[i]});
      }
    }
    std::string detail;
    for (const auto& v : viol) detail += (detail.empty() ? "" : "; ") + v;
    line(viol.empty(), "feasibility", excess, detail);
  }

  for (Node node : {Node::Source, Node::Relay}) {
    const bool src = node == Node::Source;
    const auto& p = src ? a.p1 : a.p2;
    const std::string tag = src ? "p1" : "p2";
    double worst = 0.0;
    std::string where;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      const double drop = p[i] - p[i + 1];
      if (drop > worst) worst = drop;
      if (drop > kCheckSlack) where += (where.empty() ? "at epoch " : ",") + std::to_string(i + 2);
    }
    line(worst <= kCheckSlack, "monotonicity_" + tag, worst, where);
  }

  for (Node node : {Node::Source, Node::Relay}) {
    const bool src = node == Node::Source;
    const auto& p = src ? a.p1 : a.p2;
    const auto c = cumulative_energies(pr.profile, node);
    const double tol = kCheckSlack * std::max(1.0, c.back());
    double used = 0.0;
    double worst = 0.0;
    std::string where;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      used += p[i] * ep[i].len;
      if (p[i + 1] - p[i] > kCheckSlack) {
        const double slack = c[i] - used;
        worst = std::max(worst, slack);
        if (slack > tol) where += (where.empty() ? "prefix " : ",") + std::to_string(i + 1);
      }
    }
    line(worst <= tol, std::string("tight_at_changes_") + (src ? "source" : "relay"), worst, where);
  }

  {
    double worst = 0.0;
    std::string where;
    for (std::size_t i = 0; i < ep.size(); ++i) {
      const double want = capacity_min(pr.channel, std::max(0.0, a.p1[i]), std::max(0.0, a.p2[i])).value;
      const double err = std::abs(reported[i] - want);
      if (!(err <= 1e-9 * std::max(1.0, want))) {
        worst = std::isfinite(err) ? std::max(worst, err) : err;
        where += (where.empty() ? "epoch " : ",") + std::to_string(i + 1);
      }
    }
    line(where.empty(), "recomputed_rates", worst, where);
  }
  return all ? kExitOk : kExitCheckFailed;
}

int cmd_plotdata(const Options& o, Run& run) {
  const Problem pr = load_valid(o.input);
  validate(o.cfg);
  std::string chosen;
  const Solution s = solve_case(pr, o, chosen);
  const auto& ev = pr.profile.events;
  const auto ep = epochs(pr.profile);
  const fs::path dir(o.out_dir);

  std::string h = "t_s,source_harvested_J,relay_harvested_J\n";
  double c1 = 0.0, c2 = 0.0;
  for (const auto& e : ev) {
    h += g12(e.t) + "," + g12(c1) + "," + g12(c2) + "\n";
    c1 += e.e_source;
    c2 += e.e_relay;
    h += g12(e.t) + "," + g12(c1) + "," + g12(c2) + "\n";
  }
  h += g12(pr.profile.horizon) + "," + g12(c1) + "," + g12(c2) + "\n";

  std::string c = "t_s,source_consumed_J,relay_consumed_J\n";
  double u1 = 0.0, u2 = 0.0;
  c += g12(0.0) + ",0,0\n";
  for (std::size_t i = 0; i < ep.size(); ++i) {
    u1 += s.allocation.p1[i] * ep[i].len;
    u2 += s.allocation.p2[i] * ep[i].len;
    c += g12(ep[i].end) + "," + g12(u1) + "," + g12(u2) + "\n";
  }

  std::string st = "epoch,t_start_s,t_end_s,p1_W,p2_W,lambda,rate_bits_per_use,active_branch\n";
  for (std::size_t i = 0; i < ep.size(); ++i) {
    st += std::to_string(ep[i].index) + "," + g12(ep[i].start) + "," + g12(ep[i].end) + "," +
          g12(s.allocation.p1[i]) + "," + g12(s.allocation.p2[i]) + "," + g12(s.lambda[i]) + "," +
          g12(s.rates[i].value) + "," + std::string(to_string(s.rates[i].active)) + "\n";
  }

  for (const auto& [name, text] : {std::pair<const char*, const std::string&>{"harvested.csv", h},
                                   {"consumed.csv", c},
                                   {"steps.csv", st}}) {
    write_file(dir / name, text);
    run.add_output(dir / name);
    run.out() << "wrote " << (dir / name).string() << "\n";
  }
  return s.converged ? kExitOk : kExitNotConverged;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Offline power schedules for an energy-harvesting full-duplex relay channel"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;
  const std::vector<std::string> cases{"auto", "general", "proportional", "source-only",
                                       "relay-only"};

  auto solver_flags = [&](CLI::App* sub) {
    sub->add_option("--case", o.solver_case, "solver to use")->check(CLI::IsMember(cases));
    sub->add_option("--tol-inner", o.cfg.tol_inner, "KKT residual target")
        ->check(CLI::PositiveNumber);
    sub->add_option("--tol-outer", o.cfg.tol_outer, "projected subgradient norm target")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", o.cfg.max_iter_outer, "outer (lambda) iteration cap")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-newton", o.cfg.max_iter_inner, "Newton step cap per inner solve")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.cfg.seed, "recorded in the manifest; the solvers are deterministic");
  };

  auto* solve = app.add_subcommand("solve", "solve for the optimal schedule");
  solve->add_option("input", o.input, "profile JSON")->required();
  solve->add_option("--out", o.out_dir, "output directory");
  solver_flags(solve);

  auto* oracle = app.add_subcommand("oracle", "brute-force grid search (K <= 2)");
  oracle->add_option("input", o.input, "profile JSON")->required();
  oracle->add_option("--out", o.out_dir, "output directory");
  oracle->add_option("--grid", o.grid.points_per_dim, "points per dimension")
      ->check(CLI::Range(2, 100000));
  oracle->add_option("--refine", o.grid.refinement_rounds, "refinement rounds")
      ->check(CLI::NonNegativeNumber);
  oracle->add_option("--budget", o.grid.budget, "maximum grid size")->check(CLI::PositiveNumber);
  oracle->add_option("--seed", o.cfg.seed, "recorded in the manifest");

  auto* check = app.add_subcommand("check", "check a schedule against the profile");
  check->add_option("input", o.input, "profile JSON")->required();
  check->add_option("schedule", o.schedule, "schedule JSON")->required();

  auto* plot = app.add_subcommand("plotdata", "write CSV data for energy and power plots");
  plot->add_option("input", o.input, "profile JSON")->required();
  plot->add_option("--out", o.out_dir, "output directory");
  solver_flags(plot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitParse;
  }

  std::string command;
  for (int i = 0; i < argc; ++i) command += (i ? " " : "") + std::string(argv[i]);
  Run run(command, out);
  try {
    if (*solve) return cmd_solve(o, run);
    if (*oracle) return cmd_oracle(o, run);
    if (*check) return cmd_check(o, run);
    return cmd_plotdata(o, run);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ValidationError& e) {
    err << "validation error:\n";
    for (const auto& i : e.issues()) err << "  " << i << "\n";
    return kExitValidation;
  } catch (const BudgetError& e) {
    err << "budget error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const PreconditionError& e) {
    err << "precondition error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace ehrelay
