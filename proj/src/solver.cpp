#include "ehrelay/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "barrier.hpp"
#include "ehrelay/closed_form.hpp"
#include "ehrelay/errors.hpp"

namespace ehrelay {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void require_shape(const HarvestProfile& profile, const std::vector<double>& v, const char* what) {
  if (v.size() != profile.num_epochs()) {
    throw std::invalid_argument(std::string(what) + " has " + std::to_string(v.size()) +
                                " entries, profile has " + std::to_string(profile.num_epochs()) +
                                " epochs");
  }
}

void require_lambda(const ChannelParams& ch, const HarvestProfile& profile,
                    const std::vector<double>& lambda) {
  require_shape(profile, lambda, "lambda");
  for (double v : lambda) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("lambda entries must lie in [0, 1]");
    if (v > 0.0 && !relay_can_help(ch)) throw BranchUndefinedError("lambda > 0 requires a > 1");
  }
}

// Layout of the free variables of Problem 1. A variable is fixed at zero
// when its node has harvested nothing yet, and a relay variable also when
// lam_i == 0 or the source is fixed (the relay term is then flat in p2).
struct Layout {
  std::vector<int> src;  // epoch -> variable index or -1
  std::vector<int> rel;
  int n = 0;
};

Layout make_layout(const HarvestProfile& profile, const std::vector<double>& lambda) {
  const auto c1 = cumulative_energies(profile, Node::Source);
  const auto c2 = cumulative_energies(profile, Node::Relay);
  const std::size_t m = profile.num_epochs();
  Layout lay;
  lay.src.assign(m, -1);
  lay.rel.assign(m, -1);
  for (std::size_t i = 0; i < m; ++i) {
    if (c1[i] > 0.0) lay.src[i] = lay.n++;
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (c2[i] > 0.0 && lambda[i] > 0.0 && lay.src[i] >= 0) lay.rel[i] = lay.n++;
  }
  return lay;
}

void suffix_sums(const std::vector<double>& y, std::vector<double>& s) {
  s.assign(y.size() + 1, 0.0);
  for (std::size_t k = y.size(); k-- > 0;) s[k] = s[k + 1] + y[k];
}

}  // namespace

double KktReport::max() const noexcept {
  return std::max({stationarity, slackness, feasibility});
}

void validate(const SolverConfig& cfg) {
  if (!(cfg.tol_inner > 0.0) || !(cfg.tol_outer > 0.0)) {
    throw std::invalid_argument("tolerances must be > 0");
  }
  if (cfg.max_iter_inner < 1 || cfg.max_iter_outer < 1) {
    throw std::invalid_argument("iteration caps must be >= 1");
  }
  if (!(cfg.barrier_t0 > 0.0) || !(cfg.barrier_growth > 1.0) ||
      !(cfg.barrier_t_final >= cfg.barrier_t0)) {
    throw std::invalid_argument("barrier schedule needs t0 > 0, growth > 1, t_final >= t0");
  }
}

std::vector<std::string> feasibility_violations(const HarvestProfile& profile,
                                                const Allocation& alloc) {
  require_shape(profile, alloc.p1, "p1");
  require_shape(profile, alloc.p2, "p2");
  const auto len = epoch_lengths(profile);
  std::vector<std::string> out;
  for (Node node : {Node::Source, Node::Relay}) {
    const auto& p = node == Node::Source ? alloc.p1 : alloc.p2;
    const char* name = node == Node::Source ? "source" : "relay";
    const auto c = cumulative_energies(profile, node);
    const double scale = std::max(1.0, c.back());
    double used = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!(p[i] >= 0.0)) {
        out.push_back(std::string(name) + " power in epoch " + std::to_string(i + 1) +
                      " is negative");
      }
      used += p[i] * len[i];
      if (used > c[i] + 1e-9 * scale) {
        out.push_back(std::string(name) + " overspends prefix " + std::to_string(i + 1) + " by " +
                      num(used - c[i]) + " J");
      }
    }
  }
  return out;
}

ScheduleEvaluation evaluate_schedule(const ChannelParams& ch, const HarvestProfile& profile,
                                     const Allocation& alloc) {
  auto bad = feasibility_violations(profile, alloc);
  if (!bad.empty()) throw FeasibilityError(std::move(bad));
  const auto len = epoch_lengths(profile);
  ScheduleEvaluation ev;
  for (std::size_t i = 0; i < len.size(); ++i) {
    ev.rates.push_back(capacity_min(ch, alloc.p1[i], alloc.p2[i]));
    ev.total_bits += ev.rates.back().value * len[i];
  }
  return ev;
}

double weighted_objective(const ChannelParams& ch, const HarvestProfile& profile,
                          const Allocation& alloc, const std::vector<double>& lambda) {
  require_lambda(ch, profile, lambda);
  const auto len = epoch_lengths(profile);
  double f = 0.0;
  for (std::size_t i = 0; i < len.size(); ++i) {
    f += len[i] * weighted_rate(ch, alloc.p1[i], alloc.p2[i], lambda[i]);
  }
  return f;
}

KktReport kkt_residual(const ChannelParams& ch, const HarvestProfile& profile,
                       const Allocation& alloc, const DualVariables& duals,
                       const std::vector<double>& lambda) {
  require_lambda(ch, profile, lambda);
  require_shape(profile, alloc.p1, "p1");
  require_shape(profile, alloc.p2, "p2");
  require_shape(profile, duals.xi, "xi");
  require_shape(profile, duals.mu, "mu");
  require_shape(profile, duals.vartheta, "vartheta");
  require_shape(profile, duals.eta, "eta");
  const auto len = epoch_lengths(profile);
  const std::size_t m = len.size();

  std::vector<RateDerivatives> d(m);
  for (std::size_t i = 0; i < m; ++i) {
    d[i] = weighted_rate_derivatives(ch, std::max(0.0, alloc.p1[i]), std::max(0.0, alloc.p2[i]),
                                     lambda[i]);
  }

  KktReport r;
  for (Node node : {Node::Source, Node::Relay}) {
    const bool src = node == Node::Source;
    const auto& p = src ? alloc.p1 : alloc.p2;
    const auto& y = src ? duals.xi : duals.mu;
    const auto& v = src ? duals.vartheta : duals.eta;
    const auto c = cumulative_energies(profile, node);
    double used = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      used += len[k] * p[k];
      const double slack = c[k] - used;
      r.feasibility = std::max({r.feasibility, -slack, -p[k], -y[k], -v[k]});
      r.slackness = std::max({r.slackness, std::abs(y[k] * slack), std::abs(v[k] * p[k])});
    }
    std::vector<double> s;
    suffix_sums(y, s);
    for (std::size_t i = 0; i < m; ++i) {
      if (c[i] == 0.0) continue;  // pinned at zero by a zero-budget prefix
      const double g = src ? d[i].d1 : d[i].d2;
      const double row = std::isfinite(g) ? len[i] * g - len[i] * s[i] + v[i] : kInf;
      r.stationarity = std::max(r.stationarity, std::abs(row));
    }
  }
  return r;
}

Problem1Result solve_problem1(const ChannelParams& ch, const HarvestProfile& profile,
                              const std::vector<double>& lambda, const SolverConfig& cfg) {
  validate(ch);
  validate(profile);
  validate(cfg);
  require_lambda(ch, profile, lambda);
  const std::size_t m = profile.num_epochs();
  const auto len = epoch_lengths(profile);
  const auto c1 = cumulative_energies(profile, Node::Source);
  const auto c2 = cumulative_energies(profile, Node::Relay);
  const Layout lay = make_layout(profile, lambda);

  Problem1Result res;
  res.warnings = profile_warnings(profile);
  res.alloc.p1.assign(m, 0.0);
  res.alloc.p2.assign(m, 0.0);
  res.duals.xi.assign(m, 0.0);
  res.duals.mu.assign(m, 0.0);
  res.duals.vartheta.assign(m, 0.0);
  res.duals.eta.assign(m, 0.0);

  // Causality rows: one per node and prefix with a positive budget that
  // contains at least one free variable.
  struct Row {
    Node node;
    std::size_t k;
  };
  std::vector<Row> rows;
  for (Node node : {Node::Source, Node::Relay}) {
    const auto& idx = node == Node::Source ? lay.src : lay.rel;
    const auto& c = node == Node::Source ? c1 : c2;
    bool any = false;
    for (std::size_t k = 0; k < m; ++k) {
      any = any || idx[k] >= 0;
      if (any && c[k] > 0.0) rows.push_back({node, k});
    }
  }

  if (lay.n > 0) {
    detail::BarrierProblem prob;
    prob.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), lay.n);
    prob.c.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& idx = rows[r].node == Node::Source ? lay.src : lay.rel;
      for (std::size_t i = 0; i <= rows[r].k; ++i) {
        if (idx[i] >= 0) prob.A(static_cast<Eigen::Index>(r), idx[i]) = len[i];
      }
      prob.c[static_cast<Eigen::Index>(r)] = (rows[r].node == Node::Source ? c1 : c2)[rows[r].k];
    }
    prob.objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g, Eigen::MatrixXd* H) {
      if (g != nullptr) g->setZero(x.size());
      if (H != nullptr) H->setZero(x.size(), x.size());
      double f = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const int a = lay.src[i];
        const int b = lay.rel[i];
        const double p1 = a >= 0 ? x[a] : 0.0;
        const double p2 = b >= 0 ? x[b] : 0.0;
        if (g == nullptr && H == nullptr) {
          f += len[i] * weighted_rate(ch, p1, p2, lambda[i]);
          continue;
        }
        const RateDerivatives d = weighted_rate_derivatives(ch, p1, p2, lambda[i]);
        f += len[i] * d.value;
        if (a >= 0) {
          if (g) (*g)[a] += len[i] * d.d1;
          if (H) (*H)(a, a) += len[i] * d.d11;
        }
        if (b >= 0) {
          if (g) (*g)[b] += len[i] * d.d2;
          if (H) {
            (*H)(b, b) += len[i] * d.d22;
            (*H)(a, b) += len[i] * d.d12;
            (*H)(b, a) += len[i] * d.d12;
          }
        }
      }
      return f;
    };

    // Half of the tautest full-spend path is strictly feasible.
    const auto s1 = staircase(profile, Node::Source).per_epoch();
    const auto s2 = staircase(profile, Node::Relay).per_epoch();
    Eigen::VectorXd x0(lay.n);
    for (std::size_t i = 0; i < m; ++i) {
      if (lay.src[i] >= 0) x0[lay.src[i]] = 0.5 * s1[i];
      if (lay.rel[i] >= 0) x0[lay.rel[i]] = 0.5 * s2[i];
    }

    detail::BarrierSettings bs;
    bs.t0 = cfg.barrier_t0;
    bs.growth = cfg.barrier_growth;
    bs.t_final = cfg.barrier_t_final;
    bs.tol_grad = 0.01 * cfg.tol_inner;
    bs.max_newton = cfg.max_iter_inner;
    const detail::BarrierResult br = detail::maximize_with_barrier(prob, x0, bs);
    res.iterations = br.newton_steps;
    res.converged = br.converged;

    for (std::size_t i = 0; i < m; ++i) {
      if (lay.src[i] >= 0) {
        res.alloc.p1[i] = br.x[lay.src[i]];
        res.duals.vartheta[i] = br.z_lower[lay.src[i]];
      }
      if (lay.rel[i] >= 0) {
        res.alloc.p2[i] = br.x[lay.rel[i]];
        res.duals.eta[i] = br.z_lower[lay.rel[i]];
      }
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto& y = rows[r].node == Node::Source ? res.duals.xi : res.duals.mu;
      y[rows[r].k] = br.z_rows[static_cast<Eigen::Index>(r)];
    }

    // Relay power beyond saturation earns nothing; cut it back so the
    // output is canonical. The prefixes it belonged to gain slack, so their
    // (vanishing) multipliers are dropped.
    for (std::size_t i = 0; i < m; ++i) {
      if (lay.rel[i] < 0) continue;
      const double cap = relay_saturation_power(ch, res.alloc.p1[i]);
      if (res.alloc.p2[i] > cap) {
        res.alloc.p2[i] = cap;
        res.duals.eta[i] = 0.0;
        for (std::size_t k = i; k < m; ++k) res.duals.mu[k] = 0.0;
      }
    }
  } else {
    res.converged = true;
  }

  // Variables fixed at zero with a positive budget: eta closes stationarity.
  std::vector<double> smu;
  suffix_sums(res.duals.mu, smu);
  for (std::size_t i = 0; i < m; ++i) {
    if (lay.rel[i] < 0 && c2[i] > 0.0) {
      const double g = weighted_rate_derivatives(ch, res.alloc.p1[i], 0.0, lambda[i]).d2;
      if (std::isfinite(g)) res.duals.eta[i] = std::max(0.0, len[i] * (smu[i] - g));
    }
  }

  res.objective = weighted_objective(ch, profile, res.alloc, lambda);
  res.kkt = kkt_residual(ch, profile, res.alloc, res.duals, lambda);
  return res;
}

namespace {

std::vector<double> lambda_subgradient(const ChannelParams& ch, const HarvestProfile& profile,
                                       const Allocation& alloc) {
  const auto len = epoch_lengths(profile);
  std::vector<double> g(len.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = len[i] * (ctilde1_saturated(ch, alloc.p1[i], alloc.p2[i]) - ctilde2(ch, alloc.p1[i]));
  }
  return g;
}


}  // namespace

Problem2Result solve_problem2(const ChannelParams& ch, const HarvestProfile& profile,
                              const SolverConfig& cfg) {
  validate(ch);
  validate(profile);
  validate(cfg);
  const std::size_t m = profile.num_epochs();
  Problem2Result out;
  if (!relay_can_help(ch)) {
    out.lambda.assign(m, 0.0);
    out.inner = solve_problem1(ch, profile, out.lambda, cfg);
    out.fstar = out.inner.objective;
    out.converged = true;
    return out;
  }

  std::vector<double> lam(m, 0.5);
  Problem2Result best;
  best.fstar = kInf;
  for (int it = 1; it <= cfg.max_iter_outer; ++it) {
    Problem1Result inner = solve_problem1(ch, profile, lam, cfg);
    const auto g = lambda_subgradient(ch, profile, inner.alloc);
    std::vector<double> gp(m);
    for (std::size_t i = 0; i < m; ++i) {
      const bool pinned = (lam[i] <= 0.0 && g[i] > 0.0) || (lam[i] >= 1.0 && g[i] < 0.0);
      gp[i] = pinned ? 0.0 : g[i];
    }
    const double norm = std::sqrt(std::inner_product(gp.begin(), gp.end(), gp.begin(), 0.0));
    if (inner.objective < best.fstar) {
      best.lambda = lam;
      best.fstar = inner.objective;
      best.inner = inner;
      best.projected_subgradient_norm = norm;
    }
    if (norm <= cfg.tol_outer) {
      out.lambda = lam;
      out.fstar = inner.objective;
      out.inner = std::move(inner);
      out.projected_subgradient_norm = norm;
      out.iterations = it;
      out.converged = true;
      return out;
    }
    const double step = 1.0 / std::sqrt(static_cast<double>(it)) / norm;
    for (std::size_t i = 0; i < m; ++i) lam[i] = std::clamp(lam[i] - step * gp[i], 0.0, 1.0);
  }
  best.iterations = cfg.max_iter_outer;
  best.converged = false;
  return best;
}

Problem2Result sweep_lambda_vertices(const ChannelParams& ch, const HarvestProfile& profile,
                                     const SolverConfig& cfg) {
  validate(profile);
  const std::size_t m = profile.num_epochs();
  if (m > 11) throw PreconditionError("vertex sweep supports K <= 10");
  const std::size_t count = relay_can_help(ch) ? (std::size_t{1} << m) : 1;
  Problem2Result best;
  best.fstar = kInf;
  best.converged = true;
  for (std::size_t mask = 0; mask < count; ++mask) {
    std::vector<double> lam(m);
    for (std::size_t i = 0; i < m; ++i) lam[i] = (mask >> i) & 1U ? 1.0 : 0.0;
    Problem1Result inner = solve_problem1(ch, profile, lam, cfg);
    best.converged = best.converged && inner.converged;
    if (inner.objective < best.fstar) {
      best.fstar = inner.objective;
      best.lambda = lam;
      best.inner = std::move(inner);
    }
    ++best.iterations;
  }
  return best;
}

void finalize_solution(const ChannelParams& ch, const HarvestProfile& profile, Solution& s) {
  const ScheduleEvaluation ev = evaluate_schedule(ch, profile, s.allocation);
  s.rates = ev.rates;
  s.total_bits = ev.total_bits;
  s.kkt = kkt_residual(ch, profile, s.allocation, s.duals, s.lambda);
  s.kkt_residual = s.kkt.max();
  s.fstar = weighted_objective(ch, profile, s.allocation, s.lambda);
  s.minmax_gap = std::abs(s.fstar - s.total_bits);
}

Solution solve_minmax(const ChannelParams& ch, const HarvestProfile& profile,
                      const SolverConfig& cfg) {
  Problem2Result p2 = solve_problem2(ch, profile, cfg);
  Solution s;
  s.method = "general";
  s.allocation = std::move(p2.inner.alloc);
  s.lambda = std::move(p2.lambda);
  s.duals = std::move(p2.inner.duals);
  s.inner_iterations = p2.inner.iterations;
  s.outer_iterations = p2.iterations;
  s.warnings = std::move(p2.inner.warnings);
  finalize_solution(ch, profile, s);
  s.converged = p2.converged && p2.inner.converged && s.kkt.certified(cfg.tol_inner);
  if (!p2.converged) s.warnings.push_back("lambda iteration hit max_iter_outer");
  if (!p2.inner.converged) s.warnings.push_back("barrier iteration hit max_iter_inner");
  if (!s.kkt.certified(cfg.tol_inner)) {
    s.warnings.push_back("KKT residual " + num(s.kkt_residual) + " above tol_inner");
  }
  return s;
}

}  // namespace ehrelay
