#include "ehrelay/closed_form.hpp"

#include <algorithm>
#include <cmath>

#include "ehrelay/errors.hpp"

namespace ehrelay {

namespace {

std::vector<double> event_times(const HarvestProfile& p) {
  std::vector<double> t;
  for (const auto& e : p.events) t.push_back(e.t);
  return t;
}

// Node multipliers from marginal rates: with every non-pinned variable
// positive, stationarity gives suffix sums equal to the marginals, so each
// prefix multiplier is the drop in marginal across its boundary.
std::vector<double> prefix_multipliers(const std::vector<double>& marginal,
                                       const std::vector<double>& cumulative) {
  const std::size_t m = marginal.size();
  std::vector<double> y(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    if (cumulative[k] == 0.0) continue;
    y[k] = marginal[k] - (k + 1 < m ? marginal[k + 1] : 0.0);
  }
  return y;
}

Solution assemble(const ChannelParams& ch, const HarvestProfile& profile, Allocation alloc,
                  std::string method, std::vector<std::string> warnings) {
  const std::size_t m = profile.num_epochs();
  Solution s;
  s.method = std::move(method);
  s.lambda.assign(m, relay_can_help(ch) ? 1.0 : 0.0);
  std::vector<double> m1(m), m2(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto d = weighted_rate_derivatives(ch, alloc.p1[i], alloc.p2[i], s.lambda[i]);
    m1[i] = d.d1;
    m2[i] = d.d2;
  }
  s.duals.xi = prefix_multipliers(m1, cumulative_energies(profile, Node::Source));
  s.duals.mu = prefix_multipliers(m2, cumulative_energies(profile, Node::Relay));
  s.duals.vartheta.assign(m, 0.0);
  s.duals.eta.assign(m, 0.0);
  s.allocation = std::move(alloc);
  s.warnings = std::move(warnings);
  finalize_solution(ch, profile, s);
  s.converged = true;
  return s;
}

void require_single_event(const HarvestProfile& profile, Node node, const char* which) {
  const auto e = energies(profile, node);
  std::vector<std::string> bad;
  if (!(e[0] > 0.0)) bad.push_back(std::string(which) + " harvests nothing at t=0");
  for (std::size_t k = 1; k < e.size(); ++k) {
    if (e[k] != 0.0) {
      bad.push_back(std::string(which) + " harvests at event " + std::to_string(k) +
                    " (t=" + std::to_string(profile.events[k].t) + ")");
    }
  }
  if (!bad.empty()) {
    std::string msg = std::string(which) + " must harvest once, at t=0";
    for (const auto& b : bad) msg += "; " + b;
    throw PreconditionError(msg);
  }
}

}  // namespace

Breakpoints staircase(const HarvestProfile& profile, Node node) {
  validate(profile);
  return staircase(event_times(profile), profile.horizon, energies(profile, node));
}

double waterfill_power(const WaterfillConstants& c, Regime regime) {
  if (!(c.a_i > 0.0)) throw DomainError("a_i must be > 0; a zero multiplier means unbounded power");
  const double k = regime == Regime::K1 ? c.k1 : c.k2;
  if (!(k > 0.0)) throw DomainError("regime slope must be > 0");
  return std::max(0.0, 1.0 / (2.0 * c.a_i) - 1.0 / k);
}

double k1_constant(const ChannelParams& ch, double gamma) {
  validate(ch);
  if (ch.a < 1.0) throw BranchUndefinedError("K1 requires a >= 1");
  if (!(gamma > 0.0)) throw DomainError("gamma must be > 0");
  const double a2 = ch.a * ch.a;
  const double root = std::sqrt(std::max(0.0, a2 - ch.b * ch.b * gamma)) +
                      ch.b * std::sqrt(gamma * (a2 - 1.0));
  return root * root / (a2 * ch.noise);
}

double k2_constant(const ChannelParams& ch) {
  validate(ch);
  return std::max(1.0, ch.a * ch.a) / ch.noise;
}

Regime proportional_regime(const ChannelParams& ch, double gamma) {
  return relay_can_help(ch) && ch.a * ch.a - 1.0 >= gamma ? Regime::K1 : Regime::K2;
}

Solution solve_proportional(const ChannelParams& ch, const HarvestProfile& profile, double gamma) {
  validate(ch);
  validate(profile);
  const auto detected = proportionality(profile);
  if (!detected || std::abs(*detected - gamma) > 1e-9 * gamma) {
    throw PreconditionError("profile is not proportional with gamma = " + std::to_string(gamma));
  }
  const Breakpoints bp = staircase(profile, Node::Source);
  Allocation alloc;
  alloc.p1 = bp.per_epoch();
  for (double p : alloc.p1) alloc.p2.push_back(gamma * p);
  return assemble(ch, profile, std::move(alloc), "proportional", bp.warnings);
}

Solution solve_relay_only(const ChannelParams& ch, const HarvestProfile& profile) {
  validate(ch);
  validate(profile);
  require_single_event(profile, Node::Source, "source");
  const double P = profile.events[0].e_source / profile.horizon;
  // Smallest relay power at which the rate reaches C(a^2 P / N).
  const double sat = relay_can_help(ch)
                         ? (ch.a * ch.a - 1.0) * P * std::min(1.0, 1.0 / (ch.b * ch.b))
                         : 0.0;
  const Breakpoints bp = staircase(profile, Node::Relay);
  Allocation alloc;
  alloc.p1.assign(profile.num_epochs(), P);
  for (double p : bp.per_epoch()) alloc.p2.push_back(std::min(p, sat));
  return assemble(ch, profile, std::move(alloc), "relay-only", bp.warnings);
}

Solution solve_source_only(const ChannelParams& ch, const HarvestProfile& profile) {
  validate(ch);
  validate(profile);
  require_single_event(profile, Node::Relay, "relay");
  const double P = profile.events[0].e_relay / profile.horizon;
  const Breakpoints bp = staircase(profile, Node::Source);
  Allocation alloc;
  alloc.p1 = bp.per_epoch();
  alloc.p2.assign(profile.num_epochs(), P);
  return assemble(ch, profile, std::move(alloc), "source-only", bp.warnings);
}

}  // namespace ehrelay
