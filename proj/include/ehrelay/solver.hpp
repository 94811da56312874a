#pragma once

// Throughput maximisation under energy causality, solved through the
// lambda-weighted reformulation:
//
//   Problem 1:  f*(lam) = max_p  sum_i l_i [lam_i C~1 + (1 - lam_i) C~2]
//   Problem 2:  min_{lam in [0,1]^(K+1)} f*(lam)
//
// Problem 1 is solved by a primal log-barrier Newton method whose dual
// estimates certify the KKT conditions; Problem 2 by projected subgradient
// descent on the convex function f*.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ehrelay/capacity.hpp"
#include "ehrelay/profile.hpp"

namespace ehrelay {

struct Allocation {
  std::vector<double> p1;  ///< source power per epoch (W)
  std::vector<double> p2;  ///< relay power per epoch (W)
};

/// Multipliers of the Lagrangian. xi[k] and mu[k] belong to the causality
/// constraint over the first k+1 epochs (k = 0..K, the last one being the
/// deadline budget); vartheta and eta to p1 >= 0 and p2 >= 0.
struct DualVariables {
  std::vector<double> xi;
  std::vector<double> mu;
  std::vector<double> vartheta;
  std::vector<double> eta;
};

struct KktReport {
  double stationarity = 0.0;  ///< max |dL/dp| over non-pinned variables
  double slackness = 0.0;     ///< max multiplier * constraint slack
  double feasibility = 0.0;   ///< max primal or dual violation
  double max() const noexcept;
  bool certified(double tol) const noexcept { return max() <= tol; }
};

struct SolverConfig {
  double tol_inner = 1e-7;
  double tol_outer = 1e-5;
  int max_iter_inner = 400;  ///< Newton steps per Problem 1 solve
  int max_iter_outer = 200;  ///< subgradient steps
  double barrier_t0 = 1.0;
  double barrier_growth = 10.0;
  double barrier_t_final = 1e10;
  std::uint64_t seed = 0;  ///< unused by the deterministic solvers; recorded for runs
};

void validate(const SolverConfig& cfg);

struct ScheduleEvaluation {
  double total_bits = 0.0;
  std::vector<RateBranch> rates;
};

/// Primal violations of p >= 0 and prefix causality (1e-9 relative scale).
std::vector<std::string> feasibility_violations(const HarvestProfile& profile,
                                                const Allocation& alloc);

/// Sum of l_i * capacity_min(p_i).value. Throws FeasibilityError.
ScheduleEvaluation evaluate_schedule(const ChannelParams& ch, const HarvestProfile& profile,
                                     const Allocation& alloc);

/// sum_i l_i * weighted_rate(p_i, lam_i).
double weighted_objective(const ChannelParams& ch, const HarvestProfile& profile,
                          const Allocation& alloc, const std::vector<double>& lambda);

/// Residuals recomputed from primal and dual values alone.
KktReport kkt_residual(const ChannelParams& ch, const HarvestProfile& profile,
                       const Allocation& alloc, const DualVariables& duals,
                       const std::vector<double>& lambda);

struct Problem1Result {
  Allocation alloc;
  DualVariables duals;
  KktReport kkt;
  double objective = 0.0;  ///< f*(lam), bits
  bool converged = false;
  int iterations = 0;  ///< Newton steps
  std::vector<std::string> warnings;
};

Problem1Result solve_problem1(const ChannelParams& ch, const HarvestProfile& profile,
                              const std::vector<double>& lambda, const SolverConfig& cfg);

struct Problem2Result {
  std::vector<double> lambda;
  Problem1Result inner;  ///< Problem 1 at lambda
  double fstar = 0.0;
  double projected_subgradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

Problem2Result solve_problem2(const ChannelParams& ch, const HarvestProfile& profile,
                              const SolverConfig& cfg);

/// Minimum of f* over the 2^(K+1) vertices of the lambda box; K <= 10.
Problem2Result sweep_lambda_vertices(const ChannelParams& ch, const HarvestProfile& profile,
                                     const SolverConfig& cfg);

struct Solution {
  Allocation allocation;
  std::vector<double> lambda;
  std::vector<RateBranch> rates;
  double total_bits = 0.0;
  DualVariables duals;
  KktReport kkt;
  double kkt_residual = 0.0;  ///< kkt.max()
  double fstar = 0.0;
  double minmax_gap = 0.0;  ///< |f*(lam) - total_bits|
  int inner_iterations = 0;
  int outer_iterations = 0;
  bool converged = false;
  std::string method;
  std::vector<std::string> warnings;
};

/// Fills rates, total_bits, kkt, fstar and minmax_gap from allocation,
/// lambda and duals.
void finalize_solution(const ChannelParams& ch, const HarvestProfile& profile, Solution& s);

Solution solve_minmax(const ChannelParams& ch, const HarvestProfile& profile,
                      const SolverConfig& cfg);

}  // namespace ehrelay
