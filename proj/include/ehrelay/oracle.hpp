#pragma once

// Brute-force references for the solvers. grid_search enumerates
// per-epoch powers on a lattice (plus exact causality corners) and keeps
// the best schedule under capacity_min; rho_maxmin evaluates the
// decode-and-forward bound with jointly Gaussian inputs of correlation rho.
//
// The *_serial variants are the sequential references; the default entry
// points split the outermost loop across OpenMP threads and reduce in index
// order, so both return bit-identical results.

#include <cstddef>

#include "ehrelay/solver.hpp"

namespace ehrelay {

struct GridConfig {
  int points_per_dim = 20;
  int refinement_rounds = 0;
  double budget = 1e8;  ///< cap on points_per_dim^(2(K+1))
};

struct GridResult {
  Allocation best;
  double best_bits = 0.0;
  /// Sum over epochs of l_i times the rate change over one grid spacing in
  /// each coordinate, measured at the incumbent.
  double slack = 0.0;
  double evaluations = 0.0;
};

/// points_per_dim^(2(K+1)).
double grid_size(const HarvestProfile& profile, const GridConfig& grid);

/// Throws BudgetError when grid_size exceeds the budget.
GridResult grid_search(const ChannelParams& ch, const HarvestProfile& profile,
                       const GridConfig& grid);
GridResult grid_search_serial(const ChannelParams& ch, const HarvestProfile& profile,
                              const GridConfig& grid);

/// max over rho in {0, 1/(n-1), ..., 1} of
/// min{ C(a^2 (1 - rho^2) p1 / N), C((p1 + b^2 p2 + 2 b rho sqrt(p1 p2)) / N) }.
double rho_maxmin(const ChannelParams& ch, double p1, double p2, int grid_points);
double rho_maxmin_serial(const ChannelParams& ch, double p1, double p2, int grid_points);

}  // namespace ehrelay
