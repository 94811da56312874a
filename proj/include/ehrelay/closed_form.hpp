#pragma once

// Direct solutions for single-harvester and proportional profiles.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "ehrelay/solver.hpp"

namespace ehrelay {

template <class Real>
struct BasicBreakpoints {
  /// o_0 = 0 < o_1 < ... < o_V = K+1; segment v covers epochs o_v+1 .. o_{v+1}.
  std::vector<std::size_t> indices;
  std::vector<Real> powers;  ///< V levels, strictly increasing
  std::vector<std::string> warnings;

  std::vector<Real> per_epoch() const {
    std::vector<Real> p;
    for (std::size_t v = 0; v + 1 < indices.size(); ++v) {
      for (std::size_t i = indices[v]; i < indices[v + 1]; ++i) p.push_back(powers[v]);
    }
    return p;
  }
};

using Breakpoints = BasicBreakpoints<double>;

/// Tautest feasible consumption path for one node. times holds t^0..t^K,
/// energy holds E^0..E^K. Among equal slopes the last index wins.
template <class Real>
BasicBreakpoints<Real> staircase(const std::vector<Real>& times, const Real& horizon,
                                 const std::vector<Real>& energy) {
  const std::size_t n = times.size();
  if (n == 0 || energy.size() != n) {
    throw std::invalid_argument("staircase: times and energies must be non-empty and equal length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (energy[i] < Real(0)) throw std::invalid_argument("staircase: negative energy");
    if (i > 0 && !(times[i - 1] < times[i])) {
      throw std::invalid_argument("staircase: times must increase");
    }
  }
  if (!(times[n - 1] < horizon)) throw std::invalid_argument("staircase: horizon before last event");

  auto t_at = [&](std::size_t i) -> const Real& { return i < n ? times[i] : horizon; };
  BasicBreakpoints<Real> out;
  out.indices.push_back(0);
  std::size_t o = 0;
  while (o < n) {
    Real acc(0);
    Real best(0);
    std::size_t arg = 0;
    for (std::size_t i = o + 1; i <= n; ++i) {
      acc += energy[i - 1];
      const Real r = acc / (t_at(i) - t_at(o));
      bool take = arg == 0;
      if (!take) {
        if constexpr (std::is_floating_point_v<Real>) {
          take = r <= best + Real(1e-12) * (best < Real(0) ? -best : best);
        } else {
          take = r <= best;
        }
      }
      if (take) {
        best = r;
        arg = i;
      }
    }
    out.indices.push_back(arg);
    out.powers.push_back(best);
    o = arg;
  }
  if (out.powers.size() == 1 && out.powers[0] == Real(0)) {
    out.warnings.emplace_back("no energy harvested; power is zero throughout");
  }
  return out;
}

Breakpoints staircase(const HarvestProfile& profile, Node node);

struct WaterfillConstants {
  double k1 = 0.0;   ///< SNR per watt in the relay-assisted regime (1/W)
  double k2 = 0.0;   ///< SNR per watt in the broadcast regime (1/W)
  double a_i = 0.0;  ///< cumulative multiplier of the epoch
};

enum class Regime { K1, K2 };

/// max(0, 1/(2 a_i) - 1/k) for the regime's slope. Throws DomainError when
/// a_i == 0.
double waterfill_power(const WaterfillConstants& c, Regime regime);

/// (sqrt(a^2 - b^2 gamma) + b sqrt(gamma (a^2 - 1)))^2 / (a^2 N), with the
/// first radicand clamped at zero. Requires a >= 1.
double k1_constant(const ChannelParams& ch, double gamma);
/// max(1, a^2) / N.
double k2_constant(const ChannelParams& ch);
/// K1 iff a > 1 and a^2 - 1 >= gamma.
Regime proportional_regime(const ChannelParams& ch, double gamma);

Solution solve_proportional(const ChannelParams& ch, const HarvestProfile& profile, double gamma);
/// Source has a single harvest at t = 0 and transmits E/T throughout.
Solution solve_relay_only(const ChannelParams& ch, const HarvestProfile& profile);
/// Relay has a single harvest at t = 0 and transmits E/T throughout.
Solution solve_source_only(const ChannelParams& ch, const HarvestProfile& profile);

}  // namespace ehrelay
