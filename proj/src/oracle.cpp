#include "ehrelay/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ehrelay/errors.hpp"

namespace ehrelay {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) v[j] = lo + (hi - lo) * j / (n - 1);
  v.back() = hi;
  return v;
}

// Sorted lattice per epoch and node.
struct Lattice {
  std::vector<std::vector<double>> g1, g2;
};

// Prefix maximum of l * rate over the last epoch's lattice pairs.
struct LastTable {
  std::size_t n2 = 0;
  std::vector<double> val;
  std::vector<std::size_t> arg1, arg2;
};

struct Incumbent {
  double value = kNegInf;
  std::vector<double> p1, p2;
  double evaluations = 0.0;
};

class GridSearch {
 public:
  GridSearch(const ChannelParams& ch, const HarvestProfile& profile, const Lattice& lat)
      : ch_(ch), lat_(lat), len_(epoch_lengths(profile)),
        c1_(cumulative_energies(profile, Node::Source)),
        c2_(cumulative_energies(profile, Node::Relay)), m_(len_.size()) {
    build_table();
  }

  double rate(std::size_t i, double p1, double p2) const {
    return len_[i] * capacity_min(ch_, p1, p2).value;
  }

  // First-epoch source candidates; the parallel split runs over these.
  std::vector<double> first_candidates() const {
    if (m_ == 1) return {0.0};  // search_from enumerates the single epoch itself
    return candidates(lat_.g1[0], corner(c1_, 0, 0.0));
  }

  // Best completion when epoch 0 uses source power p1.
  Incumbent search_from(double p1) const {
    Incumbent inc;
    std::vector<double> q1(m_), q2(m_);
    q1[0] = p1;
    if (m_ == 1) {
      finish_last(0.0, 0.0, 0.0, q1, q2, inc);
      return inc;
    }
    for (double p2 : relay_candidates(0, p1, 0.0)) {
      q2[0] = p2;
      ++inc.evaluations;
      recurse(1, len_[0] * p1, len_[0] * p2, rate(0, p1, p2), q1, q2, inc);
    }
    return inc;
  }

 private:
  double corner(const std::vector<double>& c, std::size_t i, double used) const {
    return std::max(0.0, c[i] - used) / len_[i];
  }

  static std::vector<double> candidates(const std::vector<double>& grid, double corner) {
    std::vector<double> out;
    for (double g : grid) {
      if (g <= corner) out.push_back(g);
    }
    out.push_back(corner);
    return out;
  }

  std::vector<double> relay_candidates(std::size_t i, double p1, double used2) const {
    const double r2 = corner(c2_, i, used2);
    auto out = candidates(lat_.g2[i], r2);
    out.push_back(std::min(r2, relay_saturation_power(ch_, p1)));
    return out;
  }

  void recurse(std::size_t i, double u1, double u2, double acc, std::vector<double>& q1,
               std::vector<double>& q2, Incumbent& inc) const {
    if (i + 1 == m_) {
      finish_last(u1, u2, acc, q1, q2, inc);
      return;
    }
    for (double p1 : candidates(lat_.g1[i], corner(c1_, i, u1))) {
      q1[i] = p1;
      for (double p2 : relay_candidates(i, p1, u2)) {
        q2[i] = p2;
        ++inc.evaluations;
        recurse(i + 1, u1 + len_[i] * p1, u2 + len_[i] * p2, acc + rate(i, p1, p2), q1, q2, inc);
      }
    }
  }

  void finish_last(double u1, double u2, double acc, std::vector<double>& q1,
                   std::vector<double>& q2, Incumbent& inc) const {
    const std::size_t i = m_ - 1;
    const double r1 = corner(c1_, i, u1);
    const double r2 = corner(c2_, i, u2);
    const auto& g1 = lat_.g1[i];
    const auto& g2 = lat_.g2[i];
    const auto j1 = static_cast<std::size_t>(std::upper_bound(g1.begin(), g1.end(), r1) - g1.begin());
    const auto j2 = static_cast<std::size_t>(std::upper_bound(g2.begin(), g2.end(), r2) - g2.begin());

    auto offer = [&](double p1, double p2, double v) {
      ++inc.evaluations;
      if (acc + v > inc.value) {
        inc.value = acc + v;
        inc.p1 = q1;
        inc.p2 = q2;
        inc.p1[i] = p1;
        inc.p2[i] = p2;
      }
    };
    if (j1 > 0 && j2 > 0) {
      const std::size_t at = (j1 - 1) * table_.n2 + (j2 - 1);
      offer(g1[table_.arg1[at]], g2[table_.arg2[at]], table_.val[at]);
    }
    for (double p1 : {r1, j1 > 0 ? g1[j1 - 1] : r1}) {
      for (double p2 : {r2, j2 > 0 ? g2[j2 - 1] : r2, std::min(r2, relay_saturation_power(ch_, p1))}) {
        offer(p1, p2, rate(i, p1, p2));
      }
    }
  }

  void build_table() {
    const std::size_t i = m_ - 1;
    const auto& g1 = lat_.g1[i];
    const auto& g2 = lat_.g2[i];
    table_.n2 = g2.size();
    table_.val.assign(g1.size() * g2.size(), kNegInf);
    table_.arg1.assign(g1.size() * g2.size(), 0);
    table_.arg2.assign(g1.size() * g2.size(), 0);
    for (std::size_t a = 0; a < g1.size(); ++a) {
      for (std::size_t b = 0; b < g2.size(); ++b) {
        const std::size_t at = a * table_.n2 + b;
        table_.val[at] = rate(i, g1[a], g2[b]);
        table_.arg1[at] = a;
        table_.arg2[at] = b;
        // Ties keep the smaller indices.
        auto take = [&](std::size_t from) {
          if (table_.val[from] >= table_.val[at]) {
            table_.val[at] = table_.val[from];
            table_.arg1[at] = table_.arg1[from];
            table_.arg2[at] = table_.arg2[from];
          }
        };
        if (b > 0) take(at - 1);
        if (a > 0) take(at - table_.n2);
      }
    }
  }

  const ChannelParams& ch_;
  const Lattice& lat_;
  std::vector<double> len_, c1_, c2_;
  std::size_t m_;
  LastTable table_;
};

Incumbent run_round(const ChannelParams& ch, const HarvestProfile& profile, const Lattice& lat,
                    bool parallel) {
  const GridSearch gs(ch, profile, lat);
  const auto first = gs.first_candidates();
  const auto n = static_cast<long>(first.size());
  std::vector<Incumbent> part(first.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long j = 0; j < n; ++j) part[static_cast<std::size_t>(j)] = gs.search_from(first[j]);

  Incumbent best;
  for (auto& p : part) {
    best.evaluations += p.evaluations;
    if (p.value > best.value) {
      best.value = p.value;
      best.p1 = std::move(p.p1);
      best.p2 = std::move(p.p2);
    }
  }
  return best;
}

double spacing(const std::vector<double>& g) { return g.size() > 1 ? g[1] - g[0] : 0.0; }

GridResult search(const ChannelParams& ch, const HarvestProfile& profile, const GridConfig& grid,
                  bool parallel) {
  validate(ch);
  validate(profile);
  if (grid.points_per_dim < 2) throw std::invalid_argument("points_per_dim must be >= 2");
  if (grid.refinement_rounds < 0) throw std::invalid_argument("refinement_rounds must be >= 0");
  const double need = grid_size(profile, grid);
  if (need > grid.budget) throw BudgetError(need, grid.budget);

  const auto len = epoch_lengths(profile);
  const auto c1 = cumulative_energies(profile, Node::Source);
  const auto c2 = cumulative_energies(profile, Node::Relay);
  const std::size_t m = len.size();
  const int P = grid.points_per_dim;

  Lattice lat;
  for (std::size_t i = 0; i < m; ++i) {
    lat.g1.push_back(linspace(0.0, c1[i] / len[i], P));
    lat.g2.push_back(linspace(0.0, c2[i] / len[i], P));
  }
  double evals = 0.0;
  Incumbent inc = run_round(ch, profile, lat, parallel);
  evals += inc.evaluations;
  for (int r = 0; r < grid.refinement_rounds; ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      auto regrid = [&](std::vector<double>& g, double x, double hi) {
        const double h = spacing(g);
        g = linspace(std::max(0.0, x - h), std::min(hi, x + h), P);
      };
      regrid(lat.g1[i], inc.p1[i], c1[i] / len[i]);
      regrid(lat.g2[i], inc.p2[i], c2[i] / len[i]);
    }
    Incumbent next = run_round(ch, profile, lat, parallel);
    evals += next.evaluations;
    // The previous incumbent need not lie on the new lattice.
    if (next.value > inc.value) inc = std::move(next);
  }

  GridResult out;
  out.best.p1 = inc.p1;
  out.best.p2 = inc.p2;
  out.best_bits = evaluate_schedule(ch, profile, out.best).total_bits;
  out.evaluations = evals;
  for (std::size_t i = 0; i < m; ++i) {
    const double p1 = inc.p1[i];
    const double p2 = inc.p2[i];
    const double h1 = spacing(lat.g1[i]);
    const double h2 = spacing(lat.g2[i]);
    const double v = capacity_min(ch, p1, p2).value;
    auto delta = [&](double x1, double x2) { return std::abs(capacity_min(ch, x1, x2).value - v); };
    const double d1 = std::max(delta(p1 + h1, p2), delta(std::max(0.0, p1 - h1), p2));
    const double d2 = std::max(delta(p1, p2 + h2), delta(p1, std::max(0.0, p2 - h2)));
    out.slack += len[i] * (d1 + d2);
  }
  return out;
}

double rho_term(const ChannelParams& ch, double p1, double p2, double rho) {
  const double a2 = ch.a * ch.a;
  const double relay = c_awgn(a2 * std::max(0.0, 1.0 - rho * rho) * p1 / ch.noise);
  const double dest =
      c_awgn((p1 + ch.b * ch.b * p2 + 2.0 * ch.b * rho * std::sqrt(p1 * p2)) / ch.noise);
  return std::min(relay, dest);
}

void check_rho_args(const ChannelParams& ch, double p1, double p2, int n) {
  validate(ch);
  if (!(p1 >= 0.0) || !(p2 >= 0.0)) throw DomainError("powers must be >= 0");
  if (n < 2) throw std::invalid_argument("grid_points must be >= 2");
}

}  // namespace

double grid_size(const HarvestProfile& profile, const GridConfig& grid) {
  return std::pow(static_cast<double>(grid.points_per_dim),
                  2.0 * static_cast<double>(profile.num_epochs()));
}

GridResult grid_search(const ChannelParams& ch, const HarvestProfile& profile,
                       const GridConfig& grid) {
  return search(ch, profile, grid, true);
}

GridResult grid_search_serial(const ChannelParams& ch, const HarvestProfile& profile,
                              const GridConfig& grid) {
  return search(ch, profile, grid, false);
}

double rho_maxmin(const ChannelParams& ch, double p1, double p2, int grid_points) {
  check_rho_args(ch, p1, p2, grid_points);
  double best = 0.0;
  const double den = grid_points - 1;
#pragma omp parallel for reduction(max : best)
  for (int j = 0; j < grid_points; ++j) best = std::max(best, rho_term(ch, p1, p2, j / den));
  return best;
}

double rho_maxmin_serial(const ChannelParams& ch, double p1, double p2, int grid_points) {
  check_rho_args(ch, p1, p2, grid_points);
  double best = 0.0;
  const double den = grid_points - 1;
  for (int j = 0; j < grid_points; ++j) best = std::max(best, rho_term(ch, p1, p2, j / den));
  return best;
}

}  // namespace ehrelay
