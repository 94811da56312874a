#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ehrelay/closed_form.hpp"
#include "ehrelay/errors.hpp"
#include "ehrelay/oracle.hpp"
#include "ehrelay/solver.hpp"

using namespace ehrelay;

namespace {

constexpr double kC2PlusSqrt3 = 1.12123278191853696982;
constexpr double kC4 = 1.16096404744368117394;
const ChannelParams kA2{2.0, 1.0, 1.0};

HarvestProfile random_profile(std::mt19937_64& rng, int K) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HarvestProfile p;
  double t = 0.0;
  for (int k = 0; k <= K; ++k) {
    p.events.push_back({t, u(rng) < 0.2 ? 0.0 : 10.0 * u(rng), u(rng) < 0.2 ? 0.0 : 10.0 * u(rng)});
    t += 0.5 + 2.0 * u(rng);
  }
  p.events[0].e_source = 0.5 + 5.0 * u(rng);
  p.horizon = t;
  return p;
}

ChannelParams random_channel(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {1.01 + 2.0 * u(rng), 1.0, 0.5 + 1.5 * u(rng)};
}

}  // namespace

TEST(EvaluateSchedule, Examples) {
  const HarvestProfile one{{{0, 6, 12}}, 6};
  EXPECT_EQ(evaluate_schedule(kA2, one, {{0.0}, {0.0}}).total_bits, 0.0);
  const auto ev = evaluate_schedule(kA2, one, {{1.0}, {2.0}});
  EXPECT_NEAR(ev.total_bits, 6.0 * kC2PlusSqrt3, 1e-13);
  EXPECT_EQ(ev.rates[0].active, Branch::MultiAccessLimited);
}

TEST(EvaluateSchedule, InfeasiblePrefixIsReported) {
  const HarvestProfile p{{{0, 2, 1}, {2, 8, 4}}, 4};
  try {
    evaluate_schedule(kA2, p, {{2.0, 0.0}, {0.0, 0.0}});
    FAIL();
  } catch (const FeasibilityError& e) {
    ASSERT_EQ(e.violations().size(), 1u);
    EXPECT_NE(e.violations()[0].find("source overspends prefix 1"), std::string::npos);
  }
  EXPECT_THROW(evaluate_schedule(kA2, p, {{-0.1, 0.0}, {0.0, 0.0}}), FeasibilityError);
}

TEST(Problem1, BroadcastWeightSpendsSourceOnly) {
  const HarvestProfile p{{{0, 6, 6}}, 6};
  const auto r = solve_problem1(kA2, p, {0.0}, SolverConfig{});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.alloc.p1[0], 1.0, 1e-8);
  EXPECT_EQ(r.alloc.p2[0], 0.0);
  EXPECT_NEAR(r.objective, 6.0 * kC4, 1e-8);
  EXPECT_TRUE(r.kkt.certified(1e-7));
}

TEST(Problem1, RelayAssistedWeightSpendsBoth) {
  const HarvestProfile p{{{0, 6, 12}}, 6};
  const auto r = solve_problem1(kA2, p, {1.0}, SolverConfig{});
  EXPECT_NEAR(r.alloc.p1[0], 1.0, 1e-8);
  EXPECT_NEAR(r.alloc.p2[0], 2.0, 1e-8);
  EXPECT_NEAR(r.objective, 6.0 * kC2PlusSqrt3, 1e-8);
  EXPECT_TRUE(r.kkt.certified(1e-7));
  const auto g = grid_search(kA2, p, {40, 2, 1e8});
  EXPECT_NEAR(g.best.p1[0], 1.0, 1e-12);
  EXPECT_NEAR(g.best.p2[0], 2.0, 1e-12);
}

TEST(Problem1, ZeroEnergyGivesZeroAllocation) {
  const HarvestProfile p{{{0, 0, 0}, {1, 0, 0}}, 3};
  const auto r = solve_problem1(kA2, p, {0.3, 0.9}, SolverConfig{});
  EXPECT_EQ(r.alloc.p1, (std::vector<double>{0, 0}));
  EXPECT_EQ(r.alloc.p2, (std::vector<double>{0, 0}));
  EXPECT_EQ(r.objective, 0.0);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_TRUE(r.converged);
}

TEST(Problem1, RejectsPositiveLambdaWithoutRelayGain) {
  const HarvestProfile p{{{0, 6, 6}}, 6};
  EXPECT_THROW(solve_problem1({0.8, 1.0, 1.0}, p, {0.5}, SolverConfig{}), BranchUndefinedError);
}

TEST(Problem1, IterationCapIsAValueNotACrash) {
  SolverConfig cfg;
  cfg.max_iter_inner = 3;
  const HarvestProfile p{{{0, 2, 1}, {2, 8, 4}, {4, 2, 1}}, 6};
  const auto r = solve_problem1(kA2, p, {1.0, 1.0, 1.0}, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3);
  EXPECT_TRUE(feasibility_violations(p, r.alloc).empty());
  EXPECT_GT(r.kkt.max(), 1e-7);
}

TEST(Problem1, CertifiedOnRandomInstancesAndLambdas) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 30; ++n) {
    const auto p = random_profile(rng, n % 5);
    const auto ch = random_channel(rng);
    std::vector<double> lam(p.num_epochs());
    for (double& l : lam) l = u(rng) < 0.3 ? std::round(u(rng)) : u(rng);
    const auto r = solve_problem1(ch, p, lam, SolverConfig{});
    EXPECT_TRUE(r.converged);
    EXPECT_TRUE(r.kkt.certified(1e-7)) << r.kkt.stationarity << " " << r.kkt.slackness << " "
                                       << r.kkt.feasibility;
  }
}

TEST(KktResidual, PerturbationBreaksCertification) {
  const HarvestProfile p{{{0, 3, 1}, {1.5, 4, 6}, {3, 1, 2}}, 5};
  const ChannelParams ch{1.8, 1.0, 1.0};
  const std::vector<double> lam{1, 1, 1};
  const auto r = solve_problem1(ch, p, lam, SolverConfig{});
  ASSERT_TRUE(r.kkt.certified(1e-7));
  // The last source constraint is the tight deadline budget.
  Allocation a = r.alloc;
  a.p1.back() *= 1.1;
  const auto bad = kkt_residual(ch, p, a, r.duals, lam);
  EXPECT_GT(bad.feasibility, 1e-7);
  // Scaling a relay power down keeps feasibility but breaks stationarity.
  a = r.alloc;
  a.p2[1] /= 1.1;
  const auto off = kkt_residual(ch, p, a, r.duals, lam);
  EXPECT_LE(off.feasibility, 1e-7);
  EXPECT_GT(off.stationarity, 1e-7);
}

TEST(KktResidual, ZeroDualsReportGradientNorm) {
  const HarvestProfile p{{{0, 3, 1}, {1.5, 4, 6}}, 5};
  const ChannelParams ch{1.8, 1.0, 1.0};
  const std::vector<double> lam{0.4, 1.0};
  const Allocation a{{0.5, 0.7}, {0.2, 0.9}};
  const DualVariables zero{{0, 0}, {0, 0}, {0, 0}, {0, 0}};
  const auto len = epoch_lengths(p);
  double norm = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto d = weighted_rate_derivatives(ch, a.p1[i], a.p2[i], lam[i]);
    norm = std::max({norm, std::abs(len[i] * d.d1), std::abs(len[i] * d.d2)});
  }
  EXPECT_DOUBLE_EQ(kkt_residual(ch, p, a, zero, lam).stationarity, norm);
}

TEST(Problem2, NoRelayGainMeansZeroLambda) {
  const HarvestProfile p{{{0, 2, 1}, {1, 3, 3}}, 3};
  const auto r = solve_problem2({0.9, 1.2, 1.0}, p, SolverConfig{});
  EXPECT_EQ(r.lambda, (std::vector<double>{0, 0}));
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
}

TEST(Problem2, SingleEpochLambdaGoesToOne) {
  const HarvestProfile p{{{0, 6, 12}}, 6};
  const SolverConfig cfg;
  // At every lambda the optimal allocation has C~1 below C~2, so the
  // subgradient is negative and pushes lambda to the upper bound.
  for (double lam : {0.0, 0.5, 1.0}) {
    const auto r = solve_problem1(kA2, p, {lam}, cfg);
    EXPECT_LT(ctilde1_saturated(kA2, r.alloc.p1[0], r.alloc.p2[0]), ctilde2(kA2, r.alloc.p1[0]));
  }
  const auto r = solve_problem2(kA2, p, cfg);
  EXPECT_EQ(r.lambda, (std::vector<double>{1.0}));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.fstar, 6.0 * kC2PlusSqrt3, 1e-8);
}

TEST(Problem2, SymmetricEpochsGetEqualLambda) {
  const HarvestProfile p{{{0, 3, 2}, {2, 3, 2}}, 4};
  const auto r = solve_problem2({1.6, 1.0, 1.0}, p, SolverConfig{});
  ASSERT_EQ(r.lambda.size(), 2u);
  EXPECT_NEAR(r.lambda[0], r.lambda[1], 1e-12);
}

TEST(Problem2, MatchesVertexSweep) {
  std::mt19937_64 rng(43);
  for (int n = 0; n < 8; ++n) {
    const auto p = random_profile(rng, n % 3);
    const auto ch = random_channel(rng);
    const auto sub = solve_problem2(ch, p, SolverConfig{});
    const auto sweep = sweep_lambda_vertices(ch, p, SolverConfig{});
    EXPECT_TRUE(sub.converged);
    EXPECT_NEAR(sub.fstar, sweep.fstar, 1e-7 * std::max(1.0, sweep.fstar));
  }
}

TEST(Problem2, FstarIsMidpointConvex) {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const HarvestProfile p{{{0, 3, 1}, {1.5, 4, 6}, {3, 1, 2}}, 5};
  const ChannelParams ch{1.8, 1.0, 1.0};
  const SolverConfig cfg;
  for (int n = 0; n < 10; ++n) {
    std::vector<double> la(3), lb(3), lm(3);
    for (int i = 0; i < 3; ++i) {
      la[i] = u(rng);
      lb[i] = u(rng);
      lm[i] = 0.5 * (la[i] + lb[i]);
    }
    const double fa = solve_problem1(ch, p, la, cfg).objective;
    const double fb = solve_problem1(ch, p, lb, cfg).objective;
    const double fm = solve_problem1(ch, p, lm, cfg).objective;
    EXPECT_LE(fm, 0.5 * (fa + fb) + 1e-6);
  }
}

TEST(MinMax, ZeroEnergy) {
  const HarvestProfile p{{{0, 0, 0}}, 2};
  const auto s = solve_minmax(kA2, p, SolverConfig{});
  EXPECT_EQ(s.total_bits, 0.0);
  EXPECT_TRUE(s.converged);
}

TEST(MinMax, SolutionInvariantsOnRandomInstances) {
  std::mt19937_64 rng(53);
  const SolverConfig cfg;
  for (int n = 0; n < 20; ++n) {
    const auto p = random_profile(rng, n % 4);
    const auto ch = random_channel(rng);
    const auto s = solve_minmax(ch, p, cfg);
    EXPECT_TRUE(s.converged);
    const double again = evaluate_schedule(ch, p, s.allocation).total_bits;
    EXPECT_NEAR(s.total_bits, again, 1e-9 * std::max(1.0, again));
    EXPECT_LE(s.minmax_gap, 10.0 * cfg.tol_outer);
    EXPECT_EQ(kkt_residual(ch, p, s.allocation, s.duals, s.lambda).max(), s.kkt_residual);
  }
}

TEST(MinMax, ScaleCovariance) {
  std::mt19937_64 rng(59);
  const SolverConfig cfg;
  for (int n = 0; n < 6; ++n) {
    const auto p = random_profile(rng, n % 3);
    const auto ch = random_channel(rng);
    HarvestProfile q = p;
    const double c = 3.7;
    for (auto& e : q.events) {
      e.t *= c;
      e.e_source *= c;
      e.e_relay *= c;
    }
    q.horizon *= c;
    const auto a = solve_minmax(ch, p, cfg);
    const auto b = solve_minmax(ch, q, cfg);
    for (std::size_t i = 0; i < p.num_epochs(); ++i) {
      EXPECT_NEAR(a.allocation.p1[i], b.allocation.p1[i], 1e-7);
      EXPECT_NEAR(a.allocation.p2[i], b.allocation.p2[i], 1e-7);
    }
    EXPECT_NEAR(b.total_bits, c * a.total_bits, 1e-8 * b.total_bits);
  }
}

// Power is constant between harvests: splitting an epoch cannot help.
TEST(MinMax, SplittingAnEpochDoesNotIncreaseThroughput) {
  std::mt19937_64 rng(61);
  const SolverConfig cfg;
  for (int n = 0; n < 8; ++n) {
    const auto p = random_profile(rng, n % 3);
    const auto ch = random_channel(rng);
    const auto base = solve_minmax(ch, p, cfg);
    const std::size_t i = static_cast<std::size_t>(n) % p.num_epochs();
    const auto ep = epochs(p);
    HarvestProfile q = p;
    q.events.insert(q.events.begin() + static_cast<long>(i) + 1,
                    {0.5 * (ep[i].start + ep[i].end), 0.0, 0.0});
    const auto split = solve_minmax(ch, q, cfg);
    EXPECT_LE(split.total_bits, base.total_bits + 1e-7);
    EXPECT_NEAR(split.allocation.p1[i], split.allocation.p1[i + 1], 1e-5);
  }
}

TEST(MinMax, MonotonePowersOnProportionalProfiles) {
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 8; ++n) {
    auto p = random_profile(rng, 1 + n % 4);
    const double gamma = 0.2 + 2.0 * u(rng);
    for (auto& e : p.events) e.e_relay = gamma * e.e_source;
    const auto s = solve_minmax({1.5 + u(rng), 1.0, 1.0}, p, SolverConfig{});
    for (std::size_t i = 0; i + 1 < p.num_epochs(); ++i) {
      EXPECT_GE(s.allocation.p1[i + 1], s.allocation.p1[i] - 1e-6);
    }
  }
}

// Monotone powers are not guaranteed on general profiles; count them.
TEST(MinMax, MonotonicityReportOnGeneralProfiles) {
  std::mt19937_64 rng(71);
  int violations = 0, total = 0;
  for (int n = 0; n < 40; ++n) {
    const auto p = random_profile(rng, 1 + n % 3);
    const auto s = solve_minmax(random_channel(rng), p, SolverConfig{});
    ++total;
    for (std::size_t i = 0; i + 1 < p.num_epochs(); ++i) {
      if (s.allocation.p1[i + 1] < s.allocation.p1[i] - 1e-6 ||
          s.allocation.p2[i + 1] < s.allocation.p2[i] - 1e-6) {
        ++violations;
        break;
      }
    }
  }
  RecordProperty("monotonicity_violations", violations);
  std::printf("general profiles with a decreasing power: %d of %d\n", violations, total);
  SUCCEED();
}
