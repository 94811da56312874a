#include "barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ehrelay::detail {

namespace {

constexpr double kCenterTol = 1e-10;   // decrement^2 / 2 ending a non-final stage
constexpr double kStallTol = 1e-14;   // decrement^2 / 2 with no useful progress left
constexpr double kDampedTol = 1e-4;    // below this decrement full steps are taken
constexpr double kBoundary = 0.99;     // fraction-to-boundary factor
constexpr double kActiveTol = 1e-4;    // relative slack treated as active when polishing

// psi = t F + sum log s + sum log x, or -inf outside the interior.
double barrier_value(const BarrierProblem& prob, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& s, double t) {
  if ((x.array() <= 0.0).any() || (s.array() <= 0.0).any()) {
    return -std::numeric_limits<double>::infinity();
  }
  return t * prob.objective(x, nullptr, nullptr) + s.array().log().sum() + x.array().log().sum();
}

// Equality-constrained Newton on a guessed active set, started from the
// barrier iterate. Rows in `rows` hold with equality and variables in
// `pinned` sit at zero. Returns false unless the iterate ends primal and
// dual feasible with a stationarity residual below `tol`.
bool solve_on_active_set(const BarrierProblem& prob, const std::vector<Eigen::Index>& rows,
                         const std::vector<Eigen::Index>& pinned, double tol, Eigen::VectorXd& x,
                         Eigen::VectorXd& z_rows, Eigen::VectorXd& z_lower,
                         std::vector<Eigen::Index>& add_row, std::vector<Eigen::Index>& drop_row) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> free;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::find(pinned.begin(), pinned.end(), j) == pinned.end()) free.push_back(j);
  }
  const auto nf = static_cast<Eigen::Index>(free.size());
  const auto nr = static_cast<Eigen::Index>(rows.size());
  for (Eigen::Index j : pinned) x[j] = 0.0;

  Eigen::VectorXd g(n), z(nr);
  Eigen::MatrixXd H(n, n);
  double resid = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 30; ++it) {
    prob.objective(x, &g, &H);
    if (!g.allFinite() || !H.allFinite()) return false;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nf + nr, nf + nr);
    Eigen::VectorXd rhs(nf + nr);
    for (Eigen::Index a = 0; a < nf; ++a) {
      for (Eigen::Index b = 0; b < nf; ++b) K(a, b) = -H(free[a], free[b]);
      rhs[a] = g[free[a]];
    }
    for (Eigen::Index r = 0; r < nr; ++r) {
      for (Eigen::Index a = 0; a < nf; ++a) {
        K(nf + r, a) = prob.A(rows[r], free[a]);
        K(a, nf + r) = prob.A(rows[r], free[a]);
      }
      rhs[nf + r] = prob.c[rows[r]] - prob.A.row(rows[r]).dot(x);
    }
    const Eigen::VectorXd sol = K.colPivHouseholderQr().solve(rhs);
    if (!sol.allFinite() || (K * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + rhs.norm())) {
      return false;
    }
    for (Eigen::Index a = 0; a < nf; ++a) x[free[a]] += sol[a];
    z = sol.tail(nr);

    prob.objective(x, &g, nullptr);
    Eigen::VectorXd r = g;
    for (Eigen::Index k = 0; k < nr; ++k) r -= z[k] * prob.A.row(rows[k]).transpose();
    resid = 0.0;
    for (Eigen::Index j : free) resid = std::max(resid, std::abs(r[j]));
    if (resid <= tol * 1e-3) break;
  }
  if (!(resid <= tol)) return false;

  bool ok = true;
  for (Eigen::Index j : free) {
    if (x[j] < 0.0) return false;
  }
  const Eigen::VectorXd s = prob.c - prob.A * x;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (std::find(rows.begin(), rows.end(), k) != rows.end()) continue;
    if (s[k] < -tol * std::max(1.0, std::abs(prob.c[k]))) {
      add_row.push_back(k);
      ok = false;
    }
  }
  for (Eigen::Index k = 0; k < nr; ++k) {
    if (z[k] < -tol) {
      drop_row.push_back(rows[k]);
      ok = false;
    }
  }
  if (!ok) return false;

  z_rows.setZero(prob.A.rows());
  for (Eigen::Index k = 0; k < nr; ++k) z_rows[rows[k]] = std::max(0.0, z[k]);
  z_lower.setZero(n);
  Eigen::VectorXd r = g - prob.A.transpose() * z_rows;
  for (Eigen::Index j : pinned) {
    if (r[j] > tol) return false;
    z_lower[j] = std::max(0.0, -r[j]);
  }
  return true;
}

// The barrier recovers x only to O(t^-1/2) at degenerate vertices (an
// active constraint with a zero multiplier). Polishing on the active set
// identified from the slacks restores full primal accuracy.
void polish(const BarrierProblem& prob, const Eigen::VectorXd& s, double tol, BarrierResult& res) {
  const Eigen::Index n = res.x.size();
  std::vector<Eigen::Index> rows, pinned;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s[k] <= kActiveTol * std::max(1.0, std::abs(prob.c[k]))) rows.push_back(k);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (res.x[j] <= kActiveTol) pinned.push_back(j);
  }
  for (int round = 0; round < 8; ++round) {
    Eigen::VectorXd x = res.x, zr, zl;
    std::vector<Eigen::Index> add, drop;
    if (solve_on_active_set(prob, rows, pinned, tol, x, zr, zl, add, drop)) {
      if (prob.objective(x, nullptr, nullptr) >= prob.objective(res.x, nullptr, nullptr) - tol) {
        res.x = x;
        res.z_rows = zr;
        res.z_lower = zl;
      }
      return;
    }
    if (add.empty() && drop.empty()) return;
    for (Eigen::Index k : drop) rows.erase(std::find(rows.begin(), rows.end(), k));
    for (Eigen::Index k : add) rows.push_back(k);
    std::sort(rows.begin(), rows.end());
  }
}

}  // namespace

BarrierResult maximize_with_barrier(const BarrierProblem& prob, Eigen::VectorXd x0,
                                    const BarrierSettings& cfg) {
  const Eigen::Index n = x0.size();
  BarrierResult res;
  res.x = std::move(x0);
  // Slacks are carried as state: recomputing c - A x loses most digits once
  // a constraint is nearly tight, and the multipliers 1/(t s) inherit that.
  Eigen::VectorXd s = prob.c - prob.A * res.x;
  double t = cfg.t0;
  Eigen::VectorXd g(n);
  Eigen::MatrixXd H(n, n);

  for (;;) {
    const bool final_stage = t >= cfg.t_final;
    for (;;) {
      Eigen::VectorXd& x = res.x;
      prob.objective(x, &g, &H);
      const Eigen::VectorXd inv_s = s.cwiseInverse();
      const Eigen::VectorXd inv_x = x.cwiseInverse();
      const Eigen::VectorXd grad = t * g - prob.A.transpose() * inv_s + inv_x;
      // Negated barrier Hessian, positive definite.
      Eigen::MatrixXd M = -t * H;
      M.noalias() += prob.A.transpose() * inv_s.cwiseAbs2().asDiagonal() * prob.A;
      M.diagonal() += inv_x.cwiseAbs2();
      const Eigen::VectorXd dx = M.ldlt().solve(grad);
      const double dec2 = grad.dot(dx);

      if (final_stage) {
        // Stall exit: no representable progress is left. Certification is
        // decided by the caller's KKT check either way.
        if (grad.lpNorm<Eigen::Infinity>() / t <= cfg.tol_grad || dec2 / 2.0 <= kStallTol) {
          res.converged = true;
          break;
        }
      } else if (dec2 / 2.0 <= kCenterTol) {
        break;
      }
      if (res.newton_steps >= cfg.max_newton || !dx.allFinite()) {
        res.converged = false;
        res.z_rows = (t * s.array()).inverse().matrix();
        res.z_lower = (t * x.array()).inverse().matrix();
        return res;
      }

      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (dx[j] < 0.0) alpha = std::min(alpha, -kBoundary * x[j] / dx[j]);
      }
      const Eigen::VectorXd ds = -(prob.A * dx);
      for (Eigen::Index k = 0; k < ds.size(); ++k) {
        if (ds[k] < 0.0) alpha = std::min(alpha, -kBoundary * s[k] / ds[k]);
      }
      if (dec2 / 2.0 >= kDampedTol) {
        const double psi0 = barrier_value(prob, x, s, t);
        for (int bt = 0; bt < 60; ++bt) {
          if (barrier_value(prob, x + alpha * dx, s + alpha * ds, t) >= psi0 + 0.25 * alpha * dec2) {
            break;
          }
          alpha *= 0.5;
        }
      }
      x += alpha * dx;
      s += alpha * ds;
      ++res.newton_steps;
    }
    if (final_stage) break;
    t = std::min(t * cfg.growth, cfg.t_final);
  }
  res.z_rows = (t * s.array()).inverse().matrix();
  res.z_lower = (t * res.x.array()).inverse().matrix();
  if (res.converged) polish(prob, s, cfg.tol_grad, res);
  return res;
}

}  // namespace ehrelay::detail
