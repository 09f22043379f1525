#pragma once

// Small dense solvers used by the cone checks: Lawson-Hanson nonnegative
// least squares (least distance to a finitely generated cone) and a
// tableau simplex for max c.x s.t. Ax <= b, x >= 0 with b >= 0.

#include "pcone/core.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <limits>
#include <optional>

namespace pcone::lp {

struct NnlsResult {
  RealVector x;
  double residual = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// Minimizes ||A x - b|| over x >= 0 (Lawson-Hanson active set). Stops early
/// once the residual is at most `good_enough`.
inline NnlsResult nnls(const RealMatrix &a, const RealVector &b, int max_iter = 0,
                       double good_enough = 0.0) {
  const Index m = a.rows(), n = a.cols();
  if (b.size() != m) throw InputError("nnls: dimension mismatch");
  NnlsResult res;
  res.x = RealVector::Zero(n);
  if (n == 0) {
    res.residual = b.norm();
    return res;
  }
  if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 30);

  // The gradient test alone is too coarse: with k near-parallel columns a
  // gradient of size g still allows a residual of order sqrt(g). Iterate on a
  // tiny gradient threshold and stop once an added column no longer lowers
  // the residual.
  const double col_scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * col_scale * std::max(b.norm(), 1e-300);

  std::vector<char> passive(static_cast<std::size_t>(n), 0);
  RealVector x = RealVector::Zero(n);
  RealVector w = a.transpose() * b;

  auto passive_list = [&] {
    std::vector<Index> idx;
    for (Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    return idx;
  };
  auto submatrix = [&](const std::vector<Index> &idx) {
    RealMatrix ap(m, static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Index>(k)) = a.col(idx[k]);
    return ap;
  };
  // Residual b - A x from the passive columns only; x vanishes elsewhere.
  auto residual_of = [&](const RealVector &xv, const std::vector<Index> &idx) {
    RealVector r = b;
    for (Index j : idx) r.noalias() -= xv(j) * a.col(j);
    return r;
  };

  RealVector r = b;
  double r_norm = b.norm();
  int iter = 0;
  while (true) {
    if (good_enough > 0.0 && r_norm <= good_enough) break;
    Index best = -1;
    double best_w = tol;
    for (Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    if (best < 0) break;
    if (++iter > max_iter) {
      res.converged = false;
      break;
    }
    const RealVector x_prev = x;
    const std::vector<char> passive_prev = passive;
    passive[static_cast<std::size_t>(best)] = 1;

    std::vector<Index> idx;
    while (true) {
      idx = passive_list();
      const RealVector sp = submatrix(idx).colPivHouseholderQr().solve(b);
      bool all_pos = true;
      for (std::size_t k = 0; k < idx.size(); ++k)
        if (sp(static_cast<Index>(k)) <= 0.0) all_pos = false;
      if (all_pos) {
        for (std::size_t k = 0; k < idx.size(); ++k) x(idx[k]) = sp(static_cast<Index>(k));
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double z = sp(static_cast<Index>(k));
        const Index j = idx[k];
        if (z <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - z));
      }
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const Index j = idx[k];
        x(j) += alpha * (sp(static_cast<Index>(k)) - x(j));
      }
      const double floor = 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff());
      for (Index j : idx)
        if (x(j) <= floor) {
          passive[static_cast<std::size_t>(j)] = 0;
          x(j) = 0.0;
        }
      if (passive_list().empty()) {
        idx.clear();
        break;
      }
    }
    RealVector r_new = residual_of(x, idx);
    const double r_new_norm = r_new.norm();
    if (r_new_norm >= r_norm) {
      x = x_prev;
      passive = passive_prev;
      break;
    }
    r = std::move(r_new);
    r_norm = r_new_norm;
    w.noalias() = a.transpose() * r;
  }
  res.x = x.cwiseMax(0.0);
  res.residual = (a * res.x - b).norm();
  res.iterations = iter;
  return res;
}

/// Euclidean distance from `p` to cone(columns of `rays`), divided by ||p||
/// (zero when p = 0). With `below` > 0 the search stops as soon as the
/// distance is known to be at most `below`.
inline double cone_distance_rel(const RealMatrix &rays, const RealVector &p, double below = 0.0) {
  const double np = p.norm();
  if (np == 0.0) return 0.0;
  return nnls(rays, p, 0, below * np).residual / np;
}

enum class LpStatus { Optimal, Unbounded, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::Optimal;
  RealVector x;
  double value = 0.0;
  /// Dual multipliers of the inequality rows (nonnegative at optimum).
  RealVector duals;
  int pivots = 0;
};

/// Maximizes c.x subject to A x <= b, x >= 0, with b >= 0 so that the
/// origin is a feasible starting vertex. Bland's rule prevents cycling.
inline LpResult simplex_max(const RealVector &c, const RealMatrix &a, const RealVector &b,
                            int max_pivots = 0) {
  const Index m = a.rows(), n = a.cols();
  if (c.size() != n || b.size() != m) throw InputError("simplex: dimension mismatch");
  if ((b.array() < 0.0).any()) throw InputError("simplex: right-hand side must be nonnegative");
  if (max_pivots <= 0) max_pivots = static_cast<int>(50 * (m + n) + 100);
  constexpr double eps = 1e-11;

  // Tableau rows 0..m-1 constraints, row m objective; columns: n structural,
  // m slack, 1 rhs.
  RealMatrix t = RealMatrix::Zero(m + 1, n + m + 1);
  t.topLeftCorner(m, n) = a;
  t.block(0, n, m, m).setIdentity();
  t.col(n + m).head(m) = b;
  t.row(m).head(n) = -c.transpose();
  std::vector<Index> basis(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  LpResult res;
  while (true) {
    Index enter = -1;
    for (Index j = 0; j < n + m; ++j)
      if (t(m, j) < -eps) {
        enter = j;
        break;
      }
    if (enter < 0) break;
    Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i) {
      if (t(i, enter) > eps) {
        const double ratio = t(i, n + m) / t(i, enter);
        if (ratio < best - 1e-14 ||
            (ratio <= best + 1e-14 && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          if (ratio < best - 1e-14 || leave < 0) best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) {
      res.status = LpStatus::Unbounded;
      break;
    }
    if (++res.pivots > max_pivots) {
      res.status = LpStatus::IterationLimit;
      break;
    }
    t.row(leave) /= t(leave, enter);
    for (Index i = 0; i <= m; ++i)
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  res.x = RealVector::Zero(n);
  for (Index i = 0; i < m; ++i)
    if (basis[static_cast<std::size_t>(i)] < n)
      res.x(basis[static_cast<std::size_t>(i)]) = t(i, n + m);
  res.value = c.dot(res.x);
  res.duals = t.row(m).segment(n, m).transpose().cwiseMax(0.0);
  return res;
}

} // namespace pcone::lp
