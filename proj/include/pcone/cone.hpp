#pragma once

// Candidate common invariant cones: the conical hull of the orbit of a
// leading eigenvector of an index-one element, its half-space, pointedness
// and invariance checks, and the escalation of half-space violations into
// non-Perron products.

#include "pcone/core.hpp"
#include "pcone/lp.hpp"
#include "pcone/semigroup.hpp"
#include "pcone/spectral.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <limits>
#include <optional>

namespace pcone {

struct ConeApprox {
  Index dim = 0;
  /// Unit rays as columns.
  RealMatrix rays;
  std::optional<RealVector> support_functional;
  double invariance_residual = 0.0;
  bool pointed = false;
  std::optional<double> strict_margin;

  // Provenance and diagnostics.
  std::vector<Word> ray_words;
  double thinning_angle = 0.0;
  bool low_confidence = false;
  bool full_dimensional = false;
  std::size_t refinement_rounds = 0;
  /// Relative enlargement of the cross-section beyond the orbit rays (0 when
  /// the rays are orbit points).
  double inflation = 0.0;

  std::size_t ray_count() const { return static_cast<std::size_t>(rays.cols()); }
};

// ---------------------------------------------------------------------------
// Pointedness

struct PointednessResult {
  bool pointed = false;
  /// Unit functional with <a, v> >= strict_margin > 0 on all rays.
  std::optional<RealVector> functional;
  std::optional<double> strict_margin;
  /// Optimal value of max t s.t. <a, v> >= t, |a|_inf <= 1, t <= 1.
  double lp_margin = 0.0;
  /// Nonnegative ray weights summing to one whose combination is ~0.
  std::optional<RealVector> certificate;
  double certificate_residual = 0.0;
};

namespace detail {

struct MarginLp {
  RealVector a;
  double t = 0.0;
  RealVector ray_duals;
};

/// max t s.t. t - <v_j, a> <= 0, |a_i| <= 1, 0 <= t <= 1 over the columns of
/// `v`, with a = u - w split into nonnegative parts.
inline MarginLp solve_margin_lp(const RealMatrix &v) {
  const Index d = v.rows(), k = v.cols();
  const Index nv = 2 * d + 1;
  const Index nc = k + 2 * d + 1;
  RealMatrix a = RealMatrix::Zero(nc, nv);
  RealVector b = RealVector::Zero(nc);
  for (Index j = 0; j < k; ++j) {
    a.block(j, 0, 1, d) = -v.col(j).transpose();
    a.block(j, d, 1, d) = v.col(j).transpose();
    a(j, 2 * d) = 1.0;
  }
  for (Index i = 0; i < d; ++i) {
    a(k + i, i) = 1.0;
    b(k + i) = 1.0;
    a(k + d + i, d + i) = 1.0;
    b(k + d + i) = 1.0;
  }
  a(k + 2 * d, 2 * d) = 1.0;
  b(k + 2 * d) = 1.0;
  RealVector c = RealVector::Zero(nv);
  c(2 * d) = 1.0;
  const lp::LpResult r = lp::simplex_max(c, a, b);
  if (r.status != lp::LpStatus::Optimal)
    throw NumericalError("pointedness LP did not reach an optimum (" +
                         std::to_string(r.pivots) + " pivots) for rays " + echo_matrix(v));
  MarginLp out;
  out.a = r.x.head(d) - r.x.segment(d, d);
  out.t = r.x(2 * d);
  out.ray_duals = r.duals.head(k);
  return out;
}

} // namespace detail

/// Decides whether cone(rays) is pointed by maximizing a separation margin
/// with constraint generation: the LP is solved over a working subset of
/// rays and the most violated rays are added until all are satisfied.
inline PointednessResult pointedness_check(const RealMatrix &rays, const ToleranceConfig &cfg = {}) {
  const Index d = rays.rows(), n = rays.cols();
  if (n == 0) throw InputError("pointedness_check: no rays");
  if (!rays.allFinite()) throw InputError("pointedness_check: non-finite rays");
  RealMatrix unit = rays;
  for (Index j = 0; j < n; ++j) {
    const double nj = unit.col(j).norm();
    if (nj == 0.0) throw InputError("pointedness_check: zero ray");
    unit.col(j) /= nj;
  }

  std::vector<char> active(static_cast<std::size_t>(n), 0);
  std::vector<Index> work;
  auto activate = [&](Index j) {
    if (!active[static_cast<std::size_t>(j)]) {
      active[static_cast<std::size_t>(j)] = 1;
      work.push_back(j);
    }
  };
  activate(0);
  for (Index i = 0; i < d; ++i) {
    Index jmax = 0, jmin = 0;
    for (Index j = 1; j < n; ++j) {
      if (unit(i, j) > unit(i, jmax)) jmax = j;
      if (unit(i, j) < unit(i, jmin)) jmin = j;
    }
    activate(jmax);
    activate(jmin);
  }

  PointednessResult res;
  detail::MarginLp lpres;
  while (true) {
    RealMatrix sub(d, static_cast<Index>(work.size()));
    for (std::size_t k = 0; k < work.size(); ++k) sub.col(static_cast<Index>(k)) = unit.col(work[k]);
    lpres = detail::solve_margin_lp(sub);
    if (lpres.t <= cfg.lp_feas) break;
    const RealVector margins = unit.transpose() * lpres.a;
    std::vector<std::pair<double, Index>> viol;
    for (Index j = 0; j < n; ++j)
      if (!active[static_cast<std::size_t>(j)] && margins(j) < lpres.t - 1e-12)
        viol.emplace_back(margins(j), j);
    if (viol.empty()) break;
    std::sort(viol.begin(), viol.end());
    const std::size_t take = std::min<std::size_t>(viol.size(), static_cast<std::size_t>(2 * d));
    for (std::size_t k = 0; k < take; ++k) activate(viol[k].second);
  }

  res.lp_margin = lpres.t;
  if (lpres.t > cfg.lp_feas) {
    res.pointed = true;
    const RealVector a = lpres.a.normalized();
    res.functional = a;
    res.strict_margin = (unit.transpose() * a).minCoeff();
  } else {
    RealVector lambda = RealVector::Zero(n);
    for (std::size_t k = 0; k < work.size(); ++k)
      lambda(work[k]) = lpres.ray_duals(static_cast<Index>(k));
    const double s = lambda.sum();
    if (s > 0.0) {
      lambda /= s;
      res.certificate = lambda;
      res.certificate_residual = (unit * lambda).norm();
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Invariance

struct InvarianceResult {
  double residual = 0.0;
  std::size_t worst_generator = 0;
  std::size_t worst_ray = 0;
};

/// Largest relative distance from g*v to cone(rays) over generators g and
/// rays v, with the pair attaining it. Distances below 1e-4 * lp_feas are
/// only resolved to that level.
inline InvarianceResult invariance_check(const GeneratorSet &gens, const RealMatrix &rays,
                                         const ToleranceConfig &cfg = {}) {
  if (rays.cols() == 0) throw InputError("invariance_check: no rays");
  if (rays.rows() != gens.dim())
    throw InputError("invariance_check: ray dimension " + std::to_string(rays.rows()) +
                     " does not match generator dimension " + std::to_string(gens.dim()));
  InvarianceResult r;
  for (std::size_t g = 0; g < gens.size(); ++g)
    for (Index j = 0; j < rays.cols(); ++j) {
      const double dist = lp::cone_distance_rel(rays, gens[g] * rays.col(j), 1e-4 * cfg.lp_feas);
      if (dist > r.residual) {
        r.residual = dist;
        r.worst_generator = g;
        r.worst_ray = static_cast<std::size_t>(j);
      }
    }
  return r;
}

struct UserConeCheck {
  bool invariant = false;
  double residual = 0.0;
  bool pointed = false;
  std::size_t worst_generator = 0;
  std::size_t worst_ray = 0;
};

/// Verifies an externally supplied cone against the generators.
inline UserConeCheck check_user_cone(const GeneratorSet &gens, const ConeApprox &cone,
                                     const ToleranceConfig &cfg = {}) {
  if (cone.rays.rows() != gens.dim() || (cone.dim != 0 && cone.dim != gens.dim()))
    throw InputError("check_user_cone: cone dimension " + std::to_string(cone.rays.rows()) +
                     " does not match generator dimension " + std::to_string(gens.dim()));
  UserConeCheck out;
  const InvarianceResult inv = invariance_check(gens, cone.rays, cfg);
  out.residual = inv.residual;
  out.worst_generator = inv.worst_generator;
  out.worst_ray = inv.worst_ray;
  out.invariant = inv.residual <= cfg.lp_feas;
  out.pointed = pointedness_check(cone.rays, cfg).pointed;
  return out;
}

// ---------------------------------------------------------------------------
// Index-one base element

enum class BaseKind { Simple, Defective, Nilpotent };

inline const char *to_string(BaseKind k) {
  switch (k) {
  case BaseKind::Simple: return "simple";
  case BaseKind::Defective: return "defective";
  case BaseKind::Nilpotent: return "nilpotent";
  }
  return "simple";
}

struct IndexOneElement {
  Word word;
  /// Spectral-radius normalized product (unchanged when nilpotent).
  RealMatrix matrix;
  BaseKind kind = BaseKind::Simple;
  /// rho / |lambda_2|, infinite when every other eigenvalue is zero.
  double gap_ratio = 0.0;
};

/// First sampled element of index one, preferring (in this order) a simple
/// real positive leading eigenvalue separated from the rest of the spectrum,
/// any simple real positive one, a defective one, and finally a nilpotent
/// element.
inline std::optional<IndexOneElement> find_index_one(const SemigroupSample &sample,
                                                     const ToleranceConfig &cfg = {}) {
  if (sample.empty()) throw InputError("find_index_one: empty sample");
  std::optional<IndexOneElement> best;
  int best_rank = 4;
  const double separated = 1.0 + 100.0 * cfg.eig_cluster_rel;
  for (const auto &e : sample.elements) {
    const SpectralSummary s = full_spectrum(e.normalized, cfg);
    if (s.expansion_index != 1) continue;
    IndexOneElement cand;
    cand.word = e.word;
    int rank = 0;
    if (s.spectral_radius <= cfg.zero_rho_abs) {
      cand.kind = BaseKind::Nilpotent;
      cand.matrix = e.product;
      rank = 3;
    } else {
      const EigenvalueCluster &lead = s.leading.front();
      if (lead.value.imag() != 0.0 || lead.value.real() <= 0.0) continue;
      double second = 0.0;
      for (const auto &c : s.eigenvalues)
        if (std::abs(c.value - lead.value) > 0.0 && c.algebraic > 0 &&
            !(std::abs(c.value - lead.value) <= c.spread + lead.spread &&
              c.algebraic == lead.algebraic))
          second = std::max(second, std::abs(c.value));
      cand.gap_ratio = second > 0.0 ? s.spectral_radius / second
                                    : std::numeric_limits<double>::infinity();
      cand.matrix = e.normalized / s.spectral_radius;
      if (lead.algebraic == 1) {
        cand.kind = BaseKind::Simple;
        rank = cand.gap_ratio > separated ? 0 : 1;
      } else {
        cand.kind = BaseKind::Defective;
        rank = 2;
      }
    }
    if (rank < best_rank) {
      best_rank = rank;
      best = std::move(cand);
      if (rank == 0) break;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Cone construction

enum class BuildStatus { Built, HalfspaceViolated, NoIndexOneElement, NilpotentBranchBuilt, Failed };

inline const char *to_string(BuildStatus s) {
  switch (s) {
  case BuildStatus::Built: return "Built";
  case BuildStatus::HalfspaceViolated: return "HalfspaceViolated";
  case BuildStatus::NoIndexOneElement: return "NoIndexOneElement";
  case BuildStatus::NilpotentBranchBuilt: return "NilpotentBranchBuilt";
  case BuildStatus::Failed: return "Failed";
  }
  return "Failed";
}

struct ConeBuildOutcome {
  BuildStatus status = BuildStatus::Failed;
  std::optional<ConeApprox> cone;
  std::optional<Word> base_word;
  std::optional<Word> violator;
  /// <a, X b> / ||X b|| for the violator (negative).
  double violation = 0.0;
  /// Seed vector and half-space functional used for the construction.
  std::optional<RealVector> seed;
  std::optional<RealVector> halfspace;
  std::string reason;
};

struct BuildOptions {
  std::size_t ray_cap = 10000;
  std::size_t max_refinement_rounds = 64;
  bool refine = true;
  /// Allow enlarging a slowly closing orbit cone (see inflate_to_invariant)
  /// once `exact_rounds` closure rounds have run or the cone has more than
  /// `exact_rays * d` rays.
  bool inflate = true;
  std::size_t exact_rounds = 4;
  std::size_t exact_rays = 40;
};

namespace detail {

struct TaggedRay {
  RealVector v;
  Word word;
  /// Every generator image was already inside the (smaller) earlier cone.
  bool settled = false;
};

/// Removes near-duplicate unit rays, keeping first occurrences.
inline std::vector<TaggedRay> dedup_rays(std::vector<TaggedRay> rays, double tol) {
  if (rays.empty()) return rays;
  const Index d = rays.front().v.size();
  RealVector w(d);
  for (Index i = 0; i < d; ++i) w(i) = 1.0 / (static_cast<double>(i) + 1.4142135623730951);
  w.normalize();
  std::multimap<double, std::size_t> index;
  std::vector<TaggedRay> out;
  for (auto &r : rays) {
    const double k = w.dot(r.v);
    bool dup = false;
    for (auto it = index.lower_bound(k - tol); it != index.end() && it->first <= k + tol; ++it)
      if ((out[it->second].v - r.v).norm() <= tol) {
        dup = true;
        break;
      }
    if (dup) continue;
    index.emplace(k, out.size());
    out.push_back(std::move(r));
  }
  return out;
}

/// Greedy furthest-point selection of at most `cap` rays; returns the largest
/// angle between a dropped ray and its nearest kept ray.
inline double thin_rays(std::vector<TaggedRay> &rays, std::size_t cap) {
  if (rays.size() <= cap) return 0.0;
  const std::size_t n = rays.size();
  std::vector<double> best_cos(n, -2.0);
  std::vector<char> kept(n, 0);
  std::vector<std::size_t> order;
  std::size_t cur = 0;
  for (std::size_t step = 0; step < cap; ++step) {
    kept[cur] = 1;
    order.push_back(cur);
    std::size_t next = n;
    double worst = 2.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (kept[j]) continue;
      best_cos[j] = std::max(best_cos[j], rays[j].v.dot(rays[cur].v));
      if (best_cos[j] < worst) {
        worst = best_cos[j];
        next = j;
      }
    }
    if (next == n) break;
    cur = next;
  }
  double angle = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (!kept[j]) angle = std::max(angle, std::acos(std::clamp(best_cos[j], -1.0, 1.0)));
  std::sort(order.begin(), order.end());
  std::vector<TaggedRay> out;
  out.reserve(order.size());
  for (std::size_t j : order) out.push_back(std::move(rays[j]));
  rays = std::move(out);
  return angle;
}

inline RealMatrix as_matrix(const std::vector<TaggedRay> &rays, Index d) {
  RealMatrix m(d, static_cast<Index>(rays.size()));
  for (std::size_t k = 0; k < rays.size(); ++k) m.col(static_cast<Index>(k)) = rays[k].v;
  return m;
}

/// Drops rays lying (within `tol`) in the cone of the others. Rays are
/// visited from the outside in so that most interior rays are rejected
/// against a small working set.
inline std::vector<TaggedRay> reduce_to_generating(std::vector<TaggedRay> rays, double tol) {
  if (rays.size() <= 1) return rays;
  const Index d = rays.front().v.size();
  RealVector centre = RealVector::Zero(d);
  for (const auto &r : rays) centre += r.v;
  std::vector<std::size_t> order(rays.size());
  std::iota(order.begin(), order.end(), 0);
  if (centre.norm() > 0.0) {
    centre.normalize();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return rays[i].v.dot(centre) < rays[j].v.dot(centre);
    });
  }
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    if (!kept.empty()) {
      RealMatrix m(d, static_cast<Index>(kept.size()));
      for (std::size_t k = 0; k < kept.size(); ++k) m.col(static_cast<Index>(k)) = rays[kept[k]].v;
      if (lp::cone_distance_rel(m, rays[i].v, tol) <= tol) continue;
    }
    kept.push_back(i);
  }
  // Final sweep: earlier rays may have become interior.
  std::vector<char> alive(kept.size(), 1);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    std::vector<Index> others;
    for (std::size_t q = 0; q < kept.size(); ++q)
      if (q != k && alive[q]) others.push_back(static_cast<Index>(kept[q]));
    if (others.empty()) continue;
    RealMatrix m(d, static_cast<Index>(others.size()));
    for (std::size_t q = 0; q < others.size(); ++q)
      m.col(static_cast<Index>(q)) = rays[static_cast<std::size_t>(others[q])].v;
    if (lp::cone_distance_rel(m, rays[kept[k]].v, tol) <= tol) alive[k] = 0;
  }
  std::vector<std::size_t> final_idx;
  for (std::size_t k = 0; k < kept.size(); ++k)
    if (alive[k]) final_idx.push_back(kept[k]);
  std::sort(final_idx.begin(), final_idx.end());
  std::vector<TaggedRay> out;
  out.reserve(final_idx.size());
  for (std::size_t i : final_idx) out.push_back(std::move(rays[i]));
  return out;
}

inline constexpr double kPruneTol = 1e-13;

/// True when every generator image of every column lies within `limit`
/// (relative) of cone(rays); stops at the first failure.
inline bool images_within(const GeneratorSet &gens, const RealMatrix &rays, double limit) {
  for (Index j = 0; j < rays.cols(); ++j)
    for (std::size_t g = 0; g < gens.size(); ++g)
      if (lp::cone_distance_rel(rays, gens[g] * rays.col(j), limit) > limit) return false;
  return true;
}

/// Scales the cross-section of cone(rays) about its centroid direction by
/// 1 + eta for growing eta until the enlarged cone is invariant. A set that
/// contracts the cone strictly into itself absorbs the enlargement; returns
/// eta and the enlarged rays, or nothing.
inline std::optional<std::pair<double, std::vector<TaggedRay>>>
inflate_to_invariant(const GeneratorSet &gens, const std::vector<TaggedRay> &rays, double worst,
                     const ToleranceConfig &cfg) {
  const Index d = gens.dim();
  RealVector c = RealVector::Zero(d);
  for (const auto &r : rays) c += r.v;
  if (c.norm() == 0.0) return std::nullopt;
  c.normalize();
  for (const auto &r : rays)
    if (c.dot(r.v) < 0.05) return std::nullopt;
  for (double eta = std::max(1e-6, 10.0 * worst); eta <= 0.1; eta *= 4.0) {
    std::vector<TaggedRay> grown;
    grown.reserve(rays.size());
    for (const auto &r : rays) {
      const RealVector p = r.v / c.dot(r.v);
      grown.push_back({(c + (1.0 + eta) * (p - c)).normalized(), r.word, false});
    }
    if (images_within(gens, as_matrix(grown, d), 0.5 * cfg.lp_feas))
      return std::make_pair(eta, std::move(grown));
  }
  return std::nullopt;
}

/// Shared tail of both construction branches: dedup, thinning, reduction to
/// generating rays, closure under the generators beyond the horizon, then
/// pointedness and invariance.
inline ConeBuildOutcome finish_cone(const GeneratorSet &gens, std::vector<TaggedRay> rays,
                                    const RealVector &functional, BuildStatus success,
                                    bool low_confidence, const ToleranceConfig &cfg,
                                    const BuildOptions &opts) {
  const Index d = gens.dim();
  ConeBuildOutcome out;
  out.halfspace = functional;

  rays = dedup_rays(std::move(rays), cfg.dedup_threshold(d));
  const double thinning = thin_rays(rays, opts.ray_cap);
  rays = reduce_to_generating(std::move(rays), kPruneTol);

  std::size_t rounds = 0;
  double inflation = 0.0;
  if (opts.refine) {
    for (; rounds < opts.max_refinement_rounds; ++rounds) {
      const RealMatrix current = as_matrix(rays, d);
      std::vector<TaggedRay> fresh;
      double worst = 0.0;
      for (auto &r : rays) {
        if (r.settled) continue;
        bool inside = true;
        for (std::size_t g = 0; g < gens.size(); ++g) {
          RealVector w = gens[g] * r.v;
          const double nw = w.norm();
          if (nw <= 1e-13 * gens[g].norm()) continue;
          w /= nw;
          const double h = functional.dot(w);
          if (h < -cfg.lp_feas) {
            out.status = BuildStatus::HalfspaceViolated;
            out.violator = r.word.then(g);
            out.violation = h;
            return out;
          }
          const double dist = lp::cone_distance_rel(current, w, 0.1 * cfg.lp_feas);
          worst = std::max(worst, dist);
          if (dist > 0.1 * cfg.lp_feas) {
            inside = false;
            fresh.push_back({w, r.word.then(g)});
          }
        }
        r.settled = inside;
      }
      if (fresh.empty() || worst <= 0.5 * cfg.lp_feas) break;
      if (opts.inflate && (rounds + 1 >= opts.exact_rounds || rays.size() > opts.exact_rays * static_cast<std::size_t>(d))) {
        if (auto infl = inflate_to_invariant(gens, rays, worst, cfg)) {
          inflation = infl->first;
          rays = std::move(infl->second);
          ++rounds;
          break;
        }
      }
      fresh = dedup_rays(std::move(fresh), cfg.dedup_threshold(d));
      for (auto &f : fresh) rays.push_back(std::move(f));
      rays = reduce_to_generating(std::move(rays), kPruneTol);
      if (rays.size() > opts.ray_cap) {
        out.reason = "ray budget exceeded while closing the cone under the generators";
        break;
      }
    }
  }

  ConeApprox cone;
  cone.dim = d;
  cone.rays = as_matrix(rays, d);
  for (const auto &r : rays) cone.ray_words.push_back(r.word);
  cone.thinning_angle = thinning;
  cone.low_confidence = low_confidence;
  cone.refinement_rounds = rounds;
  cone.inflation = inflation;
  cone.full_dimensional =
      Eigen::JacobiSVD<RealMatrix>(cone.rays).setThreshold(cfg.rank_threshold(d)).rank() == d;

  const PointednessResult pr = pointedness_check(cone.rays, cfg);
  cone.pointed = pr.pointed;
  cone.support_functional = pr.functional;
  cone.strict_margin = pr.strict_margin;
  cone.invariance_residual = invariance_check(gens, cone.rays, cfg).residual;

  if (cone.pointed && cone.invariance_residual <= cfg.lp_feas) {
    out.status = success;
  } else {
    out.status = BuildStatus::Failed;
    if (out.reason.empty())
      out.reason = !cone.pointed ? "orbit cone is not pointed"
                                 : "invariance residual " +
                                       std::to_string(cone.invariance_residual) +
                                       " exceeds lp_feas after closure";
  }
  out.cone = std::move(cone);
  return out;
}

} // namespace detail

/// Orbit cone of the leading eigenvector b of an index-one element:
/// cone{X b : X sampled} plus b, required to lie in the half-space
/// <a, x> >= 0 of the left leading eigenvector a.
inline ConeBuildOutcome build_orbit_cone(const GeneratorSet &gens, const SemigroupSample &sample,
                                         const IndexOneElement &base,
                                         const ToleranceConfig &cfg = {},
                                         const BuildOptions &opts = {}) {
  ConeBuildOutcome out;
  out.base_word = base.word;
  LeadingPair pair;
  try {
    pair = base.kind == BaseKind::Simple ? leading_eigenvectors(base.matrix, cfg)
                                         : asymptotic_directions(base.matrix, cfg);
  } catch (const std::exception &e) {
    out.status = BuildStatus::Failed;
    out.reason = std::string("eigenvector extraction failed: ") + e.what();
    return out;
  }
  const RealVector &b = pair.right;
  const RealVector a = pair.left.normalized();
  out.seed = b;
  out.halfspace = a;

  std::vector<detail::TaggedRay> rays;
  rays.push_back({b, Word{}});
  for (const auto &e : sample.elements) {
    RealVector v = e.normalized * b;
    const double nv = v.norm();
    if (nv <= 1e-13) continue;
    v /= nv;
    const double h = a.dot(v);
    if (h < -cfg.lp_feas) {
      out.status = BuildStatus::HalfspaceViolated;
      out.violator = e.word;
      out.violation = h;
      return out;
    }
    rays.push_back({std::move(v), e.word});
  }

  ConeBuildOutcome fin = detail::finish_cone(gens, std::move(rays), a, BuildStatus::Built,
                                             pair.low_confidence, cfg, opts);
  fin.base_word = base.word;
  fin.seed = b;
  return fin;
}

/// Cone construction for a nilpotent base with a single Jordan chain: in the
/// chain basis e_1 = A^{d-1} e_d, ..., e_d the rays are X e_d and the
/// half-space is x_d >= 0.
inline ConeBuildOutcome nilpotent_branch(const GeneratorSet &gens, const SemigroupSample &sample,
                                         const IndexOneElement &base,
                                         const ToleranceConfig &cfg = {},
                                         const BuildOptions &opts = {}) {
  ConeBuildOutcome out;
  out.base_word = base.word;
  const Index d = gens.dim();
  const RealMatrix &a = base.matrix;
  if (d == 1) {
    // A 1x1 nilpotent is zero; its chain is the whole line.
  }
  RealMatrix top = RealMatrix::Identity(d, d);
  for (Index k = 0; k < d - 1; ++k) top = a * top;
  const double scale = std::pow(std::max(a.norm(), 1e-300), static_cast<double>(d - 1));
  if (d > 1 && top.norm() <= 1e-12 * scale) {
    out.status = BuildStatus::Failed;
    out.reason = "base is not a single nilpotent Jordan chain (A^(d-1) vanishes)";
    return out;
  }
  RealVector ed;
  if (d == 1) {
    ed = RealVector::Ones(1);
  } else {
    Eigen::JacobiSVD<RealMatrix> svd(top, Eigen::ComputeFullV);
    ed = svd.matrixV().col(0);
    canonical_sign(ed);
  }
  RealMatrix chain(d, d);
  chain.col(d - 1) = ed;
  for (Index j = d - 2; j >= 0; --j) chain.col(j) = a * chain.col(j + 1);
  const Eigen::VectorXd sv = Eigen::JacobiSVD<RealMatrix>(chain).singularValues();
  const double cond = sv(d - 1) > 0.0 ? sv(0) / sv(d - 1) : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e12)) {
    out.status = BuildStatus::Failed;
    out.reason = "Jordan chain basis is ill-conditioned (condition number " +
                 std::to_string(cond) + ")";
    return out;
  }
  const RealMatrix chain_inv = chain.inverse();
  const RealVector coord = chain_inv.row(d - 1).transpose();
  const RealVector functional = coord.normalized();
  out.seed = ed;
  out.halfspace = functional;

  const double sign_tol = cfg.lp_feas * std::max(1.0, coord.norm() * ed.norm());
  std::vector<detail::TaggedRay> rays;
  rays.push_back({ed.normalized(), Word{}});
  for (const auto &e : sample.elements) {
    const double xdd = coord.dot(e.normalized * ed);
    if (xdd < -sign_tol) {
      out.status = BuildStatus::HalfspaceViolated;
      out.violator = e.word;
      RealVector v = e.normalized * ed;
      out.violation = functional.dot(v) / std::max(v.norm(), 1e-300);
      return out;
    }
    RealVector v = e.normalized * ed;
    const double nv = v.norm();
    if (nv <= 1e-13) continue;
    rays.push_back({v / nv, e.word});
  }
  ConeBuildOutcome fin = detail::finish_cone(gens, std::move(rays), functional,
                                             BuildStatus::NilpotentBranchBuilt, false, cfg, opts);
  fin.base_word = base.word;
  fin.seed = ed;
  return fin;
}

/// Runs the construction matching the base element's kind.
inline ConeBuildOutcome build_cone(const GeneratorSet &gens, const SemigroupSample &sample,
                                   const ToleranceConfig &cfg = {}, const BuildOptions &opts = {}) {
  const auto base = find_index_one(sample, cfg);
  if (!base) {
    ConeBuildOutcome out;
    out.status = BuildStatus::NoIndexOneElement;
    out.reason = "no sampled element has expansion index one";
    return out;
  }
  if (base->kind == BaseKind::Nilpotent) return nilpotent_branch(gens, sample, *base, cfg, opts);
  return build_orbit_cone(gens, sample, *base, cfg, opts);
}

// ---------------------------------------------------------------------------
// Escalation and high-precision recheck

/// Word written as prefix followed by `power` repetitions of `base`.
struct PowerForm {
  Word prefix;
  Word base;
  std::size_t power = 1;

  Word expand() const { return prefix.then(base.repeated(power)); }
};

namespace detail {

using Quad = boost::multiprecision::cpp_bin_float_quad;
using QuadMatrix = Eigen::Matrix<Quad, Eigen::Dynamic, Eigen::Dynamic>;

inline QuadMatrix to_quad(const RealMatrix &m) {
  QuadMatrix q(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) q(i, j) = Quad(m(i, j));
  return q;
}

inline QuadMatrix quad_mul(const QuadMatrix &x, const QuadMatrix &y) {
  QuadMatrix r(x.rows(), y.cols());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < y.cols(); ++j) {
      Quad s = 0;
      for (Index k = 0; k < x.cols(); ++k) s += x(i, k) * y(k, j);
      r(i, j) = s;
    }
  return r;
}

inline void quad_rescale(QuadMatrix &m) {
  Quad big = 0;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) big = std::max<Quad>(big, abs(m(i, j)));
  if (big > 0)
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) m(i, j) /= big;
}

/// Product of a word at quadruple precision, rescaled to max-entry one.
inline QuadMatrix quad_word_product(const GeneratorSet &gens, const Word &w) {
  QuadMatrix p = to_quad(gens[w.indices.front()]);
  quad_rescale(p);
  for (std::size_t i = 1; i < w.indices.size(); ++i) {
    p = quad_mul(to_quad(gens[w.indices[i]]), p);
    quad_rescale(p);
  }
  return p;
}

inline RealMatrix to_double(const QuadMatrix &q) {
  RealMatrix m(q.rows(), q.cols());
  for (Index i = 0; i < q.rows(); ++i)
    for (Index j = 0; j < q.cols(); ++j) m(i, j) = static_cast<double>(q(i, j));
  return m;
}

inline bool lacks_perron_loose(const RealMatrix &m, const ToleranceConfig &cfg) {
  return !full_spectrum(m, cfg.scaled(10.0)).has_perron;
}

} // namespace detail

/// Recomputes the product of `w` from the generators at quadruple precision
/// and confirms it has no Perron eigenvalue even with every tolerance
/// widened tenfold.
inline bool recheck_non_perron(const GeneratorSet &gens, const Word &w,
                               const ToleranceConfig &cfg = {}) {
  if (w.empty()) return false;
  return detail::lacks_perron_loose(detail::to_double(detail::quad_word_product(gens, w)), cfg);
}

/// Same as above for a word given in power form; the power is formed by
/// binary exponentiation at quadruple precision.
inline bool recheck_non_perron(const GeneratorSet &gens, const PowerForm &pf,
                               const ToleranceConfig &cfg = {}) {
  using detail::QuadMatrix;
  const Index d = gens.dim();
  QuadMatrix base = detail::quad_word_product(gens, pf.base);
  QuadMatrix acc = QuadMatrix::Identity(d, d);
  for (std::size_t k = pf.power; k > 0; k >>= 1) {
    if (k & 1U) {
      acc = detail::quad_mul(base, acc);
      detail::quad_rescale(acc);
    }
    if (k > 1) {
      base = detail::quad_mul(base, base);
      detail::quad_rescale(base);
    }
  }
  QuadMatrix full = pf.prefix.empty() ? acc
                                      : detail::quad_mul(acc, detail::quad_word_product(gens, pf.prefix));
  detail::quad_rescale(full);
  return detail::lacks_perron_loose(detail::to_double(full), cfg);
}

struct EscalationResult {
  bool found = false;
  PowerForm word;
  std::size_t k = 0;
  SpectralSummary summary;
  bool recheck_passed = false;
  std::string diagnostic;
};

/// Searches A^k X for k = 1, 2, 4, ..., k_max (k = 1..d-1 for a nilpotent A)
/// until the product has no Perron eigenvalue. A and X are the products of
/// `base_word` and `violator`.
inline EscalationResult escalate_halfspace_violation(const GeneratorSet &gens,
                                                     const Word &base_word, const Word &violator,
                                                     const ToleranceConfig &cfg = {},
                                                     std::size_t k_max = std::size_t{1} << 14) {
  EscalationResult res;
  const Index d = gens.dim();
  RealMatrix a = normalize_s1(gens.product(base_word), cfg);
  RealMatrix x = gens.product(violator);
  if (x.norm() > 0.0) x /= x.norm();
  const bool nilpotent = spectral_radius(a) <= cfg.zero_rho_abs;

  auto test = [&](const RealMatrix &ak, std::size_t k) {
    RealMatrix m = ak * x;
    const double nm = m.norm();
    if (nm == 0.0) return false;
    m /= nm;
    SpectralSummary s = full_spectrum(m, cfg);
    if (s.has_perron) return false;
    res.found = true;
    res.k = k;
    res.summary = std::move(s);
    res.word = PowerForm{violator, base_word, k};
    return true;
  };

  if (nilpotent) {
    if (a.norm() > 0.0) a /= a.norm();
    RealMatrix p = a;
    for (std::size_t k = 1; k < static_cast<std::size_t>(std::max<Index>(d, 2)); ++k) {
      if (test(p, k)) break;
      p = a * p;
    }
  } else {
    RealMatrix p = a;
    for (std::size_t k = 1; k <= k_max; k *= 2) {
      if (test(p, k)) break;
      p = p * p;
      const double np = p.norm();
      if (np == 0.0 || !std::isfinite(np)) {
        res.diagnostic = "powers of the base element vanished or overflowed";
        return res;
      }
      p /= np;
    }
  }
  if (!res.found) {
    res.diagnostic = "no non-Perron product A^k X found up to k = " + std::to_string(k_max) +
                     " (tolerance ambiguity)";
    return res;
  }
  res.recheck_passed = recheck_non_perron(gens, res.word, cfg);
  if (!res.recheck_passed)
    res.diagnostic = "non-Perron product did not survive the high-precision recheck";
  return res;
}

} // namespace pcone
