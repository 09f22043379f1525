#pragma once

// Finite truncations of the semigroup generated by a matrix set: enumeration
// up to a word-length horizon with deduplication up to positive scaling, the
// Perron audit, the semigroup index, and an irreducibility test.

#include "pcone/core.hpp"
#include "pcone/spectral.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <map>
#include <optional>

namespace pcone {

struct SampleElement {
  Word word;
  RealMatrix product;
  /// product / ||product||_F, orientation kept (A and -A stay distinct); the
  /// zero matrix is kept as zero.
  RealMatrix normalized;
};

struct SemigroupSample {
  std::size_t horizon = 0;
  std::vector<SampleElement> elements;
  std::size_t dedup_count = 0;
  bool truncated = false;

  bool empty() const { return elements.empty(); }
  std::size_t size() const { return elements.size(); }
  Index dim() const { return elements.empty() ? 0 : elements.front().product.rows(); }
};

namespace detail {

/// Ordered index over representatives keyed by a fixed linear projection, so
/// that neighbors within `tol` in Frobenius norm are found by a key range.
class DedupIndex {
public:
  DedupIndex(Index d, double tol) : tol_(tol), weights_(d * d) {
    for (Index i = 0; i < d * d; ++i)
      weights_(i) = 1.0 / (static_cast<double>(i) + 1.4142135623730951);
    weights_.normalize();
  }

  double key(const RealMatrix &m) const {
    return weights_.dot(Eigen::Map<const RealVector>(m.data(), m.size()));
  }

  std::optional<std::size_t> find(const RealMatrix &m,
                                  const std::vector<SampleElement> &elems) const {
    const double k = key(m);
    for (auto it = index_.lower_bound(k - tol_); it != index_.end() && it->first <= k + tol_;
         ++it)
      if ((elems[it->second].normalized - m).norm() <= tol_) return it->second;
    return std::nullopt;
  }

  void insert(const RealMatrix &m, std::size_t pos) { index_.emplace(key(m), pos); }

private:
  double tol_;
  RealVector weights_;
  std::multimap<double, std::size_t> index_;
};

} // namespace detail

/// Breadth-first enumeration of products of length 1..horizon. A product is
/// dropped when its unit-Frobenius normalization is within the dedup
/// tolerance of an earlier one (positive scaling only: A and -A differ).
/// Only newly found elements are extended, so finite groups close.
inline SemigroupSample enumerate(const GeneratorSet &gens, std::size_t horizon,
                                 const ToleranceConfig &cfg = {}, std::size_t cap = 200000) {
  gens.validate();
  if (horizon < 1) throw InputError("enumerate: horizon must be >= 1");
  if (cap < 1) throw InputError("enumerate: element cap must be >= 1");
  const Index d = gens.dim();

  SemigroupSample s;
  s.horizon = horizon;
  detail::DedupIndex index(d, cfg.dedup_threshold(d));

  auto try_add = [&](Word w, RealMatrix prod) -> bool {
    RealMatrix nz = prod.norm() == 0.0 ? prod : RealMatrix(prod / prod.norm());
    if (!prod.allFinite())
      throw NumericalError("enumerate: product for word " + w.str() + " overflowed");
    if (index.find(nz, s.elements)) {
      ++s.dedup_count;
      return false;
    }
    if (s.elements.size() >= cap) {
      s.truncated = true;
      return false;
    }
    index.insert(nz, s.elements.size());
    s.elements.push_back({std::move(w), std::move(prod), std::move(nz)});
    return true;
  };

  std::vector<std::size_t> frontier;
  for (std::size_t g = 0; g < gens.size(); ++g)
    if (try_add(Word{g}, gens[g])) frontier.push_back(s.elements.size() - 1);

  for (std::size_t len = 2; len <= horizon && !frontier.empty() && !s.truncated; ++len) {
    std::vector<std::size_t> next;
    for (std::size_t pos : frontier) {
      for (std::size_t g = 0; g < gens.size(); ++g) {
        const SampleElement &e = s.elements[pos];
        Word w = e.word.then(g);
        RealMatrix prod = gens[g] * e.product;
        if (try_add(std::move(w), std::move(prod))) next.push_back(s.elements.size() - 1);
        if (s.truncated) break;
      }
      if (s.truncated) break;
    }
    frontier = std::move(next);
  }
  return s;
}

struct PerronViolation {
  Word word;
  SpectralSummary summary;
};

struct PerronReport {
  bool all_perron = true;
  int min_index = 0;
  Word min_index_witness;
  std::vector<PerronViolation> violations;
  /// Per-element summaries in sample order.
  std::vector<SpectralSummary> summaries;
};

/// Spectral audit of every sampled representative.
inline PerronReport perron_audit(const SemigroupSample &sample, const ToleranceConfig &cfg = {}) {
  if (sample.empty()) throw InputError("perron_audit: empty sample");
  PerronReport r;
  r.min_index = std::numeric_limits<int>::max();
  r.summaries.reserve(sample.size());
  for (const auto &e : sample.elements) {
    SpectralSummary s;
    try {
      s = full_spectrum(e.normalized, cfg);
    } catch (const NumericalError &err) {
      throw NumericalError(std::string(err.what()) + " (word " + e.word.str() + ")");
    }
    if (!s.has_perron) r.violations.push_back({e.word, s});
    if (s.expansion_index < r.min_index) {
      r.min_index = s.expansion_index;
      r.min_index_witness = e.word;
    }
    r.summaries.push_back(std::move(s));
  }
  r.all_perron = r.violations.empty();
  return r;
}

/// Minimal expansion index over the sample and the first word attaining it.
inline std::pair<int, Word> semigroup_index(const SemigroupSample &sample,
                                            const ToleranceConfig &cfg = {}) {
  if (sample.empty()) throw InputError("semigroup_index: empty sample");
  const PerronReport r = perron_audit(sample, cfg);
  return {r.min_index, r.min_index_witness};
}

enum class IrreducibilityStatus { IrreducibleCertified, ReducibleCertified, Unknown };

inline const char *to_string(IrreducibilityStatus s) {
  switch (s) {
  case IrreducibilityStatus::IrreducibleCertified: return "IrreducibleCertified";
  case IrreducibilityStatus::ReducibleCertified: return "ReducibleCertified";
  case IrreducibilityStatus::Unknown: return "Unknown";
  }
  return "Unknown";
}

struct IrreducibilityVerdict {
  IrreducibilityStatus status = IrreducibilityStatus::Unknown;
  /// Orthonormal basis (columns) of a common invariant subspace.
  std::optional<RealMatrix> invariant_subspace;
  int algebra_dim = 0;
  std::string diagnostic;
};

namespace detail {

/// Smallest subspace containing span(seed) and invariant under every
/// generator, as an orthonormal basis. Vectors whose component outside the
/// current span is below `tol` (relative) are treated as inside.
inline RealMatrix invariant_closure(const GeneratorSet &gens, const RealMatrix &seed, double tol) {
  const Index d = gens.dim();
  std::vector<RealVector> basis;
  auto add = [&](RealVector v) {
    const double n0 = v.norm();
    if (n0 == 0.0) return false;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto &q : basis) v -= q.dot(v) * q;
    if (v.norm() <= tol * n0) return false;
    basis.push_back(v.normalized());
    return true;
  };
  for (Index j = 0; j < seed.cols(); ++j) add(seed.col(j));
  for (std::size_t next = 0; next < basis.size() && static_cast<Index>(basis.size()) < d; ++next)
    for (std::size_t g = 0; g < gens.size(); ++g) {
      add(gens[g] * basis[next]);
      if (static_cast<Index>(basis.size()) == d) break;
    }
  RealMatrix q(d, static_cast<Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) q.col(static_cast<Index>(k)) = basis[k];
  return q;
}

/// Largest relative amount by which a generator pushes the subspace out of
/// itself.
inline double subspace_leakage(const GeneratorSet &gens, const RealMatrix &q) {
  const Index d = gens.dim();
  const RealMatrix proj_out = RealMatrix::Identity(d, d) - q * q.transpose();
  double worst = 0.0;
  for (std::size_t g = 0; g < gens.size(); ++g) {
    const RealMatrix img = gens[g] * q;
    const double scale = std::max(gens[g].norm(), 1e-300);
    worst = std::max(worst, (proj_out * img).norm() / scale);
  }
  return worst;
}

/// Canonical orthonormal basis of span(q): sign-normalized columns of the
/// Q factor after projecting the standard basis, so the result does not
/// depend on how the span was reached.
inline RealMatrix canonical_basis(const RealMatrix &q) {
  if (q.cols() == 1) {
    RealVector v = q.col(0);
    canonical_sign(v);
    return v;
  }
  Eigen::HouseholderQR<RealMatrix> qr(q);
  RealMatrix b = qr.householderQ() * RealMatrix::Identity(q.rows(), q.cols());
  for (Index j = 0; j < b.cols(); ++j) {
    RealVector v = b.col(j);
    canonical_sign(v);
    b.col(j) = v;
  }
  return b;
}

} // namespace detail

/// Decides whether the generators share a nontrivial real invariant
/// subspace, in three steps:
///  (a) the span of the sampled products and the identity has dimension d^2
///      (the full matrix algebra) -> irreducible;
///  (b) the invariant closure of some generator eigenvector or real
///      eigen-plane is proper -> reducible, with that subspace;
///  (c) some generator has only one-dimensional eigenspaces and every one of
///      its seeds closes to the whole space -> irreducible, because any
///      invariant subspace contains one of those seeds.
/// Otherwise Unknown.
inline IrreducibilityVerdict irreducibility(const GeneratorSet &gens,
                                            const SemigroupSample &sample,
                                            const ToleranceConfig &cfg = {}) {
  if (sample.empty()) throw InputError("irreducibility: empty sample");
  const Index d = gens.dim();
  const Index d2 = d * d;
  IrreducibilityVerdict v;

  // (a) Algebra span. Greedy Gram-Schmidt picks at most d^2 candidates; the
  // final rank decision uses singular values of the picked set.
  {
    std::vector<RealVector> picked, ortho;
    auto consider = [&](const RealMatrix &m) {
      RealVector x = Eigen::Map<const RealVector>(m.data(), d2);
      const double n0 = x.norm();
      if (n0 == 0.0) return;
      x /= n0;
      RealVector r = x;
      for (int pass = 0; pass < 2; ++pass)
        for (const auto &q : ortho) r -= q.dot(r) * q;
      if (r.norm() > 1e-10) {
        picked.push_back(x);
        ortho.push_back(r.normalized());
      }
    };
    consider(RealMatrix::Identity(d, d));
    for (const auto &e : sample.elements) {
      if (static_cast<Index>(picked.size()) == d2) break;
      consider(e.normalized);
    }
    RealMatrix stack(d2, static_cast<Index>(picked.size()));
    for (std::size_t k = 0; k < picked.size(); ++k) stack.col(static_cast<Index>(k)) = picked[k];
    const Eigen::VectorXd sv = Eigen::JacobiSVD<RealMatrix>(stack).singularValues();
    const double thr = cfg.rank_threshold(d2) * (sv.size() ? sv(0) : 0.0);
    v.algebra_dim = static_cast<int>((sv.array() > thr).count());
    bool ambiguous = false;
    for (Index i = 0; i < sv.size(); ++i)
      if (sv(i) > thr && sv(i) < 100.0 * thr) ambiguous = true;
    if (ambiguous)
      v.diagnostic = "algebra rank is within a factor 100 of the rank threshold";
    if (v.algebra_dim == d2 && !ambiguous) {
      v.status = IrreducibilityStatus::IrreducibleCertified;
      return v;
    }
  }

  // (b) and (c): eigenvector-seeded invariant closures.
  const double tol = cfg.lp_feas;
  bool complete_generator_found = false;
  for (std::size_t g = 0; g < gens.size(); ++g) {
    bool complete = true;
    bool all_full = true;
    for (const auto &es : real_eigenspaces(gens[g], cfg)) {
      if (es.geometric > 1) complete = false;
      for (const auto &seed : es.seeds) {
        const RealMatrix q = detail::invariant_closure(gens, seed, tol);
        if (q.cols() >= 1 && q.cols() < d) {
          if (detail::subspace_leakage(gens, q) <= cfg.lp_feas) {
            v.status = IrreducibilityStatus::ReducibleCertified;
            v.invariant_subspace = detail::canonical_basis(q);
            return v;
          }
          all_full = false;
        } else if (q.cols() < d) {
          all_full = false;
        }
      }
    }
    if (complete && all_full) complete_generator_found = true;
  }
  if (complete_generator_found && v.diagnostic.empty()) {
    v.status = IrreducibilityStatus::IrreducibleCertified;
    v.diagnostic = "every eigen-seed of a generator with simple eigenspaces spans the space";
    return v;
  }
  if (v.diagnostic.empty())
    v.diagnostic = "algebra span incomplete and eigen-seed list not exhaustive";
  return v;
}

} // namespace pcone
