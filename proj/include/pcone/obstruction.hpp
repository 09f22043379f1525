#pragma once

// Certificates that no common invariant cone exists, and the verdict that
// combines them with the cone construction.

#include "pcone/cone.hpp"
#include "pcone/core.hpp"
#include "pcone/semigroup.hpp"
#include "pcone/spectral.hpp"

#include <Eigen/SVD>

#include <cstdint>
#include <optional>
#include <random>

namespace pcone {

enum class ObstructionKind { NonPerronWitness, OrthogonalNoFixedVector, NegativeMapping };

inline const char *to_string(ObstructionKind k) {
  switch (k) {
  case ObstructionKind::NonPerronWitness: return "NonPerronWitness";
  case ObstructionKind::OrthogonalNoFixedVector: return "OrthogonalNoFixedVector";
  case ObstructionKind::NegativeMapping: return "NegativeMapping";
  }
  return "NonPerronWitness";
}

struct Obstruction {
  ObstructionKind kind = ObstructionKind::NonPerronWitness;
  /// Witness word (non-Perron product or negative mapping).
  std::optional<Word> word;
  /// Compact form of long escalation words.
  std::optional<PowerForm> power_form;
  std::optional<SpectralSummary> summary;
  /// Negative mapping: P v = -factor * v up to `residual`.
  std::optional<RealVector> vector;
  double factor = 0.0;
  double residual = 0.0;
  bool rechecked = false;
  std::string detail;
};

/// Shortest sampled word without a Perron eigenvalue, if any.
inline std::optional<Obstruction> krein_rutman_screen(const PerronReport &report) {
  if (report.violations.empty()) return std::nullopt;
  const PerronViolation *best = &report.violations.front();
  for (const auto &v : report.violations)
    if (v.word < best->word) best = &v;
  Obstruction o;
  o.kind = ObstructionKind::NonPerronWitness;
  o.word = best->word;
  o.summary = best->summary;
  o.detail = "product " + best->word.str() +
             " has no real nonnegative leading eigenvalue; a semigroup with an invariant cone "
             "is Perron (Krein-Rutman)";
  return o;
}

/// True iff every generator satisfies ||G^T G - I||_F <= d * lp_feas.
inline bool orthogonality_test(const GeneratorSet &gens, const ToleranceConfig &cfg = {}) {
  const Index d = gens.dim();
  const RealMatrix id = RealMatrix::Identity(d, d);
  for (const auto &g : gens.matrices)
    if ((g.transpose() * g - id).norm() > static_cast<double>(d) * cfg.lp_feas) return false;
  return true;
}

/// Unit vector fixed by every generator (kernel of the stacked G_i - I), or
/// absent when only the origin is fixed. The whole space gives e_1.
inline std::optional<RealVector> common_fixed_vector(const GeneratorSet &gens,
                                                     const ToleranceConfig &cfg = {}) {
  const Index d = gens.dim();
  const Index m = static_cast<Index>(gens.size());
  RealMatrix stack(m * d, d);
  for (Index i = 0; i < m; ++i)
    stack.block(i * d, 0, d, d) = gens[static_cast<std::size_t>(i)] - RealMatrix::Identity(d, d);
  if (stack.norm() <= cfg.rank_threshold(d)) return unit_vector(d, 0);
  Eigen::JacobiSVD<RealMatrix> svd(stack, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double thr = std::max(cfg.rank_threshold(d) * std::max(sv(0), 1.0), cfg.lp_feas);
  if (sv(d - 1) > thr) return std::nullopt;
  RealVector v = svd.matrixV().col(d - 1);
  canonical_sign(v);
  return v;
}

/// Standard basis followed by `count` Gaussian unit vectors from `seed`.
inline std::vector<RealVector> default_seeds(Index d, std::size_t count, std::uint64_t seed) {
  std::vector<RealVector> out;
  for (Index i = 0; i < d; ++i) out.push_back(unit_vector(d, i));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  for (std::size_t k = 0; k < count; ++k) {
    RealVector v(d);
    do {
      for (Index i = 0; i < d; ++i) v(i) = gauss(rng);
    } while (v.norm() == 0.0);
    out.push_back(v.normalized());
  }
  return out;
}

namespace detail {

inline std::optional<Obstruction> negative_image(const SampleElement &e, const RealVector &seed,
                                                 const ToleranceConfig &cfg) {
  const RealVector v = seed.normalized();
  const RealVector w = e.normalized * v;
  const double c = -w.dot(v);
  if (c <= cfg.lp_feas) return std::nullopt;
  const double res = (w + c * v).norm();
  if (res > cfg.lp_feas * std::max(1.0, w.norm())) return std::nullopt;
  Obstruction o;
  o.kind = ObstructionKind::NegativeMapping;
  o.word = e.word;
  o.vector = v;
  const double scale = e.product.norm();
  o.factor = c * scale;
  o.residual = (e.product * v + o.factor * v).norm();
  o.detail = "product " + e.word.str() +
             " maps the seed to a negative multiple of itself, so no invariant cone contains it";
  return o;
}

} // namespace detail

/// First negative mapping P v = -c v (c > 0) over sampled products in word
/// order, then seeds in order.
inline std::optional<Obstruction> negative_mapping_search(const SemigroupSample &sample,
                                                          const std::vector<RealVector> &seeds,
                                                          const ToleranceConfig &cfg = {}) {
  if (sample.empty()) throw InputError("negative_mapping_search: empty sample");
  if (seeds.empty()) throw InputError("negative_mapping_search: no seeds");
  for (const auto &e : sample.elements)
    for (const auto &s : seeds)
      if (auto o = detail::negative_image(e, s, cfg)) return o;
  return std::nullopt;
}

struct SeedCoverage {
  std::size_t witnessed = 0;
  std::size_t total = 0;
  std::vector<Obstruction> witnesses;

  bool complete() const { return total > 0 && witnessed == total; }
};

/// For each seed, the first sampled product that maps it to a negative
/// multiple of itself.
inline SeedCoverage negative_mapping_coverage(const SemigroupSample &sample,
                                              const std::vector<RealVector> &seeds,
                                              const ToleranceConfig &cfg = {}) {
  SeedCoverage cov;
  cov.total = seeds.size();
  for (const auto &s : seeds)
    for (const auto &e : sample.elements)
      if (auto o = detail::negative_image(e, s, cfg)) {
        ++cov.witnessed;
        cov.witnesses.push_back(std::move(*o));
        break;
      }
  return cov;
}

// ---------------------------------------------------------------------------
// Verdict

enum class VerdictKind { ConeFound, NoConeCertified, Inconclusive };

inline const char *to_string(VerdictKind k) {
  switch (k) {
  case VerdictKind::ConeFound: return "ConeFound";
  case VerdictKind::NoConeCertified: return "NoConeCertified";
  case VerdictKind::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

struct VerdictOptions {
  std::size_t random_seeds = 32;
  std::uint64_t seed = 0;
  /// Certify non-existence when every seed has a negative mapping.
  bool full_seed_coverage = true;
};

struct Verdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  std::optional<ConeApprox> cone;
  std::optional<Obstruction> obstruction;
  std::vector<Obstruction> evidence;
  std::optional<EscalationResult> escalation;
  std::size_t seeds_witnessed = 0;
  std::size_t seeds_total = 0;
  /// Perron, irreducible and index at least three: the regime where the
  /// theory neither guarantees nor rules out a cone.
  bool exceptional_regime = false;
  std::vector<std::string> notes;
};

inline Verdict verdict(const GeneratorSet &gens, const SemigroupSample &sample,
                       const PerronReport &report, const IrreducibilityVerdict &irr,
                       const ConeBuildOutcome &build, const ToleranceConfig &cfg = {},
                       const VerdictOptions &opts = {}) {
  Verdict v;

  // A non-Perron product excludes every cone, and also excludes ConeFound.
  if (auto kr = krein_rutman_screen(report)) {
    kr->rechecked = recheck_non_perron(gens, *kr->word, cfg);
    if (kr->rechecked) {
      v.kind = VerdictKind::NoConeCertified;
      v.obstruction = std::move(kr);
      return v;
    }
    v.notes.push_back("non-Perron product " + kr->word->str() +
                      " did not survive the high-precision recheck");
    v.evidence.push_back(std::move(*kr));
    return v;
  }

  if ((build.status == BuildStatus::Built || build.status == BuildStatus::NilpotentBranchBuilt) &&
      build.cone && build.cone->invariance_residual <= cfg.lp_feas) {
    v.kind = VerdictKind::ConeFound;
    v.cone = build.cone;
    if (sample.truncated)
      v.notes.push_back("semigroup sample was truncated at the element cap");
    return v;
  }

  if (orthogonality_test(gens, cfg)) {
    const auto fixed = common_fixed_vector(gens, cfg);
    if (!fixed) {
      Obstruction o;
      o.kind = ObstructionKind::OrthogonalNoFixedVector;
      o.detail = "orthogonal generators with no common fixed vector; an orthogonal set with an "
                 "invariant cone fixes its centre of gravity";
      v.kind = VerdictKind::NoConeCertified;
      v.obstruction = std::move(o);
      return v;
    }
    v.notes.push_back("orthogonal generators fix a common unit vector; the circular cone around "
                      "it is invariant");
  }

  if (build.status == BuildStatus::HalfspaceViolated && build.base_word && build.violator) {
    EscalationResult esc = escalate_halfspace_violation(gens, *build.base_word, *build.violator, cfg);
    if (esc.found && esc.recheck_passed) {
      Obstruction o;
      o.kind = ObstructionKind::NonPerronWitness;
      o.power_form = esc.word;
      if (esc.word.expand().length() <= 4096) o.word = esc.word.expand();
      o.summary = esc.summary;
      o.rechecked = true;
      o.detail = "violator " + build.violator->str() + " followed by base " +
                 build.base_word->str() + "^" + std::to_string(esc.k) +
                 " has no Perron eigenvalue (half-space escalation)";
      v.kind = VerdictKind::NoConeCertified;
      v.obstruction = std::move(o);
      v.escalation = std::move(esc);
      return v;
    }
    v.notes.push_back("half-space escalation: " + esc.diagnostic);
    v.escalation = std::move(esc);
  }

  const auto seeds = default_seeds(gens.dim(), opts.random_seeds, opts.seed);
  SeedCoverage cov = negative_mapping_coverage(sample, seeds, cfg);
  v.seeds_witnessed = cov.witnessed;
  v.seeds_total = cov.total;
  if (opts.full_seed_coverage && cov.complete()) {
    Obstruction o = cov.witnesses.front();
    o.detail = "every seed (" + std::to_string(cov.total) +
               ") is mapped to a negative multiple of itself by some product";
    v.kind = VerdictKind::NoConeCertified;
    v.obstruction = std::move(o);
    v.evidence = std::move(cov.witnesses);
    return v;
  }
  if (!cov.witnesses.empty()) v.evidence.push_back(cov.witnesses.front());

  v.kind = VerdictKind::Inconclusive;
  v.exceptional_regime = report.all_perron && report.min_index >= 3 &&
                         irr.status == IrreducibilityStatus::IrreducibleCertified;
  if (v.exceptional_regime)
    v.notes.push_back("Perron, irreducible and index >= 3: a cone is neither guaranteed nor "
                      "excluded by the theory");
  if (irr.status == IrreducibilityStatus::ReducibleCertified)
    v.notes.push_back("generators are reducible; the index-two obstruction does not apply");
  if (!build.reason.empty()) v.notes.push_back("cone construction: " + build.reason);
  return v;
}

} // namespace pcone
