#pragma once

// Shared vocabulary: matrices, words, generator sets, tolerances and errors.

#include <Eigen/Dense>

#include <cmath>
#include <compare>
#include <complex>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcone {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Complex = std::complex<double>;
using Index = Eigen::Index;

/// Malformed or out-of-contract user input (bad dimensions, non-finite entries).
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed to converge or produced an unusable result.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An operation was called on data that violates its stated precondition.
class PreconditionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline std::string echo_matrix(const RealMatrix &m) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (Index i = 0; i < m.rows(); ++i) {
    os << (i ? ", [" : "[");
    for (Index j = 0; j < m.cols(); ++j)
      os << (j ? ", " : "") << m(i, j);
    os << "]";
  }
  os << "]";
  return os.str();
}

/// Throws InputError unless `m` is a nonempty square matrix of finite reals.
inline void validate_matrix(const RealMatrix &m, const std::string &what = "matrix") {
  if (m.rows() < 1 || m.rows() != m.cols())
    throw InputError(what + " must be square with dimension >= 1, got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  if (!m.allFinite())
    throw InputError(what + " has non-finite entries");
}

/// Numerical tolerances shared by every module.
///
/// `rank_rel` and `dedup_rel` are per-dimension factors: the effective
/// thresholds are `rank_rel * d` and `dedup_rel * d`.
struct ToleranceConfig {
  double eig_cluster_rel = 1e-8;
  double rank_rel = 1e-9;
  double lp_feas = 1e-7;
  double zero_rho_abs = 1e-12;
  double dedup_rel = 1e-9;

  static constexpr double kDefaultLpFeas = 1e-7;

  /// Sets lp_feas to `tol` and scales the remaining tolerances by the same
  /// factor relative to the defaults.
  static ToleranceConfig from_lp_feas(double tol) {
    ToleranceConfig cfg;
    const double f = tol / kDefaultLpFeas;
    cfg.lp_feas = tol;
    cfg.eig_cluster_rel *= f;
    cfg.rank_rel *= f;
    cfg.zero_rho_abs *= f;
    cfg.dedup_rel *= f;
    cfg.validate();
    return cfg;
  }

  /// Same configuration with every tolerance multiplied by `f`.
  ToleranceConfig scaled(double f) const {
    ToleranceConfig cfg = *this;
    cfg.eig_cluster_rel *= f;
    cfg.rank_rel *= f;
    cfg.lp_feas *= f;
    cfg.zero_rho_abs *= f;
    cfg.dedup_rel *= f;
    return cfg;
  }

  double rank_threshold(Index d) const { return rank_rel * static_cast<double>(d); }
  double dedup_threshold(Index d) const { return dedup_rel * static_cast<double>(d); }

  void validate() const {
    for (double t : {eig_cluster_rel, rank_rel, lp_feas, zero_rho_abs, dedup_rel})
      if (!(t > 0.0) || !std::isfinite(t))
        throw InputError("all tolerances must be positive and finite");
    if (eig_cluster_rel >= 1.0)
      throw InputError("eig_cluster_rel must be < 1");
  }
};

/// A semigroup element as a sequence of generator indices. The first index
/// is applied first, so the product is A[i_k] * ... * A[i_1].
struct Word {
  std::vector<std::size_t> indices;

  Word() = default;
  explicit Word(std::vector<std::size_t> idx) : indices(std::move(idx)) {}
  Word(std::initializer_list<std::size_t> idx) : indices(idx) {}

  std::size_t length() const { return indices.size(); }
  bool empty() const { return indices.empty(); }

  /// Word for "apply this, then `next`".
  Word then(const Word &next) const {
    Word w = *this;
    w.indices.insert(w.indices.end(), next.indices.begin(), next.indices.end());
    return w;
  }
  Word then(std::size_t g) const {
    Word w = *this;
    w.indices.push_back(g);
    return w;
  }
  Word repeated(std::size_t k) const {
    Word w;
    w.indices.reserve(indices.size() * k);
    for (std::size_t i = 0; i < k; ++i)
      w.indices.insert(w.indices.end(), indices.begin(), indices.end());
    return w;
  }

  std::string str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(indices[i]);
    }
    return s + "]";
  }

  bool operator==(const Word &) const = default;

  /// Shortlex: shorter words first, then lexicographic.
  std::strong_ordering operator<=>(const Word &o) const {
    if (auto c = indices.size() <=> o.indices.size(); c != 0) return c;
    return indices <=> o.indices;
  }
};

/// A finite, named list of square matrices of one common dimension.
struct GeneratorSet {
  std::vector<std::string> names;
  std::vector<RealMatrix> matrices;

  GeneratorSet() = default;
  explicit GeneratorSet(std::vector<RealMatrix> mats, std::vector<std::string> nm = {})
      : names(std::move(nm)), matrices(std::move(mats)) {
    if (names.empty())
      for (std::size_t i = 0; i < matrices.size(); ++i)
        names.push_back("A" + std::to_string(i + 1));
    validate();
  }

  std::size_t size() const { return matrices.size(); }
  Index dim() const { return matrices.empty() ? 0 : matrices.front().rows(); }
  const RealMatrix &operator[](std::size_t i) const { return matrices.at(i); }

  void validate() const {
    if (matrices.empty()) throw InputError("generator set is empty");
    if (names.size() != matrices.size())
      throw InputError("generator names and matrices differ in count");
    const Index d = matrices.front().rows();
    for (std::size_t i = 0; i < matrices.size(); ++i) {
      validate_matrix(matrices[i], "generator " + names[i]);
      if (matrices[i].rows() != d)
        throw InputError("generator " + names[i] + " has dimension " +
                         std::to_string(matrices[i].rows()) + ", expected " +
                         std::to_string(d));
    }
  }

  /// Product of the word's generators, first index applied first.
  RealMatrix product(const Word &w) const {
    if (w.empty()) throw InputError("empty word has no product");
    RealMatrix p = matrices.at(w.indices.front());
    for (std::size_t i = 1; i < w.indices.size(); ++i)
      p = matrices.at(w.indices[i]) * p;
    return p;
  }
};

/// Flips the sign of `v` so that its entry of largest magnitude is positive
/// (first such entry on ties).
inline void canonical_sign(RealVector &v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best)) * (1.0 + 1e-12)) best = i;
  if (v.size() > 0 && v(best) < 0) v = -v;
}

inline RealVector unit_vector(Index d, Index i) {
  RealVector e = RealVector::Zero(d);
  e(i) = 1.0;
  return e;
}

} // namespace pcone
