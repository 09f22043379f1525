#pragma once

// Single-matrix spectral analysis: leading eigenvalues, the Perron flag,
// geometric multiplicities and the expansion index.

#include "pcone/core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <optional>

namespace pcone {

/// A group of numerically coincident eigenvalues.
struct EigenvalueCluster {
  Complex value;
  int algebraic = 0;
  /// Dimension of ker(M - value*I); only filled for leading clusters.
  int geometric = 0;
  /// Largest distance of a member from the cluster mean.
  double spread = 0.0;
};

struct SpectralSummary {
  double spectral_radius = 0.0;
  std::vector<EigenvalueCluster> eigenvalues;
  std::vector<EigenvalueCluster> leading;
  bool has_perron = false;
  int expansion_index = 0;
  std::optional<double> perron_value;
};

namespace detail {

/// Eigenvalues closer than this (relative to max(rho, 1)) are merged into one
/// cluster. Wider than the leading-cluster rule so that the split eigenvalues
/// of a perturbed Jordan block stay together.
inline constexpr double kMergeFactor = 100.0;

inline std::vector<Complex> raw_eigenvalues(const RealMatrix &m) {
  Eigen::EigenSolver<RealMatrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigenvalue solver failed for matrix " + echo_matrix(m));
  std::vector<Complex> ev(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
  for (const auto &z : ev)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw NumericalError("eigenvalue solver returned non-finite values for matrix " +
                           echo_matrix(m));
  return ev;
}

inline bool spectral_less(const Complex &a, const Complex &b) {
  const double ma = std::abs(a), mb = std::abs(b);
  if (ma != mb) return ma > mb;
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

/// Single-linkage clustering of `ev` with absolute merge radius `radius`.
inline std::vector<std::vector<std::size_t>> cluster_indices(const std::vector<Complex> &ev,
                                                             double radius) {
  const std::size_t n = ev.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(ev[i] - ev[j]) <= radius) parent[find(i)] = find(j);
  std::vector<std::vector<std::size_t>> groups;
  std::vector<long> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<long>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[r])].push_back(i);
  }
  return groups;
}

template <class Mat>
Eigen::VectorXd singular_values(const Mat &a) {
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues();
}

/// Number of singular values of (M - lambda I) at or below the rank
/// threshold, widened by the cluster spread.
inline int kernel_dimension(const RealMatrix &m, Complex lambda, double spread,
                            const ToleranceConfig &cfg) {
  const Index d = m.rows();
  Eigen::VectorXd sv;
  if (lambda.imag() == 0.0) {
    sv = singular_values<RealMatrix>(m - lambda.real() * RealMatrix::Identity(d, d));
  } else {
    Eigen::MatrixXcd shifted = m.cast<Complex>();
    shifted.diagonal().array() -= lambda;
    sv = singular_values<Eigen::MatrixXcd>(shifted);
  }
  // Rank is judged against the scale of M: when M is close to lambda*I the
  // shifted matrix is all rounding noise.
  const double smax = std::max(sv.size() ? sv(0) : 0.0, m.norm());
  if (smax == 0.0) return static_cast<int>(d);
  const double tau = std::max(cfg.rank_threshold(d) * smax, 10.0 * spread);
  return static_cast<int>((sv.array() <= tau).count());
}

} // namespace detail

/// Eigenvalues, leading cluster, Perron flag and expansion index of `m`.
inline SpectralSummary full_spectrum(const RealMatrix &m, const ToleranceConfig &cfg = {}) {
  validate_matrix(m);
  const Index d = m.rows();
  std::vector<Complex> ev = detail::raw_eigenvalues(m);
  std::sort(ev.begin(), ev.end(), detail::spectral_less);

  SpectralSummary s;
  for (const auto &z : ev) s.spectral_radius = std::max(s.spectral_radius, std::abs(z));
  const double rho = s.spectral_radius;
  const bool zero_branch = rho < cfg.zero_rho_abs;
  const double scale = std::max(rho, 1.0);
  const double real_tol = cfg.eig_cluster_rel * scale;
  auto is_leading = [&](const Complex &z) {
    return zero_branch || std::abs(z) >= rho * (1.0 - cfg.eig_cluster_rel);
  };

  const double radius =
      zero_branch ? std::numeric_limits<double>::infinity() : detail::kMergeFactor * real_tol;
  for (const auto &group : detail::cluster_indices(ev, radius)) {
    EigenvalueCluster c;
    c.algebraic = static_cast<int>(group.size());
    Complex mean{0.0, 0.0}, lead_mean{0.0, 0.0};
    int n_lead = 0;
    for (std::size_t i : group) {
      mean += ev[i];
      if (is_leading(ev[i])) {
        lead_mean += ev[i];
        ++n_lead;
      }
    }
    mean /= static_cast<double>(group.size());
    for (std::size_t i : group) c.spread = std::max(c.spread, std::abs(ev[i] - mean));
    c.value = zero_branch ? Complex{0.0, 0.0} : mean;
    if (std::abs(c.value.imag()) <= real_tol) c.value.imag(0.0);
    s.eigenvalues.push_back(c);

    if (n_lead > 0) {
      EigenvalueCluster lc = c;
      if (!zero_branch) {
        lc.value = lead_mean / static_cast<double>(n_lead);
        if (std::abs(lc.value.imag()) <= real_tol) lc.value.imag(0.0);
      }
      // In the zero branch the kernel of M itself is measured, without the
      // spread widening (the spread there is only rounding noise).
      lc.geometric = zero_branch ? detail::kernel_dimension(m, Complex{0.0, 0.0}, 0.0, cfg)
                                 : detail::kernel_dimension(m, lc.value, c.spread, cfg);
      lc.geometric = std::clamp(lc.geometric, 1, lc.algebraic);
      s.leading.push_back(lc);
    }
  }

  auto by_value = [](const EigenvalueCluster &a, const EigenvalueCluster &b) {
    return detail::spectral_less(a.value, b.value);
  };
  std::stable_sort(s.eigenvalues.begin(), s.eigenvalues.end(), by_value);
  std::stable_sort(s.leading.begin(), s.leading.end(), by_value);

  for (const auto &c : s.leading) s.expansion_index += c.geometric;

  if (zero_branch) {
    s.has_perron = true;
    s.perron_value = 0.0;
  } else {
    for (const auto &c : s.leading) {
      if (c.value.imag() == 0.0 && c.value.real() >= -real_tol) {
        s.has_perron = true;
        s.perron_value = std::max(c.value.real(), 0.0);
        break;
      }
    }
  }
  return s;
}

inline int expansion_index(const RealMatrix &m, const ToleranceConfig &cfg = {}) {
  return full_spectrum(m, cfg).expansion_index;
}

inline double spectral_radius(const RealMatrix &m) {
  validate_matrix(m);
  double rho = 0.0;
  for (const auto &z : detail::raw_eigenvalues(m)) rho = std::max(rho, std::abs(z));
  return rho;
}

/// Scales `m` to spectral radius one, or returns it unchanged when its
/// spectral radius is numerically zero.
inline RealMatrix normalize_s1(const RealMatrix &m, const ToleranceConfig &cfg = {}) {
  const double rho = spectral_radius(m);
  if (rho > cfg.zero_rho_abs) return m / rho;
  return m;
}

/// Right and left leading eigenvectors of a matrix whose leading eigenvalue
/// is real, positive and simple.
struct LeadingPair {
  RealVector right;
  RealVector left;
  double value = 0.0;
  double residual = 0.0;
  /// True when the pair comes from the asymptotic rank-one direction of a
  /// defective leading block instead of a simple eigenvalue.
  bool low_confidence = false;
};

namespace detail {

inline RealVector smallest_right_singular_vector(const RealMatrix &a) {
  Eigen::JacobiSVD<RealMatrix> svd(a, Eigen::ComputeFullV);
  return svd.matrixV().col(a.cols() - 1);
}

} // namespace detail

/// Unit vectors b, a with M b = rho b, M^T a = rho a and <a, b> > 0. The
/// right vector has its largest-magnitude entry positive.
inline LeadingPair leading_eigenvectors(const RealMatrix &m, const ToleranceConfig &cfg = {}) {
  const SpectralSummary s = full_spectrum(m, cfg);
  if (s.expansion_index != 1)
    throw PreconditionError("leading_eigenvectors: expansion index is " +
                            std::to_string(s.expansion_index) + ", expected 1");
  if (s.spectral_radius <= cfg.zero_rho_abs)
    throw PreconditionError("leading_eigenvectors: spectral radius is zero");
  const EigenvalueCluster &lead = s.leading.front();
  if (lead.value.imag() != 0.0 || lead.value.real() <= 0.0)
    throw PreconditionError("leading_eigenvectors: leading eigenvalue is not real positive");
  if (lead.algebraic != 1)
    throw PreconditionError("leading_eigenvectors: leading eigenvalue is not simple "
                            "(algebraic multiplicity " +
                            std::to_string(lead.algebraic) + ")");

  const Index d = m.rows();
  const double lambda = lead.value.real();
  const RealMatrix shift = lambda * RealMatrix::Identity(d, d);
  LeadingPair p;
  p.value = lambda;
  p.right = detail::smallest_right_singular_vector(m - shift).normalized();
  p.left = detail::smallest_right_singular_vector(m.transpose() - shift).normalized();
  canonical_sign(p.right);
  if (p.left.dot(p.right) < 0) p.left = -p.left;
  p.residual = (m * p.right - lambda * p.right).norm();
  const double bound = 1e3 * cfg.rank_threshold(d) * std::max(m.norm(), 1.0);
  if (p.residual > bound)
    throw NumericalError("leading_eigenvectors: residual " + std::to_string(p.residual) +
                         " exceeds bound for matrix " + echo_matrix(m));
  return p;
}

/// Rank-one limit direction of M^k for large k: M^k ~ sigma * b a^T. Used for
/// index-one elements whose leading eigenvalue carries a nontrivial Jordan
/// block; for a simple leading eigenvalue it agrees with leading_eigenvectors
/// up to the normalization of a.
inline LeadingPair asymptotic_directions(const RealMatrix &m, const ToleranceConfig &cfg = {}) {
  validate_matrix(m);
  RealMatrix p = normalize_s1(m, cfg);
  const double n0 = p.norm();
  if (n0 == 0.0) throw PreconditionError("asymptotic_directions: zero matrix");
  p /= n0;
  for (int i = 0; i < 48; ++i) {
    p = p * p;
    const double n = p.norm();
    if (n == 0.0 || !std::isfinite(n))
      throw NumericalError("asymptotic_directions: powers vanished or overflowed for " +
                           echo_matrix(m));
    p /= n;
  }
  Eigen::JacobiSVD<RealMatrix> svd(p, Eigen::ComputeFullU | Eigen::ComputeFullV);
  LeadingPair lp;
  lp.right = svd.matrixU().col(0);
  lp.left = svd.matrixV().col(0);
  RealVector before = lp.right;
  canonical_sign(lp.right);
  if (lp.right.dot(before) < 0) lp.left = -lp.left;
  lp.value = spectral_radius(m);
  lp.residual = (m * lp.right - lp.value * lp.right).norm();
  lp.low_confidence = true;
  return lp;
}

/// Real bases of the eigenspaces of `m`: one entry per distinct real
/// eigenvalue (its real kernel) and per complex-conjugate pair (the real
/// planes spanned by Re v, Im v of each complex kernel vector).
struct RealEigenspace {
  Complex value;
  int geometric = 0;
  /// Each seed is a d x 1 (real eigenvector) or d x 2 (invariant plane) basis.
  std::vector<RealMatrix> seeds;
};

inline std::vector<RealEigenspace> real_eigenspaces(const RealMatrix &m,
                                                    const ToleranceConfig &cfg = {}) {
  validate_matrix(m);
  const Index d = m.rows();
  std::vector<Complex> ev = detail::raw_eigenvalues(m);
  std::sort(ev.begin(), ev.end(), detail::spectral_less);
  double rho = 0.0;
  for (const auto &z : ev) rho = std::max(rho, std::abs(z));
  const double real_tol = cfg.eig_cluster_rel * std::max(rho, 1.0);

  std::vector<RealEigenspace> out;
  for (const auto &group :
       detail::cluster_indices(ev, detail::kMergeFactor * real_tol)) {
    Complex mean{0.0, 0.0};
    for (std::size_t i : group) mean += ev[i];
    mean /= static_cast<double>(group.size());
    double spread = 0.0;
    for (std::size_t i : group) spread = std::max(spread, std::abs(ev[i] - mean));
    if (mean.imag() < -real_tol) continue;

    RealEigenspace es;
    if (std::abs(mean.imag()) <= real_tol) {
      es.value = Complex{mean.real(), 0.0};
      Eigen::JacobiSVD<RealMatrix> svd(m - mean.real() * RealMatrix::Identity(d, d),
                                       Eigen::ComputeFullV);
      const auto &sv = svd.singularValues();
      const double tau = std::max(cfg.rank_threshold(d) * std::max(sv(0), m.norm()), 10.0 * spread);
      int k = static_cast<int>((sv.array() <= tau).count());
      k = std::clamp(k, 1, static_cast<int>(group.size()));
      es.geometric = k;
      for (int j = 0; j < k; ++j) {
        RealVector v = svd.matrixV().col(d - 1 - j);
        canonical_sign(v);
        es.seeds.emplace_back(v);
      }
    } else {
      es.value = mean;
      Eigen::MatrixXcd shifted = m.cast<Complex>();
      shifted.diagonal().array() -= mean;
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted, Eigen::ComputeFullV);
      const auto &sv = svd.singularValues();
      const double tau = std::max(cfg.rank_threshold(d) * std::max(sv(0), m.norm()), 10.0 * spread);
      int k = static_cast<int>((sv.array() <= tau).count());
      k = std::clamp(k, 1, static_cast<int>(group.size()));
      es.geometric = k;
      for (int j = 0; j < k; ++j) {
        Eigen::VectorXcd v = svd.matrixV().col(d - 1 - j);
        RealMatrix plane(d, 2);
        plane.col(0) = v.real();
        plane.col(1) = v.imag();
        Eigen::HouseholderQR<RealMatrix> qr(plane);
        es.seeds.emplace_back(qr.householderQ() * RealMatrix::Identity(d, 2));
      }
    }
    out.push_back(std::move(es));
  }
  return out;
}

} // namespace pcone
