#pragma once

// Example families: the S_m block semigroup, polyhedral rotation groups,
// the 2x2 mirror pair and seeded random generator sets.

#include "pcone/core.hpp"

#include <Eigen/Geometry>
#include <Eigen/QR>

#include <cstdint>
#include <numbers>
#include <random>

namespace pcone {

/// Rotation by `angle` about `axis` (any nonzero 3-vector).
inline RealMatrix axis_rotation(const Eigen::Vector3d &axis, double angle) {
  if (axis.norm() == 0.0) throw InputError("rotation axis is zero");
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

/// A rotation of R^3 taking unit `u` to unit `w`, as the composition of the
/// reflections through (u + w)^perp and w^perp. For antiparallel vectors it is
/// the half-turn about an axis orthogonal to u built from the first
/// coordinate axis not parallel to u.
inline RealMatrix rotation_between(const Eigen::Vector3d &from, const Eigen::Vector3d &to) {
  if (from.norm() == 0.0 || to.norm() == 0.0) throw InputError("rotation_between: zero vector");
  const Eigen::Vector3d u = from.normalized(), w = to.normalized();
  const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
  auto reflect = [&](const Eigen::Vector3d &a) { return id - 2.0 * a * a.transpose() / a.squaredNorm(); };
  const Eigen::Vector3d s = u + w;
  if (s.norm() > 1e-8) return reflect(w) * reflect(s);
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d n = Eigen::Vector3d::Unit(k) - u(k) * u;
    if (n.norm() > 0.5) {
      n.normalize();
      return 2.0 * n * n.transpose() - id;
    }
  }
  throw NumericalError("rotation_between: no orthogonal axis found");
}

// ---------------------------------------------------------------------------
// S_m

struct SmSpec {
  std::size_t m = 2;
  std::vector<RealMatrix> rotations;
  /// 0-based image of each block index: block (mapping[i], i) holds rotations[i].
  std::vector<std::size_t> mapping;

  void validate() const {
    if (m < 2) throw InputError("S_m spec needs m >= 2");
    if (rotations.size() != m || mapping.size() != m)
      throw InputError("S_m spec needs m rotations and m mapping entries");
    for (std::size_t i = 0; i < m; ++i) {
      const RealMatrix &u = rotations[i];
      if (u.rows() != 3 || u.cols() != 3 || !u.allFinite())
        throw InputError("S_m rotation " + std::to_string(i + 1) + " is not a finite 3x3 matrix");
      if ((u.transpose() * u - RealMatrix::Identity(3, 3)).norm() > 1e-9 ||
          std::abs(u.determinant() - 1.0) > 1e-9)
        throw InputError("S_m rotation " + std::to_string(i + 1) + " is not in SO(3)");
      if (mapping[i] >= m)
        throw InputError("S_m mapping value " + std::to_string(mapping[i]) + " out of range");
    }
  }
};

inline RealMatrix make_sm(const SmSpec &spec) {
  spec.validate();
  const Index n = static_cast<Index>(3 * spec.m);
  RealMatrix a = RealMatrix::Zero(n, n);
  for (std::size_t i = 0; i < spec.m; ++i)
    a.block(static_cast<Index>(3 * spec.mapping[i]), static_cast<Index>(3 * i), 3, 3) =
        spec.rotations[i];
  return a;
}

struct SmWitness {
  RealMatrix matrix;
  SmSpec spec;
  /// ||A v + v||, zero up to rounding when the blocks have equal norms.
  double residual = 0.0;
};

/// Element of S_m with the cyclic mapping i -> i+1 whose rotations send the
/// direction of block v_i to that of -v_{i+1}.
inline SmWitness sm_negative_witness(std::size_t m, const RealVector &v) {
  if (m < 2) throw InputError("sm_negative_witness needs m >= 2");
  if (v.size() != static_cast<Index>(3 * m))
    throw InputError("sm_negative_witness: vector length must be 3m");
  SmSpec spec;
  spec.m = m;
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::Vector3d vi = v.segment<3>(static_cast<Index>(3 * i));
    const Eigen::Vector3d vn = v.segment<3>(static_cast<Index>(3 * ((i + 1) % m)));
    if (vi.norm() == 0.0 || vn.norm() == 0.0)
      throw InputError("sm_negative_witness: block " + std::to_string(vi.norm() == 0.0 ? i + 1 : (i + 1) % m + 1) +
                       " is zero");
    spec.rotations.push_back(rotation_between(vi, -vn));
    spec.mapping.push_back((i + 1) % m);
  }
  SmWitness w;
  w.matrix = make_sm(spec);
  w.residual = (w.matrix * v + v).norm();
  w.spec = std::move(spec);
  return w;
}

// ---------------------------------------------------------------------------
// Rotation groups

enum class PolyhedralGroup { Tetrahedral, Octahedral, Icosahedral };

inline std::size_t group_order(PolyhedralGroup g) {
  switch (g) {
  case PolyhedralGroup::Tetrahedral: return 12;
  case PolyhedralGroup::Octahedral: return 24;
  case PolyhedralGroup::Icosahedral: return 60;
  }
  return 0;
}

inline PolyhedralGroup parse_group(const std::string &s) {
  if (s == "tetrahedral") return PolyhedralGroup::Tetrahedral;
  if (s == "octahedral") return PolyhedralGroup::Octahedral;
  if (s == "icosahedral") return PolyhedralGroup::Icosahedral;
  throw InputError("unknown rotation group '" + s + "' (tetrahedral, octahedral, icosahedral)");
}

/// Two standard generators of the rotation group of a regular polyhedron.
inline GeneratorSet rotation_group(PolyhedralGroup g) {
  constexpr double pi = std::numbers::pi;
  const double phi = std::numbers::phi;
  switch (g) {
  case PolyhedralGroup::Tetrahedral:
    return GeneratorSet({axis_rotation({1, 1, 1}, 2 * pi / 3), axis_rotation({1, -1, -1}, 2 * pi / 3)},
                        {"R111", "R1mm"});
  case PolyhedralGroup::Octahedral:
    return GeneratorSet({axis_rotation({0, 0, 1}, pi / 2), axis_rotation({1, 1, 1}, 2 * pi / 3)},
                        {"Rz4", "R111"});
  case PolyhedralGroup::Icosahedral:
    return GeneratorSet({axis_rotation({0, 1, phi}, 2 * pi / 5), axis_rotation({1, 1, 1}, 2 * pi / 3)},
                        {"Rv5", "R111"});
  }
  throw InputError("unknown rotation group");
}

/// Arbitrary generator list, checked to lie in SO(3).
inline GeneratorSet rotation_group(const std::vector<RealMatrix> &generators) {
  GeneratorSet gs(generators);
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const RealMatrix &u = gs[i];
    if (u.rows() != 3 || (u.transpose() * u - RealMatrix::Identity(3, 3)).norm() > 1e-9 ||
        std::abs(u.determinant() - 1.0) > 1e-9)
      throw InputError("generator " + gs.names[i] + " is not in SO(3)");
  }
  return gs;
}

/// Rotation by 2*pi/n about e_3.
inline GeneratorSet cyclic_rotation(std::size_t n) {
  if (n < 1) throw InputError("cyclic_rotation needs n >= 1");
  return GeneratorSet({axis_rotation({0, 0, 1}, 2 * std::numbers::pi / static_cast<double>(n))},
                      {"C" + std::to_string(n)});
}

inline GeneratorSet mirror_pair() {
  RealMatrix m = RealMatrix::Identity(2, 2);
  m(1, 1) = -1.0;
  return GeneratorSet({RealMatrix::Identity(2, 2), m}, {"I", "M"});
}

// ---------------------------------------------------------------------------
// Random families

enum class RandomKind { Nonnegative, Orthogonal, ConjugatedNonnegative };

inline RandomKind parse_random_kind(const std::string &s) {
  if (s == "nonnegative" || s == "nonneg") return RandomKind::Nonnegative;
  if (s == "orthogonal") return RandomKind::Orthogonal;
  if (s == "conjugated_nonnegative" || s == "conjugated") return RandomKind::ConjugatedNonnegative;
  throw InputError("unknown random family '" + s + "'");
}

using Rng = std::mt19937_64;

inline RealMatrix random_uniform(Index rows, Index cols, Rng &rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  RealMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline RealMatrix random_gaussian(Index rows, Index cols, Rng &rng) {
  std::normal_distribution<double> g;
  RealMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

/// Orthogonalized Gaussian with R's diagonal made positive, then det fixed to +1.
inline RealMatrix random_orthogonal(Index d, Rng &rng) {
  const RealMatrix g = random_gaussian(d, d, rng);
  Eigen::HouseholderQR<RealMatrix> qr(g);
  RealMatrix q = qr.householderQ() * RealMatrix::Identity(d, d);
  const RealMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < d; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  if (q.determinant() < 0) q.col(0) = -q.col(0);
  return q;
}

/// U diag(s) V with random orthogonal U, V and singular values in [1, 3].
inline RealMatrix random_well_conditioned(Index d, Rng &rng) {
  const RealMatrix u = random_orthogonal(d, rng);
  const RealMatrix v = random_orthogonal(d, rng);
  const RealVector s = random_uniform(d, 1, rng, 1.0, 3.0);
  return u * s.asDiagonal() * v;
}

struct ConjugatedFamily {
  GeneratorSet gens;
  /// The cone Q * (nonnegative orthant) is invariant.
  RealMatrix q;
};

inline ConjugatedFamily random_conjugated_nonnegative(Index d, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  const RealMatrix q = random_well_conditioned(d, rng);
  const RealMatrix qinv = q.inverse();
  std::vector<RealMatrix> mats;
  for (std::size_t k = 0; k < count; ++k) mats.push_back(q * random_uniform(d, d, rng) * qinv);
  return {GeneratorSet(std::move(mats)), q};
}

inline GeneratorSet random_family(RandomKind kind, Index d, std::size_t count, std::uint64_t seed) {
  if (d < 1) throw InputError("random_family needs d >= 1");
  if (count < 1) throw InputError("random_family needs count >= 1");
  if (kind == RandomKind::ConjugatedNonnegative)
    return random_conjugated_nonnegative(d, count, seed).gens;
  Rng rng(seed);
  std::vector<RealMatrix> mats;
  for (std::size_t k = 0; k < count; ++k)
    mats.push_back(kind == RandomKind::Nonnegative ? random_uniform(d, d, rng)
                                                   : random_orthogonal(d, rng));
  return GeneratorSet(std::move(mats));
}

inline RealMatrix random_rotation3(Rng &rng) { return random_orthogonal(3, rng); }

/// Random S_m spec; the mapping is uniform unless `constant_map` (all blocks
/// land in row block 0).
inline SmSpec random_sm_spec(std::size_t m, Rng &rng, bool constant_map = false) {
  SmSpec spec;
  spec.m = m;
  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  for (std::size_t i = 0; i < m; ++i) {
    spec.rotations.push_back(random_rotation3(rng));
    spec.mapping.push_back(constant_map ? 0 : pick(rng));
  }
  return spec;
}

} // namespace pcone
