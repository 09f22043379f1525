#include "oracles.hpp"

#include <pcone/forge.hpp>
#include <pcone/spectral.hpp>

#include <gtest/gtest.h>

using namespace pcone;

namespace {

std::vector<Complex> eigenvalues_of(const RealMatrix &m) {
  const Eigen::EigenSolver<RealMatrix> es(m);
  std::vector<Complex> out;
  for (Index i = 0; i < m.rows(); ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

std::vector<Complex> nonzero(std::vector<Complex> v, double tol = 1e-3) {
  std::erase_if(v, [&](Complex z) { return std::abs(z) <= tol; });
  return v;
}

SmSpec spec_of(std::vector<RealMatrix> rot, std::vector<std::size_t> map) {
  SmSpec s;
  s.m = rot.size();
  s.rotations = std::move(rot);
  s.mapping = std::move(map);
  return s;
}

} // namespace

TEST(Rotations, AxisRotationIsProper) {
  const RealMatrix r = axis_rotation({1, 2, 2}, 0.9);
  EXPECT_LE((r.transpose() * r - RealMatrix::Identity(3, 3)).norm(), 1e-14);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-14);
  const Eigen::Vector3d axis = Eigen::Vector3d(1, 2, 2) / 3.0;
  EXPECT_LE((r * axis - axis).norm(), 1e-14);
  EXPECT_NEAR(r.trace(), 1 + 2 * std::cos(0.9), 1e-14);
}

TEST(Rotations, BetweenTwoDirections) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Vector3d u = random_gaussian(3, 1, rng).col(0);
    Eigen::Vector3d w = random_gaussian(3, 1, rng).col(0);
    if (t % 5 == 0) w = -2.0 * u; // antiparallel
    if (t % 5 == 1) w = 3.0 * u;
    const RealMatrix r = rotation_between(u, w);
    EXPECT_LE((r.transpose() * r - RealMatrix::Identity(3, 3)).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    EXPECT_LE((r * u.normalized() - w.normalized()).norm(), 1e-12);
  }
}

TEST(MakeSm, IdentityMapWithIdentityBlocks) {
  const RealMatrix id = RealMatrix::Identity(3, 3);
  EXPECT_EQ(make_sm(spec_of({id, id}, {0, 1})), RealMatrix::Identity(6, 6));
}

TEST(MakeSm, SwapHasSpectrumPlusMinusOne) {
  const RealMatrix id = RealMatrix::Identity(3, 3);
  const RealMatrix a = make_sm(spec_of({id, id}, {1, 0}));
  std::vector<Complex> expect(3, 1.0);
  expect.insert(expect.end(), 3, -1.0);
  EXPECT_TRUE(oracle::same_multiset(eigenvalues_of(a), expect, 1e-12));
  EXPECT_TRUE(full_spectrum(a).has_perron);
}

TEST(MakeSm, CycleSpectrumLaw) {
  Rng rng(17);
  for (std::size_t m = 2; m <= 4; ++m)
    for (int t = 0; t < 15; ++t) {
      const SmSpec s = random_sm_spec(m, rng);
      const RealMatrix a = make_sm(s);
      EXPECT_TRUE(oracle::same_multiset(nonzero(eigenvalues_of(a)), oracle::cycle_spectrum(s.rotations, s.mapping),
                                        1e-6))
          << "m=" << m << " t=" << t;
      const SpectralSummary sum = full_spectrum(a);
      EXPECT_TRUE(sum.has_perron);
      EXPECT_NEAR(sum.spectral_radius, 1.0, 1e-9);
    }
}

TEST(MakeSm, ConstantMapHasIndexThree) {
  Rng rng(18);
  for (std::size_t m = 2; m <= 5; ++m) {
    const SmSpec s = random_sm_spec(m, rng, true);
    const RealMatrix a = make_sm(s);
    EXPECT_EQ(expansion_index(a), 3);
    EXPECT_TRUE(oracle::same_multiset(nonzero(eigenvalues_of(a)), eigenvalues_of(s.rotations[0]), 1e-9));
  }
}

TEST(MakeSm, RejectsBadSpecs) {
  const RealMatrix id = RealMatrix::Identity(3, 3);
  EXPECT_THROW(make_sm(spec_of({id, 2.0 * id}, {0, 1})), InputError);
  RealMatrix refl = id;
  refl(0, 0) = -1;
  EXPECT_THROW(make_sm(spec_of({id, refl}, {0, 1})), InputError);
  EXPECT_THROW(make_sm(spec_of({id, id}, {0, 2})), InputError);
  EXPECT_THROW(make_sm(spec_of({id}, {0})), InputError);
}

TEST(SmNegativeWitness, RepeatedBlock) {
  RealVector v(6);
  v << 1, 0, 0, 1, 0, 0;
  v /= std::sqrt(2.0);
  const SmWitness w = sm_negative_witness(2, v);
  EXPECT_LE(w.residual, 1e-12);
  EXPECT_LE((w.matrix * v + v).norm(), 1e-12);
  EXPECT_TRUE(full_spectrum(w.matrix).has_perron);
}

TEST(SmNegativeWitness, StandardBlocks) {
  RealVector v(9);
  v << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  const SmWitness w = sm_negative_witness(3, v);
  EXPECT_LE(w.residual, 1e-12);
  EXPECT_EQ(w.spec.mapping, (std::vector<std::size_t>{1, 2, 0}));
}

TEST(SmNegativeWitness, RandomEqualNormBlocks) {
  Rng rng(19);
  for (std::size_t m = 2; m <= 5; ++m) {
    RealVector v(static_cast<Index>(3 * m));
    for (std::size_t i = 0; i < m; ++i)
      v.segment<3>(static_cast<Index>(3 * i)) = random_gaussian(3, 1, rng).col(0).normalized();
    EXPECT_LE(sm_negative_witness(m, v).residual, 1e-10);
  }
}

TEST(SmNegativeWitness, RejectsZeroBlockAndBadLength) {
  RealVector v = RealVector::Zero(6);
  v(0) = 1.0;
  EXPECT_THROW(sm_negative_witness(2, v), InputError);
  EXPECT_THROW(sm_negative_witness(2, RealVector::Ones(5)), InputError);
}

TEST(RotationGroups, ClosureOrders) {
  EXPECT_EQ(oracle::group_order(rotation_group(PolyhedralGroup::Tetrahedral).matrices), 12u);
  EXPECT_EQ(oracle::group_order(rotation_group(PolyhedralGroup::Octahedral).matrices), 24u);
  EXPECT_EQ(oracle::group_order(rotation_group(PolyhedralGroup::Icosahedral).matrices), 60u);
  EXPECT_EQ(oracle::group_order(cyclic_rotation(5).matrices), 5u);
  for (auto g : {PolyhedralGroup::Tetrahedral, PolyhedralGroup::Octahedral, PolyhedralGroup::Icosahedral})
    EXPECT_EQ(oracle::group_order(rotation_group(g).matrices), group_order(g));
}

TEST(RotationGroups, ParseAndValidate) {
  EXPECT_EQ(parse_group("tetrahedral"), PolyhedralGroup::Tetrahedral);
  EXPECT_EQ(parse_group("icosahedral"), PolyhedralGroup::Icosahedral);
  EXPECT_THROW(parse_group("dodecahedral"), InputError);
  EXPECT_THROW(rotation_group(std::vector<RealMatrix>{2.0 * RealMatrix::Identity(3, 3)}), InputError);
  EXPECT_NO_THROW(rotation_group(std::vector<RealMatrix>{axis_rotation({0, 1, 0}, 1.0)}));
}

TEST(MirrorPair, Matrices) {
  const GeneratorSet g = mirror_pair();
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0], RealMatrix::Identity(2, 2));
  EXPECT_EQ(g[1], Eigen::Vector2d(1, -1).asDiagonal().toDenseMatrix());
  EXPECT_EQ(g.names[1], "M");
}

TEST(RandomFamily, NonnegativeEntriesInUnitInterval) {
  const GeneratorSet g = random_family(RandomKind::Nonnegative, 5, 4, 7);
  ASSERT_EQ(g.size(), 4u);
  for (const auto &m : g.matrices) {
    EXPECT_GE(m.minCoeff(), 0.0);
    EXPECT_LE(m.maxCoeff(), 1.0);
  }
}

TEST(RandomFamily, OrthogonalWithinRounding) {
  for (Index d = 2; d <= 6; ++d)
    for (const auto &m : random_family(RandomKind::Orthogonal, d, 3, 100 + d).matrices) {
      EXPECT_LE((m.transpose() * m - RealMatrix::Identity(d, d)).norm(), 1e-12);
      EXPECT_NEAR(m.determinant(), 1.0, 1e-12);
    }
}

TEST(RandomFamily, ConjugatedPreservesImageOfOrthant) {
  const ConjugatedFamily f = random_conjugated_nonnegative(4, 3, 8);
  const RealMatrix qinv = f.q.inverse();
  for (const auto &m : f.gens.matrices) EXPECT_GE((qinv * m * f.q).minCoeff(), -1e-12);
  EXPECT_EQ(random_family(RandomKind::ConjugatedNonnegative, 4, 3, 8).matrices, f.gens.matrices);
}

TEST(RandomFamily, SeedDeterminism) {
  for (auto k : {RandomKind::Nonnegative, RandomKind::Orthogonal, RandomKind::ConjugatedNonnegative}) {
    EXPECT_EQ(random_family(k, 3, 2, 5).matrices, random_family(k, 3, 2, 5).matrices);
    EXPECT_NE(random_family(k, 3, 2, 5).matrices, random_family(k, 3, 2, 6).matrices);
  }
  EXPECT_THROW(random_family(RandomKind::Nonnegative, 0, 2, 1), InputError);
  EXPECT_THROW(parse_random_kind("gaussian"), InputError);
}
