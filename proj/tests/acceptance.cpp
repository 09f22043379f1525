// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include "oracles.hpp"

#include <pcone/pcone.hpp>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace pcone;
using io::Json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// 1. Random positive sets: cone found, invariant, index one.
Outcome nonnegative_sets() {
  Rng rng(2024);
  int found = 0, no_cone = 0, bad = 0;
  const int trials = 200;
  const auto t0 = Clock::now();
  for (int t = 0; t < trials; ++t) {
    const Index d = 3 + static_cast<Index>(rng() % 3);
    const std::size_t c = 2 + rng() % 2;
    const GeneratorSet gens = random_family(RandomKind::Nonnegative, d, c, rng());
    AnalysisOptions o;
    o.max_len = 6;
    const AnalysisReport r = run_analysis(gens, o);
    if (r.verdict.kind == VerdictKind::NoConeCertified) ++no_cone;
    if (r.verdict.kind != VerdictKind::ConeFound) continue;
    if (r.verdict.cone->invariance_residual <= 1e-7 && r.perron.min_index == 1)
      ++found;
    else
      ++bad;
  }
  const double sec = seconds_since(t0);
  std::ostringstream os;
  os << found << "/" << trials << " cones found, " << no_cone << " certified no-cone, " << bad
     << " found but failing residual/index, " << sec << " s";
  return {found >= 190 && no_cone == 0 && bad == 0 && sec <= 60.0, os.str()};
}

// 2. Conjugated orthants: built rays lie in Q * orthant. The seed is an
// eigenvector of arbitrary sign, so -Q * orthant (equally invariant) counts.
Outcome conjugated_orthants() {
  const int trials = 50;
  int ok = 0, negated = 0;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const ConjugatedFamily f = random_conjugated_nonnegative(4, 2, 5000 + static_cast<std::uint64_t>(t));
    AnalysisOptions o;
    o.max_len = 6;
    const AnalysisReport r = run_analysis(f.gens, o);
    if (!r.build.cone) continue;
    const RealMatrix &rays = r.build.cone->rays;
    double plus = 0.0, minus = 0.0;
    for (Index j = 0; j < rays.cols(); ++j) {
      const double n = rays.col(j).norm();
      plus = std::max(plus, oracle::cone_distance_exhaustive(f.q, rays.col(j)) / n);
      minus = std::max(minus, oracle::cone_distance_exhaustive(-f.q, rays.col(j)) / n);
    }
    const double dist = std::min(plus, minus);
    negated += plus > minus ? 1 : 0;
    worst = std::max(worst, dist);
    if (dist <= r.cfg.lp_feas) ++ok;
  }
  std::ostringstream os;
  os << ok << "/" << trials << " cones inside the known cone (" << negated << " in its negative), worst ray distance "
     << worst;
  return {ok >= 45, os.str()};
}

// 3. Polyhedral rotation groups at horizon 10.
Outcome rotation_groups() {
  const auto t0 = Clock::now();
  bool all = true;
  std::ostringstream os;
  for (auto g : {PolyhedralGroup::Tetrahedral, PolyhedralGroup::Octahedral, PolyhedralGroup::Icosahedral}) {
    AnalysisOptions o;
    o.max_len = 10;
    const AnalysisReport r = run_analysis(rotation_group(g), o);
    const bool ok = r.perron.all_perron && r.perron.min_index == 3 &&
                    r.verdict.kind == VerdictKind::NoConeCertified && r.verdict.obstruction &&
                    r.verdict.obstruction->kind == ObstructionKind::OrthogonalNoFixedVector &&
                    r.sample_size == group_order(g);
    all = all && ok;
    os << r.sample_size << " elements index " << r.perron.min_index << " " << to_string(r.verdict.kind)
       << (ok ? "; " : " (wrong); ");
  }
  const double sec = seconds_since(t0);
  os << sec << " s";
  return {all && sec <= 30.0, os.str()};
}

std::vector<Complex> expanded_nonzero(const SpectralSummary &s) {
  std::vector<Complex> out;
  for (const auto &c : s.eigenvalues)
    if (std::abs(c.value) > 1e-3)
      for (int k = 0; k < c.algebraic; ++k) out.push_back(c.value);
  return out;
}

// 4. S_m family: Perron, constant map index three, cycle law, witnesses.
Outcome sm_family() {
  Rng rng(77);
  int perron = 0, law = 0, constant_ok = 0, constant_total = 0;
  const int specs = 50;
  for (int t = 0; t < specs; ++t) {
    const std::size_t m = 2 + static_cast<std::size_t>(t % 2);
    const bool constant = t % 5 == 0;
    const SmSpec s = random_sm_spec(m, rng, constant);
    const RealMatrix a = make_sm(s);
    const SpectralSummary sum = full_spectrum(a);
    if (sum.has_perron) ++perron;
    if (oracle::same_multiset(expanded_nonzero(sum), oracle::cycle_spectrum(s.rotations, s.mapping), 1e-8)) ++law;
    if (constant) {
      ++constant_total;
      if (sum.expansion_index == 3) ++constant_ok;
    }
  }
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 2 + static_cast<std::size_t>(t % 3);
    RealVector v(static_cast<Index>(3 * m));
    const Eigen::Vector3d first = random_gaussian(3, 1, rng).col(0);
    for (std::size_t i = 0; i < m; ++i) {
      Eigen::Vector3d b = random_gaussian(3, 1, rng).col(0);
      b *= first.norm() / b.norm();
      v.segment<3>(static_cast<Index>(3 * i)) = b;
    }
    worst = std::max(worst, sm_negative_witness(m, v).residual);
  }
  std::ostringstream os;
  os << perron << "/" << specs << " Perron, cycle law " << law << "/" << specs << ", constant map index three "
     << constant_ok << "/" << constant_total << ", worst witness residual " << worst;
  return {perron == specs && law == specs && constant_ok == constant_total && worst <= 1e-10, os.str()};
}

GeneratorSet random_mixed(Rng &rng, int t) {
  const Index d = 2 + static_cast<Index>(rng() % 4);
  const std::size_t c = 1 + rng() % 3;
  std::vector<RealMatrix> mats;
  const int family = t % 8;
  for (std::size_t k = 0; k < c; ++k) {
    RealMatrix m;
    switch (family) {
    case 0: m = random_gaussian(d, d, rng); break;
    case 1: m = random_uniform(d, d, rng); break;
    case 2: m = random_orthogonal(d, rng); break;
    case 3: {
      // Integer entries in {-1, 0, 1}.
      m = random_uniform(d, d, rng, -1.5, 1.5).array().round().matrix();
      break;
    }
    case 4: {
      // Involutions with a random signature, conjugated.
      RealVector s(d);
      for (Index i = 0; i < d; ++i) s(i) = (rng() % 2) ? 1.0 : -1.0;
      s(0) = 1.0;
      const RealMatrix q = random_well_conditioned(d, rng);
      m = q * s.asDiagonal() * q.inverse();
      break;
    }
    case 5: {
      // Orthogonal involutions: reflections and their products.
      RealVector s = RealVector::Ones(d);
      s(static_cast<Index>(rng() % static_cast<std::size_t>(d))) = -1.0;
      const RealMatrix q = random_orthogonal(d, rng);
      m = q * s.asDiagonal() * q.transpose();
      break;
    }
    case 6: {
      // Two leading eigenvalues +1, -1 and a contracting rest.
      RealVector s = random_uniform(d, 1, rng, -0.9, 0.9);
      s(0) = 1.0;
      s(1) = -1.0;
      const RealMatrix q = random_well_conditioned(d, rng);
      m = q * s.asDiagonal() * q.inverse();
      break;
    }
    default: {
      // Sparse nonnegative.
      m = random_uniform(d, d, rng);
      m = (m.array() < 0.6).select(0.0, m);
      break;
    }
    }
    mats.push_back(m);
  }
  return GeneratorSet(std::move(mats));
}

// 5. No irreducible Perron semigroup of index two among random sets.
Outcome index_two_search() {
  Rng rng(99);
  int hits = 0, index_two_perron = 0, irreducible = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const GeneratorSet gens = random_mixed(rng, t);
    const SemigroupSample s = enumerate(gens, 6);
    const PerronReport rep = perron_audit(s);
    const IrreducibilityVerdict irr = irreducibility(gens, s);
    const bool irr_ok = irr.status == IrreducibilityStatus::IrreducibleCertified;
    irreducible += irr_ok ? 1 : 0;
    if (rep.all_perron && rep.min_index == 2) {
      ++index_two_perron;
      if (irr_ok) ++hits;
    }
  }
  std::ostringstream os;
  os << hits << " irreducible Perron index-two sets among " << trials << " (" << index_two_perron
     << " Perron index-two, " << irreducible << " irreducible)";
  return {hits == 0, os.str()};
}

// 6. Mirror pair.
Outcome mirror() {
  const GeneratorSet g = mirror_pair();
  const AnalysisReport r = run_analysis(g);
  RealMatrix m = RealMatrix::Identity(2, 2);
  m(1, 1) = -1.0;
  const bool s1 = (normalize_s1(g[0]) - RealMatrix::Identity(2, 2)).norm() <= 1e-12 &&
                  (normalize_s1(g[1]) - m).norm() <= 1e-12;
  bool sample_s1 = true;
  for (const auto &e : enumerate(g, 4).elements)
    sample_s1 = sample_s1 && ((normalize_s1(e.product) - RealMatrix::Identity(2, 2)).norm() <= 1e-12 ||
                              (normalize_s1(e.product) - m).norm() <= 1e-12);
  std::ostringstream os;
  os << "index " << r.perron.min_index << ", all_perron " << r.perron.all_perron << ", "
     << to_string(r.irreducibility.status) << ", normalization " << (s1 && sample_s1 ? "ok" : "wrong");
  return {r.perron.min_index == 2 && r.perron.all_perron &&
              r.irreducibility.status == IrreducibilityStatus::ReducibleCertified && s1 && sample_s1,
          os.str()};
}

// 7. Escalation of constructed half-space violations.
Outcome escalation() {
  Rng rng(7);
  int ok = 0, violated = 0;
  std::size_t kmax = 0;
  const int trials = 20;
  std::normal_distribution<double> gauss;
  for (int t = 0; t < trials; ++t) {
    const Index d = 2 + t % 2;
    RealMatrix a, x;
    BaseKind kind = BaseKind::Simple;
    RealVector left;
    RealVector right;
    if (t < 14) {
      // Diagonalizable base: leading value 1, the rest strictly inside.
      RealVector s = random_uniform(d, 1, rng, -0.95, 0.95);
      s(0) = 1.0;
      const RealMatrix q = random_well_conditioned(d, rng);
      const RealMatrix qi = q.inverse();
      a = q * s.asDiagonal() * qi;
      right = q.col(0);
      left = qi.row(0).transpose();
      if (left.dot(right) < 0) left = -left;
      x = random_gaussian(d, d, rng);
      // Push X b against the left eigenvector.
      const double h = left.dot(x * right);
      x -= (h + 0.5 * left.norm() * right.norm()) * left * right.transpose() /
           (left.squaredNorm() * right.squaredNorm());
    } else {
      // Jordan block on the leading value: b = e1, a = e_r.
      kind = BaseKind::Defective;
      a = RealMatrix::Identity(d, d);
      a(0, 1) = 1.0;
      if (d == 3) a(2, 2) = std::uniform_real_distribution<double>(-0.9, 0.9)(rng);
      x = random_gaussian(d, d, rng);
      x(1, 0) = -std::abs(gauss(rng)) * 1e-2 - 1e-3;
      right = unit_vector(d, 0);
      left = unit_vector(d, 1);
    }
    const GeneratorSet gens({a, x});
    IndexOneElement base;
    base.word = Word{0};
    base.kind = kind;
    base.matrix = normalize_s1(a);
    const ConeBuildOutcome b = build_orbit_cone(gens, enumerate(gens, 1), base);
    if (b.status != BuildStatus::HalfspaceViolated) continue;
    ++violated;
    const EscalationResult e = escalate_halfspace_violation(gens, *b.base_word, *b.violator);
    if (e.found && e.k <= (std::size_t{1} << 14) && e.recheck_passed) ++ok;
    kmax = std::max(kmax, e.k);
  }
  std::ostringstream os;
  os << violated << "/" << trials << " instances violate the half-space, " << ok
     << " certified by escalation, largest power " << kmax;
  return {violated == trials && ok == trials, os.str()};
}

// 8. Cone membership against brute-force oracles.
Outcome membership() {
  Rng rng(8);
  const ToleranceConfig cfg;
  const double band = 10 * cfg.lp_feas;
  int agree = 0, band_cases = 0, disagree = 0, bound_violations = 0;
  double worst_gap = 0.0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const Index d = 2 + t % 3;
    const Index k = 1 + static_cast<Index>(rng() % 8);
    RealMatrix rays = random_gaussian(d, k, rng);
    if (t % 4 == 0) rays = rays.cwiseAbs(); // pointed, orthant-like
    RealVector p;
    switch (t % 3) {
    case 0: p = random_gaussian(d, 1, rng).col(0); break;
    case 1: {
      RealVector c = random_uniform(k, 1, rng);
      c(static_cast<Index>(rng() % static_cast<std::size_t>(k))) = 0.0;
      p = rays * c;
      break;
    }
    default: {
      // Near the boundary: a ray nudged outward or inward.
      p = rays.col(0) + 1e-7 * random_gaussian(d, 1, rng).col(0);
      break;
    }
    }
    if (p.norm() == 0.0) p = RealVector::Ones(d);
    const double lp = lp::cone_distance_rel(rays, p);
    const double exact = oracle::cone_distance_exhaustive(rays, p) / p.norm();
    const double sampled = oracle::cone_distance_sampled(rays, p, 4000, rng) / p.norm();
    worst_gap = std::max(worst_gap, std::abs(lp - exact));
    if (lp > sampled + 1e-12) ++bound_violations;
    const bool in_lp = lp <= cfg.lp_feas, in_exact = exact <= cfg.lp_feas;
    if (in_lp == in_exact)
      ++agree;
    else if (std::abs(exact - cfg.lp_feas) <= band)
      ++band_cases;
    else
      ++disagree;
  }
  std::ostringstream os;
  os << agree << "/" << trials << " agree, " << band_cases << " within the tolerance band, " << disagree
     << " disagree, " << bound_violations << " above the sampled bound, worst |lp - exact| " << worst_gap;
  return {disagree == 0 && bound_violations == 0 && worst_gap <= 1e-9, os.str()};
}

std::pair<int, std::string> run_cli(const std::string &args) {
  const std::string cmd = std::string(PCONE_CLI) + " " + args + " 2>/dev/null";
  std::string out;
  FILE *p = popen(cmd.c_str(), "r");
  if (!p) return {-1, out};
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

// 9. Two CLI runs give identical reports apart from timings.
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("pcone_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string set = (dir / "set.json").string();
  io::write_json(set, io::matrix_set_to_json(random_family(RandomKind::ConjugatedNonnegative, 4, 3, 11)));
  std::vector<std::string> reports;
  std::vector<int> codes;
  for (const char *name : {"a.json", "b.json"}) {
    const std::string out = (dir / name).string();
    codes.push_back(run_cli("analyze " + set + " --max-len 6 --seeds 16 --seed 5 --out " + out).first);
    Json j = io::read_json(out);
    j.erase("timings");
    reports.push_back(j.dump(2));
  }
  const auto a = run_cli("analyze " + set + " --max-len 6 --json-only");
  const auto b = run_cli("analyze " + set + " --max-len 6 --json-only");
  Json ja = Json::parse(a.second), jb = Json::parse(b.second);
  ja.erase("timings");
  jb.erase("timings");
  fs::remove_all(dir);
  const bool same = reports[0] == reports[1] && ja.dump() == jb.dump() && codes[0] == codes[1] &&
                    a.first == b.first;
  std::ostringstream os;
  os << "exit codes " << codes[0] << "/" << codes[1] << ", reports " << (same ? "identical" : "differ")
     << " (" << reports[0].size() << " bytes)";
  return {same, os.str()};
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"random nonnegative sets have a cone", nonnegative_sets},
      {"conjugated orthants are recovered", conjugated_orthants},
      {"polyhedral rotation groups are Perron, index three, no cone", rotation_groups},
      {"block rotation family", sm_family},
      {"no irreducible Perron semigroup of index two", index_two_search},
      {"mirror pair", mirror},
      {"half-space escalation", escalation},
      {"cone membership oracle equivalence", membership},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " -- "
              << o.detail << " [" << seconds_since(t0) << " s]" << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
