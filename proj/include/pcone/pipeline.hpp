#pragma once

// End-to-end analysis of a generator set and its JSON / text reports.

#include "pcone/cone.hpp"
#include "pcone/io.hpp"
#include "pcone/obstruction.hpp"
#include "pcone/semigroup.hpp"
#include "pcone/spectral.hpp"

#include <chrono>
#include <cstdint>
#include <map>
#include <sstream>

namespace pcone {

struct AnalysisOptions {
  std::size_t max_len = 8;
  double tol = ToleranceConfig::kDefaultLpFeas;
  std::size_t cap = 200000;
  std::size_t seeds = 32;
  std::uint64_t seed = 0;

  ToleranceConfig tolerances() const { return ToleranceConfig::from_lp_feas(tol); }
  void validate() const {
    if (max_len < 1) throw InputError("--max-len must be >= 1");
    if (cap < 1) throw InputError("--cap must be >= 1");
    if (!(tol > 0.0) || !std::isfinite(tol)) throw InputError("--tol must be positive");
  }
};

struct AnalysisReport {
  GeneratorSet gens;
  AnalysisOptions options;
  ToleranceConfig cfg;
  std::vector<SpectralSummary> generator_spectra;
  std::size_t sample_size = 0;
  std::size_t dedup_count = 0;
  bool truncated = false;
  PerronReport perron;
  IrreducibilityVerdict irreducibility;
  ConeBuildOutcome build;
  Verdict verdict;
  /// Seconds per stage.
  std::map<std::string, double> timings;
};

enum ExitCode : int { kExitConeFound = 0, kExitInputError = 2, kExitNoCone = 10, kExitInconclusive = 20 };

inline int exit_code(VerdictKind k) {
  switch (k) {
  case VerdictKind::ConeFound: return kExitConeFound;
  case VerdictKind::NoConeCertified: return kExitNoCone;
  case VerdictKind::Inconclusive: return kExitInconclusive;
  }
  return kExitInconclusive;
}

inline AnalysisReport run_analysis(const GeneratorSet &gens, const AnalysisOptions &opts = {}) {
  gens.validate();
  opts.validate();
  using Clock = std::chrono::steady_clock;
  AnalysisReport r;
  r.gens = gens;
  r.options = opts;
  r.cfg = opts.tolerances();
  auto t0 = Clock::now();
  auto lap = [&](const std::string &stage) {
    const auto t1 = Clock::now();
    r.timings[stage] = std::chrono::duration<double>(t1 - t0).count();
    t0 = t1;
  };

  for (const auto &g : gens.matrices) r.generator_spectra.push_back(full_spectrum(g, r.cfg));
  const SemigroupSample sample = enumerate(gens, opts.max_len, r.cfg, opts.cap);
  r.sample_size = sample.size();
  r.dedup_count = sample.dedup_count;
  r.truncated = sample.truncated;
  lap("enumerate");
  r.perron = perron_audit(sample, r.cfg);
  r.perron.summaries.clear();
  lap("perron_audit");
  r.irreducibility = irreducibility(gens, sample, r.cfg);
  lap("irreducibility");
  if (r.perron.all_perron) {
    r.build = build_cone(gens, sample, r.cfg);
  } else {
    r.build.status = BuildStatus::Failed;
    r.build.reason = "skipped: the sample contains a non-Perron product";
  }
  lap("build");
  VerdictOptions vo;
  vo.random_seeds = opts.seeds;
  vo.seed = opts.seed;
  r.verdict = verdict(gens, sample, r.perron, r.irreducibility, r.build, r.cfg, vo);
  lap("verdict");
  return r;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using io::Json;

inline Json summary_json(const SpectralSummary &s) {
  auto clusters = [](const std::vector<EigenvalueCluster> &cs) {
    Json a = Json::array();
    for (const auto &c : cs)
      a.push_back({{"value", io::to_json(c.value)},
                   {"algebraic", c.algebraic},
                   {"geometric", c.geometric}});
    return a;
  };
  return {{"spectral_radius", s.spectral_radius},
          {"eigenvalues", clusters(s.eigenvalues)},
          {"leading", clusters(s.leading)},
          {"has_perron", s.has_perron},
          {"expansion_index", s.expansion_index},
          {"perron_value", s.perron_value ? Json(*s.perron_value) : Json(nullptr)}};
}

inline Json obstruction_json(const Obstruction &o) {
  Json j = {{"kind", to_string(o.kind)}, {"detail", o.detail}, {"rechecked", o.rechecked}};
  j["word"] = o.word ? io::to_json(*o.word) : Json(nullptr);
  if (o.power_form)
    j["power_form"] = {{"prefix", io::to_json(o.power_form->prefix)},
                       {"base", io::to_json(o.power_form->base)},
                       {"power", o.power_form->power}};
  if (o.summary) j["summary"] = summary_json(*o.summary);
  if (o.vector) {
    j["vector"] = io::to_json(*o.vector);
    j["factor"] = o.factor;
    j["residual"] = o.residual;
  }
  return j;
}

} // namespace detail

/// Full report; the "timings" block is the only run-dependent part.
inline io::Json report_json(const AnalysisReport &r, bool with_timings = true) {
  using io::Json;
  Json j;
  j["input"] = io::matrix_set_to_json(r.gens);
  j["config"] = {{"max_len", r.options.max_len},
                 {"cap", r.options.cap},
                 {"seeds", r.options.seeds},
                 {"seed", r.options.seed},
                 {"tolerances",
                  {{"eig_cluster_rel", r.cfg.eig_cluster_rel},
                   {"rank_rel", r.cfg.rank_rel},
                   {"lp_feas", r.cfg.lp_feas},
                   {"zero_rho_abs", r.cfg.zero_rho_abs},
                   {"dedup_rel", r.cfg.dedup_rel}}}};
  Json spectra = Json::array();
  for (std::size_t i = 0; i < r.generator_spectra.size(); ++i) {
    Json s = detail::summary_json(r.generator_spectra[i]);
    s["name"] = r.gens.names[i];
    spectra.push_back(std::move(s));
  }
  j["generators"] = std::move(spectra);
  j["sample"] = {{"horizon", r.options.max_len},
                 {"elements", r.sample_size},
                 {"dedup_count", r.dedup_count},
                 {"truncated", r.truncated}};
  Json viol = Json::array();
  for (std::size_t i = 0; i < r.perron.violations.size() && i < 16; ++i)
    viol.push_back({{"word", io::to_json(r.perron.violations[i].word)},
                    {"summary", detail::summary_json(r.perron.violations[i].summary)}});
  j["perron"] = {{"all_perron", r.perron.all_perron},
                 {"min_index", r.perron.min_index},
                 {"min_index_witness", io::to_json(r.perron.min_index_witness)},
                 {"violation_count", r.perron.violations.size()},
                 {"violations", std::move(viol)}};
  j["irreducibility"] = {
      {"status", to_string(r.irreducibility.status)},
      {"algebra_dim", r.irreducibility.algebra_dim},
      {"diagnostic", r.irreducibility.diagnostic},
      {"invariant_subspace", r.irreducibility.invariant_subspace
                                 ? io::to_json(*r.irreducibility.invariant_subspace)
                                 : Json(nullptr)}};
  Json build = {{"status", to_string(r.build.status)}, {"reason", r.build.reason}};
  build["base_word"] = r.build.base_word ? io::to_json(*r.build.base_word) : Json(nullptr);
  build["violator"] = r.build.violator ? io::to_json(*r.build.violator) : Json(nullptr);
  if (r.build.violator) build["violation"] = r.build.violation;
  if (r.build.cone) {
    const ConeApprox &c = *r.build.cone;
    build["ray_count"] = c.ray_count();
    build["pointed"] = c.pointed;
    build["invariance_residual"] = c.invariance_residual;
    build["strict_margin"] = c.strict_margin ? Json(*c.strict_margin) : Json(nullptr);
    build["low_confidence"] = c.low_confidence;
  }
  j["build"] = std::move(build);

  const Verdict &v = r.verdict;
  Json vj = {{"kind", to_string(v.kind)},
             {"exceptional_regime", v.exceptional_regime},
             {"seeds_witnessed", v.seeds_witnessed},
             {"seeds_total", v.seeds_total},
             {"notes", v.notes}};
  vj["obstruction"] = v.obstruction ? detail::obstruction_json(*v.obstruction) : Json(nullptr);
  Json ev = Json::array();
  for (const auto &o : v.evidence) ev.push_back(detail::obstruction_json(o));
  vj["evidence"] = std::move(ev);
  vj["cone"] = v.cone ? io::cone_to_json(*v.cone) : Json(nullptr);
  j["verdict"] = std::move(vj);
  j["exit_code"] = exit_code(v.kind);
  if (with_timings) j["timings"] = r.timings;
  return j;
}

/// Human-readable summary naming the result behind each conclusion.
inline std::string human_summary(const AnalysisReport &r) {
  std::ostringstream os;
  os << "generators: " << r.gens.size() << " of dimension " << r.gens.dim()
     << ", horizon " << r.options.max_len << ", " << r.sample_size << " distinct products"
     << (r.truncated ? " (truncated at cap)" : "") << "\n";
  os << "perron: " << (r.perron.all_perron ? "every sampled product is Perron" : "non-Perron products found")
     << ", semigroup index " << r.perron.min_index << " (witness " << r.perron.min_index_witness.str()
     << ")\n";
  os << "irreducibility: " << to_string(r.irreducibility.status);
  if (!r.irreducibility.diagnostic.empty()) os << " (" << r.irreducibility.diagnostic << ")";
  os << "\n";
  os << "cone construction: " << to_string(r.build.status);
  if (r.build.base_word) os << ", base " << r.build.base_word->str();
  if (r.build.cone)
    os << ", " << r.build.cone->ray_count() << " rays, invariance residual "
       << r.build.cone->invariance_residual;
  if (!r.build.reason.empty()) os << " (" << r.build.reason << ")";
  os << "\n";
  const Verdict &v = r.verdict;
  os << "verdict: " << to_string(v.kind);
  switch (v.kind) {
  case VerdictKind::ConeFound:
    os << ": invariant cone found; the orbit of an index-one leading eigenvector spans it";
    if (v.cone && v.cone->strict_margin) os << " (strict margin " << *v.cone->strict_margin << ")";
    break;
  case VerdictKind::NoConeCertified:
    if (v.obstruction) {
      os << ": no invariant cone, ";
      switch (v.obstruction->kind) {
      case ObstructionKind::NonPerronWitness:
        os << "Krein-Rutman witness (an invariant cone forces every product to be Perron)";
        break;
      case ObstructionKind::OrthogonalNoFixedVector:
        os << "orthogonal set without a common fixed vector (an invariant cone would give a "
              "common Perron eigenvector)";
        break;
      case ObstructionKind::NegativeMapping:
        os << "every seed is mapped to its opposite direction";
        break;
      }
    }
    break;
  case VerdictKind::Inconclusive:
    os << ": no certificate either way";
    if (v.exceptional_regime) os << "; Perron, irreducible, index >= 3 (exceptional regime)";
    break;
  }
  os << "\n";
  if (v.obstruction) os << "  " << v.obstruction->detail << "\n";
  for (const auto &n : v.notes) os << "  note: " << n << "\n";
  return os.str();
}

} // namespace pcone
