// pcone: analyze matrix sets for Perron structure and common invariant cones.
//
//   pcone analyze SET.json [--out REPORT.json]
//   pcone find-cone SET.json [--out CONE.json]
//   pcone check-cone SET.json CONE.json
//   pcone generate FAMILY [--m M] [--kind GROUP] [--d D] [--count N] [--seed S] [--out SET.json]
//
// Exit codes: 0 cone found / invariant, 2 input error, 10 no cone / not
// invariant, 20 inconclusive.

#include "pcone/pcone.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using pcone::io::Json;

struct Common {
  pcone::AnalysisOptions analysis;
  std::string out;
  bool json_only = false;
};

void add_common(CLI::App *cmd, Common &c) {
  cmd->add_option("--max-len", c.analysis.max_len, "word-length horizon")->capture_default_str();
  cmd->add_option("--tol", c.analysis.tol, "LP feasibility tolerance; others scale with it")
      ->capture_default_str();
  cmd->add_option("--cap", c.analysis.cap, "semigroup element cap")->capture_default_str();
  cmd->add_option("--seeds", c.analysis.seeds, "random seeds for negative mappings")
      ->capture_default_str();
  cmd->add_option("--seed", c.analysis.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--out", c.out, "output path");
  cmd->add_flag("--json-only", c.json_only, "print only JSON to standard output");
}

void emit(const Json &j, const Common &c) {
  if (c.out.empty())
    std::cout << j.dump(2) << "\n";
  else
    pcone::io::write_json(c.out, j);
}

int cmd_analyze(const std::string &path, const Common &c) {
  const pcone::GeneratorSet gens = pcone::io::read_matrix_set(path);
  const pcone::AnalysisReport r = pcone::run_analysis(gens, c.analysis);
  if (!c.json_only) std::cout << pcone::human_summary(r);
  if (c.json_only || !c.out.empty()) emit(pcone::report_json(r), c);
  return pcone::exit_code(r.verdict.kind);
}

int cmd_find_cone(const std::string &path, const Common &c) {
  const pcone::GeneratorSet gens = pcone::io::read_matrix_set(path);
  const pcone::AnalysisReport r = pcone::run_analysis(gens, c.analysis);
  const auto &b = r.build;
  const bool built = (b.status == pcone::BuildStatus::Built ||
                      b.status == pcone::BuildStatus::NilpotentBranchBuilt) &&
                     b.cone;
  Json cone = nullptr;
  if (built) {
    Json meta = {{"status", pcone::to_string(b.status)},
                 {"base_word", pcone::io::to_json(*b.base_word)}};
    cone = pcone::io::cone_to_json(*b.cone, meta);
  }
  if (!c.json_only) {
    std::cout << "construction: " << pcone::to_string(b.status);
    if (b.status == pcone::BuildStatus::NoIndexOneElement) std::cout << ": no index-one element";
    if (!b.reason.empty()) std::cout << " (" << b.reason << ")";
    std::cout << "\n";
    if (b.cone) {
      std::cout << "rays: " << b.cone->ray_count() << "\n";
      std::cout << "strict_margin: "
                << (b.cone->strict_margin ? std::to_string(*b.cone->strict_margin) : "none") << "\n";
      std::cout << "invariance_residual: " << b.cone->invariance_residual << "\n";
    }
    std::cout << "verdict: " << pcone::to_string(r.verdict.kind) << "\n";
  }
  if (built && !c.out.empty())
    pcone::io::write_json(c.out, cone);
  else if (c.json_only)
    std::cout << Json({{"cone", cone}, {"report", pcone::report_json(r)}}).dump(2) << "\n";
  return pcone::exit_code(r.verdict.kind);
}

int cmd_check_cone(const std::string &set_path, const std::string &cone_path, const Common &c) {
  const pcone::GeneratorSet gens = pcone::io::read_matrix_set(set_path);
  const pcone::ConeApprox cone = pcone::io::read_cone(cone_path);
  const pcone::ToleranceConfig cfg = c.analysis.tolerances();
  const pcone::UserConeCheck chk = pcone::check_user_cone(gens, cone, cfg);
  const Json j = {{"invariant", chk.invariant},
                  {"pointed", chk.pointed},
                  {"residual", chk.residual},
                  {"tolerance", cfg.lp_feas},
                  {"worst_generator", gens.names[chk.worst_generator]},
                  {"worst_ray", chk.worst_ray}};
  if (!c.json_only) {
    std::cout << (chk.invariant ? "invariant" : "not invariant") << ": residual " << chk.residual
              << " (tolerance " << cfg.lp_feas << "), worst generator "
              << gens.names[chk.worst_generator] << " on ray " << chk.worst_ray + 1 << "\n";
    std::cout << (chk.pointed ? "pointed" : "not pointed") << "\n";
  }
  if (c.json_only || !c.out.empty()) emit(j, c);
  return chk.invariant ? pcone::kExitConeFound : pcone::kExitNoCone;
}

struct GenerateArgs {
  std::string kind;
  std::size_t m = 2;
  std::string group = "tetrahedral";
  long d = 3;
  std::size_t count = 2;
  std::size_t order = 5;
  bool constant_map = false;
};

int cmd_generate(const GenerateArgs &g, const Common &c) {
  pcone::GeneratorSet gens;
  const std::uint64_t seed = c.analysis.seed;
  if (g.kind == "sm") {
    pcone::Rng rng(seed);
    const pcone::SmSpec spec = pcone::random_sm_spec(g.m, rng, g.constant_map);
    gens = pcone::GeneratorSet({pcone::make_sm(spec)}, {"S" + std::to_string(g.m)});
  } else if (g.kind == "sm-witness") {
    pcone::Rng rng(seed);
    pcone::RealVector v = pcone::random_gaussian(static_cast<pcone::Index>(3 * g.m), 1, rng);
    for (std::size_t i = 0; i < g.m; ++i) v.segment<3>(static_cast<pcone::Index>(3 * i)).normalize();
    gens = pcone::GeneratorSet({pcone::sm_negative_witness(g.m, v).matrix}, {"W"});
  } else if (g.kind == "rot-group") {
    gens = pcone::rotation_group(pcone::parse_group(g.group));
  } else if (g.kind == "cyclic") {
    gens = pcone::cyclic_rotation(g.order);
  } else if (g.kind == "mirror") {
    gens = pcone::mirror_pair();
  } else if (g.kind == "nonneg" || g.kind == "orthogonal" || g.kind == "conjugated") {
    gens = pcone::random_family(pcone::parse_random_kind(g.kind), g.d, g.count, seed);
  } else {
    throw pcone::InputError("unknown generate kind '" + g.kind +
                            "' (sm, sm-witness, rot-group, cyclic, mirror, nonneg, orthogonal, "
                            "conjugated)");
  }
  emit(pcone::io::matrix_set_to_json(gens), c);
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Perron structure and common invariant cones of matrix sets"};
  app.require_subcommand(1);
  Common common;
  std::string set_path, cone_path;
  GenerateArgs gen;

  auto *analyze = app.add_subcommand("analyze", "full analysis with JSON report");
  analyze->add_option("set", set_path, "matrix set JSON")->required();
  add_common(analyze, common);

  auto *find = app.add_subcommand("find-cone", "build and write a common invariant cone");
  find->add_option("set", set_path, "matrix set JSON")->required();
  add_common(find, common);

  auto *check = app.add_subcommand("check-cone", "verify a supplied cone against a matrix set");
  check->add_option("set", set_path, "matrix set JSON")->required();
  check->add_option("cone", cone_path, "cone JSON")->required();
  add_common(check, common);

  auto *generate = app.add_subcommand("generate", "write an example matrix set");
  generate->add_option("family", gen.kind,
                       "sm, sm-witness, rot-group, cyclic, mirror, nonneg, orthogonal, conjugated")
      ->required();
  generate->add_option("--m", gen.m, "S_m block count")->capture_default_str();
  generate->add_option("--kind", gen.group, "tetrahedral, octahedral, icosahedral")
      ->capture_default_str();
  generate->add_option("--d", gen.d, "dimension")->capture_default_str();
  generate->add_option("--count", gen.count, "number of matrices")->capture_default_str();
  generate->add_option("--order", gen.order, "cyclic rotation order")->capture_default_str();
  generate->add_flag("--constant-map", gen.constant_map, "S_m with every block in row block 1");
  add_common(generate, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return pcone::kExitInputError;
  }

  try {
    if (*analyze) return cmd_analyze(set_path, common);
    if (*find) return cmd_find_cone(set_path, common);
    if (*check) return cmd_check_cone(set_path, cone_path, common);
    if (*generate) return cmd_generate(gen, common);
  } catch (const pcone::InputError &e) {
    std::cerr << "input error: " << e.what() << "\n";
    return pcone::kExitInputError;
  } catch (const pcone::PreconditionError &e) {
    std::cerr << "input error: " << e.what() << "\n";
    return pcone::kExitInputError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return pcone::kExitInconclusive;
  }
  return pcone::kExitInputError;
}
