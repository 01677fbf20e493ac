// Command-line front end: run experiment grids, validate family files, and
// generate instances.
//
// Exit codes: 0 success, 1 I/O or other runtime failure, 2 bad flags or
// malformed input, 3 budget exceeded.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uniftest/harness.hpp"

namespace ut = uniftest;

namespace {

std::vector<ut::Rational> parse_eps_list(const std::string& text) {
  std::vector<ut::Rational> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ut::Rational::parse(item));
  if (out.empty()) throw ut::ValidationError("--eps needs at least one value");
  return out;
}

struct GeneratorFlags {
  std::string generator = "star";
  int center = 1;
  int gen_j = 3;
  double p = 0.5;
  std::string family;
};

void add_generator_flags(CLI::App* cmd, GeneratorFlags& g) {
  cmd->add_option("--generator", g.generator, "star|junta|full|dno|random|file")->required();
  cmd->add_option("--center", g.center, "star center");
  cmd->add_option("--gen-j", g.gen_j, "majority junta size for --generator junta");
  cmd->add_option("--p", g.p, "inclusion probability for --generator random");
  cmd->add_option("--family", g.family, "family file for --generator file");
}

void apply(const GeneratorFlags& g, ut::ExperimentConfig& cfg) {
  cfg.generator = ut::parse_generator(g.generator);
  cfg.center = g.center;
  cfg.generator_j = g.gen_j;
  cfg.p = g.p;
  cfg.family_path = g.family;
}

int run_main(int argc, char** argv) {
  CLI::App app{"Testers for intersecting k-uniform families"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Monte-Carlo rejection rates over an eps grid");
  ut::ExperimentConfig cfg;
  GeneratorFlags run_gen;
  std::string tester = "canonical", eps_text, eps2_text, format = "csv", out_path, c_text;
  std::uint64_t m = 0;
  run->add_option("--n", cfg.n)->required();
  run->add_option("--k", cfg.k)->required();
  run->add_option("--tester", tester, "canonical|junta|density|disjoint-pair")->required();
  add_generator_flags(run, run_gen);
  run->add_option("--eps", eps_text, "rational, or a comma-separated grid")->required();
  run->add_option("--eps2", eps2_text, "tolerant testers: eps1 = --eps, eps2 = --eps2");
  auto* m_opt = run->add_option("--m", m, "sample count (default: the tester's formula)");
  auto* r_opt = run->add_option("--r", cfg.r, "canonical sample-size formula: r");
  auto* c_opt = run->add_option("--c", c_text, "canonical sample-size formula: constant c");
  run->add_option("--j", cfg.j, "junta tester: junta size (0..4)");
  m_opt->excludes(r_opt)->excludes(c_opt);
  run->add_option("--trials", cfg.trials)->required();
  run->add_option("--seed", cfg.seed)->required();
  run->add_flag("--validate", cfg.validate, "certify each instance with the exact oracle");
  run->add_option("--edge-budget", cfg.edge_budget, "exact-oracle edge budget");
  run->add_option("--threads", cfg.threads, "worker threads (results do not depend on it)");
  run->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--out", out_path)->required();

  // validate
  auto* validate = app.add_subcommand("validate", "exact distance of a family file");
  std::string validate_path, validate_eps;
  std::uint64_t validate_budget = ut::kDefaultEdgeBudget;
  validate->add_option("--family", validate_path)->required();
  validate->add_option("--eps", validate_eps)->required();
  validate->add_option("--edge-budget", validate_budget);

  // gen
  auto* gen = app.add_subcommand("gen", "write a generated family file");
  GeneratorFlags gen_flags;
  int gen_n = 0, gen_k = 0;
  std::string gen_eps = "0.1", gen_out;
  std::uint64_t gen_seed = 0;
  gen->add_option("--n", gen_n)->required();
  gen->add_option("--k", gen_k)->required();
  add_generator_flags(gen, gen_flags);
  gen->add_option("--eps", gen_eps, "farness for --generator dno");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (run->parsed()) {
    cfg.tester = ut::parse_tester(tester);
    apply(run_gen, cfg);
    if (!eps2_text.empty()) cfg.eps2 = ut::Rational::parse(eps2_text);
    if (!m_opt->empty()) cfg.m = m;
    if (!c_text.empty()) cfg.c = ut::Rational::parse(c_text).to_double();
    auto grid = parse_eps_list(eps_text);
    cfg.eps = grid.front();
    auto rows = ut::run_grid(cfg, grid);
    ut::emit_report(rows, format == "json" ? ut::ReportFormat::json : ut::ReportFormat::csv, out_path);
    return 0;
  }

  if (validate->parsed()) {
    auto f = ut::read_family(validate_path);
    const auto eps = ut::Rational::parse(validate_eps);
    const auto v = ut::validate_instance(f, eps, validate_budget);
    nlohmann::ordered_json j;
    j["n"] = f.n();
    j["k"] = f.k();
    j["size"] = f.size();
    j["eps"] = eps.to_string();
    j["distance"] = v.distance;
    j["classification"] = v.far ? "far" : "close";
    std::cout << j.dump() << '\n';
    return 0;
  }

  ut::ExperimentConfig gc;
  gc.n = gen_n;
  gc.k = gen_k;
  gc.eps = ut::Rational::parse(gen_eps);
  apply(gen_flags, gc);
  ut::check_uniform_params(gc.n, gc.k);
  auto inst = ut::make_instance(gc, gen_seed);
  if (!inst.family) throw ut::BudgetError("C(n,k) exceeds the explicit-family cap; nothing to write");
  ut::write_family(gen_out, *inst.family);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const ut::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ut::BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return 3;
  } catch (const ut::InsufficientMatching& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
