#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "bbi/proof_json.hpp"
#include "bbi/search.hpp"
#include "bbi/semantics.hpp"

namespace {

struct CommonFlags {
  bool pd = false, td = false, iu = false, cancellative = false;
  int depth = 3;
  int a_budget = 4;
  int timeout_ms = 10000;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_flag("--pd", f.pd, "partial-deterministic semantics (enables rule P)");
  cmd->add_flag("--td", f.td, "total-deterministic semantics (enables rules P and T)");
  cmd->add_flag("--indivisible-unit", f.iu, "indivisible unit (enables rule IU)");
  cmd->add_flag("--cancellative", f.cancellative, "cancellative composition (enables C and P)");
  cmd->add_option("--depth", f.depth, "max expansions per positive occurrence per branch")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--a-budget", f.a_budget, "associativity budget of the constraint solver")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--timeout", f.timeout_ms, "timeout in milliseconds")->check(CLI::PositiveNumber);
}

std::set<bbi::RuleId> extras_of(const CommonFlags& f) {
  std::set<bbi::RuleId> out;
  if (f.pd || f.td || f.cancellative) out.insert(bbi::RuleId::P);
  if (f.td) out.insert(bbi::RuleId::T);
  if (f.iu) out.insert(bbi::RuleId::IU);
  if (f.cancellative) out.insert(bbi::RuleId::C);
  return out;
}

bbi::SearchOptions options_of(const CommonFlags& f) {
  bbi::SearchOptions opts;
  opts.multiplicity = f.depth;
  opts.r_budget.max_a = f.a_budget;
  opts.extras = extras_of(f);
  opts.timeout_ms = f.timeout_ms;
  return opts;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_prove(const std::string& text, const CommonFlags& flags, const std::string& emit_path) {
  bbi::Formula f = bbi::parse_formula(text);
  bbi::Outcome out = bbi::prove(f, options_of(flags));
  const auto& st = out.stats;
  if (out.proved) {
    std::cout << "PROVED " << bbi::to_string(f) << "\n";
    std::cout << "  time: " << std::fixed << std::setprecision(1) << st.wall_ms
              << " ms  branches: " << st.branches << "  closures: " << st.closures
              << "  constraint systems: " << st.solves
              << "  solver candidates: " << st.solve_candidates
              << "  depth: " << st.multiplicity_used << "\n";
    if (!emit_path.empty()) {
      bbi::write_proof_file(emit_path, out.data->ground);
      std::cout << "  proof written to " << emit_path << "\n";
    }
    return 0;
  }
  std::cout << "UNPROVED " << bbi::to_string(f) << (st.timed_out ? " (timeout)" : "") << "\n";
  std::cout << "  time: " << std::fixed << std::setprecision(1) << st.wall_ms
            << " ms  branches: " << st.branches << "  closures: " << st.closures
            << "  constraint systems: " << st.solves << "\n";
  return 1;
}

int run_check(const std::string& path, const CommonFlags& flags, bool allow_cut) {
  bbi::Derivation d = bbi::read_proof_file(path);
  bbi::CheckOptions opts;
  opts.allow_cut = allow_cut;
  opts.extras = extras_of(flags);
  bbi::CheckReport rep = bbi::check(d, opts);
  if (rep.accepted) {
    std::cout << "ACCEPTED " << path << "\n";
    std::cout << "  end sequent: " << bbi::to_string(d.conclusion) << "\n";
    std::cout << "  height: " << d.height() << "  cuts: " << rep.cut_count << "\n";
    return 0;
  }
  std::cout << "REJECTED " << path << "\n  " << rep.message << "\n  at premise path:";
  for (int i : rep.path) std::cout << " " << i;
  std::cout << "\n";
  return 1;
}

int run_bench(const std::string& path, const CommonFlags& flags) {
  auto suite = bbi::parse_suite(read_file(path));
  bbi::SearchOptions opts = options_of(flags);
  int failures = 0;
  std::cout << std::left << std::setw(5) << "#" << std::setw(10) << "status" << std::setw(12)
            << "time(ms)" << "formula\n";
  for (size_t i = 0; i < suite.size(); i++) {
    bbi::Outcome out = bbi::prove(suite[i].formula, opts);
    if (!out.proved) failures++;
    std::cout << std::left << std::setw(5) << (i + 1) << std::setw(10)
              << (out.proved ? "PROVED" : "UNPROVED") << std::setw(12) << std::fixed
              << std::setprecision(1) << out.stats.wall_ms << suite[i].text << "\n";
  }
  std::cout << (suite.size() - failures) << "/" << suite.size() << " proved\n";
  return failures == 0 ? 0 : 1;
}

int run_oracle(const std::string& text, const CommonFlags& flags, int max_size) {
  bbi::Formula f = bbi::parse_formula(text);
  bbi::ModelClassFlags mf;
  mf.pd = flags.pd || flags.td || flags.cancellative;
  mf.td = flags.td;
  mf.iu = flags.iu;
  mf.can = flags.cancellative;
  auto cm = bbi::countermodel(f, max_size, mf);
  if (cm) {
    std::cout << "COUNTERMODEL for " << bbi::to_string(f) << " at world " << cm->world << "\n";
    std::cout << cm->model.describe();
    return 0;
  }
  std::cout << "no countermodel up to size " << max_size << " for " << bbi::to_string(f) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"theorem prover and proof checker for Boolean BI"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string formula_text, file_path, emit_path;
  bool allow_cut = false;
  int max_model_size = 3;

  auto* prove = app.add_subcommand("prove", "prove a formula");
  prove->add_option("formula", formula_text, "formula text")->required();
  add_common(prove, flags);
  prove->add_option("--emit-proof", emit_path, "write the proof as JSON to this path");

  auto* chk = app.add_subcommand("check", "check a proof file");
  chk->add_option("proof", file_path, "proof file (JSON)")->required();
  chk->add_flag("--allow-cut", allow_cut, "accept derivations that use cut");
  add_common(chk, flags);

  auto* bench = app.add_subcommand("bench", "run a suite file");
  bench->add_option("suite", file_path, "suite file: one formula per line, # comments")->required();
  add_common(bench, flags);

  auto* oracle = app.add_subcommand("oracle", "search for a finite countermodel");
  oracle->add_option("formula", formula_text, "formula text")->required();
  oracle->add_option("--max-model-size", max_model_size, "bound on model size (<= 4)")
      ->check(CLI::Range(1, 4));
  add_common(oracle, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help exits cleanly, usage errors exit 2
  }

  try {
    if (prove->parsed()) return run_prove(formula_text, flags, emit_path);
    if (chk->parsed()) return run_check(file_path, flags, allow_cut);
    if (bench->parsed()) return run_bench(file_path, flags);
    if (oracle->parsed()) return run_oracle(formula_text, flags, max_model_size);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
