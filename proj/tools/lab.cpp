#include <CLI11.hpp>

#include <cstdio>
#include <iomanip>
#include <iostream>

#include "sclab/experiment.hpp"
#include "sclab/parallel.hpp"

namespace {

int cmd_run(const std::string& path, const std::string& out, int workers, long long seed) {
  sclab::ExperimentSpec spec;
  try {
    spec = sclab::load_spec(path);
  } catch (const sclab::ConfigError& e) {
    std::cerr << "lab: " << path << ": " << e.what() << "\n";
    return 2;
  }
  if (!out.empty()) spec.out_dir = out;
  spec.workers = workers > 0 ? workers : sclab::default_workers();
  if (seed >= 0) spec.seed = static_cast<std::uint64_t>(seed);

  sclab::RunResult r;
  try {
    r = sclab::run_experiment(spec);
  } catch (const sclab::ConfigError& e) {
    std::cerr << "lab: " << e.what() << "\n";
    return 2;
  }
  for (const auto& v : r.verdicts)
    std::cout << (v.passed ? "PASS  " : "FAIL  ") << v.name << (v.detail.empty() ? "" : "  [" + v.detail + "]")
              << "\n";
  if (!r.error.empty()) std::cerr << "lab: " << r.error << "\n";
  std::cout << "artifacts: " << spec.out_dir << "  exit " << r.exit_code << "\n";
  return r.exit_code;
}

int cmd_list() {
  std::cout << std::left << std::setw(11) << "suite" << "exercises\n";
  for (const auto& s : sclab::kSuites)
    std::cout << std::setw(11) << s.name << s.anchor << "\n" << std::setw(11) << "" << s.summary << "\n";
  return 0;
}

int cmd_dump(const std::string& path, double gamma) {
  try {
    const sclab::ExperimentSpec spec = sclab::load_spec(path);
    if (spec.suite == sclab::Suite::Projector) throw sclab::ConfigError("dump-operator: spec has no barrier");
    if (!(gamma > 0.0)) throw sclab::ConfigError("gamma: must be positive");
    sclab::dump_operator(std::cout, sclab::spec_operator(spec, gamma));
    return 0;
  } catch (const sclab::ConfigError& e) {
    std::cerr << "lab: " << e.what() << "\n";
    return 2;
  } catch (const sclab::PreconditionError& e) {
    std::cerr << "lab: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "lab: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schrodinger-operator lab for self-concordant barrier potentials"};
  app.require_subcommand(1);

  std::string spec_path, out;
  int workers = 0;
  long long seed = -1;
  auto* run = app.add_subcommand("run", "run the suite named in a spec file");
  run->add_option("spec", spec_path, "YAML experiment spec")->required();
  run->add_option("--out", out, "output directory (overrides the experiment file)");
  run->add_option("--workers", workers, "worker threads (default: available parallelism)");
  run->add_option("--seed", seed, "random seed (overrides the experiment file)");

  app.add_subcommand("list-suites", "list available suites");

  std::string dump_path;
  double gamma = 0.0;
  auto* dump = app.add_subcommand("dump-operator", "write the sparse operator of a spec at one gamma");
  dump->add_option("spec", dump_path, "YAML experiment spec")->required();
  dump->add_option("gamma", gamma, "semiclassical parameter")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (run->parsed()) return cmd_run(spec_path, out, workers, seed);
  if (dump->parsed()) return cmd_dump(dump_path, gamma);
  return cmd_list();
}
