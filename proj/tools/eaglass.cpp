// Command-line front end: one subcommand per experiment kind plus `report`.
//
// Exit codes: 0 pass, 1 criterion failed, 2 bad config or usage,
// 3 unsupported geometry, 4 runtime error (including incomplete runs).

#include <cstdlib>
#include <functional>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "eaglass/error.hpp"
#include "eaglass/harness.hpp"

namespace {

using eaglass::harness::ExperimentConfig;
using eaglass::harness::Kind;

constexpr Kind kRunKinds[] = {Kind::Fe,       Kind::DomainWall, Kind::Ensemble, Kind::Martingale,
                              Kind::EdgeMartingale, Kind::Bounds, Kind::Mgf,    Kind::Probe,
                              Kind::Scaling,  Kind::Covariance, Kind::OracleVerify};

using Override = std::function<void(ExperimentConfig&)>;

template <class T>
void override_flag(CLI::App* app, std::vector<Override>& out, const std::string& name, T ExperimentConfig::*field,
                   const std::string& help) {
  auto value = std::make_shared<T>();
  CLI::Option* opt = app->add_option(name, *value, help);
  if constexpr (requires { value->push_back(value->front()); }) opt->delimiter(',');
  out.push_back([=](ExperimentConfig& c) {
    if (opt->count() > 0) c.*field = *value;
  });
}

struct RunCommand {
  Kind kind = Kind::Fe;
  CLI::App* app = nullptr;
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  int workers = 0;
  bool resume = false;
  bool timing = false;
  std::vector<Override> overrides;
};

void add_run_command(CLI::App& root, RunCommand& cmd) {
  const std::string name(eaglass::harness::to_string(cmd.kind));
  CLI::App* app = root.add_subcommand(name, "run the " + name + " experiment");
  cmd.app = app;
  app->add_option("--config", cmd.config_path, "JSON config file; flags override its fields")->check(CLI::ExistingFile);
  cmd.seed_opt = app->add_option("--seed", cmd.seed, "master seed (required here or in the config)");
  app->add_option("--out", cmd.out, "output directory");
  app->add_option("--workers", cmd.workers, "worker threads (default: EAGLASS_WORKERS, then all cores)")
      ->check(CLI::NonNegativeNumber);
  app->add_flag("--resume", cmd.resume, "continue from the records already in the output directory");
  app->add_flag("--timing", cmd.timing, "store per-task wall-clock seconds in the records");

  auto& o = cmd.overrides;
  override_flag(app, o, "--id", &ExperimentConfig::id, "experiment id");
  override_flag(app, o, "--dim", &ExperimentConfig::dim, "lattice dimension");
  override_flag(app, o, "--window", &ExperimentConfig::window, "window side L");
  override_flag(app, o, "--margin", &ExperimentConfig::margin, "distance from the window to the box faces");
  override_flag(app, o, "--sizes", &ExperimentConfig::sizes, "window sides for scaling / Lindeberg rows");
  override_flag(app, o, "--block", &ExperimentConfig::block, "block side");
  override_flag(app, o, "--extents", &ExperimentConfig::extents, "torus or box extents");
  override_flag(app, o, "--beta", &ExperimentConfig::beta, "inverse temperature(s)");
  override_flag(app, o, "--distribution", &ExperimentConfig::distribution, "coupling law, e.g. gaussian(0,1)");
  override_flag(app, o, "--bc", &ExperimentConfig::bc, "boundary condition of the first state");
  override_flag(app, o, "--bc-prime", &ExperimentConfig::bc_prime, "boundary condition of the second state");
  override_flag(app, o, "--oracle-bcs", &ExperimentConfig::oracle_bcs, "boundary conditions for oracle-verify");
  override_flag(app, o, "--n", &ExperimentConfig::n, "realizations");
  override_flag(app, o, "--n-outer", &ExperimentConfig::n_outer, "inner draws per conditional mean");
  override_flag(app, o, "--bootstrap", &ExperimentConfig::bootstrap, "bootstrap resamples");
  override_flag(app, o, "--t", &ExperimentConfig::t, "MGF arguments");
  override_flag(app, o, "--epsilon", &ExperimentConfig::epsilon, "probe thresholds");
  override_flag(app, o, "--delta", &ExperimentConfig::delta, "Lindeberg threshold");
  override_flag(app, o, "--realization", &ExperimentConfig::realization, "realization index (fe, domain-wall)");
  override_flag(app, o, "--symmetric-bc", &ExperimentConfig::symmetric_bc, "first state of the symmetric pair");
  override_flag(app, o, "--symmetric-bc-prime", &ExperimentConfig::symmetric_bc_prime,
                "second state of the symmetric pair");
  override_flag(app, o, "--method", &ExperimentConfig::method, "solver: auto, enumeration or transfer");
  override_flag(app, o, "--enum-cap", &ExperimentConfig::enum_cap, "largest enumerated spin count");
  override_flag(app, o, "--transfer-cap", &ExperimentConfig::transfer_cap, "largest transfer-matrix width");
}

ExperimentConfig build_config(const RunCommand& cmd) {
  ExperimentConfig c;
  if (!cmd.config_path.empty()) {
    c = ExperimentConfig::load(cmd.config_path);
    if (c.kind != cmd.kind) {
      throw eaglass::ConfigError("config kind '" + std::string(eaglass::harness::to_string(c.kind)) +
                                 "' does not match the subcommand");
    }
  } else {
    c.kind = cmd.kind;
    if (cmd.kind == Kind::Scaling) c.sizes = {2, 3, 4};
  }
  for (const auto& apply : cmd.overrides) apply(c);
  if (cmd.seed_opt->count() > 0) c.seed = cmd.seed;
  if (!cmd.out.empty()) c.output = cmd.out;
  return c;
}

int summarize(const eaglass::harness::RunOutcome& r) {
  const std::string verdict = r.status == "unsupported" ? "unsupported" : (r.pass ? "pass" : "FAIL");
  std::cout << r.report.value("kind", "") << " " << r.report.value("id", "") << ": " << verdict << " -> "
            << (r.dir / "report.json").string() << "\n";
  if (r.status == "unsupported") return 3;
  return r.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-volume Edwards-Anderson interface free energy experiments"};
  app.require_subcommand(1);
  std::vector<RunCommand> commands;
  commands.reserve(std::size(kRunKinds));
  for (Kind k : kRunKinds) {
    commands.emplace_back().kind = k;
    add_run_command(app, commands.back());
  }
  std::string report_dir;
  CLI::App* rep = app.add_subcommand("report", "rebuild report.json and the CSV files from records.jsonl");
  rep->add_option("dir", report_dir, "output directory of a run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (rep->parsed()) return summarize(eaglass::harness::report(report_dir));
    for (const auto& cmd : commands) {
      if (!cmd.app->parsed()) continue;
      const ExperimentConfig config = build_config(cmd);
      eaglass::harness::RunOptions opts;
      opts.workers = cmd.workers;
      opts.resume = cmd.resume;
      opts.timing = cmd.timing;
      return summarize(eaglass::harness::run(config, opts));
    }
  } catch (const eaglass::ConfigError& e) {
    std::cerr << "eaglass: config error: " << e.what() << "\n";
    return 2;
  } catch (const eaglass::UnsupportedError& e) {
    std::cerr << "eaglass: unsupported: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "eaglass: error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
