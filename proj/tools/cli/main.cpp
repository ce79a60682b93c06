#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "handles.hpp"

namespace {

struct Common {
  std::string config;
  cli::Overrides ov;
};

// Flags shared by every config-driven subcommand.
void add_common(CLI::App* sub, Common& c) {
  sub->add_option("config", c.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.ov.seed, "RNG seed");
  sub->add_option("--out-dir", c.ov.out_dir, "Directory for output files");
  sub->add_option("--jobs", c.ov.jobs, "Worker threads")->check(CLI::PositiveNumber);
  auto* rho = sub->add_option("--rho", c.ov.rho, "Traffic intensity (replaces lambda)");
  auto* lambda = sub->add_option("--lambda", c.ov.lambda, "Arrival rate, requests/ms (replaces rho)");
  rho->excludes(lambda);
  sub->add_option("--w1", c.ov.w1, "Latency weight");
  sub->add_option("--w2", c.ov.w2, "Energy weight");
  sub->add_option("--s-max", c.ov.s_max, "Truncation level");
  sub->add_option("--c-o", c.ov.c_o, "Overflow cost rate");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal dynamic batching for a batch-service inference queue"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bq_version()));

  Common common;
  std::string dump_model;
  auto* solve = app.add_subcommand("solve", "Solve one operating point; writes policy.csv, solve.json, eval.json");
  add_common(solve, common);
  solve->add_option("--dump-model", dump_model, "Also write the truncated model as CSV");

  auto* sweep = app.add_subcommand("sweep", "Solve a rho x w2 grid; writes tradeoff.csv and policies.csv");
  add_common(sweep, common);
  auto* compare = app.add_subcommand("compare", "Benchmark policies against the solved one; writes comparison.csv");
  add_common(compare, common);
  auto* qlearn = app.add_subcommand("qlearn", "Train tabular Q-learning and track agreement with the solved policy");
  add_common(qlearn, common);
  auto* study = app.add_subcommand("truncation-study", "Smallest acceptable s_max per overflow cost; writes table1.csv");
  add_common(study, common);
  auto* simulate = app.add_subcommand("simulate", "Discrete-event simulation of one policy; writes sim.json");
  add_common(simulate, common);
  auto* profile = app.add_subcommand("profile", "Per-batch latency, energy and throughput; writes profile.csv");
  add_common(profile, common);

  std::string samples, fit_out = "out";
  int fit_b_max = 0;
  auto* fit = app.add_subcommand("fit", "Fit a linear profile to measured samples");
  fit->add_option("samples", samples, "CSV with batch,latency_ms,energy_mJ")->required()->check(CLI::ExistingFile);
  fit->add_option("--b-max", fit_b_max, "Largest batch size")->required();
  fit->add_option("--out-dir", fit_out, "Directory for profile.json and fit.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return cli::cmd_fit(samples, fit_b_max, fit_out);
    const auto config = cli::load_config(common.config, common.ov);
    if (solve->parsed()) return cli::cmd_solve(config, dump_model);
    if (sweep->parsed()) return cli::cmd_sweep(config);
    if (compare->parsed()) return cli::cmd_compare(config);
    if (qlearn->parsed()) return cli::cmd_qlearn(config);
    if (study->parsed()) return cli::cmd_truncation_study(config);
    if (simulate->parsed()) return cli::cmd_simulate(config);
    if (profile->parsed()) return cli::cmd_profile(config);
  } catch (const cli::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return cli::kError;
  } catch (const cli::ApiError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return cli::kError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::kError;
  }
  return cli::kError;
}
