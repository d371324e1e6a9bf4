#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "plotsteal/config.hpp"
#include "plotsteal/harness.hpp"

namespace {

int run_stage(const std::string& stage, const std::string& config_path, long long seed_override,
              long long jobs_override, const std::string& out_override) {
  plotsteal::ExperimentConfig config = plotsteal::ExperimentConfig::load_file(config_path);
  if (seed_override >= 0) config.master_seed = static_cast<std::uint64_t>(seed_override);
  if (jobs_override > 0) config.jobs = static_cast<std::size_t>(jobs_override);
  if (!out_override.empty()) config.out_dir = out_override;

  plotsteal::Harness harness(std::move(config));
  const auto results = harness.run(stage);
  for (const auto& r : results) {
    if (r.skipped)
      std::printf("[%s] up to date (%zu reused)\n", r.stage.c_str(), r.items_reused);
    else
      std::printf("[%s] built %zu item(s), reused %zu\n", r.stage.c_str(), r.items_built,
                  r.items_reused);
  }
  std::printf("artifacts: %s\n", harness.run_dir().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-information stealing via scientific plots: experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  long long seed_override = -1;
  long long jobs_override = 0;
  std::string out_override;
  app.add_option("--config", config_path, "Experiment config (.ini style or .json)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed_override, "Override the master seed");
  app.add_option("--jobs", jobs_override, "Worker cap for parallel stages");
  app.add_option("--out", out_override, "Output directory root");

  for (const auto& stage : plotsteal::Harness::stage_names())
    app.add_subcommand(stage, "Run the " + stage + " stage (resumable)");
  app.add_subcommand("all", "Run every stage in order");

  CLI11_PARSE(app, argc, argv);

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    return run_stage(stage, config_path, seed_override, jobs_override, out_override);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
