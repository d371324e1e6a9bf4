#pragma once

#include <map>
#include <string>
#include <vector>

#include "plotsteal/attack.hpp"
#include "plotsteal/config.hpp"

namespace plotsteal {

struct StageResult {
  std::string stage;
  bool skipped = false;        // manifest matched, nothing to do
  std::size_t items_built = 0;
  std::size_t items_reused = 0;
};

// Experiment orchestration. Every stage is resumable: a stage whose manifest
// matches the config hash (and whose artifacts are intact) is skipped;
// missing per-model artifacts are rebuilt individually. All outputs live
// under <out_dir>/<config-hash>/.
class Harness {
 public:
  explicit Harness(ExperimentConfig config);

  // Subcommands: gen-data, train-shadows, render-plots, defend, train-attack,
  // evaluate, adaptive, query-baseline, downstream, report, all.
  std::vector<StageResult> run(const std::string& subcommand);

  static const std::vector<std::string>& stage_names();

  const std::string& run_dir() const { return run_dir_; }
  const ExperimentConfig& config() const { return config_; }

 private:
  StageResult stage_gen_data();
  StageResult stage_train_shadows();
  StageResult stage_render_plots();
  StageResult stage_defend();
  StageResult stage_train_attack();
  StageResult stage_evaluate();
  StageResult stage_adaptive();
  StageResult stage_query_baseline();
  StageResult stage_downstream();
  StageResult stage_report();

  // Lazy artifact loading; throws with a hint when the producing stage has
  // not run yet.
  const DatasetBundle& bundle();
  const std::vector<ModelRecord>& records();
  const std::vector<PlotSource>& sources(ModelRole role);

  struct AttackCondition {
    InferenceTargetKind target;
    PlotKind plot_kind;
    bool with_axes = true;  // loss plots only
    bool mixed = true;
    std::string key() const;
    std::string plot_name() const;
  };
  std::vector<AttackCondition> conditions() const;
  BuildOptions build_options(const AttackCondition& cond) const;

  bool manifest_ok(const std::string& dir, const std::string& stage) const;
  void write_manifest(const std::string& dir, const std::string& stage,
                      const std::map<std::string, std::string>& extra = {}) const;

  ExperimentConfig config_;
  std::string run_dir_;
  std::uint64_t defense_seed_base_ = 0;

  bool bundle_loaded_ = false;
  DatasetBundle bundle_;
  bool records_loaded_ = false;
  std::vector<ModelRecord> records_;
  bool sources_loaded_ = false;
  std::vector<PlotSource> shadow_sources_;
  std::vector<PlotSource> target_sources_;
};

}  // namespace plotsteal
