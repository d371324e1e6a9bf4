#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "plotsteal/config.hpp"
#include "plotsteal/harness.hpp"

namespace fs = std::filesystem;
using namespace plotsteal;

namespace {

std::string tiny_config_text(const std::string& out_dir) {
  std::ostringstream os;
  os << R"([dataset]
kind = blobs
classes = 3
dims = 8
samples_per_class = 48
dispersion = 0.3

[pool]
activations = relu
hidden_layers = 2
optimizers = adam:0.01, sgd:0.08
batch_sizes = 16
hidden_width = 12
epochs = 5

[population]
shadow_count = 6
target_count = 3
filter_threshold = 0.4

[tsne]
perplexity = 8
iterations = 80
exaggeration_iters = 40
momentum_switch_iter = 40
samples = 24

[render]
canvas = 64
marker_radius = 1
color_mode = grayscale

[loss_render]
canvas = 64

[attack]
input_size = 16
hidden = 32
epochs = 15
batch_size = 4
repetitions = 2
targets = optimizer
settings = mixed
plot_kinds = tsne, loss

[defenses]
tsne = cn:0.05
loss = sliding:2
adaptive_tsne = cn:0.05
adaptive_loss = sliding:2

[knn]
k = 3

[query]
enabled = true
count = 20
hidden = 16
epochs = 20

[downstream]
enabled = true
epsilons = 0.2
sample_count = 12
repetitions = 1
infer = optimizer

[run]
master_seed = 7
out_dir = )"
     << out_dir << "\njobs = 2\n";
  return os.str();
}

std::string fresh_dir(const std::string& name) {
  const std::string dir = (fs::temp_directory_path() / name).string();
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config: ini parsing picks up every section") {
  const ExperimentConfig c = ExperimentConfig::parse(tiny_config_text("/tmp/x"), false);
  CHECK(c.dataset.classes == 3);
  CHECK(c.pool.optimizers.size() == 2);
  CHECK(c.pool.optimizers[0].kind == OptimizerKind::adam);
  CHECK(c.pool.optimizers[0].learning_rate == doctest::Approx(0.01));
  CHECK(c.shadow_count == 6);
  CHECK(c.tsne.perplexity == doctest::Approx(8.0));
  CHECK(c.tsne_samples == 24);
  CHECK(c.render.canvas_width == 64);
  CHECK(c.attack.hidden == std::vector<std::size_t>{32});
  CHECK(c.repetitions == 2);
  CHECK(c.tsne_defenses.size() == 1);
  CHECK(c.tsne_defenses[0].tag() == "cn:0.05");
  CHECK(c.loss_defenses.size() == 1);
  CHECK(c.knn_k == 3);
  CHECK(c.query.query_count == 20);
  CHECK(c.downstream_epsilons == std::vector<double>{0.2});
  CHECK(c.master_seed == 7);
  CHECK(c.jobs == 2);
}

TEST_CASE("config: json alternate produces the same hash as ini") {
  const ExperimentConfig ini = ExperimentConfig::parse(tiny_config_text("/tmp/x"), false);
  const std::string json = R"({
    "dataset": {"kind": "blobs", "classes": 3, "dims": 8, "samples_per_class": 48,
                "dispersion": 0.3},
    "pool": {"activations": ["relu"], "hidden_layers": [2],
             "optimizers": ["adam:0.01", "sgd:0.08"], "batch_sizes": [16],
             "hidden_width": 12, "epochs": 5},
    "population": {"shadow_count": 6, "target_count": 3, "filter_threshold": 0.4},
    "tsne": {"perplexity": 8, "iterations": 80, "exaggeration_iters": 40,
             "momentum_switch_iter": 40, "samples": 24},
    "render": {"canvas": 64, "marker_radius": 1, "color_mode": "grayscale"},
    "loss_render": {"canvas": 64},
    "attack": {"input_size": 16, "hidden": [32], "epochs": 15, "batch_size": 4,
               "repetitions": 2, "targets": ["optimizer"], "settings": ["mixed"],
               "plot_kinds": ["tsne", "loss"]},
    "defenses": {"tsne": ["cn:0.05"], "loss": ["sliding:2"],
                 "adaptive_tsne": ["cn:0.05"], "adaptive_loss": ["sliding:2"]},
    "knn": {"k": 3},
    "query": {"enabled": true, "count": 20, "hidden": [16], "epochs": 20},
    "downstream": {"enabled": true, "epsilons": [0.2], "sample_count": 12,
                   "repetitions": 1, "infer": ["optimizer"]},
    "run": {"master_seed": 7, "out_dir": "/tmp/y", "jobs": 4}
  })";
  const ExperimentConfig js = ExperimentConfig::parse(json, true);
  // out_dir and jobs differ but are excluded from the hash.
  CHECK(ini.config_hash_hex() == js.config_hash_hex());
}

TEST_CASE("config: validation lists every offending field") {
  std::string text = tiny_config_text("/tmp/x");
  text += "\n[attack]\nrepetitions = 0\n[knn]\nk = 0\n";
  try {
    ExperimentConfig::parse(text, false);
    FAIL("expected validation failure");
  } catch (const std::runtime_error& e) {
    const std::string message = e.what();
    CHECK(message.find("attack.repetitions") != std::string::npos);
    CHECK(message.find("knn.k") != std::string::npos);
  }
}

TEST_CASE("config: adaptive defenses must be configured defenses") {
  std::string text = tiny_config_text("/tmp/x");
  text += "\n[defenses]\nadaptive_tsne = et:0.6\n";
  CHECK_THROWS_WITH_AS(static_cast<void>(ExperimentConfig::parse(text, false)),
                       doctest::Contains("adaptive_tsne"), std::runtime_error);
}

TEST_CASE("harness: full tiny run, resume, targeted invalidation") {
  const std::string out = fresh_dir("plotsteal_harness_test");
  ExperimentConfig config = ExperimentConfig::parse(tiny_config_text(out), false);

  Harness harness(config);
  const auto first = harness.run("all");
  REQUIRE(first.size() == 10);
  for (const auto& r : first) {
    CAPTURE(r.stage);
    CHECK((r.items_built > 0 || r.skipped));
  }

  // Key artifacts exist.
  const std::string run_dir = harness.run_dir();
  CHECK(fs::exists(run_dir + "/data/bundle.bin"));
  CHECK(fs::exists(run_dir + "/metrics/attack_runs.csv"));
  CHECK(fs::exists(run_dir + "/metrics/adaptive_runs.csv"));
  CHECK(fs::exists(run_dir + "/metrics/query.csv"));
  CHECK(fs::exists(run_dir + "/metrics/downstream.csv"));
  CHECK(fs::exists(run_dir + "/metrics/knn_utility.csv"));
  CHECK(fs::exists(run_dir + "/metrics/l2_utility.csv"));
  CHECK(fs::exists(run_dir + "/report.txt"));
  CHECK(fs::exists(run_dir + "/plots/sparsity.csv"));

  // Rerunning performs no work.
  Harness harness2(config);
  const auto second = harness2.run("all");
  for (const auto& r : second) {
    CAPTURE(r.stage);
    CHECK(r.skipped);
    CHECK(r.items_built == 0);
  }

  // Deleting one shadow model retrains exactly that model.
  std::string victim_dir;
  for (const auto& entry : fs::directory_iterator(run_dir + "/models")) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("shadow-002", 0) == 0) victim_dir = entry.path().string();
  }
  REQUIRE_FALSE(victim_dir.empty());
  std::string victim_net_before;
  {
    std::ifstream in(victim_dir + "/net.bin", std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    victim_net_before = buf.str();
  }
  fs::remove_all(victim_dir);

  Harness harness3(config);
  const auto rebuilt = harness3.run("train-shadows");
  REQUIRE(rebuilt.size() == 1);
  CHECK(rebuilt[0].items_built == 1);
  CHECK(rebuilt[0].items_reused == 8);

  // The rebuilt model is byte-identical to the original (determinism).
  std::ifstream in(victim_dir + "/net.bin", std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == victim_net_before);

  fs::remove_all(out);
}

TEST_CASE("harness: corrupted manifest is reported") {
  const std::string out = fresh_dir("plotsteal_corrupt_test");
  ExperimentConfig config = ExperimentConfig::parse(tiny_config_text(out), false);
  Harness harness(config);
  harness.run("gen-data");

  // Corrupt the top-level manifest hash.
  const std::string manifest = harness.run_dir() + "/manifest.txt";
  std::ofstream(manifest) << "config_hash=deadbeefdeadbeef\n";
  CHECK_THROWS_WITH_AS(Harness{config}, doctest::Contains("corruption"), std::runtime_error);
  fs::remove_all(out);
}

TEST_CASE("harness: unknown subcommand") {
  const std::string out = fresh_dir("plotsteal_subcmd_test");
  ExperimentConfig config = ExperimentConfig::parse(tiny_config_text(out), false);
  Harness harness(config);
  CHECK_THROWS_AS(harness.run("bogus"), std::invalid_argument);
  fs::remove_all(out);
}
