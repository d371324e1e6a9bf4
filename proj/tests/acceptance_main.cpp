// Acceptance suite: runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exit code 0 only when all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "plotsteal/adversarial.hpp"
#include "plotsteal/attack.hpp"
#include "plotsteal/config.hpp"
#include "plotsteal/defense.hpp"
#include "plotsteal/harness.hpp"
#include "plotsteal/tsne.hpp"

namespace fs = std::filesystem;
using namespace plotsteal;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %-28s %s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
              detail.c_str());
  if (!pass) ++failures;
}

double elapsed_s(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.gaussian();
  return m;
}

// ---------------------------------------------------------------- criterion 1
void criterion_gradients() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    FeedforwardNet net({7, 16, 12, 3}, seed % 2 ? ActivationKind::elu : ActivationKind::tanh, rng);
    Matrix batch = random_matrix(5, 7, rng);
    std::vector<int> labels{0, 1, 2, 1, 0};

    const auto cache = forward(net, batch);
    const Gradients grads = backward(net, cache, labels);
    std::vector<double*> slots;
    std::vector<double> analytic;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      for (double& w : net.layers()[l].weight.values()) slots.push_back(&w);
      for (double& b : net.layers()[l].bias) slots.push_back(&b);
      for (double g : grads.weight[l].values()) analytic.push_back(g);
      for (double g : grads.bias[l]) analytic.push_back(g);
    }
    auto loss = [&] { return cross_entropy(forward(net, batch).probabilities, labels); };
    const double h = 1e-5;
    double num = 0, denom = 0;
    for (std::size_t p = 0; p < slots.size(); ++p) {
      const double original = *slots[p];
      *slots[p] = original + h;
      const double up = loss();
      *slots[p] = original - h;
      const double down = loss();
      *slots[p] = original;
      const double fd = (up - down) / (2 * h);
      num += (fd - analytic[p]) * (fd - analytic[p]);
      denom += fd * fd;
    }
    worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(denom), 1e-12));

    // input_gradient against finite differences.
    Matrix x = random_matrix(1, 7, rng);
    const Matrix grad = input_gradient(net, x, 1);
    num = denom = 0;
    for (std::size_t j = 0; j < 7; ++j) {
      const double original = x.at(0, j);
      x.at(0, j) = original + h;
      const double up = cross_entropy(forward(net, x).probabilities, std::vector<int>{1});
      x.at(0, j) = original - h;
      const double down = cross_entropy(forward(net, x).probabilities, std::vector<int>{1});
      x.at(0, j) = original;
      const double fd = (up - down) / (2 * h);
      num += (fd - grad.at(0, j)) * (fd - grad.at(0, j));
      denom += fd * fd;
    }
    worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(denom), 1e-12));
  }
  const double secs = elapsed_s(start);
  std::ostringstream os;
  os << "worst rel err " << worst << ", " << secs << " s";
  report(1, "gradient correctness", worst < 1e-4 && secs < 10.0, os.str());
}

// ---------------------------------------------------------------- criterion 2
void criterion_tsne_math() {
  const auto start = Clock::now();
  bool ok = true;
  std::ostringstream os;

  // (a) per-row achieved perplexity.
  Rng rng(11);
  const Matrix points = random_matrix(80, 6, rng);
  const auto cond = conditional_affinities(points, 20.0);
  double worst_perp = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double h = 0.0;
    for (std::size_t j = 0; j < points.rows(); ++j) {
      const double p = cond.rows.at(i, j);
      if (p > 0) h -= p * std::log2(p);
    }
    worst_perp = std::max(worst_perp, std::abs(std::exp2(h) - 20.0) / 20.0);
  }
  ok = ok && worst_perp <= 1e-3;
  os << "perp err " << worst_perp;

  // (b) P and Q invariants.
  const Matrix p = symmetrize(cond.rows);
  const Matrix layout = random_matrix(80, 2, rng);
  const Matrix q = low_dim_affinities(layout);
  try {
    validate_affinities(p);
    validate_affinities(q);
  } catch (const std::exception& e) {
    ok = false;
    os << "; invariants: " << e.what();
  }

  // (c) KL(P, P) = 0.
  const double self_kl = kl_divergence(p, p);
  ok = ok && self_kl == 0.0;

  // (d) analytic layout gradient vs central finite differences (5 points).
  double worst_grad = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng g(seed);
    const Matrix pts = random_matrix(5, 3, g);
    const Matrix p5 = symmetrize(conditional_affinities(pts, 2.5).rows);
    Matrix coords = random_matrix(5, 2, g);
    const Matrix grad = kl_gradient(p5, coords);
    const double h = 1e-6;
    double num = 0, denom = 0;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t k = 0; k < 2; ++k) {
        const double original = coords.at(i, k);
        coords.at(i, k) = original + h;
        const double up = kl_divergence(p5, low_dim_affinities(coords));
        coords.at(i, k) = original - h;
        const double down = kl_divergence(p5, low_dim_affinities(coords));
        coords.at(i, k) = original;
        const double fd = (up - down) / (2 * h);
        num += (fd - grad.at(i, k)) * (fd - grad.at(i, k));
        denom += fd * fd;
      }
    worst_grad = std::max(worst_grad, std::sqrt(num) / std::max(std::sqrt(denom), 1e-12));
  }
  ok = ok && worst_grad < 1e-4;
  os << ", grad err " << worst_grad;

  // (e) low_dim_affinities vs the naive double loop for n <= 50.
  double worst_q = 0.0;
  for (std::size_t n : {5ul, 23ul, 50ul}) {
    Rng g(n);
    const Matrix coords = random_matrix(n, 2, g);
    const Matrix qn = low_dim_affinities(coords);
    double z = 0.0;
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = 0; t < n; ++t) {
        if (s == t) continue;
        const double dx = coords.at(s, 0) - coords.at(t, 0);
        const double dy = coords.at(s, 1) - coords.at(t, 1);
        z += 1.0 / (1.0 + dx * dx + dy * dy);
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double dx = coords.at(i, 0) - coords.at(j, 0);
        const double dy = coords.at(i, 1) - coords.at(j, 1);
        worst_q = std::max(worst_q, std::abs(qn.at(i, j) - (1.0 / (1.0 + dx * dx + dy * dy)) / z));
      }
  }
  ok = ok && worst_q < 1e-12;

  const double secs = elapsed_s(start);
  os << ", q err " << worst_q << ", " << secs << " s";
  report(2, "t-SNE math", ok && secs < 30.0, os.str());
}

// ---------------------------------------------------------------- criterion 3
void criterion_defense_oracles() {
  const auto start = Clock::now();
  bool ok = true;

  const Matrix row = Matrix::from_rows({{5.0, 0.0, 3.0, 1.0, 2.0}});
  const Matrix kept = threshold_embeddings(row, 0.6);
  ok = ok && kept.at(0, 0) == 5.0 && kept.at(0, 1) == 0.0 && kept.at(0, 2) == 3.0 &&
       kept.at(0, 3) == 0.0 && kept.at(0, 4) == 2.0;

  const Matrix rounded = round_embeddings(Matrix::from_rows({{0.123, -2.5}}), 1);
  ok = ok && rounded.at(0, 0) == 0.1 && rounded.at(0, 1) == -2.5;
  const Matrix ints = round_embeddings(Matrix::from_rows({{2.5, -2.5}}), 0);
  ok = ok && ints.at(0, 0) == 3.0 && ints.at(0, 1) == -3.0;

  ok = ok && round_to_even_integer(2.9) == 2.0 && round_to_even_integer(3.7) == 4.0 &&
       round_half_away_from_zero(3.7) == 4.0;

  LossCurve tb;
  tb.train_points = {{0.2, 1.0}, {0.4, 0.5}};
  tb.test_points = {{1.0, 1.0}, {2.0, 0.5}};
  const LossCurve tb_out = smooth_tensorboard(tb, 0.2);
  ok = ok && tb_out.train_points[0].loss == 1.0 &&
       std::abs(tb_out.train_points[1].loss - 0.6) < 1e-15;

  LossCurve sw;
  sw.train_points = {{0.2, 1.0}, {0.4, 2.0}, {0.6, 3.0}};
  sw.test_points = {{1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}};
  const LossCurve sw_out = smooth_sliding(sw, 2);
  ok = ok && sw_out.train_points[0].loss == 2.0 && sw_out.train_points[1].loss == 2.5 &&
       sw_out.train_points[2].loss == 3.0;

  ok = ok && l2_utility(sw, sw) == 0.0;
  LossCurve shifted = sw;
  shifted.train_points[1].loss += 0.3;
  ok = ok && std::abs(l2_utility(sw, shifted) - 0.15) < 1e-12;

  const double secs = elapsed_s(start);
  report(3, "defense arithmetic oracles", ok && secs < 1.0,
         "bit-exact worked examples, " + std::to_string(secs) + " s");
}

// ------------------------------------------------------- criteria 4 through 11
struct SummaryKey {
  std::string plot, defense;
  int adaptive = 0;
  int control = 0;
};

std::map<std::string, std::vector<double>> load_runs(const std::string& path) {
  std::map<std::string, std::vector<double>> acc;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + path);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[8];
    for (int i = 0; i < 8; ++i) std::getline(ls, f[i], ',');
    // key: target|plot|setting|defense|adaptive|control
    const std::string key = f[0] + "|" + f[1] + "|" + f[2] + "|" + f[3] + "|" + f[4] + "|" + f[5];
    acc[key].push_back(std::stod(f[7]));
  }
  return acc;
}

double mean_of(const std::map<std::string, std::vector<double>>& runs, const std::string& key) {
  const auto it = runs.find(key);
  if (it == runs.end() || it->second.empty())
    throw std::runtime_error("no metric rows for " + key);
  return std::accumulate(it->second.begin(), it->second.end(), 0.0) /
         static_cast<double>(it->second.size());
}

std::map<std::string, double> load_two_column_csv(const std::string& path) {
  std::map<std::string, double> out;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + path);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
  }
  return out;
}

std::vector<std::string> collect_files(const std::string& root, const std::string& ext) {
  std::vector<std::string> files;
  if (!fs::exists(root)) return files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().extension() == ext)
      files.push_back(fs::relative(entry.path(), root).string());
  std::sort(files.begin(), files.end());
  return files;
}

bool same_bytes(const std::string& a, const std::string& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::ostringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return sa.str() == sb.str();
}

struct PipelineArtifacts {
  std::string run_dir_a;
  std::string run_dir_b;
  double seconds_a = 0.0;
  double seconds_b = 0.0;
};

PipelineArtifacts run_pipeline_twice(const ExperimentConfig& base, const std::string& out_root) {
  PipelineArtifacts artifacts;
  for (int which = 0; which < 2; ++which) {
    ExperimentConfig config = base;
    config.out_dir = out_root + (which == 0 ? "/run-a" : "/run-b");
    fs::remove_all(config.out_dir);
    const auto start = Clock::now();
    Harness harness(config);
    harness.run("all");
    const double secs = elapsed_s(start);
    if (which == 0) {
      artifacts.run_dir_a = harness.run_dir();
      artifacts.seconds_a = secs;
    } else {
      artifacts.run_dir_b = harness.run_dir();
      artifacts.seconds_b = secs;
    }
  }
  return artifacts;
}

void criterion_determinism(const PipelineArtifacts& artifacts) {
  bool ok = true;
  std::size_t compared = 0;
  std::string first_diff;

  const auto csv_a = collect_files(artifacts.run_dir_a + "/metrics", ".csv");
  const auto csv_b = collect_files(artifacts.run_dir_b + "/metrics", ".csv");
  ok = ok && csv_a == csv_b;
  for (const auto& rel : csv_a) {
    if (!same_bytes(artifacts.run_dir_a + "/metrics/" + rel,
                    artifacts.run_dir_b + "/metrics/" + rel)) {
      ok = false;
      if (first_diff.empty()) first_diff = "metrics/" + rel;
    }
    ++compared;
  }
  for (const std::string sub : {"/plots", "/defend"}) {
    const auto png_a = collect_files(artifacts.run_dir_a + sub, ".png");
    const auto png_b = collect_files(artifacts.run_dir_b + sub, ".png");
    ok = ok && png_a == png_b;
    for (const auto& rel : png_a) {
      if (!same_bytes(artifacts.run_dir_a + sub + "/" + rel,
                      artifacts.run_dir_b + sub + "/" + rel)) {
        ok = false;
        if (first_diff.empty()) first_diff = sub + "/" + rel;
      }
      ++compared;
    }
  }
  const bool time_ok = artifacts.seconds_a < 600.0 && artifacts.seconds_b < 600.0;
  std::ostringstream os;
  os << compared << " files byte-compared, runs " << static_cast<int>(artifacts.seconds_a)
     << " s / " << static_cast<int>(artifacts.seconds_b) << " s";
  if (!first_diff.empty()) os << ", first diff " << first_diff;
  report(4, "end-to-end determinism", ok && time_ok && compared > 0, os.str());
}

void criterion_optimizer_inference(const std::map<std::string, std::vector<double>>& runs) {
  const double attack = mean_of(runs, "optimizer|tsne|mixed|none|0|0");
  const double control = mean_of(runs, "optimizer|tsne|mixed|none|0|1");
  std::ostringstream os;
  os << "attack " << attack << " (need >= 0.75), control " << control << " (need 0.5 +- 0.1)";
  report(5, "optimizer inference (t-SNE)",
         attack >= 0.75 && control >= 0.4 && control <= 0.6, os.str());
}

void criterion_defense_efficacy(const std::map<std::string, std::vector<double>>& runs,
                                const std::map<std::string, double>& knn) {
  const double none = mean_of(runs, "optimizer|tsne|mixed|none|0|0");
  const double cn = mean_of(runs, "optimizer|tsne|mixed|cn:0.05|0|0");
  const double et = mean_of(runs, "optimizer|tsne|mixed|et:0.6|0|0");
  const double knn_none = knn.at("none");
  const double knn_cn = knn.at("cn:0.05");
  const double knn_et = knn.at("et:0.6");
  const bool cn_ok = (none - cn) >= 0.10 && (knn_none - knn_cn) <= 0.02;
  const bool et_ok = (none - et) >= 0.10 && (knn_none - knn_et) <= 0.02;
  std::ostringstream os;
  os << "acc " << none << " -> cn " << cn << " / et " << et << "; knn " << knn_none << " -> "
     << knn_cn << " / " << knn_et;
  report(6, "t-SNE defense efficacy", cn_ok && et_ok, os.str());
}

void criterion_adaptive(const std::map<std::string, std::vector<double>>& runs,
                        const std::map<std::string, std::vector<double>>& adaptive) {
  const double none = mean_of(runs, "optimizer|tsne|mixed|none|0|0");
  const double ad_none = mean_of(adaptive, "optimizer|tsne|mixed|none|1|0");
  bool ok = ad_none >= none - 0.05;
  std::ostringstream os;
  os << "undefended " << none << " -> adaptive " << ad_none;
  for (const std::string tag : {"cn:0.05", "et:0.6"}) {
    const double defended = mean_of(runs, "optimizer|tsne|mixed|" + tag + "|0|0");
    const double recovered = mean_of(adaptive, "optimizer|tsne|mixed|" + tag + "|1|0");
    const double lost = none - defended;
    const bool recovery_ok = lost <= 0.0 || (recovered - defended) >= 0.5 * lost;
    ok = ok && recovery_ok;
    os << "; " << tag << " " << defended << " -> " << recovered;
  }
  report(7, "adaptive recovery", ok, os.str());
}

void criterion_loss_channel(const std::map<std::string, std::vector<double>>& runs) {
  const double with_axes = mean_of(runs, "optimizer|loss_ax|mixed|none|0|0");
  const double without = mean_of(runs, "optimizer|loss_noax|mixed|none|0|0");
  std::ostringstream os;
  os << "with axes " << with_axes << " (need >= 0.75), without " << without;
  report(8, "loss-plot channel", with_axes >= 0.75 && with_axes >= without - 0.02, os.str());
}

void criterion_sliding_defense(const std::map<std::string, std::vector<double>>& runs,
                               const std::map<std::string, double>& l2) {
  const double none = mean_of(runs, "optimizer|loss_ax|mixed|none|0|0");
  const double slid = mean_of(runs, "optimizer|loss_ax|mixed|sliding:2|0|0");
  const double l2_slide = l2.at("sliding:2");
  const double l2_gauss = l2.at("gaussian");
  std::ostringstream os;
  os << "acc " << none << " -> " << slid << "; L2 sliding " << l2_slide << " < gaussian "
     << l2_gauss;
  report(9, "sliding-window loss defense", (none - slid) >= 0.10 && l2_slide < l2_gauss, os.str());
}

void criterion_query(const std::string& metrics_dir) {
  std::ifstream in(metrics_dir + "/query.csv");
  if (!in) throw std::runtime_error("missing query.csv");
  std::string line;
  std::getline(in, line);
  std::vector<double> posteriors, labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string mode, rep, acc, dim;
    std::getline(ls, mode, ',');
    std::getline(ls, rep, ',');
    std::getline(ls, acc, ',');
    std::getline(ls, dim, ',');
    (mode == "posteriors" ? posteriors : labels).push_back(std::stod(acc));
  }
  const double post = std::accumulate(posteriors.begin(), posteriors.end(), 0.0) /
                      std::max<std::size_t>(posteriors.size(), 1);
  const double lab = std::accumulate(labels.begin(), labels.end(), 0.0) /
                     std::max<std::size_t>(labels.size(), 1);
  std::ostringstream os;
  os << "posteriors " << post << " >= labels " << lab;
  report(10, "query baseline sanity", !posteriors.empty() && post >= lab, os.str());
}

void criterion_downstream(const std::string& metrics_dir) {
  std::ifstream in(metrics_dir + "/downstream.csv");
  if (!in) throw std::runtime_error("missing downstream.csv");
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::map<double, std::vector<double>>> rates;  // mode -> eps -> reps
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string mode, eps, rep, rate, unfiltered;
    std::getline(ls, mode, ',');
    std::getline(ls, eps, ',');
    std::getline(ls, rep, ',');
    std::getline(ls, rate, ',');
    std::getline(ls, unfiltered, ',');
    rates[mode][std::stod(eps)].push_back(std::stod(rate));
  }
  auto mode_mean = [&](const std::string& mode, double eps) {
    const auto& v = rates.at(mode).at(eps);
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  std::vector<double> epsilons;
  for (const auto& [eps, v] : rates.at("white_box")) epsilons.push_back(eps);
  std::sort(epsilons.begin(), epsilons.end());

  bool ordering_ok = true;
  std::ostringstream os;
  for (double eps : epsilons) {
    const double wb = mode_mean("white_box", eps);
    const double inf = mode_mean("inferred", eps);
    const double rnd = mode_mean("random", eps);
    ordering_ok = ordering_ok && wb >= inf - 0.02 && inf >= rnd - 0.02;
    os << "eps " << eps << ": wb " << wb << " inf " << inf << " rnd " << rnd << "; ";
  }
  bool monotone_ok = true;
  for (std::size_t e = 1; e < epsilons.size(); ++e)
    monotone_ok = monotone_ok &&
                  mode_mean("white_box", epsilons[e]) > mode_mean("white_box", epsilons[e - 1]);
  os << (monotone_ok ? "white-box monotone" : "white-box NOT monotone");
  report(11, "downstream FGSM ordering", ordering_ok && monotone_ok && epsilons.size() >= 3,
         os.str());
}

}  // namespace

int main(int argc, char** argv) {
  std::string config_path = "configs/default.ini";
  std::string out_root = "acceptance_out";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--config") config_path = argv[i + 1];
    if (flag == "--out") out_root = argv[i + 1];
  }

  try {
    criterion_gradients();
    criterion_tsne_math();
    criterion_defense_oracles();

    const ExperimentConfig config = ExperimentConfig::load_file(config_path);
    std::printf("running the default pipeline twice (config %s)...\n",
                config.config_hash_hex().c_str());
    const PipelineArtifacts artifacts = run_pipeline_twice(config, out_root);
    criterion_determinism(artifacts);

    const std::string metrics = artifacts.run_dir_a + "/metrics";
    const auto runs = load_runs(metrics + "/attack_runs.csv");
    const auto adaptive = load_runs(metrics + "/adaptive_runs.csv");
    const auto knn = load_two_column_csv(metrics + "/knn_utility.csv");
    const auto l2 = load_two_column_csv(metrics + "/l2_utility.csv");

    criterion_optimizer_inference(runs);
    criterion_defense_efficacy(runs, knn);
    criterion_adaptive(runs, adaptive);
    criterion_loss_channel(runs);
    criterion_sliding_defense(runs, l2);
    criterion_query(metrics);
    criterion_downstream(metrics);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 2;
  }

  if (failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", failures);
  return 1;
}
