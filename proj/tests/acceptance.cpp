// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Seeds and tolerances are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <functional>
#include <string>
#include <vector>

#include "fiberforge/fiberforge.hpp"

using namespace fiberforge;

namespace {

// Documented seeds for the accuracy, overfitting and determinism runs.
constexpr std::uint64_t kGoldenSeeds[] = {42, 43, 44};
constexpr std::size_t kPerCell = 200;
constexpr std::size_t kModelSetSize = 479;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(const char* id, const char* name, const std::function<Outcome()>& body, double max_seconds = 0.0) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (max_seconds > 0.0 && secs >= max_seconds) {
    o.pass = false;
    o.detail += " [runtime limit " + std::to_string(max_seconds) + " s exceeded]";
  }
  if (!o.pass) ++g_failures;
  std::printf("[%s] %s %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string num(double v, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

struct GoldenRun {
  DatasetSplit split;
  TrainingRun predictive;
  TrainingRun design;
  ErrorReport predictive_errors;
  ErrorReport design_errors;
};

GoldenRun run_protocol(std::uint64_t seed, std::size_t batch_size = 20) {
  GoldenRun g;
  const Dataset ds = generate_dataset(kPerCell, seed);
  g.split = split_dataset(ds, kModelSetSize, seed);
  NetworkConfig cfg;
  cfg.seed = seed;
  cfg.batch_size = batch_size;
  g.predictive = train_predictive(g.split.model_set, cfg);
  g.design = train_design(g.split.model_set, cfg);
  g.predictive_errors = evaluate(g.predictive.model, g.split.holdout_set);
  g.design_errors = evaluate(g.design.model, g.split.holdout_set);
  return g;
}

std::vector<GoldenRun>& golden_runs() {
  static std::vector<GoldenRun> runs = [] {
    std::vector<GoldenRun> r;
    for (auto s : kGoldenSeeds) r.push_back(run_protocol(s));
    return r;
  }();
  return runs;
}

Outcome gradient_correctness() {
  double worst = 0.0;
  std::size_t redraws = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    NetworkConfig cfg;
    const bool predictive = seed % 2 == 1;
    cfg.input_dim = predictive ? 3 : 4;
    cfg.output_dim = predictive ? 4 : 3;
    cfg.seed = seed;
    const Network net = init_network(cfg);
    Rng rng(seed, Stream::kTest);
    Sample s;
    for (;;) {
      s.x.assign(cfg.input_dim, 0.0);
      for (double& v : s.x) v = rng.standard_normal();
      // Exclude samples near a ReLU kink, where central differences straddle it.
      if (min_abs_preactivation(net, s.x) >= 1e-3) break;
      ++redraws;
    }
    s.y.assign(cfg.output_dim, 0.0);
    for (double& v : s.y) v = rng.standard_normal();
    worst = std::max(worst, grad_check(net, s, 1e-6));
  }
  return {worst < 1e-4, "max relative error " + num(worst) + " over 20 networks (< 1e-4), " +
                            std::to_string(redraws) + " kink-adjacent samples redrawn"};
}

Outcome sampler_fidelity() {
  const StatsTable t = baseline_stats();
  const std::size_t n = 10000;
  double worst_se = 0.0, worst_sd = 0.0, worst_r = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Dataset ds = generate_dataset(n, seed);
    for (const Cell& c : kAllCells) {
      std::array<std::vector<double>, 4> cols;
      for (const auto& r : ds.records)
        if (r.cell == c)
          for (Feature f : kAllFeatures) cols[static_cast<std::size_t>(f)].push_back(feature_value(r.features, f));
      std::array<double, 4> mean{}, sd{};
      for (std::size_t k = 0; k < 4; ++k) {
        for (double v : cols[k]) mean[k] += v;
        mean[k] /= double(n);
        for (double v : cols[k]) sd[k] += (v - mean[k]) * (v - mean[k]);
        sd[k] = std::sqrt(sd[k] / double(n - 1));
        const Moments& m = t.at(c, kAllFeatures[k]);
        worst_se = std::max(worst_se, std::abs(mean[k] - m.mean) / (m.std / std::sqrt(double(n))));
        worst_sd = std::max(worst_sd, std::abs(sd[k] - m.std) / m.std);
      }
      for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = a + 1; b < 4; ++b) {
          double cov = 0.0;
          for (std::size_t i = 0; i < n; ++i) cov += (cols[a][i] - mean[a]) * (cols[b][i] - mean[b]);
          worst_r = std::max(worst_r, std::abs(cov / double(n - 1) / (sd[a] * sd[b])));
        }
    }
  }
  const bool pass = worst_se < 4.0 && worst_sd < 0.05 && worst_r < 0.05;
  return {pass, "worst mean offset " + num(worst_se) + " SE (< 4), worst std deviation " +
                    num(100 * worst_sd) + "% (< 5%), worst |r| " + num(worst_r) + " (< 0.05)"};
}

// Mean absolute percentage error per (cell, feature), averaged over seeds.
double seed_mean_abs(Cell c, std::string_view feature, bool predictive) {
  double s = 0.0;
  for (const auto& g : golden_runs())
    s += (predictive ? g.predictive_errors : g.design_errors).at(c, feature).mean_abs_pct;
  return s / double(std::size(kGoldenSeeds));
}

Outcome predictive_accuracy() {
  bool pass = true;
  std::string detail;
  for (std::string_view feature : kPredictiveOutputs) {
    const bool dimension = feature == "length" || feature == "width";
    const double limit = dimension ? 5.0 : 10.0;
    std::size_t within = 0;
    double worst = 0.0;
    for (const Cell& c : kAllCells) {
      const double e = seed_mean_abs(c, feature, true);
      worst = std::max(worst, e);
      if (e < limit) ++within;
    }
    const bool ok = dimension ? within == 6 : within >= 4;
    pass = pass && ok;
    detail += std::string(feature) + " " + std::to_string(within) + "/6 < " + num(limit) + "% (worst " +
              num(worst, "%.2f") + "%); ";
  }
  return {pass, detail + "need 6/6 for length, width and 4/6 for porosity, modulus"};
}

Outcome design_accuracy() {
  double sheath = 0.0, core = 0.0, bath = 0.0;
  for (const auto& g : golden_runs()) {
    sheath += g.design_errors.overall_abs_pct("sheath_flow");
    core += g.design_errors.overall_abs_pct("core_flow");
    bath += g.design_errors.confusion->accuracy();
  }
  const double k = double(std::size(kGoldenSeeds));
  sheath /= k, core /= k, bath /= k;
  return {sheath <= 5.0 && core <= 6.0 && bath >= 0.90,
          "sheath MAPE " + num(sheath, "%.2f") + "% (<= 5%), core MAPE " + num(core, "%.2f") +
              "% (<= 6%), bath accuracy " + num(100 * bath, "%.1f") + "% (>= 90%)"};
}

Outcome no_overfitting() {
  bool pass = true;
  double worst_ratio = 0.0;
  std::size_t flagged = 0, checked = 0;
  std::string worst_label;
  auto check = [&](const LossCurve& c, std::uint64_t seed, std::size_t bs, const char* task) {
    const auto d = overfit_diagnostic(c, 5);
    if (d.ratio > worst_ratio) {
      worst_ratio = d.ratio;
      worst_label = std::string(task) + " seed " + std::to_string(seed) + " batch " + std::to_string(bs);
    }
    if (d.rising_tail) ++flagged;
    pass = pass && !d.rising_tail && d.ratio < 1.5;
    ++checked;
  };
  for (std::size_t i = 0; i < std::size(kGoldenSeeds); ++i) {
    check(golden_runs()[i].predictive.loss, kGoldenSeeds[i], 20, "predict");
    check(golden_runs()[i].design.loss, kGoldenSeeds[i], 20, "design");
  }
  for (auto seed : kGoldenSeeds) {
    const GoldenRun g10 = run_protocol(seed, 10);
    check(g10.predictive.loss, seed, 10, "predict");
    check(g10.design.loss, seed, 10, "design");
  }
  return {pass, std::to_string(checked) + " curves (batch 10/20, both tasks, 3 seeds): " + std::to_string(flagged) +
                     " rising tails, worst validation/training ratio " + num(worst_ratio) + " (" + worst_label + ", < 1.5)"};
}

Outcome loss_sanity() {
  bool pass = true;
  std::string detail;
  for (const auto& g : golden_runs())
    for (const auto* c : {&g.predictive.loss, &g.design.loss}) {
      pass = pass && c->epochs.back().training < c->epochs.front().training;
      detail += num(c->epochs.front().training, "%.3f") + "->" + num(c->epochs.back().training, "%.3f") + " ";
    }
  return {pass, "epoch 1 -> epoch 32 training loss: " + detail};
}

std::vector<std::pair<std::string, std::string>> artifacts(std::uint64_t seed, const std::filesystem::path& dir) {
  const GoldenRun g = run_protocol(seed);
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("data.csv", to_csv(generate_dataset(kPerCell, seed).records));
  out.emplace_back("holdout.csv", to_csv(g.split.holdout_set));
  out.emplace_back("predict.json", model_to_string(g.predictive.model));
  out.emplace_back("design.json", model_to_string(g.design.model));
  out.emplace_back("predict_loss.csv", loss_csv(g.predictive.loss));
  out.emplace_back("predict_loss.svg", loss_svg(g.predictive.loss, "predict"));
  const std::vector<LabeledReport> pl{{20, &g.predictive_errors}}, dl{{20, &g.design_errors}};
  out.emplace_back("predict_errors.csv", error_csv(pl));
  out.emplace_back("design_errors.csv", error_csv(dl));
  out.emplace_back("design_confusion.csv", confusion_csv(dl));
  out.emplace_back("design_core.svg", error_vs_batch_svg(dl, "core_flow"));

  NetworkConfig cfg;
  cfg.seed = seed;
  cfg.epochs = 8;
  const std::vector<std::size_t> sizes{10, 20};
  emit_sweep_reports(sweep_batch_sizes(g.split.model_set, g.split.holdout_set, cfg, Direction::kPredictive, sizes, 2),
                     dir);
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out.emplace_back("sweep/" + entry.path().filename().string(), s.str());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "fiberforge_acceptance";
  std::filesystem::remove_all(root);
  const auto a = artifacts(42, root / "a");
  const auto b = artifacts(42, root / "b");
  std::filesystem::remove_all(root);
  std::size_t differing = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) ++differing;
  const bool pass = a.size() == b.size() && differing == 0 && a.size() > 10;
  return {pass, std::to_string(a.size()) + " artifacts (models, CSVs, SVGs) compared, " +
                    std::to_string(differing) + " differ"};
}

Outcome oracle_equivalence() {
  Network net;
  net.layers.push_back({2, 2, {0.5, -0.25, 0.75, 0.125}, {0.1, 0.2}, Activation::kRelu});
  net.layers.push_back({1, 2, {1.5, -0.5}, {0.05}, Activation::kLinear});
  const std::vector<double> x{0.3, -0.7}, target{0.4};
  const auto fr = forward(net, x);
  // tests/oracle/oracle.py
  const double expected_y = 0.51874999999999993;
  const std::vector<double> expected_params{0.49900000009356726, -0.24900000004010026, 0.099000000028070176,
                                            0.20099999991578948, 0.75099999971929832, 0.12400000012030074,
                                            1.4990000000990713,  -0.50099999987524368, 0.049000000042105266};
  double worst = std::abs(fr.output[0] - expected_y);
  OptimizerState st = OptimizerState::for_network(net);
  optimizer_step(st, net, backward(net, fr.cache, target), 0.001);
  const std::vector<double> got{net.layers[0].weights[0], net.layers[0].weights[1], net.layers[0].biases[0],
                                net.layers[0].biases[1],  net.layers[0].weights[2], net.layers[0].weights[3],
                                net.layers[1].weights[0], net.layers[1].weights[1], net.layers[1].biases[0]};
  for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - expected_params[i]));
  return {worst <= 1e-12, "max absolute deviation " + num(worst) + " (<= 1e-12)"};
}

}  // namespace

int main() {
  report("AC1", "gradient correctness", gradient_correctness, 10.0);
  report("AC2", "sampler fidelity", sampler_fidelity, 10.0);
  const auto t0 = std::chrono::steady_clock::now();
  report("AC3", "predictive accuracy", predictive_accuracy);
  report("AC4", "design accuracy", design_accuracy);
  const double training_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report("AC3/4", "training runtime", [&] {
    return Outcome{training_secs < 120.0, "3 seeds x 2 tasks in " + num(training_secs, "%.2f") + " s (< 120 s)"};
  });
  report("AC5", "no overfitting", no_overfitting);
  report("AC5+", "loss sanity", loss_sanity);
  report("AC6", "determinism", determinism);
  report("AC7", "oracle equivalence", oracle_equivalence);
  std::printf("%s: %d failing criteria\n", g_failures == 0 ? "ACCEPTED" : "REJECTED", g_failures);
  return g_failures == 0 ? 0 : 1;
}
