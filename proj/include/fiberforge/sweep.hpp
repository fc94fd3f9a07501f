#pragma once

// One independently seeded model per mini-batch size, each evaluated on the
// holdout set.

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <span>
#include <thread>
#include <vector>

#include "fiberforge/evaluation.hpp"
#include "fiberforge/model_io.hpp"
#include "fiberforge/pipelines.hpp"
#include "fiberforge/reports.hpp"

namespace fiberforge {

/// Seed of the model trained with `batch_size` in a sweep started from `base_seed`.
inline constexpr std::uint64_t sweep_sub_seed(std::uint64_t base_seed, std::size_t batch_size) {
  return base_seed * 10000u + batch_size;
}

struct SweepEntry {
  std::size_t batch_size = 0;
  TaskModel model;
  LossCurve loss;
  ErrorReport errors;
};

struct SweepReport {
  Direction direction = Direction::kPredictive;
  std::vector<SweepEntry> entries;  // in the order of the requested sizes

  const SweepEntry& at(std::size_t batch_size) const {
    for (const auto& e : entries)
      if (e.batch_size == batch_size) return e;
    throw InvalidArgument("SweepReport: no entry for batch size " + std::to_string(batch_size));
  }

  std::vector<LabeledReport> labeled() const {
    std::vector<LabeledReport> out;
    for (const auto& e : entries) out.push_back({e.batch_size, &e.errors});
    return out;
  }
};

inline std::vector<std::size_t> default_sweep_sizes() {
  std::vector<std::size_t> s(20);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i + 1;
  return s;
}

/// Entry i trains with batch size sizes[i] and seed sweep_sub_seed(base_cfg.seed,
/// sizes[i]); everything else comes from base_cfg. Entries share no mutable
/// state, so `threads` only changes wall time, never results.
inline SweepReport sweep_batch_sizes(std::span<const SampleRecord> model_set,
                                     std::span<const SampleRecord> holdout,
                                     const NetworkConfig& base_cfg, Direction direction,
                                     std::span<const std::size_t> sizes, unsigned threads = 1) {
  if (model_set.empty() || holdout.empty())
    throw InvalidArgument("sweep_batch_sizes: model set and holdout must be nonempty");
  if (sizes.empty()) throw InvalidArgument("sweep_batch_sizes: no batch sizes given");
  for (std::size_t s : sizes)
    if (s == 0) throw InvalidArgument("sweep_batch_sizes: batch size must be >= 1");

  SweepReport report;
  report.direction = direction;
  report.entries.resize(sizes.size());
  std::vector<std::exception_ptr> failures(sizes.size());

  auto run_one = [&](std::size_t i) {
    try {
      NetworkConfig cfg = base_cfg;
      cfg.batch_size = sizes[i];
      cfg.seed = sweep_sub_seed(base_cfg.seed, sizes[i]);
      TrainingRun run = train_task(model_set, cfg, direction);
      SweepEntry& e = report.entries[i];
      e.batch_size = sizes[i];
      e.errors = evaluate(run.model, holdout);
      e.model = std::move(run.model);
      e.loss = std::move(run.loss);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(sizes.size())));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < sizes.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < n_threads; ++t)
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < sizes.size(); i = next++) run_one(i);
      });
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return report;
}

inline std::string batch_tag(std::size_t batch_size) {
  std::string n = std::to_string(batch_size);
  return "b" + std::string(n.size() < 2 ? 2 - n.size() : 0, '0') + n;
}

/// Writes model_bNN.json, loss_bNN.csv, loss_bNN.svg per entry plus
/// errors.csv, error_dispersion.csv, errors_<output>.svg and, for the design
/// task, confusion.csv.
inline void emit_sweep_reports(const SweepReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string task(direction_name(report.direction));
  for (const auto& e : report.entries) {
    const std::string tag = batch_tag(e.batch_size);
    save_model(e.model, dir / ("model_" + tag + ".json"));
    write_text(dir / ("loss_" + tag + ".csv"), loss_csv(e.loss));
    write_text(dir / ("loss_" + tag + ".svg"),
               loss_svg(e.loss, task + " loss, batch size " + std::to_string(e.batch_size)));
  }
  const auto labeled = report.labeled();
  write_text(dir / "errors.csv", error_csv(labeled));
  write_text(dir / "error_dispersion.csv", error_dispersion_csv(labeled));
  for (std::string_view feature : evaluated_outputs(report.direction))
    write_text(dir / ("errors_" + std::string(feature) + ".svg"), error_vs_batch_svg(labeled, feature));
  if (report.direction == Direction::kDesign) write_text(dir / "confusion.csv", confusion_csv(labeled));
}

}  // namespace fiberforge
