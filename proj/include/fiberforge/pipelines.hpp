#pragma once

// Predictive (process -> fiber) and design (fiber -> process) tasks built on
// the network and the synthetic records.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fiberforge/errors.hpp"
#include "fiberforge/neuralnet.hpp"
#include "fiberforge/scaler.hpp"
#include "fiberforge/synthdata.hpp"

namespace fiberforge {

enum class Direction { kPredictive, kDesign };

inline constexpr std::string_view direction_name(Direction d) {
  return d == Direction::kPredictive ? "predict" : "design";
}

inline Direction parse_direction(std::string_view name) {
  if (name == "predict" || name == "predictive") return Direction::kPredictive;
  if (name == "design") return Direction::kDesign;
  throw InvalidArgument("unknown task '" + std::string(name) + "' (expected predict or design)");
}

inline std::array<double, 3> process_vector(const ManufacturingParams& p) {
  return {p.sheath_flow, p.core_flow, p.bath_conc};
}

inline std::array<double, 4> fiber_vector(const FiberFeatures& f) {
  return {f.length, f.width, f.porosity, f.youngs_modulus};
}

inline std::array<double, 3> process_vector(const SampleRecord& r) { return process_vector(r.params); }
inline std::array<double, 4> fiber_vector(const SampleRecord& r) { return fiber_vector(r.features); }

struct Provenance {
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;
  std::string dataset_fingerprint;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// A trained network with the scalers fit on its model set. Inputs and
/// outputs of the public calls are always in physical units.
struct TaskModel {
  Direction direction = Direction::kPredictive;
  Network net;
  Scaler input_scaler;
  Scaler output_scaler;
  NetworkConfig config;
  Provenance provenance;

  friend bool operator==(const TaskModel&, const TaskModel&) = default;
};

struct TrainingRun {
  TaskModel model;
  LossCurve loss;
};

namespace detail {

inline std::vector<double> to_vector(std::span<const double> v) { return {v.begin(), v.end()}; }

}  // namespace detail

/// Fits scalers on `model_set`, standardizes both sides and trains a network
/// with `cfg` (input/output dims are forced to the task's 3/4 or 4/3).
inline TrainingRun train_task(std::span<const SampleRecord> model_set, NetworkConfig cfg,
                              Direction direction) {
  if (model_set.empty()) throw InvalidArgument("train_task: model set is empty");
  const bool predictive = direction == Direction::kPredictive;
  cfg.input_dim = predictive ? 3 : 4;
  cfg.output_dim = predictive ? 4 : 3;
  cfg.validate();

  auto proc = [](const SampleRecord& r) { return process_vector(r); };
  auto fib = [](const SampleRecord& r) { return fiber_vector(r); };

  TrainingRun run;
  TaskModel& m = run.model;
  m.direction = direction;
  m.config = cfg;
  m.input_scaler = predictive ? fit_scaler(model_set, proc) : fit_scaler(model_set, fib);
  m.output_scaler = predictive ? fit_scaler(model_set, fib) : fit_scaler(model_set, proc);
  m.provenance = {cfg.seed, cfg.batch_size, fingerprint(model_set)};

  std::vector<Sample> samples;
  samples.reserve(model_set.size());
  for (const auto& r : model_set) {
    const auto p = process_vector(r);
    const auto f = fiber_vector(r);
    if (predictive)
      samples.push_back({m.input_scaler.apply(p), m.output_scaler.apply(f)});
    else
      samples.push_back({m.input_scaler.apply(f), m.output_scaler.apply(p)});
  }
  m.net = init_network(cfg);
  run.loss = train(m.net, samples, cfg, cfg.validation_fraction);
  return run;
}

inline TrainingRun train_predictive(std::span<const SampleRecord> model_set, const NetworkConfig& cfg) {
  return train_task(model_set, cfg, Direction::kPredictive);
}

inline TrainingRun train_design(std::span<const SampleRecord> model_set, const NetworkConfig& cfg) {
  return train_task(model_set, cfg, Direction::kDesign);
}

inline FiberFeatures predict_features(const TaskModel& m, const ManufacturingParams& p) {
  if (m.direction != Direction::kPredictive)
    throw UsageError("predict_features needs a predictive model; this model is '" +
                     std::string(direction_name(m.direction)) + "'");
  const auto y = m.output_scaler.invert(predict(m.net, m.input_scaler.apply(process_vector(p))));
  return {y[0], y[1], y[2], y[3]};
}

/// Bath concentration only takes 0 or 5 percent; raw values at or above the
/// midpoint 2.5 snap to 5.
inline constexpr double snap_bath(double raw) { return raw >= 2.5 ? 5.0 : 0.0; }

struct DesignResult {
  ManufacturingParams params;  // bath snapped
  ManufacturingParams raw;     // continuous network output
};

inline DesignResult design_params(const TaskModel& m, const FiberFeatures& f) {
  if (m.direction != Direction::kDesign)
    throw UsageError("design_params needs a design model; this model is '" +
                     std::string(direction_name(m.direction)) + "'");
  const auto y = m.output_scaler.invert(predict(m.net, m.input_scaler.apply(fiber_vector(f))));
  DesignResult out;
  out.raw = {y[0], y[1], y[2]};
  out.params = out.raw;
  out.params.bath_conc = snap_bath(out.raw.bath_conc);
  return out;
}

}  // namespace fiberforge
