#pragma once

// Versioned JSON model files.
//
// {
//   "format_version": 1,
//   "task": "predict" | "design",
//   "config": { input_dim, hidden_layers, hidden_neurons, output_dim,
//               hidden_activation, output_activation, learning_rate, epochs,
//               batch_size, seed, optimizer, validation_fraction },
//   "scalers": { "input": {"mean": [...], "std": [...]}, "output": {...} },
//   "provenance": { seed, batch_size, dataset_fingerprint },
//   "layers": [ { rows, cols, weights (row-major), biases, activation } ]
// }
//
// Doubles are written in shortest round-trip form, so save -> load -> save is
// byte-identical.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fiberforge/errors.hpp"
#include "fiberforge/pipelines.hpp"

namespace fiberforge {

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::ordered_json model_to_json(const TaskModel& m) {
  using nlohmann::ordered_json;
  const NetworkConfig& c = m.config;
  ordered_json j;
  j["format_version"] = kModelFormatVersion;
  j["task"] = direction_name(m.direction);
  j["config"] = {
      {"input_dim", c.input_dim},
      {"hidden_layers", c.hidden_layers},
      {"hidden_neurons", c.hidden_neurons},
      {"output_dim", c.output_dim},
      {"hidden_activation", activation_name(c.hidden_activation)},
      {"output_activation", activation_name(c.output_activation)},
      {"learning_rate", c.learning_rate},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
      {"optimizer", optimizer_name(c.optimizer)},
      {"validation_fraction", c.validation_fraction},
  };
  j["scalers"] = {
      {"input", {{"mean", m.input_scaler.mean}, {"std", m.input_scaler.std}}},
      {"output", {{"mean", m.output_scaler.mean}, {"std", m.output_scaler.std}}},
  };
  j["provenance"] = {
      {"seed", m.provenance.seed},
      {"batch_size", m.provenance.batch_size},
      {"dataset_fingerprint", m.provenance.dataset_fingerprint},
  };
  ordered_json layers = ordered_json::array();
  for (const Layer& l : m.net.layers) {
    layers.push_back({{"rows", l.rows},
                      {"cols", l.cols},
                      {"weights", l.weights},
                      {"biases", l.biases},
                      {"activation", activation_name(l.activation)}});
  }
  j["layers"] = std::move(layers);
  return j;
}

inline std::string model_to_string(const TaskModel& m) { return model_to_json(m).dump(1) + "\n"; }

inline TaskModel model_from_json(const nlohmann::ordered_json& j) {
  TaskModel m;
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw ModelLoadError("unsupported model format_version " + std::to_string(version) +
                           " (expected " + std::to_string(kModelFormatVersion) + ")");
    m.direction = parse_direction(j.at("task").get<std::string>());

    const auto& c = j.at("config");
    NetworkConfig& cfg = m.config;
    cfg.input_dim = c.at("input_dim").get<std::size_t>();
    cfg.hidden_layers = c.at("hidden_layers").get<std::size_t>();
    cfg.hidden_neurons = c.at("hidden_neurons").get<std::size_t>();
    cfg.output_dim = c.at("output_dim").get<std::size_t>();
    cfg.hidden_activation = parse_activation(c.at("hidden_activation").get<std::string>());
    cfg.output_activation = parse_activation(c.at("output_activation").get<std::string>());
    cfg.learning_rate = c.at("learning_rate").get<double>();
    cfg.epochs = c.at("epochs").get<std::size_t>();
    cfg.batch_size = c.at("batch_size").get<std::size_t>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    cfg.optimizer = parse_optimizer(c.at("optimizer").get<std::string>());
    cfg.validation_fraction = c.at("validation_fraction").get<double>();

    const auto& s = j.at("scalers");
    m.input_scaler.mean = s.at("input").at("mean").get<std::vector<double>>();
    m.input_scaler.std = s.at("input").at("std").get<std::vector<double>>();
    m.output_scaler.mean = s.at("output").at("mean").get<std::vector<double>>();
    m.output_scaler.std = s.at("output").at("std").get<std::vector<double>>();

    const auto& p = j.at("provenance");
    m.provenance.seed = p.at("seed").get<std::uint64_t>();
    m.provenance.batch_size = p.at("batch_size").get<std::size_t>();
    m.provenance.dataset_fingerprint = p.at("dataset_fingerprint").get<std::string>();

    for (const auto& lj : j.at("layers")) {
      Layer l;
      l.rows = lj.at("rows").get<std::size_t>();
      l.cols = lj.at("cols").get<std::size_t>();
      l.weights = lj.at("weights").get<std::vector<double>>();
      l.biases = lj.at("biases").get<std::vector<double>>();
      l.activation = parse_activation(lj.at("activation").get<std::string>());
      m.net.layers.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelLoadError(std::string("malformed model file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ModelLoadError(std::string("malformed model file: ") + e.what());
  }

  try {
    m.net.validate();
  } catch (const InvalidArgument& e) {
    throw ModelLoadError(std::string("model shape error: ") + e.what());
  }
  const bool predictive = m.direction == Direction::kPredictive;
  const std::size_t in = predictive ? 3 : 4, out = predictive ? 4 : 3;
  if (m.net.input_dim() != in || m.net.output_dim() != out)
    throw ModelLoadError("model shape error: task '" + std::string(direction_name(m.direction)) +
                         "' needs " + std::to_string(in) + " -> " + std::to_string(out) +
                         " but layers are " + std::to_string(m.net.input_dim()) + " -> " +
                         std::to_string(m.net.output_dim()));
  if (m.config.input_dim != in || m.config.output_dim != out ||
      m.net.layers.size() != m.config.hidden_layers + 1)
    throw ModelLoadError("model shape error: config does not match layers");
  if (m.input_scaler.mean.size() != in || m.input_scaler.std.size() != in ||
      m.output_scaler.mean.size() != out || m.output_scaler.std.size() != out)
    throw ModelLoadError("model shape error: scaler sizes do not match task dimensions");
  for (const auto* sc : {&m.input_scaler, &m.output_scaler})
    for (double v : sc->std)
      if (!(v > 0.0)) throw ModelLoadError("model scaler std must be > 0");
  return m;
}

inline TaskModel model_from_string(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelLoadError(std::string("model file is not valid JSON (truncated?): ") + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const TaskModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << model_to_string(m);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline TaskModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelLoadError("cannot open model file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return model_from_string(buf.str());
  } catch (const ModelLoadError& e) {
    throw ModelLoadError(path.string() + ": " + e.what());
  }
}

}  // namespace fiberforge
