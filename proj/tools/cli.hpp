#pragma once

// `fiberforge` command-line front end. run_cli() is the whole program so tests
// can drive it in-process.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fiberforge/fiberforge.hpp"

namespace fiberforge::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kInputData = 3, kNumeric = 4 };

/// Thrown for out-of-range parameters detected after flag parsing.
class UsageFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using Manifest = std::vector<std::pair<std::string, std::string>>;

inline std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageFailure("cannot read config file '" + path.string() + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = fiberforge::detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw UsageFailure(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    kv[std::string(fiberforge::detail::trim(text.substr(0, eq)))] =
        std::string(fiberforge::detail::trim(text.substr(eq + 1)));
  }
  return kv;
}

/// Inserts `--key value` for config entries the user did not pass explicitly.
/// Keys `command` and `config` are ignored so manifests replay directly.
inline std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::optional<std::string> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
  }
  if (!config) return args;
  auto given = [&](const std::string& key) {
    for (const auto& a : args)
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> extra;
  for (const auto& [key, value] : read_key_values(*config)) {
    if (key == "command" || key == "config" || given(key)) continue;
    if (value == "true") extra.push_back("--" + key);
    else if (value != "false") extra.insert(extra.end(), {"--" + key, value});
  }
  static const std::vector<std::string> kCommands{"synth", "train", "sweep", "infer", "eval"};
  auto pos = std::find_if(args.begin(), args.end(), [](const std::string& a) {
    return std::find(kCommands.begin(), kCommands.end(), a) != kCommands.end();
  });
  pos = pos == args.end() ? args.end() : pos + 1;
  args.insert(pos, extra.begin(), extra.end());
  return args;
}

inline void write_manifest(const std::filesystem::path& dir, const std::string& command,
                           const Manifest& entries) {
  std::string text = "# replay: fiberforge " + command + " --config <this file>\ncommand=" + command + "\n";
  for (const auto& [k, v] : entries) text += k + "=" + v + "\n";
  write_text(dir / ("manifest_" + command + ".txt"), text);
}

inline std::filesystem::path parent_or_cwd(const std::filesystem::path& p) {
  return p.has_parent_path() ? p.parent_path() : std::filesystem::path(".");
}

inline std::uint64_t default_seed() {
  if (const char* env = std::getenv("FIBERFORGE_SEED")) {
    std::uint64_t v = 0;
    const std::string_view s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
      throw UsageFailure("FIBERFORGE_SEED is not an unsigned integer: '" + std::string(s) + "'");
    return v;
  }
  return 42;
}

/// "1-20", "20", "1,5,10-12".
inline std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string part;
  auto num = [&](const std::string& s) {
    std::size_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || v == 0)
      throw UsageFailure("--sizes: '" + s + "' is not a positive integer");
    return v;
  };
  while (std::getline(ss, part, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(num(part));
    } else {
      const auto lo = num(part.substr(0, dash)), hi = num(part.substr(dash + 1));
      if (lo > hi) throw UsageFailure("--sizes: empty range '" + part + "'");
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    }
  }
  if (out.empty()) throw UsageFailure("--sizes: no batch sizes given");
  return out;
}

inline std::string fmt_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", v);
  return buf;
}

inline std::string sizes_text(const std::vector<std::size_t>& sizes) {
  std::string s;
  for (std::size_t i = 0; i < sizes.size(); ++i) s += (i ? "," : "") + std::to_string(sizes[i]);
  return s;
}

}  // namespace detail

struct TrainOptions {
  std::string task = "predict";
  std::string data;
  std::size_t split_n = 479;
  std::size_t batch = 20;
  std::size_t epochs = 32;
  double lr = 0.001;
  double val_fraction = 0.2;
  std::string optimizer = "adam";
  std::uint64_t seed = 0;
};

inline NetworkConfig to_config(const TrainOptions& o) {
  NetworkConfig cfg;
  cfg.batch_size = o.batch;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.validation_fraction = o.val_fraction;
  cfg.optimizer = parse_optimizer(o.optimizer);
  cfg.seed = o.seed;
  return cfg;
}

inline void validate(const TrainOptions& o) {
  if (o.task != "predict" && o.task != "design") throw UsageFailure("--task must be predict or design");
  if (o.split_n == 0) throw UsageFailure("--split-n must be >= 1");
  if (o.batch == 0) throw UsageFailure("--batch must be >= 1");
  if (o.epochs == 0) throw UsageFailure("--epochs must be >= 1");
  if (!(o.lr > 0.0) || !std::isfinite(o.lr)) throw UsageFailure("--lr must be > 0");
  if (!(o.val_fraction > 0.0 && o.val_fraction < 1.0)) throw UsageFailure("--val-fraction must be in (0, 1)");
  if (o.optimizer != "adam" && o.optimizer != "sgd") throw UsageFailure("--optimizer must be adam or sgd");
}

inline detail::Manifest manifest_of(const TrainOptions& o) {
  return {{"task", o.task},
          {"data", o.data},
          {"split-n", std::to_string(o.split_n)},
          {"batch", std::to_string(o.batch)},
          {"epochs", std::to_string(o.epochs)},
          {"lr", to_decimal(o.lr)},
          {"val-fraction", to_decimal(o.val_fraction)},
          {"optimizer", o.optimizer},
          {"seed", std::to_string(o.seed)}};
}

inline DatasetSplit load_and_split(const TrainOptions& o) {
  const Dataset ds = read_csv(std::filesystem::path(o.data));
  if (o.split_n >= ds.records.size())
    throw UsageFailure("--split-n " + std::to_string(o.split_n) + " must be less than the " +
                       std::to_string(ds.records.size()) + " records in " + o.data);
  return split_dataset(ds, o.split_n, o.seed);
}

inline void add_train_flags(CLI::App* cmd, TrainOptions& o, bool with_batch) {
  cmd->add_option("--task", o.task, "predict | design")->capture_default_str();
  cmd->add_option("--data", o.data, "synthetic dataset CSV")->required();
  cmd->add_option("--split-n", o.split_n, "records used for training + validation")->capture_default_str();
  if (with_batch) cmd->add_option("--batch", o.batch, "mini-batch size")->capture_default_str();
  cmd->add_option("--epochs", o.epochs)->capture_default_str();
  cmd->add_option("--lr", o.lr, "learning rate")->capture_default_str();
  cmd->add_option("--val-fraction", o.val_fraction, "validation share of the model set")->capture_default_str();
  cmd->add_option("--optimizer", o.optimizer, "adam | sgd")->capture_default_str();
  cmd->add_option("--seed", o.seed, "split, init and shuffle seed (default $FIBERFORGE_SEED or 42)");
}

inline void print_report(std::ostream& out, const ErrorReport& r) {
  for (std::string_view feature : evaluated_outputs(r.direction)) {
    out << feature << ":";
    for (const Cell& c : kAllCells) out << ' ' << c.id() << '=' << detail::fmt_pct(r.at(c, feature).mean_abs_pct);
    out << '\n';
  }
  if (r.confusion) out << "bath accuracy: " << r.confusion->accuracy() << '\n';
}

inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Synthetic microfiber data, predictive/design network training and evaluation"};
  app.name("fiberforge");
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key=value file supplying defaults for unset flags");
  app.fallthrough();

  // synth
  std::size_t per_cell = 200;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset CSV");
  synth->add_option("--per-cell", per_cell, "records per condition")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--seed", synth_seed);
  synth->add_option("--out", synth_out, "output CSV path")->required();

  // train
  TrainOptions train_opts;
  std::string model_out;
  auto* train_cmd = app.add_subcommand("train", "train one predictive or design model");
  add_train_flags(train_cmd, train_opts, true);
  train_cmd->add_option("--model-out", model_out, "model JSON path")->required();

  // sweep
  TrainOptions sweep_opts;
  std::string sweep_dir, sizes_arg = "1-20";
  unsigned threads = 1;
  auto* sweep = app.add_subcommand("sweep", "train one model per batch size and report holdout errors");
  add_train_flags(sweep, sweep_opts, false);
  sweep->add_option("--out-dir", sweep_dir)->required();
  sweep->add_option("--sizes", sizes_arg, "batch sizes, e.g. 1-20 or 1,5,10,20")->capture_default_str();
  sweep->add_option("--threads", threads, "concurrent training runs")->check(CLI::PositiveNumber)->capture_default_str();

  // infer
  std::string infer_model;
  std::optional<double> sheath, core, bath, length, width, porosity, modulus;
  auto* infer = app.add_subcommand("infer", "query a trained model");
  infer->add_option("--model", infer_model)->required();
  infer->add_option("--sheath", sheath, "sheath flow, uL/min (predict)");
  infer->add_option("--core", core, "core flow, uL/min (predict)");
  infer->add_option("--bath", bath, "bath CaCl2 percent (predict)");
  infer->add_option("--length", length, "fiber length, um (design)");
  infer->add_option("--width", width, "fiber width, um (design)");
  infer->add_option("--porosity", porosity, "porosity, percent (design)");
  infer->add_option("--modulus", modulus, "Young's modulus, MPa (design)");

  // eval
  std::string eval_model, eval_holdout, eval_out, eval_task;
  bool oracle_means = false;
  auto* eval = app.add_subcommand("eval", "percentage errors of a model on a holdout CSV");
  eval->add_option("--model", eval_model);
  eval->add_option("--holdout", eval_holdout)->required();
  eval->add_option("--out", eval_out, "output directory")->required();
  eval->add_flag("--oracle-means", oracle_means, "replace the model with a stub that returns holdout truth");
  eval->add_option("--task", eval_task, "task for --oracle-means when no model is given");

  try {
    args = detail::merge_config(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const UsageFailure& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    const std::uint64_t fallback_seed = detail::default_seed();

    if (*synth) {
      if (synth->count("--seed") == 0) synth_seed = fallback_seed;
      const Dataset ds = generate_dataset(per_cell, synth_seed);
      const std::filesystem::path path(synth_out);
      std::filesystem::create_directories(detail::parent_or_cwd(path));
      write_csv(path, ds);
      detail::write_manifest(detail::parent_or_cwd(path), "synth",
                             {{"per-cell", std::to_string(per_cell)},
                              {"seed", std::to_string(synth_seed)},
                              {"out", synth_out}});
      out << "wrote " << ds.records.size() << " records to " << synth_out << '\n';
      return kOk;
    }

    if (*train_cmd) {
      if (train_cmd->count("--seed") == 0) train_opts.seed = fallback_seed;
      validate(train_opts);
      const DatasetSplit split = load_and_split(train_opts);
      const TrainingRun run = train_task(split.model_set, to_config(train_opts), parse_direction(train_opts.task));
      const std::filesystem::path path(model_out);
      const auto dir = detail::parent_or_cwd(path);
      const std::string stem = path.stem().string();
      std::filesystem::create_directories(dir);
      save_model(run.model, path);
      write_text(dir / (stem + "_loss.csv"), loss_csv(run.loss));
      write_text(dir / (stem + "_loss.svg"),
                 loss_svg(run.loss, train_opts.task + " loss, batch size " + std::to_string(train_opts.batch)));
      write_csv(dir / (stem + "_holdout.csv"), std::span<const SampleRecord>(split.holdout_set));
      auto manifest = manifest_of(train_opts);
      manifest.emplace_back("model-out", model_out);
      detail::write_manifest(dir, "train", manifest);
      const auto& last = run.loss.epochs.back();
      out << "trained " << train_opts.task << " model (" << split.model_set.size() << " records, holdout "
          << split.holdout_set.size() << "): final training loss " << last.training << ", validation loss "
          << last.validation << '\n';
      return kOk;
    }

    if (*sweep) {
      if (sweep->count("--seed") == 0) sweep_opts.seed = fallback_seed;
      validate(sweep_opts);
      const auto sizes = detail::parse_sizes(sizes_arg);
      const DatasetSplit split = load_and_split(sweep_opts);
      const SweepReport report = sweep_batch_sizes(split.model_set, split.holdout_set, to_config(sweep_opts),
                                                   parse_direction(sweep_opts.task), sizes, threads);
      const std::filesystem::path dir(sweep_dir);
      emit_sweep_reports(report, dir);
      write_csv(dir / "holdout.csv", std::span<const SampleRecord>(split.holdout_set));
      auto manifest = manifest_of(sweep_opts);
      manifest.erase(std::remove_if(manifest.begin(), manifest.end(),
                                    [](const auto& kv) { return kv.first == "batch"; }),
                     manifest.end());
      manifest.emplace_back("out-dir", sweep_dir);
      manifest.emplace_back("sizes", detail::sizes_text(sizes));
      manifest.emplace_back("threads", std::to_string(threads));
      detail::write_manifest(dir, "sweep", manifest);
      for (const auto& e : report.entries) {
        out << "batch " << e.batch_size << ":\n";
        print_report(out, e.errors);
      }
      return kOk;
    }

    if (*infer) {
      const TaskModel model = load_model(infer_model);
      const bool any_process = sheath || core || bath;
      const bool any_fiber = length || width || porosity || modulus;
      if (model.direction == Direction::kPredictive) {
        if (any_fiber || !(sheath && core && bath))
          throw UsageFailure("predict model expects --sheath, --core and --bath (and no fiber flags)");
        const FiberFeatures f = predict_features(model, {*sheath, *core, *bath});
        out << "length_um=" << to_decimal(f.length) << "\nwidth_um=" << to_decimal(f.width)
            << "\nporosity_pct=" << to_decimal(f.porosity) << "\nyoungs_mpa=" << to_decimal(f.youngs_modulus)
            << '\n';
      } else {
        if (any_process || !(length && width && porosity && modulus))
          throw UsageFailure(
              "design model expects --length, --width, --porosity and --modulus (and no process flags)");
        const DesignResult d = design_params(model, {*length, *width, *porosity, *modulus});
        out << "sheath_ul_min=" << to_decimal(d.params.sheath_flow) << "\ncore_ul_min="
            << to_decimal(d.params.core_flow) << "\nbath_pct=" << to_decimal(d.params.bath_conc)
            << "\nbath_pct_raw=" << to_decimal(d.raw.bath_conc) << '\n';
      }
      return kOk;
    }

    if (*eval) {
      std::optional<TaskModel> model;
      if (!eval_model.empty()) model = load_model(eval_model);
      if (!model && !oracle_means) throw UsageFailure("eval needs --model (or --oracle-means with --task)");
      if (!model && eval_task.empty()) throw UsageFailure("--oracle-means without --model needs --task");
      const Direction direction = model ? model->direction : parse_direction(eval_task);
      const Dataset holdout = read_csv(std::filesystem::path(eval_holdout));
      if (holdout.records.empty()) throw ParseError(eval_holdout + ": holdout contains no records");
      const ErrorReport report = oracle_means ? evaluate_reference_means(direction, holdout.records)
                                              : evaluate(*model, holdout.records);
      const std::size_t batch = model ? model->provenance.batch_size : 0;
      const std::vector<LabeledReport> labeled{{batch, &report}};
      const std::filesystem::path dir(eval_out);
      std::filesystem::create_directories(dir);
      write_text(dir / "errors.csv", error_csv(labeled));
      write_text(dir / "error_dispersion.csv", error_dispersion_csv(labeled));
      if (direction == Direction::kDesign) write_text(dir / "confusion.csv", confusion_csv(labeled));
      detail::write_manifest(dir, "eval",
                             {{"model", eval_model},
                              {"holdout", eval_holdout},
                              {"out", eval_out},
                              {"oracle-means", oracle_means ? "true" : "false"},
                              {"task", std::string(direction_name(direction))}});
      print_report(out, report);
      return kOk;
    }
  } catch (const UsageFailure& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const fiberforge::UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const InvalidArgument& e) {
    err << "input data error: " << e.what() << '\n';
    return kInputData;
  } catch (const std::exception& e) {
    err << "input data error: " << e.what() << '\n';
    return kInputData;
  }
  return kUsage;
}

}  // namespace fiberforge::cli
