#pragma once

// Percentage error against holdout cell means, per-cell aggregation and loss
// curve overfitting checks.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "fiberforge/errors.hpp"
#include "fiberforge/neuralnet.hpp"
#include "fiberforge/pipelines.hpp"
#include "fiberforge/synthdata.hpp"

namespace fiberforge {

/// (predicted - reference) / reference * 100. Positive means over-prediction.
inline double percent_error(double predicted, double reference) {
  if (reference == 0.0)
    throw UndefinedReference("percent_error: reference value is 0, relative error undefined");
  return (predicted - reference) / reference * 100.0;
}

inline constexpr std::array<std::string_view, 4> kPredictiveOutputs{"length", "width", "porosity",
                                                                    "youngs_modulus"};
inline constexpr std::array<std::string_view, 2> kDesignOutputs{"sheath_flow", "core_flow"};

inline std::span<const std::string_view> evaluated_outputs(Direction d) {
  if (d == Direction::kPredictive) return kPredictiveOutputs;
  return kDesignOutputs;
}

/// Holdout means per cell: the four fiber features for the predictive task,
/// sheath and core flow for the design task.
struct CellReference {
  Direction direction = Direction::kPredictive;
  std::array<std::vector<double>, 6> means;
  std::array<std::size_t, 6> counts{};

  const std::vector<double>& at(Cell c) const { return means[c.index()]; }
};

inline CellReference cell_reference(std::span<const SampleRecord> holdout, Direction direction) {
  CellReference ref;
  ref.direction = direction;
  const std::size_t width = evaluated_outputs(direction).size();
  for (auto& m : ref.means) m.assign(width, 0.0);
  for (const auto& r : holdout) {
    auto& m = ref.means[r.cell.index()];
    if (direction == Direction::kPredictive) {
      const auto f = fiber_vector(r);
      for (std::size_t i = 0; i < 4; ++i) m[i] += f[i];
    } else {
      m[0] += r.params.sheath_flow;
      m[1] += r.params.core_flow;
    }
    ++ref.counts[r.cell.index()];
  }
  for (const Cell& c : kAllCells) {
    const std::size_t n = ref.counts[c.index()];
    if (n == 0) throw InvalidArgument("cell_reference: no holdout records for cell " + std::string(c.id()));
    for (double& v : ref.means[c.index()]) v /= static_cast<double>(n);
  }
  return ref;
}

struct ErrorStat {
  Cell cell;
  std::string feature;
  double mean_signed_pct = 0.0;
  double mean_abs_pct = 0.0;
  /// Population std of the per-record signed percentage errors. For the
  /// predictive task the per-record error is (prediction - record) / P_T.
  double sd_signed_pct = 0.0;
  std::size_t n = 0;
};

/// Rows: true bath (0%, 5%); columns: snapped predicted bath.
struct BathConfusion {
  std::array<std::array<std::size_t, 2>, 2> counts{};

  static std::size_t slot(double bath) { return bath >= 2.5 ? 1 : 0; }
  std::size_t total() const { return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]; }
  double accuracy() const {
    const auto t = total();
    return t == 0 ? 0.0 : static_cast<double>(counts[0][0] + counts[1][1]) / static_cast<double>(t);
  }
};

struct ErrorReport {
  Direction direction = Direction::kPredictive;
  std::vector<ErrorStat> stats;  // cell-major, outputs in evaluated_outputs() order
  std::optional<BathConfusion> confusion;

  const ErrorStat& at(Cell c, std::string_view feature) const {
    for (const auto& s : stats)
      if (s.cell == c && s.feature == feature) return s;
    throw InvalidArgument("ErrorReport: no entry for " + std::string(c.id()) + "/" + std::string(feature));
  }

  /// Record-weighted mean absolute percentage error across cells.
  double overall_abs_pct(std::string_view feature) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : stats)
      if (s.feature == feature) {
        sum += s.mean_abs_pct * static_cast<double>(s.n);
        n += s.n;
      }
    if (n == 0) throw InvalidArgument("ErrorReport: no entries for " + std::string(feature));
    return sum / static_cast<double>(n);
  }
};

/// Queries `predict(ManufacturingParams) -> FiberFeatures` once per cell at the
/// cell's fixed process parameters and compares with the holdout cell means.
template <class Predictor>
ErrorReport evaluate_predictive_with(Predictor&& predict, std::span<const SampleRecord> holdout) {
  const CellReference ref = cell_reference(holdout, Direction::kPredictive);
  ErrorReport report;
  report.direction = Direction::kPredictive;
  for (const Cell& c : kAllCells) {
    const FiberFeatures pred = predict(c.params());
    const auto pv = fiber_vector(pred);
    const auto& mean = ref.at(c);
    for (std::size_t k = 0; k < 4; ++k) {
      ErrorStat s;
      s.cell = c;
      s.feature = std::string(kPredictiveOutputs[k]);
      s.mean_signed_pct = percent_error(pv[k], mean[k]);
      s.mean_abs_pct = std::abs(s.mean_signed_pct);
      s.n = ref.counts[c.index()];
      double sq = 0.0;
      for (const auto& r : holdout)
        if (r.cell == c) {
          const double e = (pv[k] - fiber_vector(r)[k]) / mean[k] * 100.0;
          sq += (e - s.mean_signed_pct) * (e - s.mean_signed_pct);
        }
      s.sd_signed_pct = std::sqrt(sq / static_cast<double>(s.n));
      report.stats.push_back(std::move(s));
    }
  }
  return report;
}

inline ErrorReport evaluate_predictive(const TaskModel& m, std::span<const SampleRecord> holdout) {
  if (m.direction != Direction::kPredictive)
    throw UsageError("evaluate_predictive needs a predictive model");
  return evaluate_predictive_with([&m](const ManufacturingParams& p) { return predict_features(m, p); },
                                  holdout);
}

/// Runs `design` on every holdout record and compares the recovered flows with
/// the cell reference. `design` is called with the record's FiberFeatures, or
/// with the whole SampleRecord when it accepts one (used by reference stubs).
template <class Designer>
ErrorReport evaluate_design_with(Designer&& design, std::span<const SampleRecord> holdout) {
  const CellReference ref = cell_reference(holdout, Direction::kDesign);
  std::array<std::array<std::vector<double>, 2>, 6> errs;
  BathConfusion confusion;
  for (const auto& r : holdout) {
    DesignResult d;
    if constexpr (std::is_invocable_v<Designer&, const SampleRecord&>)
      d = design(r);
    else
      d = design(r.features);
    const auto& mean = ref.at(r.cell);
    errs[r.cell.index()][0].push_back(percent_error(d.params.sheath_flow, mean[0]));
    errs[r.cell.index()][1].push_back(percent_error(d.params.core_flow, mean[1]));
    ++confusion.counts[BathConfusion::slot(r.params.bath_conc)][BathConfusion::slot(d.params.bath_conc)];
  }
  ErrorReport report;
  report.direction = Direction::kDesign;
  report.confusion = confusion;
  for (const Cell& c : kAllCells) {
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& e = errs[c.index()][k];
      ErrorStat s;
      s.cell = c;
      s.feature = std::string(kDesignOutputs[k]);
      s.n = e.size();
      double sum = 0.0, abs_sum = 0.0;
      for (double v : e) {
        sum += v;
        abs_sum += std::abs(v);
      }
      const double count = static_cast<double>(s.n);
      s.mean_signed_pct = sum / count;
      s.mean_abs_pct = abs_sum / count;
      double sq = 0.0;
      for (double v : e) sq += (v - s.mean_signed_pct) * (v - s.mean_signed_pct);
      s.sd_signed_pct = std::sqrt(sq / count);
      report.stats.push_back(std::move(s));
    }
  }
  return report;
}

inline ErrorReport evaluate_design(const TaskModel& m, std::span<const SampleRecord> holdout) {
  if (m.direction != Direction::kDesign) throw UsageError("evaluate_design needs a design model");
  return evaluate_design_with([&m](const FiberFeatures& f) { return design_params(m, f); }, holdout);
}

inline ErrorReport evaluate(const TaskModel& m, std::span<const SampleRecord> holdout) {
  return m.direction == Direction::kPredictive ? evaluate_predictive(m, holdout)
                                               : evaluate_design(m, holdout);
}

/// Zero-error reference: answers every query with the holdout truth.
inline ErrorReport evaluate_reference_means(Direction direction, std::span<const SampleRecord> holdout) {
  if (direction == Direction::kPredictive) {
    const CellReference ref = cell_reference(holdout, direction);
    return evaluate_predictive_with(
        [&ref](const ManufacturingParams& p) {
          for (const Cell& c : kAllCells)
            if (c.params() == p) {
              const auto& m = ref.at(c);
              return FiberFeatures{m[0], m[1], m[2], m[3]};
            }
          throw InvalidArgument("reference predictor: unknown process parameters");
        },
        holdout);
  }
  return evaluate_design_with(
      [](const SampleRecord& r) { return DesignResult{r.cell.params(), r.cell.params()}; }, holdout);
}

struct OverfitDiagnostic {
  double final_training = 0.0;
  double final_validation = 0.0;
  double ratio = 0.0;                    // final validation / final training
  std::size_t min_validation_epoch = 0;  // 1-based
  bool rising_tail = false;              // validation strictly increasing over the last k epochs
};

inline OverfitDiagnostic overfit_diagnostic(const LossCurve& curve, std::size_t k = 5) {
  if (k < 2) throw InvalidArgument("overfit_diagnostic: k must be >= 2");
  if (curve.size() < k)
    throw InvalidArgument("overfit_diagnostic: k = " + std::to_string(k) + " exceeds curve length " +
                          std::to_string(curve.size()));
  OverfitDiagnostic d;
  const auto& last = curve.epochs.back();
  d.final_training = last.training;
  d.final_validation = last.validation;
  if (last.training > 0.0)
    d.ratio = last.validation / last.training;
  else
    d.ratio = last.validation > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;

  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i].validation < curve[best].validation) best = i;
  d.min_validation_epoch = best + 1;

  d.rising_tail = true;
  for (std::size_t i = curve.size() - k + 1; i < curve.size(); ++i)
    if (!(curve[i].validation > curve[i - 1].validation)) d.rising_tail = false;
  return d;
}

}  // namespace fiberforge
