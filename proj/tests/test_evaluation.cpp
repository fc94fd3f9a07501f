#include <cmath>

#include <gtest/gtest.h>

#include "fiberforge/evaluation.hpp"
#include "test_support.hpp"

namespace fiberforge {
namespace {

TEST(PercentError, Examples) {
  EXPECT_EQ(percent_error(20.0, 20.0), 0.0);
  EXPECT_EQ(percent_error(10.0, 20.0), -50.0);
  EXPECT_NEAR(percent_error(54.8, 51.6), 6.2015503875968996, 1e-12);
  EXPECT_THROW(percent_error(1.0, 0.0), UndefinedReference);
}

TEST(PercentError, ScaleInvarianceAndSign) {
  Rng rng(4, Stream::kTest);
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.uniform(0.1, 1000.0), p = rng.uniform(0.0, 2000.0), a = rng.uniform(0.01, 100.0);
    const double e = percent_error(p, t);
    EXPECT_NEAR(percent_error(a * p, a * t), e, 1e-9 * std::max(1.0, std::abs(e)));
    EXPECT_EQ(e > 0.0, p > t);
  }
}

std::vector<SampleRecord> one_per_cell() { return generate_dataset(1, 77).records; }

TEST(CellReference, OneRecordPerCell) {
  const auto holdout = one_per_cell();
  const CellReference ref = cell_reference(holdout, Direction::kPredictive);
  for (const auto& r : holdout) {
    const auto f = fiber_vector(r);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(ref.at(r.cell)[k], f[k]);
    EXPECT_EQ(ref.counts[r.cell.index()], 1u);
  }
}

TEST(CellReference, LargeHoldoutNearPublishedMeans) {
  const std::size_t n = 5000;
  const auto ds = generate_dataset(n, 15);
  const CellReference ref = cell_reference(ds.records, Direction::kPredictive);
  const StatsTable t = baseline_stats();
  for (const Cell& c : kAllCells)
    for (Feature f : kAllFeatures) {
      const Moments& m = t.at(c, f);
      EXPECT_NEAR(ref.at(c)[static_cast<std::size_t>(f)], m.mean, 4.0 * m.std / std::sqrt(double(n)));
    }
}

TEST(CellReference, DesignFlowsAreExact) {
  const auto ds = generate_dataset(7, 2);
  const CellReference ref = cell_reference(ds.records, Direction::kDesign);
  for (const Cell& c : kAllCells) {
    EXPECT_EQ(ref.at(c)[0], c.sheath_flow());
    EXPECT_EQ(ref.at(c)[1], c.core_flow());
  }
}

TEST(CellReference, EmptyCellNamed) {
  auto holdout = one_per_cell();
  holdout.erase(holdout.begin() + 4);
  try {
    cell_reference(holdout, Direction::kPredictive);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("b5_r125_10"), std::string::npos);
  }
}

TEST(EvaluatePredictive, ReferenceStubHasZeroError) {
  const auto ds = generate_dataset(30, 3);
  const ErrorReport r = evaluate_reference_means(Direction::kPredictive, ds.records);
  ASSERT_EQ(r.stats.size(), 24u);
  for (const auto& s : r.stats) {
    EXPECT_EQ(s.mean_signed_pct, 0.0);
    EXPECT_EQ(s.mean_abs_pct, 0.0);
    EXPECT_EQ(s.n, 30u);
  }
  EXPECT_FALSE(r.confusion.has_value());
}

TEST(EvaluatePredictive, BiasedStubSignsAndMagnitudes) {
  const auto ds = generate_dataset(30, 3);
  const CellReference ref = cell_reference(ds.records, Direction::kPredictive);
  const ErrorReport r = evaluate_predictive_with(
      [&](const ManufacturingParams& p) {
        for (const Cell& c : kAllCells)
          if (c.params() == p) {
            const auto& m = ref.at(c);
            return FiberFeatures{m[0] * 1.1, m[1] * 0.9, m[2], m[3]};
          }
        return FiberFeatures{};
      },
      ds.records);
  for (const Cell& c : kAllCells) {
    EXPECT_NEAR(r.at(c, "length").mean_signed_pct, 10.0, 1e-9);
    EXPECT_NEAR(r.at(c, "width").mean_signed_pct, -10.0, 1e-9);
    EXPECT_NEAR(r.at(c, "width").mean_abs_pct, 10.0, 1e-9);
    EXPECT_GT(r.at(c, "porosity").sd_signed_pct, 0.0);
  }
  EXPECT_NEAR(r.overall_abs_pct("length"), 10.0, 1e-9);
}

TEST(EvaluateDesign, ReferenceStubHasZeroErrorAndDiagonalConfusion) {
  const auto ds = generate_dataset(25, 4);
  const ErrorReport r = evaluate_reference_means(Direction::kDesign, ds.records);
  ASSERT_EQ(r.stats.size(), 12u);
  for (const auto& s : r.stats) EXPECT_EQ(s.mean_abs_pct, 0.0);
  ASSERT_TRUE(r.confusion.has_value());
  EXPECT_EQ(r.confusion->counts[0][0], 75u);
  EXPECT_EQ(r.confusion->counts[1][1], 75u);
  EXPECT_EQ(r.confusion->counts[0][1] + r.confusion->counts[1][0], 0u);
  EXPECT_EQ(r.confusion->accuracy(), 1.0);
}

TEST(EvaluateDesign, ConfusionConservesRecords) {
  const auto ds = generate_dataset(13, 4);
  Rng rng(3, Stream::kTest);
  const ErrorReport r = evaluate_design_with(
      [&](const FiberFeatures&) {
        DesignResult d;
        d.raw = {rng.uniform(90, 130), rng.uniform(9, 16), rng.uniform(-1, 6)};
        d.params = d.raw;
        d.params.bath_conc = snap_bath(d.raw.bath_conc);
        return d;
      },
      ds.records);
  EXPECT_EQ(r.confusion->total(), ds.records.size());
  std::size_t n = 0;
  for (const auto& s : r.stats)
    if (s.feature == "sheath_flow") n += s.n;
  EXPECT_EQ(n, ds.records.size());
}

TEST(Evaluate, DirectionChecked) {
  TaskModel m;
  m.direction = Direction::kDesign;
  const auto ds = generate_dataset(2, 1);
  EXPECT_THROW(evaluate_predictive(m, ds.records), UsageError);
  m.direction = Direction::kPredictive;
  EXPECT_THROW(evaluate_design(m, ds.records), UsageError);
}

LossCurve curve_of(std::vector<std::pair<double, double>> pts) {
  LossCurve c;
  for (auto [t, v] : pts) c.epochs.push_back({t, v});
  return c;
}

TEST(OverfitDiagnostic, IdenticalCurves) {
  const auto c = curve_of({{1.0, 1.0}, {0.8, 0.8}, {0.6, 0.6}, {0.5, 0.5}, {0.45, 0.45}, {0.4, 0.4}});
  const auto d = overfit_diagnostic(c, 5);
  EXPECT_EQ(d.ratio, 1.0);
  EXPECT_FALSE(d.rising_tail);
  EXPECT_EQ(d.min_validation_epoch, 6u);
}

TEST(OverfitDiagnostic, RisingValidationTail) {
  const auto c = curve_of({{1.0, 1.0}, {0.8, 0.7}, {0.6, 0.72}, {0.5, 0.75}, {0.4, 0.8}, {0.3, 0.9}});
  const auto d = overfit_diagnostic(c, 5);
  EXPECT_TRUE(d.rising_tail);
  EXPECT_EQ(d.min_validation_epoch, 2u);
  EXPECT_NEAR(d.ratio, 3.0, 1e-12);
  EXPECT_FALSE(overfit_diagnostic(curve_of({{1, 1}, {1, 0.5}, {1, 0.6}, {1, 0.7}}), 4).rising_tail);
}

TEST(OverfitDiagnostic, BadWindow) {
  const auto c = curve_of({{1, 1}, {1, 1}, {1, 1}});
  EXPECT_THROW(overfit_diagnostic(c, 4), InvalidArgument);
  EXPECT_THROW(overfit_diagnostic(c, 1), InvalidArgument);
}

}  // namespace
}  // namespace fiberforge
