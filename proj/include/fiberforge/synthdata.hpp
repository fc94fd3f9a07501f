#pragma once

// Experimental conditions, their measured fiber statistics, and the Gaussian
// synthetic datasets generated from them.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fiberforge/errors.hpp"
#include "fiberforge/numfmt.hpp"
#include "fiberforge/rng.hpp"

namespace fiberforge {

/// Inputs of the fabrication process. Flows in uL/min, bath in mass percent.
struct ManufacturingParams {
  double sheath_flow = 0.0;
  double core_flow = 0.0;
  double bath_conc = 0.0;

  friend bool operator==(const ManufacturingParams&, const ManufacturingParams&) = default;
};

/// Measured properties of a fabricated fiber. Synthetic values are not
/// clamped, so porosity above 100 or negative values can occur.
struct FiberFeatures {
  double length = 0.0;          // um
  double width = 0.0;           // um
  double porosity = 0.0;        // percent
  double youngs_modulus = 0.0;  // MPa

  friend bool operator==(const FiberFeatures&, const FiberFeatures&) = default;
};

enum class Feature : std::size_t { kLength = 0, kWidth = 1, kPorosity = 2, kYoungsModulus = 3 };
inline constexpr std::array<Feature, 4> kAllFeatures{Feature::kLength, Feature::kWidth,
                                                     Feature::kPorosity, Feature::kYoungsModulus};

inline constexpr std::string_view feature_name(Feature f) {
  switch (f) {
    case Feature::kLength: return "length";
    case Feature::kWidth: return "width";
    case Feature::kPorosity: return "porosity";
    case Feature::kYoungsModulus: return "youngs_modulus";
  }
  return "?";
}

inline constexpr double feature_value(const FiberFeatures& f, Feature which) {
  switch (which) {
    case Feature::kLength: return f.length;
    case Feature::kWidth: return f.width;
    case Feature::kPorosity: return f.porosity;
    case Feature::kYoungsModulus: return f.youngs_modulus;
  }
  return 0.0;
}

enum class FlowRatio : std::uint8_t { k100_10, k125_10, k125_15 };

/// One of the six (flow-rate ratio x bath) experimental conditions.
struct Cell {
  int bath_pct = 0;  // 0 or 5
  FlowRatio ratio = FlowRatio::k100_10;

  constexpr double sheath_flow() const { return ratio == FlowRatio::k100_10 ? 100.0 : 125.0; }
  constexpr double core_flow() const { return ratio == FlowRatio::k125_15 ? 15.0 : 10.0; }
  constexpr double bath_conc() const { return static_cast<double>(bath_pct); }

  constexpr ManufacturingParams params() const {
    return {sheath_flow(), core_flow(), bath_conc()};
  }

  /// Position in kAllCells.
  constexpr std::size_t index() const {
    return (bath_pct == 0 ? 0u : 3u) + static_cast<std::size_t>(ratio);
  }

  constexpr std::string_view id() const {
    constexpr std::array<std::string_view, 6> ids{"b0_r100_10", "b0_r125_10", "b0_r125_15",
                                                  "b5_r100_10", "b5_r125_10", "b5_r125_15"};
    return ids[index()];
  }

  friend constexpr bool operator==(const Cell&, const Cell&) = default;
};

/// Fixed iteration order used by generation, references and reports.
inline constexpr std::array<Cell, 6> kAllCells{{
    {0, FlowRatio::k100_10},
    {0, FlowRatio::k125_10},
    {0, FlowRatio::k125_15},
    {5, FlowRatio::k100_10},
    {5, FlowRatio::k125_10},
    {5, FlowRatio::k125_15},
}};

inline std::optional<Cell> cell_from_id(std::string_view id) {
  for (const auto& c : kAllCells)
    if (c.id() == id) return c;
  return std::nullopt;
}

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

/// Per-(cell, feature) mean and standard deviation of the measured fibers.
class StatsTable {
 public:
  const Moments& at(Cell cell, Feature f) const {
    return entries_[cell.index()][static_cast<std::size_t>(f)];
  }
  Moments& at(Cell cell, Feature f) { return entries_[cell.index()][static_cast<std::size_t>(f)]; }

  static constexpr std::size_t size() { return 6 * 4; }

 private:
  std::array<std::array<Moments, 4>, 6> entries_{};
};

/// Measured statistics of solid alginate fibers, 0% and 5% CaCl2 baths.
inline StatsTable baseline_stats() {
  StatsTable t;
  auto set = [&t](Cell c, Moments len, Moments wid, Moments por, Moments mod) {
    t.at(c, Feature::kLength) = len;
    t.at(c, Feature::kWidth) = wid;
    t.at(c, Feature::kPorosity) = por;
    t.at(c, Feature::kYoungsModulus) = mod;
  };
  //                           length        width          porosity       modulus
  set({0, FlowRatio::k100_10}, {16.7, 3.44}, {14.4, 1.70}, {22.4, 2.41}, {402.0, 114.0});
  set({0, FlowRatio::k125_10}, {20.0, 1.36}, {16.9, 1.27}, {51.6, 18.3}, {1270.0, 303.0});
  set({0, FlowRatio::k125_15}, {24.8, 1.98}, {19.5, 1.38}, {93.8, 19.8}, {1750.0, 375.0});
  set({5, FlowRatio::k100_10}, {7.86, 1.29}, {6.51, 0.991}, {12.2, 2.49}, {15900.0, 6230.0});
  set({5, FlowRatio::k125_10}, {10.3, 1.86}, {8.24, 1.34}, {19.0, 6.40}, {8560.0, 1460.0});
  set({5, FlowRatio::k125_15}, {21.2, 1.19}, {20.6, 1.86}, {76.3, 9.47}, {6010.0, 2300.0});
  return t;
}

struct SampleRecord {
  ManufacturingParams params;
  FiberFeatures features;
  Cell cell;
};

struct Dataset {
  std::vector<SampleRecord> records;
  std::uint64_t seed = 0;
  std::size_t per_cell = 0;  // 0 when records are not balanced across cells
};

/// Cells are visited in kAllCells order, per_cell records each. Every record
/// draws length, width, porosity, modulus in that order from a single
/// Rng(seed, Stream::kDataset). Manufacturing params are the cell's constants.
inline Dataset generate_dataset(std::size_t per_cell, std::uint64_t seed,
                                const StatsTable& stats = baseline_stats()) {
  if (per_cell == 0) throw InvalidArgument("generate_dataset: per_cell must be >= 1");
  Dataset ds;
  ds.seed = seed;
  ds.per_cell = per_cell;
  ds.records.reserve(per_cell * kAllCells.size());
  Rng rng(seed, Stream::kDataset);
  for (const Cell& cell : kAllCells) {
    for (std::size_t i = 0; i < per_cell; ++i) {
      SampleRecord r;
      r.cell = cell;
      r.params = cell.params();
      auto draw = [&](Feature f) {
        const Moments& m = stats.at(cell, f);
        return gaussian_sample(rng, m.mean, m.std);
      };
      r.features.length = draw(Feature::kLength);
      r.features.width = draw(Feature::kWidth);
      r.features.porosity = draw(Feature::kPorosity);
      r.features.youngs_modulus = draw(Feature::kYoungsModulus);
      ds.records.push_back(r);
    }
  }
  return ds;
}

struct DatasetSplit {
  std::vector<SampleRecord> model_set;
  std::vector<SampleRecord> holdout_set;
};

/// Uniform random partition. Indices are shuffled with Rng(seed, Stream::kSplit);
/// the first n_model go to the model set. Both parts keep the original order.
inline DatasetSplit split_dataset(std::span<const SampleRecord> records, std::size_t n_model,
                                  std::uint64_t seed) {
  if (n_model == 0 || n_model >= records.size())
    throw InvalidArgument("split_dataset: n_model must satisfy 0 < n_model < " +
                          std::to_string(records.size()));
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, Stream::kSplit);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<bool> in_model(records.size(), false);
  for (std::size_t i = 0; i < n_model; ++i) in_model[order[i]] = true;

  DatasetSplit out;
  out.model_set.reserve(n_model);
  out.holdout_set.reserve(records.size() - n_model);
  for (std::size_t i = 0; i < records.size(); ++i)
    (in_model[i] ? out.model_set : out.holdout_set).push_back(records[i]);
  return out;
}

inline DatasetSplit split_dataset(const Dataset& ds, std::size_t n_model, std::uint64_t seed) {
  return split_dataset(std::span<const SampleRecord>(ds.records), n_model, seed);
}

// CSV persistence.

inline constexpr std::array<std::string_view, 8> kCsvColumns{
    "sheath_ul_min", "core_ul_min", "bath_pct",   "length_um",
    "width_um",      "porosity_pct", "youngs_mpa", "cell_id"};

inline void write_csv(std::ostream& out, std::span<const SampleRecord> records) {
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i)
    out << (i ? "," : "") << kCsvColumns[i];
  out << '\n';
  for (const auto& r : records) {
    out << to_decimal(r.params.sheath_flow) << ',' << to_decimal(r.params.core_flow) << ','
        << to_decimal(r.params.bath_conc) << ',' << to_decimal(r.features.length) << ','
        << to_decimal(r.features.width) << ',' << to_decimal(r.features.porosity) << ','
        << to_decimal(r.features.youngs_modulus) << ',' << r.cell.id() << '\n';
  }
}

inline std::string to_csv(std::span<const SampleRecord> records) {
  std::ostringstream out;
  write_csv(out, records);
  return out.str();
}

inline void write_csv(const std::filesystem::path& path, std::span<const SampleRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_csv(out, records);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  write_csv(path, std::span<const SampleRecord>(ds.records));
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Columns are matched by header name. `source` only labels error messages.
/// The returned Dataset has seed 0; per_cell is set when every cell holds the
/// same number of records.
inline Dataset read_csv(std::istream& in, std::string_view source = "<csv>") {
  const std::string src(source);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(src + ": missing header line");

  std::array<std::size_t, kCsvColumns.size()> col{};
  const auto header = detail::split_fields(detail::trim(line));
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
    std::size_t found = header.size();
    for (std::size_t h = 0; h < header.size(); ++h)
      if (detail::trim(header[h]) == kCsvColumns[c]) found = h;
    if (found == header.size())
      throw ParseError(src + ": header is missing column '" + std::string(kCsvColumns[c]) + "'");
    col[c] = found;
  }

  Dataset ds;
  std::array<std::size_t, 6> per_cell_count{};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto fields = detail::split_fields(text);
    const auto where = [&](std::size_t c) {
      return src + ": line " + std::to_string(line_no) + ", column '" +
             std::string(kCsvColumns[c]) + "'";
    };
    if (fields.size() != header.size())
      throw ParseError(src + ": line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    std::array<double, 7> v{};
    for (std::size_t c = 0; c < 7; ++c) {
      const auto parsed = parse_double(fields[col[c]]);
      if (!parsed)
        throw ParseError(where(c) + ": non-numeric value '" + std::string(fields[col[c]]) + "'");
      v[c] = *parsed;
    }
    const auto cell = cell_from_id(detail::trim(fields[col[7]]));
    if (!cell)
      throw ParseError(where(7) + ": unknown cell id '" + std::string(fields[col[7]]) + "'");
    SampleRecord r;
    r.cell = *cell;
    r.params = {v[0], v[1], v[2]};
    r.features = {v[3], v[4], v[5], v[6]};
    if (r.params.sheath_flow != cell->sheath_flow()) throw ParseError(where(0) + ": does not match cell");
    if (r.params.core_flow != cell->core_flow()) throw ParseError(where(1) + ": does not match cell");
    if (r.params.bath_conc != cell->bath_conc()) throw ParseError(where(2) + ": does not match cell");
    ++per_cell_count[cell->index()];
    ds.records.push_back(r);
  }
  bool balanced = true;
  for (auto n : per_cell_count) balanced = balanced && n == per_cell_count[0];
  ds.per_cell = balanced ? per_cell_count[0] : 0;
  return ds;
}

inline Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return read_csv(in, path.string());
}

/// FNV-1a 64 over the CSV rendering; used as a dataset fingerprint.
inline std::string fingerprint(std::span<const SampleRecord> records) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_csv(records)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

}  // namespace fiberforge
