#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "fiberforge/errors.hpp"

namespace fiberforge {

/// Per-feature z-score transform. Population (divide-by-n) standard deviation;
/// a constant feature gets std 1 so apply() never divides by zero.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t size() const { return mean.size(); }

  std::vector<double> apply(std::span<const double> x) const {
    check(x.size());
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean[i]) / std[i];
    return z;
  }

  std::vector<double> invert(std::span<const double> z) const {
    check(z.size());
    std::vector<double> x(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i] * std[i] + mean[i];
    return x;
  }

  friend bool operator==(const Scaler&, const Scaler&) = default;

 private:
  void check(std::size_t n) const {
    if (n != mean.size())
      throw InvalidArgument("Scaler: expected " + std::to_string(mean.size()) +
                            " features, got " + std::to_string(n));
  }
};

/// Fits a scaler on `select(record)` for every record. `select` returns a
/// fixed-size std::array<double, N>.
template <class Record, class Selector>
Scaler fit_scaler(std::span<const Record> records, Selector select) {
  using Row = decltype(select(records.front()));
  constexpr std::size_t n = std::tuple_size_v<Row>;
  if (records.size() < 2) throw InvalidArgument("fit_scaler: need at least 2 records");

  Scaler s;
  s.mean.assign(n, 0.0);
  s.std.assign(n, 0.0);
  for (const auto& r : records) {
    const Row row = select(r);
    for (std::size_t i = 0; i < n; ++i) s.mean[i] += row[i];
  }
  const double count = static_cast<double>(records.size());
  for (double& m : s.mean) m /= count;
  for (const auto& r : records) {
    const Row row = select(r);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = row[i] - s.mean[i];
      s.std[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    s.std[i] = std::sqrt(s.std[i] / count);
    if (!(s.std[i] > 0.0)) {
      std::clog << "warning: feature " << i << " is constant (" << s.mean[i]
                << "); using std 1 for standardization\n";
      s.std[i] = 1.0;
    }
  }
  return s;
}

}  // namespace fiberforge
