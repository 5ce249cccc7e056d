#pragma once

// Hourly (or delta-hourly) series with an explicit unit tag. The time resolution
// convention used everywhere: values are averages over their delta-hour step, so
// energy = sum(value)*delta and capacity bounds apply to the value directly.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "prosumeq/csv.hpp"

namespace prosumeq {

enum class Unit { fraction, kw, mw, kwh, mwh, eur_per_kwh, eur_per_mwh };

inline const char* unit_name(Unit u) {
  switch (u) {
    case Unit::fraction: return "fraction";
    case Unit::kw: return "kW";
    case Unit::mw: return "MW";
    case Unit::kwh: return "kWh";
    case Unit::mwh: return "MWh";
    case Unit::eur_per_kwh: return "EUR/kWh";
    case Unit::eur_per_mwh: return "EUR/MWh";
  }
  return "?";
}

struct TimeSeries {
  std::vector<double> values;
  double step_hours = 1.0;
  Unit unit = Unit::fraction;

  std::size_t size() const { return values.size(); }
  double horizon_hours() const { return static_cast<double>(values.size()) * step_hours; }
  double operator[](std::size_t i) const { return values[i]; }

  // sum(value)*delta: annual energy for a power series, full-load hours for a
  // capacity-factor series.
  double step_weighted_sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * step_hours;
  }

  double mean() const {
    if (values.empty()) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }

  double max() const {
    double m = values.empty() ? 0.0 : values.front();
    for (double v : values) m = v > m ? v : m;
    return m;
  }
};

// Unit-dependent sanity rules applied on load and after synthesis. Prices may
// be negative; physical quantities may not; capacity factors live in [0,1].
inline void validate_series(const TimeSeries& ts, const std::string& origin) {
  if (ts.values.empty()) throw std::runtime_error(origin + ": empty series");
  if (!(ts.step_hours > 0.0)) throw std::runtime_error(origin + ": non-positive step");
  for (std::size_t i = 0; i < ts.values.size(); ++i) {
    const double v = ts.values[i];
    if (!std::isfinite(v))
      throw std::runtime_error(origin + ": non-finite value at index " + std::to_string(i));
    switch (ts.unit) {
      case Unit::fraction:
        if (v < 0.0 || v > 1.0)
          throw std::runtime_error(origin + ": capacity factor " + std::to_string(v) +
                                   " outside [0,1] at index " + std::to_string(i));
        break;
      case Unit::kw:
      case Unit::mw:
      case Unit::kwh:
      case Unit::mwh:
        if (v < 0.0)
          throw std::runtime_error(origin + ": negative quantity at index " + std::to_string(i));
        break;
      case Unit::eur_per_kwh:
      case Unit::eur_per_mwh:
        break;  // negative prices are legitimate
    }
  }
}

inline TimeSeries load_timeseries(const std::string& path, Unit unit, double step_hours = 1.0) {
  TimeSeries ts;
  ts.values = csv::read_hour_value(path);
  ts.step_hours = step_hours;
  ts.unit = unit;
  validate_series(ts, path);
  return ts;
}

inline void save_timeseries(const std::string& path, const TimeSeries& ts) {
  csv::write_hour_value(path, ts.values);
}

// Block-averages `factor` consecutive steps into one. Averaging (not summing)
// keeps the power-per-step convention, so sum(value)*delta is preserved exactly for
// complete blocks. A tail shorter than one block is an error unless truncation
// is explicitly allowed.
inline TimeSeries subsample(const TimeSeries& ts, int factor, bool allow_truncation = false) {
  if (factor < 1) throw std::invalid_argument("subsample factor must be >= 1");
  if (factor == 1) return ts;
  const std::size_t n = ts.values.size();
  const std::size_t blocks = n / static_cast<std::size_t>(factor);
  if (blocks == 0) throw std::invalid_argument("subsample factor exceeds series length");
  if (n % static_cast<std::size_t>(factor) != 0 && !allow_truncation)
    throw std::invalid_argument("series length " + std::to_string(n) + " not divisible by factor " +
                                std::to_string(factor));
  TimeSeries out;
  out.step_hours = ts.step_hours * factor;
  out.unit = ts.unit;
  out.values.resize(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    double s = 0.0;
    for (int k = 0; k < factor; ++k) s += ts.values[b * factor + k];
    out.values[b] = s / factor;
  }
  return out;
}

}  // namespace prosumeq
