#pragma once

// Retail tariff: volumetric buy price (energy charge + other components),
// annual fixed charge, and the feed-in side. Either price can track the
// wholesale spot series; the equilibrium loop fills `wholesale` (EUR/kWh per
// step) before each household solve in those modes.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace prosumeq {

enum class EnergyChargeMode { fixed_rate, wholesale };
enum class FeedInMode { fixed_rate, prohibited, wholesale, wholesale_premium };

struct Tariff {
  EnergyChargeMode energy_mode = EnergyChargeMode::fixed_rate;
  double energy_charge = 0.0;         // EUR/kWh (fixed_rate mode)
  double other_charge = 0.0;          // EUR/kWh, always volumetric
  double fixed_charge = 0.0;          // EUR/a
  FeedInMode feed_in_mode = FeedInMode::fixed_rate;
  double feed_in_rate = 0.0;          // EUR/kWh (fixed_rate mode)
  double feed_in_premium = 0.0;       // EUR/kWh on top of wholesale
  double feed_in_cap_fraction = 0.0;  // >0: feed-in limited to fraction x installed PV
  std::vector<double> wholesale;      // EUR/kWh per step, only for wholesale modes

  bool needs_wholesale() const {
    return energy_mode == EnergyChargeMode::wholesale || feed_in_mode == FeedInMode::wholesale ||
           feed_in_mode == FeedInMode::wholesale_premium;
  }

  double buy(std::size_t h) const {
    return (energy_mode == EnergyChargeMode::wholesale ? wholesale[h] : energy_charge) + other_charge;
  }

  double sell(std::size_t h) const {
    switch (feed_in_mode) {
      case FeedInMode::fixed_rate: return feed_in_rate;
      case FeedInMode::prohibited: return 0.0;
      case FeedInMode::wholesale: return wholesale[h];
      case FeedInMode::wholesale_premium: return wholesale[h] + feed_in_premium;
    }
    return 0.0;
  }
};

inline void validate_tariff(const Tariff& t, std::size_t steps) {
  if (t.energy_charge < 0.0 || t.other_charge < 0.0 || t.fixed_charge < 0.0)
    throw std::invalid_argument("tariff: negative charge component");
  if (t.feed_in_rate < 0.0) throw std::invalid_argument("tariff: negative feed-in rate");
  if (t.feed_in_cap_fraction < 0.0 || t.feed_in_cap_fraction > 1.0)
    throw std::invalid_argument("tariff: feed-in cap fraction outside [0,1]");
  if (t.feed_in_cap_fraction > 0.0 && t.feed_in_mode == FeedInMode::prohibited)
    throw std::invalid_argument("tariff: feed-in cap is meaningless when feed-in is prohibited");
  if (t.needs_wholesale() && t.wholesale.size() != steps)
    throw std::invalid_argument("tariff: wholesale series has " + std::to_string(t.wholesale.size()) +
                                " steps, expected " + std::to_string(steps));
}

}  // namespace prosumeq
