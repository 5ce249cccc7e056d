#pragma once

// Investment annuities and thermal marginal costs. Conventions:
//  - VAT applies to household investment outlays only (annuities); retail
//    tariff components are given as final consumer prices elsewhere.
//  - Fuel prices and emission factors are per MWh of thermal input; dividing
//    by efficiency converts both to per MWh of electric output.

#include <cmath>
#include <stdexcept>
#include <string>

namespace prosumeq {

struct CostInputs {
  double overnight_cost = 0.0;  // EUR per kW or kWh installed (net of VAT)
  double lifetime_years = 0.0;
  double interest_rate = 0.0;   // per year, e.g. 0.04
  double vat_rate = 0.0;        // e.g. 0.19, applied to the overnight cost
};

struct ThermalTechInputs {
  std::string name;
  double efficiency = 0.0;        // MWh_el per MWh_th
  double emission_factor = 0.0;   // t CO2 per MWh_th
  double fuel_price = 0.0;        // EUR per MWh_th
};

// Annualized investment cost per unit installed: gross overnight cost times
// the capital recovery factor r(1+r)^L / ((1+r)^L - 1); 1/L at zero interest.
inline double annualized_cost(const CostInputs& c) {
  if (!(c.lifetime_years > 0.0)) throw std::invalid_argument("annualized_cost: lifetime must be positive");
  if (c.overnight_cost < 0.0) throw std::invalid_argument("annualized_cost: negative overnight cost");
  if (c.interest_rate < 0.0) throw std::invalid_argument("annualized_cost: negative interest rate");
  const double gross = c.overnight_cost * (1.0 + c.vat_rate);
  if (c.interest_rate == 0.0) return gross / c.lifetime_years;
  const double growth = std::pow(1.0 + c.interest_rate, c.lifetime_years);
  return gross * c.interest_rate * growth / (growth - 1.0);
}

// EUR per MWh of electric output: (fuel + CO2 price x emission factor) / efficiency.
inline double marginal_cost(const ThermalTechInputs& t, double co2_price_eur_per_t) {
  if (!(t.efficiency > 0.0))
    throw std::invalid_argument("marginal_cost: non-positive efficiency for " + t.name);
  if (t.fuel_price < 0.0 || t.emission_factor < 0.0 || co2_price_eur_per_t < 0.0)
    throw std::invalid_argument("marginal_cost: negative cost component for " + t.name);
  return (t.fuel_price + co2_price_eur_per_t * t.emission_factor) / t.efficiency;
}

}  // namespace prosumeq
