#pragma once

// Shared pieces for optimality verification: a report of named scaled
// residuals plus the residual formulas themselves. Checkers re-derive every
// condition from raw model parameters and the returned solution only, so they
// also guard the LP builders.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace prosumeq {

struct KktCondition {
  std::string name;
  double residual = 0.0;
};

struct KktReport {
  double max_residual = 0.0;
  std::vector<KktCondition> conditions;
  bool passes(double tol = 1e-6) const { return max_residual <= tol; }
  const KktCondition& worst() const {
    static const KktCondition none{"none", 0.0};
    const KktCondition* w = &none;
    for (const auto& c : conditions)
      if (c.residual >= w->residual) w = &c;
    return *w;
  }
};

namespace kkt_detail {

struct Collector {
  std::vector<KktCondition>* out;
  void add(const std::string& name, double residual) { out->push_back({name, residual}); }

  // 0 <= r  perp  x >= 0: dual-feasibility part (r >= 0) scaled by the
  // largest addend magnitude, complementarity part pair-scaled.
  static double stat_res(double r, double scale) { return std::max(0.0, -r) / (1.0 + scale); }
  static double comp_res(double r, double x) {
    const double rp = std::max(0.0, r), ax = std::fabs(x);
    return rp * ax / (1.0 + rp + ax);
  }
  // two-sided variable in [0, ub]: negative r must pair with the upper gap
  static double comp_upper_res(double r, double gap) {
    const double rn = std::max(0.0, -r);
    return rn * gap / (1.0 + rn + gap);
  }
  static double eq_res(double lhs, double rhs, double scale) {
    return std::fabs(lhs - rhs) / (1.0 + std::fabs(rhs) + scale);
  }

  // full condition set for a variable boxed in [0, up] with bare reduced
  // cost r (capacity multiplier left implicit as max(0, -r))
  void boxed(const std::string& name, double r, double x, double up, double scale) {
    add(name + ":comp_lower", comp_res(r, x));
    if (std::isfinite(up)) {
      add(name + ":comp_upper", comp_upper_res(r, std::max(0.0, up - x)));
    } else {
      add(name + ":stat", stat_res(r, scale));
    }
  }
};

}  // namespace kkt_detail

}  // namespace prosumeq
