#pragma once

// Linear program container and solution checks, solver-independent.
//
// Convention (minimization):
//   minimize  c'x + offset   s.t.  rows (<=, =, >=),  l <= x <= u
// Row duals y: >= 0 on >= rows, <= 0 on <= rows, free on = rows.
// Reduced costs d = c - A'y: >= 0 at lower bound, <= 0 at upper bound,
// ~0 for basic/interior variables. At degenerate vertices the dual vector is
// not unique; downstream consumers that need an economically meaningful price
// must reconstruct it (see merit_order_price) instead of relying on y alone.

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace prosumeq::lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { less_equal, equal, greater_equal };

enum class SolveStatus { optimal, infeasible, unbounded, numerical_breakdown };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_breakdown: return "numerical_breakdown";
  }
  return "?";
}

struct LinearProgram {
  struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    double cost = 0.0;
  };
  struct Constraint {
    std::string name;
    Relation rel = Relation::equal;
    double rhs = 0.0;
    std::vector<int> idx;
    std::vector<double> val;
  };

  std::vector<Variable> vars;
  std::vector<Constraint> rows;
  double objective_offset = 0.0;  // constant term (e.g. fixed annual charges)

  int num_vars() const { return static_cast<int>(vars.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  int add_variable(std::string name, double lower, double upper, double cost) {
    if (std::isnan(lower) || std::isnan(upper) || !std::isfinite(cost))
      throw std::invalid_argument("variable " + name + ": non-finite bound or cost");
    if (lower > upper)
      throw std::invalid_argument("variable " + name + ": lower bound exceeds upper bound");
    if (!var_index_.emplace(name, num_vars()).second)
      throw std::invalid_argument("duplicate variable name " + name);
    vars.push_back({std::move(name), lower, upper, cost});
    return num_vars() - 1;
  }

  int add_constraint(std::string name, Relation rel, double rhs,
                     std::vector<int> idx, std::vector<double> val) {
    if (idx.size() != val.size())
      throw std::invalid_argument("constraint " + name + ": index/value size mismatch");
    if (!std::isfinite(rhs)) throw std::invalid_argument("constraint " + name + ": non-finite rhs");
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] < 0 || idx[k] >= num_vars())
        throw std::invalid_argument("constraint " + name + ": variable index out of range");
      if (!std::isfinite(val[k]))
        throw std::invalid_argument("constraint " + name + ": non-finite coefficient");
    }
    if (!row_index_.emplace(name, num_rows()).second)
      throw std::invalid_argument("duplicate constraint name " + name);
    rows.push_back({std::move(name), rel, rhs, std::move(idx), std::move(val)});
    return num_rows() - 1;
  }

  int variable_index(const std::string& name) const {
    auto it = var_index_.find(name);
    if (it == var_index_.end()) throw std::out_of_range("no variable named " + name);
    return it->second;
  }
  int constraint_index(const std::string& name) const {
    auto it = row_index_.find(name);
    if (it == row_index_.end()) throw std::out_of_range("no constraint named " + name);
    return it->second;
  }

 private:
  std::unordered_map<std::string, int> var_index_;
  std::unordered_map<std::string, int> row_index_;
};

struct LpSolution {
  SolveStatus status = SolveStatus::numerical_breakdown;
  double objective = 0.0;
  double dual_objective = 0.0;
  std::vector<double> x;             // per variable
  std::vector<double> y;             // per row
  std::vector<double> reduced_cost;  // per variable
  int iterations = 0;
  int refactorizations = 0;
  std::string message;
};

inline double row_activity(const LinearProgram::Constraint& row, const std::vector<double>& x) {
  double a = 0.0;
  for (std::size_t k = 0; k < row.idx.size(); ++k) a += row.val[k] * x[row.idx[k]];
  return a;
}

// Max scaled primal violation over row relations and variable bounds.
inline double primal_residual(const LinearProgram& lp, const LpSolution& sol) {
  double worst = 0.0;
  for (const auto& row : lp.rows) {
    const double a = row_activity(row, sol.x);
    double viol = 0.0;
    if (row.rel == Relation::equal) viol = std::fabs(a - row.rhs);
    else if (row.rel == Relation::less_equal) viol = std::max(0.0, a - row.rhs);
    else viol = std::max(0.0, row.rhs - a);
    worst = std::max(worst, viol / (1.0 + std::fabs(row.rhs)));
  }
  for (int j = 0; j < lp.num_vars(); ++j) {
    const auto& v = lp.vars[j];
    if (std::isfinite(v.lower))
      worst = std::max(worst, std::max(0.0, v.lower - sol.x[j]) / (1.0 + std::fabs(v.lower)));
    if (std::isfinite(v.upper))
      worst = std::max(worst, std::max(0.0, sol.x[j] - v.upper) / (1.0 + std::fabs(v.upper)));
  }
  return worst;
}

// Max scaled dual violation: reduced-cost consistency (d = c - A'y), its sign
// versus the active bound, and the sign of y versus each row relation.
inline double dual_residual(const LinearProgram& lp, const LpSolution& sol) {
  std::vector<double> aty(lp.num_vars(), 0.0);
  for (int i = 0; i < lp.num_rows(); ++i) {
    const auto& row = lp.rows[i];
    const double yi = sol.y[i];
    if (yi == 0.0) continue;
    for (std::size_t k = 0; k < row.idx.size(); ++k) aty[row.idx[k]] += yi * row.val[k];
  }
  double worst = 0.0;
  for (int i = 0; i < lp.num_rows(); ++i) {
    const auto& row = lp.rows[i];
    if (row.rel == Relation::less_equal) worst = std::max(worst, sol.y[i] / (1.0 + std::fabs(sol.y[i])));
    if (row.rel == Relation::greater_equal) worst = std::max(worst, -sol.y[i] / (1.0 + std::fabs(sol.y[i])));
  }
  for (int j = 0; j < lp.num_vars(); ++j) {
    const auto& v = lp.vars[j];
    const double d = v.cost - aty[j];
    const double scale = 1.0 + std::fabs(v.cost) + std::fabs(aty[j]);
    worst = std::max(worst, std::fabs(d - sol.reduced_cost[j]) / scale);
    if (v.lower == v.upper) continue;  // fixed: any sign admissible
    const double at_lower = std::isfinite(v.lower) ? sol.x[j] - v.lower : kInf;
    const double at_upper = std::isfinite(v.upper) ? v.upper - sol.x[j] : kInf;
    const double btol = 1e-7 * (1.0 + std::fabs(sol.x[j]));
    if (at_lower > btol && at_upper > btol) worst = std::max(worst, std::fabs(d) / scale);
    else if (at_lower <= btol && at_upper > btol) worst = std::max(worst, -d / scale);
    else if (at_upper <= btol && at_lower > btol) worst = std::max(worst, d / scale);
  }
  return worst;
}

// Max over complementary pairs of |multiplier x slack| / (1 + |multiplier| + |slack|).
inline double complementarity_residual(const LinearProgram& lp, const LpSolution& sol) {
  double worst = 0.0;
  for (int i = 0; i < lp.num_rows(); ++i) {
    const auto& row = lp.rows[i];
    if (row.rel == Relation::equal) continue;
    const double slack = std::fabs(row_activity(row, sol.x) - row.rhs);
    const double yi = std::fabs(sol.y[i]);
    worst = std::max(worst, yi * slack / (1.0 + yi + slack));
  }
  for (int j = 0; j < lp.num_vars(); ++j) {
    const auto& v = lp.vars[j];
    if (v.lower == v.upper) continue;
    const double d = sol.reduced_cost[j];
    // A positive reduced cost pairs with distance to the lower bound and a
    // negative one with distance to the upper bound.
    double gap = 0.0;
    if (d > 0.0 && std::isfinite(v.lower)) gap = sol.x[j] - v.lower;
    else if (d < 0.0 && std::isfinite(v.upper)) gap = v.upper - sol.x[j];
    const double ad = std::fabs(d), ag = std::fabs(gap);
    worst = std::max(worst, ad * ag / (1.0 + ad + ag));
  }
  return worst;
}

// Plain-text dump (see README for the format); intended for debugging small
// models, not for machine exchange.
inline void write_lp_text(const LinearProgram& lp, std::ostream& os) {
  auto num = [](double v) {
    if (v == kInf) return std::string("inf");
    if (v == -kInf) return std::string("-inf");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  os << "minimize\n  obj:";
  bool first = true;
  for (const auto& v : lp.vars) {
    if (v.cost == 0.0) continue;
    os << (first ? " " : " + ") << num(v.cost) << " " << v.name;
    first = false;
  }
  if (lp.objective_offset != 0.0) os << (first ? " " : " + ") << num(lp.objective_offset);
  os << "\nsubject to\n";
  for (const auto& row : lp.rows) {
    os << "  " << row.name << ":";
    for (std::size_t k = 0; k < row.idx.size(); ++k)
      os << (k == 0 ? " " : " + ") << num(row.val[k]) << " " << lp.vars[row.idx[k]].name;
    const char* rel = row.rel == Relation::equal ? "=" : (row.rel == Relation::less_equal ? "<=" : ">=");
    os << " " << rel << " " << num(row.rhs) << "\n";
  }
  os << "bounds\n";
  for (const auto& v : lp.vars) os << "  " << num(v.lower) << " <= " << v.name << " <= " << num(v.upper) << "\n";
  os << "end\n";
}

}  // namespace prosumeq::lp
