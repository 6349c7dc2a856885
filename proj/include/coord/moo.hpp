#pragma once

#include "coord/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace coord::moo {

/// Agent utility over R^N_+. The Power kind is f(b) = (prod_n b_n^p_n)^q.
class UtilitySpec {
 public:
  enum class Kind { Power, Custom };

  /// Requires 0 < p_n <= 1 and q > 0. Non-concave exponents are accepted and
  /// reported by is_concave().
  static UtilitySpec power(Vector exponents, double outer_power);

  /// `fn` is assumed continuous and monotone increasing; concavity is spot
  /// checked by the solver.
  static UtilitySpec custom(std::function<double(const Vector&)> fn, Index dim,
                            std::string name = "custom");

  double operator()(const Vector& beta) const;

  /// Power kind: analytic, with zero coordinates clamped and each component
  /// capped at 1e6. Custom kind: central differences.
  Vector gradient(const Vector& beta) const;

  Kind kind() const { return kind_; }
  Index dim() const { return dim_; }
  const std::string& name() const { return name_; }
  const Vector& exponents() const { return exponents_; }
  double outer_power() const { return outer_power_; }

  /// Power kind: q * sum(p) <= 1. Custom kind: always true here.
  bool is_concave() const;

 private:
  Kind kind_ = Kind::Power;
  Index dim_ = 0;
  std::string name_;
  Vector exponents_;
  double outer_power_ = 1.0;
  std::function<double(const Vector&)> fn_;
};

/// f1 = b1^2 b2^2, f2 = sqrt(b1) b2, f3 = b1 sqrt(b2).
std::vector<UtilitySpec> default_utilities();

struct ScalarizedProblem {
  std::vector<UtilitySpec> utilities;
  SimplexWeights weights;
  ProbeSignal probe;
};

struct ScalarizedOptions {
  double tol = 1e-10;
  int restarts = 10;
  std::uint64_t seed = 0;
  int max_iterations = 5000;
};

struct ScalarizedSolution {
  std::vector<Maneuver> maneuvers;
  double objective = 0.0;
  std::vector<std::string> warnings;
};

double scalarized_objective(const ScalarizedProblem& prob, const std::vector<Maneuver>& betas);

/// Projected gradient ascent on sum_i mu_i f_i(b_i) over
/// {b >= 0, probe'(sum_i b_i) <= 1}, best of `restarts` starts.
ScalarizedSolution solve_scalarized(const ScalarizedProblem& prob,
                                    const ScalarizedOptions& options = {});

/// Euclidean projection of y onto {z >= 0, w'z <= 1} for w > 0.
Vector project_onto_budget(const Vector& y, const Vector& w);

/// Exhaustive search over the binding budget at expenditure resolution `step`.
/// Ties go to the lexicographically smallest joint vector.
std::vector<Maneuver> grid_oracle(const ScalarizedProblem& prob, double step);

/// True iff no grid point on the budget weakly improves every agent and
/// improves one by more than 1e-9.
bool is_pareto_optimal(const std::vector<Maneuver>& candidate,
                       const std::vector<UtilitySpec>& utilities, const ProbeSignal& probe,
                       double step);

}  // namespace coord::moo
