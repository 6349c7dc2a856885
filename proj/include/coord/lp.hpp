#pragma once

#include "coord/core.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace coord::lp {

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Constraint {
  Vector coeffs;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// minimize objective'x subject to the rows and lower <= x <= upper.
/// Variables start free with a zero objective.
struct LinearProgram {
  Vector objective;
  std::vector<Constraint> constraints;
  Vector lower;
  Vector upper;

  explicit LinearProgram(Index num_vars)
      : objective(Vector::Zero(num_vars)),
        lower(Vector::Constant(num_vars, -kInf)),
        upper(Vector::Constant(num_vars, kInf)) {}

  Index num_vars() const { return objective.size(); }

  LinearProgram& add(Vector coeffs, Relation relation, double rhs) {
    constraints.push_back({std::move(coeffs), relation, rhs});
    return *this;
  }
};

enum class Status { Optimal, Feasible, Infeasible, Unbounded };

const char* to_string(Status status);

struct LpOutcome {
  Status status = Status::Infeasible;
  Vector x;      // set for Optimal and Feasible
  double value = 0.0;

  bool has_point() const { return status == Status::Optimal || status == Status::Feasible; }
};

struct SolverOptions {
  double feas_tol = 1e-7;
  double pivot_tol = 1e-9;
};

/// Dense two-phase simplex. Dantzig pricing, switching to Bland's rule after
/// 5 * (rows + cols) pivots in a phase. A zero objective is a pure feasibility
/// query and yields Feasible instead of Optimal.
///
/// Every returned point passes re-substitution: each row holds within
/// feas_tol * max(1, sum_j |a_j x_j|). A failed check triggers one re-solve
/// with the textbook ratio test. A feasibility query whose best point still
/// misses by at most 1e-4 is reported Infeasible; anything else throws
/// Error(NumericalBreakdown), as does running out of pivots. Set
/// COORD_LP_TRACE=1 to dump every tableau to stderr.
LpOutcome solve(const LinearProgram& lp, const SolverOptions& options = {});

/// Phase-1 wrapper: a witness point, or nullopt when the system is empty.
std::optional<Vector> feasible(const std::vector<Constraint>& constraints, const Vector& lower,
                               const Vector& upper, const SolverOptions& options = {});

/// Largest violation of any row or bound at x.
double max_violation(const LinearProgram& lp, const Vector& x);

}  // namespace coord::lp
