#include "coord/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <limits>

namespace coord::lp {

const char* to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "Optimal";
    case Status::Feasible: return "Feasible";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
  }
  return "Unknown";
}

namespace {

constexpr double kDriveOutTol = 1e-7;
constexpr double kHarrisSlack = 1e-10;
constexpr double kZeroInfeasibility = 1e-13;
constexpr double kTinyPivot = 1e-14;
constexpr double kNearFeasible = 1e-4;

bool trace_enabled() {
  static const bool enabled = [] {
    const char* v = std::getenv("COORD_LP_TRACE");
    return v != nullptr && std::strcmp(v, "1") == 0;
  }();
  return enabled;
}

// x_j = offset + sign * y[pos] - y[neg]
struct VarMap {
  Index pos = -1;
  Index neg = -1;
  double offset = 0.0;
  double sign = 1.0;
};

struct Row {
  Vector coeffs;
  Relation relation;
  double rhs;
};

class Tableau {
 public:
  Tableau(Index rows, Index cols) : tab_(Matrix::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  Index rows() const { return tab_.rows() - 1; }
  Index cols() const { return tab_.cols() - 1; }
  double& at(Index r, Index c) { return tab_(r, c); }
  double at(Index r, Index c) const { return tab_(r, c); }
  double& rhs(Index r) { return tab_(r, cols()); }
  double rhs(Index r) const { return tab_(r, cols()); }
  double& cost(Index c) { return tab_(rows(), c); }
  double cost(Index c) const { return tab_(rows(), c); }
  auto objective_row() { return tab_.row(rows()); }
  auto row(Index r) { return tab_.row(r); }
  Matrix constraint_block() const { return tab_.topRows(rows()); }
  std::vector<Index>& basis() { return basis_; }
  const std::vector<Index>& basis() const { return basis_; }

  void pivot(Index r, Index c) {
    tab_.row(r) /= tab_(r, c);
    Vector column = tab_.col(c);
    column(r) = 0.0;
    const Eigen::RowVectorXd pivot_row = tab_.row(r);
    tab_.noalias() -= column * pivot_row;
    tab_.col(c).setZero();
    tab_(r, c) = 1.0;
    basis_[static_cast<std::size_t>(r)] = c;
    if (trace_enabled()) {
      std::cerr << "[lp] pivot row " << r << " col " << c << "\n" << tab_ << "\n";
    }
  }

 private:
  Matrix tab_;
  std::vector<Index> basis_;
};

enum class PhaseResult { Optimal, Unbounded };

// `stop_at_zero`: phase 1 may stop as soon as the artificials sum to zero.
// `harris` off gives the textbook ratio test, used for the retry.
PhaseResult run_phase(Tableau& tab, const std::vector<char>& allowed, const SolverOptions& opt,
                      bool harris, bool stop_at_zero = false) {
  const Index m = tab.rows();
  const Index n = tab.cols();
  const long bland_after = 5 * static_cast<long>(m + n);
  const long max_pivots = 50 * static_cast<long>(m + n) + 1000;
  std::vector<char> is_basic(static_cast<std::size_t>(n), 0);
  for (Index b : tab.basis()) is_basic[static_cast<std::size_t>(b)] = 1;

  for (long pivots = 0;; ++pivots) {
    if (pivots > max_pivots) {
      throw Error(ErrorCode::NumericalBreakdown, "simplex pivot limit exceeded");
    }
    if (stop_at_zero && tab.rhs(m) >= -kZeroInfeasibility) return PhaseResult::Optimal;
    const bool bland = pivots >= bland_after;

    Index entering = -1;
    double best = -opt.pivot_tol;
    for (Index j = 0; j < n; ++j) {
      if (!allowed[static_cast<std::size_t>(j)] || is_basic[static_cast<std::size_t>(j)]) continue;
      const double d = tab.cost(j);
      if (d < best) {
        entering = j;
        if (bland) break;
        best = d;
      }
    }
    if (entering < 0) return PhaseResult::Optimal;

    // Harris two-pass ratio test: bound the step with rhs relaxed slightly,
    // then take the largest pivot among rows whose exact ratio fits under it.
    // Bland mode keeps the smallest basis index among the tied rows.
    // Without Harris every positive entry bounds the step: on a long step
    // even a sub-tolerance entry drives its row negative.
    const double slack = harris ? kHarrisSlack : 0.0;
    const double eligible = harris ? opt.pivot_tol : kTinyPivot;
    double bound = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i) {
      const double a = tab.at(i, entering);
      if (a > eligible) bound = std::min(bound, (std::max(tab.rhs(i), 0.0) + slack) / a);
    }
    if (!std::isfinite(bound)) return PhaseResult::Unbounded;
    Index leaving = -1;
    for (Index i = 0; i < m; ++i) {
      const double a = tab.at(i, entering);
      if (a <= eligible || std::max(tab.rhs(i), 0.0) / a > bound) continue;
      if (leaving < 0) {
        leaving = i;
        continue;
      }
      const auto& basis = tab.basis();
      const bool take = (bland || !harris) ? basis[static_cast<std::size_t>(i)] <
                                                 basis[static_cast<std::size_t>(leaving)]
                                           : a > tab.at(leaving, entering);
      if (take) leaving = i;
    }

    is_basic[static_cast<std::size_t>(tab.basis()[static_cast<std::size_t>(leaving)])] = 0;
    is_basic[static_cast<std::size_t>(entering)] = 1;
    tab.pivot(leaving, entering);
  }
}

void load_costs(Tableau& tab, const Vector& costs) {
  auto obj = tab.objective_row();
  obj.setZero();
  obj.head(costs.size()) = costs.transpose();
  for (Index i = 0; i < tab.rows(); ++i) {
    const Index b = tab.basis()[static_cast<std::size_t>(i)];
    const double cb = costs(b);
    if (cb != 0.0) obj -= cb * tab.row(i);
  }
}

// Row violation divided by max(1, sum_j |a_j x_j|), so witnesses with very
// large entries are judged at their own precision.
double scaled_violation(const LinearProgram& lp, const Vector& x) {
  double worst = 0.0;
  for (const Constraint& c : lp.constraints) {
    const double lhs = c.coeffs.dot(x);
    const double scale = std::max(1.0, c.coeffs.cwiseProduct(x).cwiseAbs().sum());
    double v = 0.0;
    switch (c.relation) {
      case Relation::LessEqual: v = lhs - c.rhs; break;
      case Relation::GreaterEqual: v = c.rhs - lhs; break;
      case Relation::Equal: v = std::abs(lhs - c.rhs); break;
    }
    worst = std::max(worst, v / scale);
  }
  for (Index j = 0; j < x.size(); ++j) {
    const double scale = std::max(1.0, std::abs(x(j)));
    worst = std::max(worst, (lp.lower(j) - x(j)) / scale);
    worst = std::max(worst, (x(j) - lp.upper(j)) / scale);
  }
  return worst;
}

}  // namespace

double max_violation(const LinearProgram& lp, const Vector& x) {
  double worst = 0.0;
  for (const Constraint& c : lp.constraints) {
    const double lhs = c.coeffs.dot(x);
    double v = 0.0;
    switch (c.relation) {
      case Relation::LessEqual: v = lhs - c.rhs; break;
      case Relation::GreaterEqual: v = c.rhs - lhs; break;
      case Relation::Equal: v = std::abs(lhs - c.rhs); break;
    }
    worst = std::max(worst, v);
  }
  for (Index j = 0; j < x.size(); ++j) {
    worst = std::max(worst, lp.lower(j) - x(j));
    worst = std::max(worst, x(j) - lp.upper(j));
  }
  return worst;
}

namespace {

// A point whose violation exceeds feas_tol is not a verified answer.
struct Attempt {
  LpOutcome outcome;
  double violation = 0.0;
};

Attempt solve_once(const LinearProgram& lp, const SolverOptions& opt, bool harris) {
  const Index nx = lp.num_vars();
  if (lp.lower.size() != nx || lp.upper.size() != nx) {
    throw Error(ErrorCode::DimensionMismatch, "bounds length must equal the number of variables");
  }
  for (const Constraint& c : lp.constraints) {
    if (c.coeffs.size() != nx) {
      throw Error(ErrorCode::DimensionMismatch, "constraint row length must equal variable count");
    }
  }
  for (Index j = 0; j < nx; ++j) {
    if (!(lp.lower(j) <= lp.upper(j)) || lp.lower(j) == kInf || lp.upper(j) == -kInf) {
      throw Error(ErrorCode::InvalidArgument, "variable bounds must satisfy lo <= hi");
    }
  }

  // Substitute bounded/free variables by nonnegative ones.
  std::vector<VarMap> vars(static_cast<std::size_t>(nx));
  Index ny = 0;
  std::vector<Row> rows;
  for (Index j = 0; j < nx; ++j) {
    VarMap& v = vars[static_cast<std::size_t>(j)];
    const double lo = lp.lower(j);
    const double hi = lp.upper(j);
    if (std::isfinite(lo)) {
      v.offset = lo;
      v.pos = ny++;
    } else if (std::isfinite(hi)) {
      v.offset = hi;
      v.sign = -1.0;
      v.pos = ny++;
    } else {
      v.pos = ny++;
      v.neg = ny++;
    }
  }
  auto map_row = [&](const Vector& a, double& constant) {
    Vector out = Vector::Zero(ny);
    constant = 0.0;
    for (Index j = 0; j < nx; ++j) {
      const VarMap& v = vars[static_cast<std::size_t>(j)];
      out(v.pos) += v.sign * a(j);
      if (v.neg >= 0) out(v.neg) -= a(j);
      constant += a(j) * v.offset;
    }
    return out;
  };
  for (const Constraint& c : lp.constraints) {
    double constant = 0.0;
    Vector coeffs = map_row(c.coeffs, constant);
    rows.push_back({std::move(coeffs), c.relation, c.rhs - constant});
  }
  for (Index j = 0; j < nx; ++j) {
    if (std::isfinite(lp.lower(j)) && std::isfinite(lp.upper(j))) {
      Vector coeffs = Vector::Zero(ny);
      coeffs(vars[static_cast<std::size_t>(j)].pos) = 1.0;
      rows.push_back({std::move(coeffs), Relation::LessEqual, lp.upper(j) - lp.lower(j)});
    }
  }

  // Equilibrate rows, drop empty ones, make every rhs nonnegative.
  std::vector<Row> kept;
  for (Row& r : rows) {
    const double scale = r.coeffs.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) {
      const bool ok = (r.relation == Relation::LessEqual && 0.0 <= r.rhs + opt.feas_tol) ||
                      (r.relation == Relation::GreaterEqual && 0.0 >= r.rhs - opt.feas_tol) ||
                      (r.relation == Relation::Equal && std::abs(r.rhs) <= opt.feas_tol);
      if (!ok) return {{Status::Infeasible, {}, 0.0}, 0.0};
      continue;
    }
    r.coeffs /= scale;
    r.rhs /= scale;
    if (r.rhs < 0.0) {
      r.coeffs = -r.coeffs;
      r.rhs = -r.rhs;
      if (r.relation == Relation::LessEqual) {
        r.relation = Relation::GreaterEqual;
      } else if (r.relation == Relation::GreaterEqual) {
        r.relation = Relation::LessEqual;
      }
    }
    kept.push_back(std::move(r));
  }

  const Index m = static_cast<Index>(kept.size());
  Index n_slack = 0;
  Index n_art = 0;
  for (const Row& r : kept) {
    if (r.relation != Relation::Equal) ++n_slack;
    if (r.relation != Relation::LessEqual) ++n_art;
  }
  const Index n_cols = ny + n_slack + n_art;
  const Index art_begin = ny + n_slack;

  Tableau tab(m, n_cols);
  {
    Index slack = ny;
    Index art = art_begin;
    for (Index i = 0; i < m; ++i) {
      const Row& r = kept[static_cast<std::size_t>(i)];
      tab.row(i).head(ny) = r.coeffs.transpose();
      tab.rhs(i) = r.rhs;
      switch (r.relation) {
        case Relation::LessEqual:
          tab.at(i, slack) = 1.0;
          tab.basis()[static_cast<std::size_t>(i)] = slack++;
          break;
        case Relation::GreaterEqual:
          tab.at(i, slack++) = -1.0;
          tab.at(i, art) = 1.0;
          tab.basis()[static_cast<std::size_t>(i)] = art++;
          break;
        case Relation::Equal:
          tab.at(i, art) = 1.0;
          tab.basis()[static_cast<std::size_t>(i)] = art++;
          break;
      }
    }
  }

  const Matrix initial = tab.constraint_block();
  std::vector<char> allowed(static_cast<std::size_t>(n_cols), 1);
  if (n_art > 0) {
    Vector phase1 = Vector::Zero(n_cols);
    phase1.tail(n_art).setOnes();
    load_costs(tab, phase1);
    run_phase(tab, allowed, opt, harris, true);
    const double infeasibility = -tab.rhs(m);
    if (infeasibility > opt.feas_tol) return {{Status::Infeasible, {}, 0.0}, 0.0};

    // Drive zero-level artificials out of the basis where possible. The
    // artificial sits within feas_tol of zero; zeroing it first keeps the
    // pivot degenerate, and tiny pivots are refused so nothing blows up.
    for (Index i = 0; i < m; ++i) {
      if (tab.basis()[static_cast<std::size_t>(i)] < art_begin) continue;
      Index best = -1;
      double best_abs = kDriveOutTol;
      for (Index j = 0; j < art_begin; ++j) {
        const double a = std::abs(tab.at(i, j));
        if (a > best_abs) {
          best_abs = a;
          best = j;
        }
      }
      if (best >= 0) {
        tab.rhs(i) = 0.0;
        tab.pivot(i, best);
      }
    }
    for (Index j = art_begin; j < n_cols; ++j) allowed[static_cast<std::size_t>(j)] = 0;
  }

  const bool pure_feasibility = (lp.objective.array() == 0.0).all();
  Vector costs = Vector::Zero(n_cols);
  double cost_constant = 0.0;
  costs.head(ny) = map_row(lp.objective, cost_constant);

  if (!pure_feasibility) {
    load_costs(tab, costs);
    if (run_phase(tab, allowed, opt, harris) == PhaseResult::Unbounded) {
      return {{Status::Unbounded, {}, 0.0}, 0.0};
    }
  }

  auto to_x = [&](const Vector& y) {
    Vector x(nx);
    for (Index j = 0; j < nx; ++j) {
      const VarMap& v = vars[static_cast<std::size_t>(j)];
      x(j) = v.offset + v.sign * y(v.pos) - (v.neg >= 0 ? y(v.neg) : 0.0);
    }
    return x;
  };
  Vector y = Vector::Zero(ny);
  for (Index i = 0; i < m; ++i) {
    const Index b = tab.basis()[static_cast<std::size_t>(i)];
    if (b < ny) y(b) = std::max(tab.rhs(i), 0.0);
  }
  Vector x = to_x(y);
  if (scaled_violation(lp, x) > opt.feas_tol && m > 0) {
    // The rank-1 updates drifted. Recompute the basic solution from the
    // original rows with the final basis.
    Matrix B(m, m);
    for (Index i = 0; i < m; ++i) B.col(i) = initial.col(tab.basis()[static_cast<std::size_t>(i)]);
    const Vector xb = B.colPivHouseholderQr().solve(initial.col(n_cols));
    Vector y2 = Vector::Zero(ny);
    for (Index i = 0; i < m; ++i) {
      const Index b = tab.basis()[static_cast<std::size_t>(i)];
      if (b < ny) y2(b) = std::max(xb(i), 0.0);
    }
    Vector x2 = to_x(y2);
    if (scaled_violation(lp, x2) < scaled_violation(lp, x)) x = std::move(x2);
  }
  const double violation = scaled_violation(lp, x);
  if (pure_feasibility) return {{Status::Feasible, std::move(x), 0.0}, violation};
  const double value = lp.objective.dot(x);
  return {{Status::Optimal, std::move(x), value}, violation};
}

}  // namespace

LpOutcome solve(const LinearProgram& lp, const SolverOptions& opt) {
  Attempt first = solve_once(lp, opt, true);
  if (first.violation <= opt.feas_tol) return std::move(first.outcome);
  // Harris steps can leave a basic variable slightly negative, and on badly
  // scaled rows later pivots blow that up. Redo the solve without them.
  Attempt second = solve_once(lp, opt, false);
  if (second.violation <= opt.feas_tol) return std::move(second.outcome);
  const double violation = std::min(first.violation, second.violation);
  // Phase 1 reached zero but no point honours the rows: the region is empty
  // or thinner than roundoff. Only a verified point counts as feasible.
  if (first.outcome.status == Status::Feasible && violation <= kNearFeasible) {
    return {Status::Infeasible, {}, 0.0};
  }
  throw Error(ErrorCode::NumericalBreakdown,
              "simplex point violates a row by " + format_number(violation) + " (relative)");
}

std::optional<Vector> feasible(const std::vector<Constraint>& constraints, const Vector& lower,
                               const Vector& upper, const SolverOptions& options) {
  LinearProgram lp(lower.size());
  lp.constraints = constraints;
  lp.lower = lower;
  lp.upper = upper;
  LpOutcome out = solve(lp, options);
  if (!out.has_point()) return std::nullopt;
  return std::move(out.x);
}

}  // namespace coord::lp
