#include "coord/moo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace coord::moo {

namespace {

constexpr double kGradientCap = 1e6;
constexpr double kClamp = 1e-12;

void check_problem(const ScalarizedProblem& prob) {
  const Index m = static_cast<Index>(prob.utilities.size());
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "need at least one utility");
  if (prob.weights.size() != m) {
    throw Error(ErrorCode::DimensionMismatch, "weights length must equal the number of agents");
  }
  for (const auto& u : prob.utilities) {
    if (u.dim() != prob.probe.size()) {
      throw Error(ErrorCode::DimensionMismatch, "utility dimension must equal probe dimension");
    }
  }
  if (!(prob.probe.array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidArgument, "the budget is unbounded unless every probe entry is > 0");
  }
}

std::vector<Maneuver> split(const Vector& z, Index m, Index n) {
  std::vector<Maneuver> out;
  out.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) out.emplace_back(z.segment(i * n, n));
  return out;
}

// Random midpoint concavity probe over the budget box.
bool passes_midpoint_check(const UtilitySpec& u, const Vector& probe, std::uint64_t seed) {
  RngStream rng = rng_stream(seed, 0xC0C0);
  const Index n = probe.size();
  for (int k = 0; k < 200; ++k) {
    Vector a(n), b(n);
    for (Index j = 0; j < n; ++j) {
      a(j) = rng.uniform(0.0, 1.0 / probe(j));
      b(j) = rng.uniform(0.0, 1.0 / probe(j));
    }
    const double fa = u(a);
    const double fb = u(b);
    const double fm = u(0.5 * (a + b));
    if (fm < 0.5 * (fa + fb) - 1e-9 * (1.0 + std::abs(fa) + std::abs(fb))) return false;
  }
  return true;
}

}  // namespace

UtilitySpec UtilitySpec::power(Vector exponents, double outer_power) {
  if (exponents.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty exponent vector");
  if (!((exponents.array() > 0.0).all() && (exponents.array() <= 1.0).all())) {
    throw Error(ErrorCode::InvalidArgument, "power exponents must lie in (0, 1]");
  }
  if (!(outer_power > 0.0)) throw Error(ErrorCode::InvalidArgument, "outer power must be > 0");
  UtilitySpec u;
  u.kind_ = Kind::Power;
  u.dim_ = exponents.size();
  u.exponents_ = std::move(exponents);
  u.outer_power_ = outer_power;
  u.name_ = "power";
  return u;
}

UtilitySpec UtilitySpec::custom(std::function<double(const Vector&)> fn, Index dim,
                                std::string name) {
  if (!fn || dim <= 0) throw Error(ErrorCode::InvalidArgument, "custom utility needs fn and dim");
  UtilitySpec u;
  u.kind_ = Kind::Custom;
  u.dim_ = dim;
  u.fn_ = std::move(fn);
  u.name_ = std::move(name);
  return u;
}

double UtilitySpec::operator()(const Vector& beta) const {
  if (kind_ == Kind::Custom) return fn_(beta);
  double log_sum = 0.0;
  for (Index n = 0; n < dim_; ++n) {
    if (beta(n) <= 0.0) return 0.0;
    log_sum += exponents_(n) * std::log(beta(n));
  }
  return std::exp(outer_power_ * log_sum);
}

Vector UtilitySpec::gradient(const Vector& beta) const {
  Vector g(dim_);
  if (kind_ == Kind::Custom) {
    const double h = 1e-6;
    for (Index n = 0; n < dim_; ++n) {
      Vector up = beta;
      Vector down = beta;
      up(n) += h;
      down(n) = std::max(0.0, down(n) - h);
      g(n) = (fn_(up) - fn_(down)) / (up(n) - down(n));
    }
    return g;
  }
  const Vector clamped = beta.cwiseMax(kClamp);
  double log_sum = 0.0;
  for (Index n = 0; n < dim_; ++n) log_sum += exponents_(n) * std::log(clamped(n));
  const double value = std::exp(outer_power_ * log_sum);
  for (Index n = 0; n < dim_; ++n) {
    g(n) = std::min(outer_power_ * exponents_(n) * value / clamped(n), kGradientCap);
  }
  return g;
}

bool UtilitySpec::is_concave() const {
  if (kind_ == Kind::Custom) return true;
  return outer_power_ * exponents_.sum() <= 1.0 + 1e-12;
}

std::vector<UtilitySpec> default_utilities() {
  auto f1 = UtilitySpec::power(Vector::Ones(2), 2.0);
  Vector p2(2), p3(2);
  p2 << 0.5, 1.0;
  p3 << 1.0, 0.5;
  return {f1, UtilitySpec::power(p2, 1.0), UtilitySpec::power(p3, 1.0)};
}

double scalarized_objective(const ScalarizedProblem& prob, const std::vector<Maneuver>& betas) {
  double total = 0.0;
  for (std::size_t i = 0; i < prob.utilities.size(); ++i) {
    total += prob.weights[static_cast<Index>(i)] * prob.utilities[i](betas[i]);
  }
  return total;
}

Vector project_onto_budget(const Vector& y, const Vector& w) {
  Vector clipped = y.cwiseMax(0.0);
  if (w.dot(clipped) <= 1.0) return clipped;
  // Find tau > 0 with sum_k w_k max(0, y_k - tau w_k) = 1. The left side is
  // piecewise linear and decreasing; breakpoints are y_k / w_k.
  const Index n = y.size();
  std::vector<Index> order;
  for (Index k = 0; k < n; ++k) {
    if (y(k) > 0.0) order.push_back(k);
  }
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return y(a) / w(a) > y(b) / w(b); });
  double sum_wy = 0.0;
  double sum_ww = 0.0;
  double tau = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Index k = order[r];
    sum_wy += w(k) * y(k);
    sum_ww += w(k) * w(k);
    tau = (sum_wy - 1.0) / sum_ww;
    const double next = r + 1 < order.size() ? y(order[r + 1]) / w(order[r + 1]) : 0.0;
    if (tau >= next) break;
  }
  Vector z = (y - tau * w).cwiseMax(0.0);
  // Guard against rounding pushing the budget a hair above 1.
  const double spent = w.dot(z);
  if (spent > 1.0) z /= spent;
  return z;
}

ScalarizedSolution solve_scalarized(const ScalarizedProblem& prob,
                                    const ScalarizedOptions& options) {
  check_problem(prob);
  if (!prob.weights.is_strict()) {
    throw Error(ErrorCode::InvalidArgument, "scalarized solve needs strictly positive weights");
  }
  const Index m = static_cast<Index>(prob.utilities.size());
  const Index n = prob.probe.size();
  ScalarizedSolution result;

  for (std::size_t i = 0; i < prob.utilities.size(); ++i) {
    const UtilitySpec& u = prob.utilities[i];
    if (u.kind() == UtilitySpec::Kind::Custom) {
      if (!passes_midpoint_check(u, prob.probe, options.seed + i)) {
        throw Error(ErrorCode::NonConcaveUtility,
                    "utility " + std::to_string(i) + " failed the midpoint concavity check");
      }
    } else if (!u.is_concave()) {
      result.warnings.push_back("NonConcaveUtility: agent " + std::to_string(i) +
                                " power utility has q*sum(p) > 1; using multi-start");
    }
  }

  const Vector w = prob.probe.replicate(m, 1);
  auto objective = [&](const Vector& z) {
    double total = 0.0;
    for (Index i = 0; i < m; ++i) {
      total += prob.weights[i] * prob.utilities[static_cast<std::size_t>(i)](z.segment(i * n, n));
    }
    return total;
  };
  auto gradient = [&](const Vector& z) {
    Vector g(m * n);
    for (Index i = 0; i < m; ++i) {
      g.segment(i * n, n) =
          prob.weights[i] * prob.utilities[static_cast<std::size_t>(i)].gradient(z.segment(i * n, n));
    }
    return g;
  };

  // Near a zero allocation the sqrt-type gradients make the iterates crawl.
  // Try dropping each agent outright and rescaling the rest onto the budget;
  // keep it only if the objective does not get worse.
  auto drop_agents = [&](Vector& z, double& value) {
    bool dropped = false;
    for (Index i = 0; i < m; ++i) {
      if (z.segment(i * n, n).isZero(0.0)) continue;
      Vector trial = z;
      trial.segment(i * n, n).setZero();
      const double spent = w.dot(trial);
      if (spent <= 0.0) continue;
      trial /= spent;
      const double trial_value = objective(trial);
      if (trial_value >= value) {
        z = std::move(trial);
        value = trial_value;
        dropped = true;
      }
    }
    return dropped;
  };

  RngStream rng = rng_stream(options.seed, 0x5CA1);
  Vector best_z;
  double best_value = -std::numeric_limits<double>::infinity();
  bool any_converged = false;

  for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
    // Start on the binding budget: equal expenditure first, then random
    // Dirichlet(1) expenditure shares.
    Vector shares(m * n);
    if (restart == 0) {
      shares.setConstant(1.0 / static_cast<double>(m * n));
    } else {
      for (Index k = 0; k < m * n; ++k) shares(k) = -std::log(1.0 - rng.uniform());
      shares /= shares.sum();
    }
    Vector z = shares.cwiseQuotient(w);
    double value = objective(z);
    double step = 1.0;
    bool converged = false;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
      if (iter % 25 == 24 && drop_agents(z, value)) step = 1.0;
      const Vector g = gradient(z);
      Vector candidate;
      double candidate_value = 0.0;
      bool accepted = false;
      for (int backtrack = 0; backtrack < 60; ++backtrack) {
        candidate = project_onto_budget(z + step * g, w);
        candidate_value = objective(candidate);
        if (candidate_value >= value + 1e-4 * g.dot(candidate - z)) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        converged = true;
        break;
      }
      const double change = std::abs(candidate_value - value);
      z = std::move(candidate);
      value = candidate_value;
      step = std::min(step * 2.0, 1e6);
      if (change < options.tol * (1.0 + std::abs(value))) {
        converged = true;
        break;
      }
    }
    any_converged = any_converged || converged;
    drop_agents(z, value);

    if (value > best_value) {
      best_value = value;
      best_z = z;
    }
  }
  if (!any_converged) {
    throw Error(ErrorCode::DidNotConverge, "projected gradient ascent hit the iteration cap");
  }
  result.maneuvers = split(best_z, m, n);
  result.objective = best_value;
  return result;
}

namespace {

// Walks every composition of `units` into `parts` nonnegative integers in
// lexicographic order.
template <typename Visit>
void for_each_composition(Index parts, long units, Visit&& visit) {
  std::vector<long> e(static_cast<std::size_t>(parts), 0);
  std::function<void(Index, long)> rec = [&](Index k, long remaining) {
    if (k == parts - 1) {
      e[static_cast<std::size_t>(k)] = remaining;
      visit(e);
      return;
    }
    for (long v = 0; v <= remaining; ++v) {
      e[static_cast<std::size_t>(k)] = v;
      rec(k + 1, remaining - v);
    }
  };
  rec(0, units);
}

double composition_count(Index parts, long units) {
  // C(units + parts - 1, parts - 1)
  double c = 1.0;
  for (Index k = 1; k < parts; ++k) {
    c *= static_cast<double>(units + k) / static_cast<double>(k);
  }
  return c;
}

long grid_units(Index m, Index n, double step) {
  if (m * n > 6) throw Error(ErrorCode::TooLarge, "grid search needs N*M <= 6");
  if (!(step > 0.0) || step > 1.0) throw Error(ErrorCode::InvalidArgument, "step must be in (0, 1]");
  const long units = std::lround(1.0 / step);
  if (composition_count(m * n, units) > 4e8) {
    throw Error(ErrorCode::TooLarge, "grid has too many points at this step");
  }
  return units;
}

}  // namespace

std::vector<Maneuver> grid_oracle(const ScalarizedProblem& prob, double step) {
  check_problem(prob);
  const Index m = static_cast<Index>(prob.utilities.size());
  const Index n = prob.probe.size();
  const long units = grid_units(m, n, step);
  const double h = 1.0 / static_cast<double>(units);

  std::vector<Maneuver> point(static_cast<std::size_t>(m), Vector::Zero(n));
  std::vector<Maneuver> best;
  double best_value = -std::numeric_limits<double>::infinity();
  for_each_composition(m * n, units, [&](const std::vector<long>& e) {
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < n; ++j) {
        point[static_cast<std::size_t>(i)](j) =
            static_cast<double>(e[static_cast<std::size_t>(i * n + j)]) * h / prob.probe(j);
      }
    }
    const double value = scalarized_objective(prob, point);
    if (value > best_value) {
      best_value = value;
      best = point;
    }
  });
  return best;
}

bool is_pareto_optimal(const std::vector<Maneuver>& candidate,
                       const std::vector<UtilitySpec>& utilities, const ProbeSignal& probe,
                       double step) {
  const Index m = static_cast<Index>(utilities.size());
  if (static_cast<Index>(candidate.size()) != m) {
    throw Error(ErrorCode::DimensionMismatch, "candidate needs one maneuver per agent");
  }
  const Index n = probe.size();
  if (!(probe.array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidArgument, "probe entries must be > 0");
  }
  const long units = grid_units(m, n, step);
  const double h = 1.0 / static_cast<double>(units);

  Vector total = Vector::Zero(n);
  for (const auto& b : candidate) total += b;
  if (probe.dot(total) > 1.0 + 1e-9) return false;

  Vector base(m);
  for (Index i = 0; i < m; ++i) {
    base(i) = utilities[static_cast<std::size_t>(i)](candidate[static_cast<std::size_t>(i)]);
  }
  constexpr double kMargin = 1e-9;
  bool dominated = false;
  Vector point(n);
  for_each_composition(m * n, units, [&](const std::vector<long>& e) {
    if (dominated) return;
    bool strict = false;
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < n; ++j) {
        point(j) = static_cast<double>(e[static_cast<std::size_t>(i * n + j)]) * h / probe(j);
      }
      const double v = utilities[static_cast<std::size_t>(i)](point);
      if (v < base(i)) return;
      if (v > base(i) + kMargin) strict = true;
    }
    if (strict) dominated = true;
  });
  return !dominated;
}

}  // namespace coord::moo
