#include "coord/moo.hpp"

#include <gtest/gtest.h>

using namespace coord;
using moo::UtilitySpec;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

double spent(const std::vector<Maneuver>& betas, const Vector& probe) {
  Vector total = Vector::Zero(probe.size());
  for (const auto& b : betas) total += b;
  return probe.dot(total);
}

// A random concave power problem with N * M <= 4.
moo::ScalarizedProblem random_problem(std::uint64_t seed) {
  RngStream rng(seed, 21);
  const Index m = 1 + static_cast<Index>(rng.next_u64() % 2);
  moo::ScalarizedProblem p;
  for (Index i = 0; i < m; ++i) {
    const Vector e = v2(rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0));
    p.utilities.push_back(UtilitySpec::power(e, rng.uniform(0.3, 1.0) / e.sum()));
  }
  p.weights = SimplexWeights::normalized(Vector::NullaryExpr(m, [&] { return rng.uniform(0.2, 1.0); }));
  p.probe = v2(rng.uniform(0.1, 1.1), rng.uniform(0.1, 1.1));
  return p;
}

}  // namespace

TEST(Utility, DefaultUtilitiesAndConcavityFlags) {
  const auto us = moo::default_utilities();
  ASSERT_EQ(us.size(), 3u);
  const Vector b = v2(0.5, 0.8);
  EXPECT_NEAR(us[0](b), 0.25 * 0.64, 1e-12);
  EXPECT_NEAR(us[1](b), std::sqrt(0.5) * 0.8, 1e-12);
  EXPECT_NEAR(us[2](b), 0.5 * std::sqrt(0.8), 1e-12);
  // q * sum(p) is 4, 1.5 and 1.5: none of the three is concave.
  for (const auto& u : us) EXPECT_FALSE(u.is_concave());
  EXPECT_TRUE(UtilitySpec::power(v2(0.5, 0.5), 1.0).is_concave());
}

TEST(Utility, ZeroCoordinateGivesZero) {
  EXPECT_EQ(moo::default_utilities()[1](v2(0.0, 0.7)), 0.0);
}

TEST(Project, NearestBudgetPoint) {
  RngStream rng(5, 0);
  for (int k = 0; k < 200; ++k) {
    const Vector w = Vector::NullaryExpr(4, [&] { return rng.uniform(0.1, 2.0); });
    const Vector y = Vector::NullaryExpr(4, [&] { return rng.uniform(-1.0, 2.0); });
    const Vector z = moo::project_onto_budget(y, w);
    ASSERT_GE(z.minCoeff(), 0.0);
    ASSERT_LE(w.dot(z), 1.0 + 1e-12);
    // No random feasible point is closer.
    for (int s = 0; s < 50; ++s) {
      Vector q = Vector::NullaryExpr(4, [&] { return rng.uniform(); });
      q /= std::max(1.0, w.dot(q)) * 1.0000001;
      EXPECT_LE((y - z).norm(), (y - q).norm() + 1e-12);
    }
  }
}

TEST(Scalarized, SymmetricCobbDouglasSplitsBudget) {
  moo::ScalarizedProblem p{{UtilitySpec::power(v2(0.5, 0.5), 1.0)}, SimplexWeights::uniform(1), v2(1.0, 1.0)};
  const auto s = moo::solve_scalarized(p);
  EXPECT_NEAR(s.maneuvers[0](0), 0.5, 1e-5);
  EXPECT_NEAR(s.maneuvers[0](1), 0.5, 1e-5);
  const auto g = moo::grid_oracle(p, 1e-3);
  EXPECT_NEAR(g[0](0), 0.5, 1e-9);
  EXPECT_NEAR(g[0](1), 0.5, 1e-9);
}

TEST(Scalarized, SingleGoodSpendsEverythingOnIt) {
  const UtilitySpec f = UtilitySpec::custom([](const Vector& b) { return b(0); }, 2, "first");
  moo::ScalarizedProblem p{{f}, SimplexWeights::uniform(1), v2(2.0, 1.0)};
  const auto s = moo::solve_scalarized(p);
  EXPECT_NEAR(s.maneuvers[0](0), 0.5, 1e-6);
  EXPECT_NEAR(s.maneuvers[0](1), 0.0, 1e-6);
  const auto g = moo::grid_oracle(p, 1e-3);
  EXPECT_NEAR(g[0](0), 0.5, 1e-12);
  EXPECT_NEAR(g[0](1), 0.0, 1e-12);
}

TEST(Scalarized, DefaultConfigurationMatchesGridOracle) {
  moo::ScalarizedProblem p{moo::default_utilities(), SimplexWeights::uniform(3), v2(0.6, 0.8)};
  const auto s = moo::solve_scalarized(p);
  EXPECT_FALSE(s.warnings.empty());
  const double grid = moo::scalarized_objective(p, moo::grid_oracle(p, 1e-2));
  EXPECT_NEAR(s.objective, grid, 1e-4);
  EXPECT_LE(spent(s.maneuvers, p.probe), 1.0 + 1e-7);
  EXPECT_GE(spent(s.maneuvers, p.probe), 1.0 - 1e-4);
}

TEST(Scalarized, RejectsNonConcaveCustomUtility) {
  const UtilitySpec f = UtilitySpec::custom([](const Vector& b) { return b.squaredNorm(); }, 2, "bowl");
  moo::ScalarizedProblem p{{f}, SimplexWeights::uniform(1), v2(1.0, 1.0)};
  try {
    moo::solve_scalarized(p);
    FAIL() << "expected NonConcaveUtility";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonConcaveUtility);
  }
}

TEST(Scalarized, AgreesWithGridOracleOnRandomProblems) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const moo::ScalarizedProblem p = random_problem(seed);
    const auto s = moo::solve_scalarized(p);
    const double step = p.utilities.size() == 1 ? 1e-3 : 5e-3;
    const double grid = moo::scalarized_objective(p, moo::grid_oracle(p, step));
    // The solver must be at least as good as the grid, and not better than
    // the grid can resolve.
    EXPECT_GE(s.objective, grid - 1e-6) << "seed " << seed;
    EXPECT_LE(s.objective, grid + 1e-2) << "seed " << seed;
    EXPECT_LE(spent(s.maneuvers, p.probe), 1.0 + 1e-7);
    EXPECT_GE(spent(s.maneuvers, p.probe), 1.0 - 1e-4);
  }
}

TEST(Scalarized, OutputIsParetoOptimal) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const moo::ScalarizedProblem p = random_problem(seed);
    const auto s = moo::solve_scalarized(p);
    EXPECT_TRUE(moo::is_pareto_optimal(s.maneuvers, p.utilities, p.probe, 1e-2)) << "seed " << seed;
  }
  moo::ScalarizedProblem reference{moo::default_utilities(), SimplexWeights::uniform(3), v2(0.6, 0.8)};
  EXPECT_TRUE(moo::is_pareto_optimal(moo::solve_scalarized(reference).maneuvers, reference.utilities,
                                     reference.probe, 2e-2));
}

TEST(Pareto, ZeroAllocationIsDominated) {
  const auto us = moo::default_utilities();
  const std::vector<Maneuver> zero(3, Vector::Zero(2));
  EXPECT_FALSE(moo::is_pareto_optimal(zero, us, v2(0.6, 0.8), 5e-2));
}

TEST(Pareto, SoleBeneficiaryCorner) {
  // Agent 1 takes the whole budget; nobody can gain without agent 1 losing.
  const std::vector<UtilitySpec> us{UtilitySpec::power(v2(0.5, 0.5), 1.0),
                                    UtilitySpec::power(v2(0.5, 0.5), 1.0)};
  const std::vector<Maneuver> corner{v2(0.5, 0.5), Vector::Zero(2)};
  EXPECT_TRUE(moo::is_pareto_optimal(corner, us, v2(1.0, 1.0), 5e-2));
}

TEST(Scalarized, WeightMonotonicity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    moo::ScalarizedProblem p = random_problem(seed);
    if (p.utilities.size() < 2) continue;
    const double before = p.utilities[0](moo::solve_scalarized(p).maneuvers[0]);
    Vector mu = p.weights.mu();
    mu(0) *= 2.0;
    p.weights = SimplexWeights::normalized(mu);
    const double after = p.utilities[0](moo::solve_scalarized(p).maneuvers[0]);
    EXPECT_GE(after, before - 1e-6) << "seed " << seed;
  }
}

TEST(Grid, SingleGoodAndGuards) {
  moo::ScalarizedProblem p{{UtilitySpec::power(Vector::Ones(1), 1.0)}, SimplexWeights::uniform(1),
                           Vector::Ones(1)};
  EXPECT_NEAR(moo::grid_oracle(p, 0.1)[0](0), 1.0, 1e-12);
  moo::ScalarizedProblem big{moo::default_utilities(), SimplexWeights::uniform(3), Vector::Ones(3)};
  big.utilities = {UtilitySpec::power(Vector::Constant(3, 0.3), 1.0),
                   UtilitySpec::power(Vector::Constant(3, 0.3), 1.0),
                   UtilitySpec::power(Vector::Constant(3, 0.3), 1.0)};
  EXPECT_THROW(moo::grid_oracle(big, 0.1), Error);
}

TEST(Grid, RefinementConsistency) {
  moo::ScalarizedProblem p{{UtilitySpec::power(v2(0.5, 0.3), 1.0), UtilitySpec::power(v2(0.2, 0.6), 1.0)},
                           SimplexWeights::uniform(2), v2(0.7, 0.4)};
  const double coarse = moo::scalarized_objective(p, moo::grid_oracle(p, 1e-2));
  const double fine = moo::scalarized_objective(p, moo::grid_oracle(p, 2e-3));
  EXPECT_GE(fine, coarse - 1e-12);
  EXPECT_LE(fine - coarse, 0.1);
}
