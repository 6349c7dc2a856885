#pragma once

#include "coord/core.hpp"
#include "coord/lp.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace coord::revpref {

/// Utility levels u(t, i) and marginal utilities lambda(t, i), both T x M.
struct AfriatCertificate {
  Matrix u;
  Matrix lambda;
};

enum class Verdict { Coordinated, NotCoordinated };

struct DetectionResult {
  Verdict verdict = Verdict::NotCoordinated;
  std::optional<AfriatCertificate> certificate;

  bool coordinated() const { return verdict == Verdict::Coordinated; }
};

/// gaps(t, s) = probe_t' (beta_s^i - beta_t^i) for one agent.
Matrix expenditure_gaps(const InteractionDataset& data, Index agent);

/// Solves, for one agent, the relaxed inequalities
///   u_s - u_t - lambda_t (gaps(t, s) + phi) <= 0   for all s != t
/// with u >= 1 and lambda >= 1. phi = 0 is the exact test. Returns the
/// witness (u, lambda) stacked as [u; lambda], or nullopt.
std::optional<Vector> solve_agent_inequalities(const Matrix& gaps, double phi,
                                               const lp::SolverOptions& options = {});

/// Coordination test: feasibility of the inequalities for every agent.
DetectionResult detect_coordination(const InteractionDataset& data);

/// Largest violation of the inequalities (relaxed by phi) under `cert`.
double certificate_violation(const AfriatCertificate& cert, const InteractionDataset& data,
                             double phi = 0.0);

/// U(x) = min_t [u_t + lambda_t probe_t'(x - beta_t)] for one agent.
class RationalizingUtility {
 public:
  RationalizingUtility(Index agent, Vector u, Vector lambda, std::vector<ProbeSignal> probes,
                       std::vector<Maneuver> anchors);

  double operator()(const Vector& x) const;
  /// Index of the affine piece attaining the minimum at x (first on ties).
  Index active_piece(const Vector& x) const;

  Index agent() const { return agent_; }
  const Vector& levels() const { return u_; }
  const Vector& slopes() const { return lambda_; }

  /// `beta1,beta2,U` rows over [0, hi]^2 with `resolution` points per axis.
  /// Only defined for N = 2.
  void write_grid_csv(std::ostream& out, double hi, int resolution) const;

 private:
  Index agent_;
  Vector u_;
  Vector lambda_;
  Matrix gradients_;   // row t: lambda_t * probe_t'
  Vector intercepts_;  // u_t - lambda_t * probe_t' beta_t
};

/// Throws CertificateMismatch when shapes disagree or the certificate does not
/// satisfy the inequalities within 1e-6.
std::vector<RationalizingUtility> reconstruct_utilities(const AfriatCertificate& cert,
                                                        const InteractionDataset& data);

struct RelaxationStatistic {
  Vector per_agent;
  double overall = 0.0;
  AfriatCertificate multipliers;  // witness at each agent's minimal phi
};

/// Smallest uniform relaxation phi per agent, found by bisection on the LP
/// feasibility test (to 1e-8), and the max over agents.
RelaxationStatistic relaxation_statistic(const InteractionDataset& data);

}  // namespace coord::revpref
