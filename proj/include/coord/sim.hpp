#pragma once

#include "coord/core.hpp"
#include "coord/moo.hpp"

#include <optional>
#include <vector>

namespace coord::sim {

enum class Regime { Coordinated, Independent };

const char* to_string(Regime regime);

struct ScenarioConfig {
  Index M = 3;
  Index T = 10;
  Index N = 2;
  double probe_lo = 0.1;  // probes drawn from U[lo, hi]^N
  double probe_hi = 1.1;
  std::vector<moo::UtilitySpec> utilities;
  SimplexWeights weights;
  Regime regime = Regime::Coordinated;
  std::optional<NoiseModel> noise;
  int fast_steps = 100;
  Matrix A;  // fast-scale kinematics, N x N; empty means identity
  Matrix C;
  moo::ScalarizedOptions solver;
};

enum class ScenarioWeights {
  Normalized,  // (0.4, 0.4, 0.3) divided by 1.1
  Equal,
};

/// M = 3, T = 10, N = 2, probes on U[0.1, 1.1]^2 and the three power
/// utilities f1 = (b1 b2)^2, f2 = sqrt(b1) b2, f3 = b1 sqrt(b2).
ScenarioConfig default_scenario(ScenarioWeights weights = ScenarioWeights::Normalized);

void validate_config(const ScenarioConfig& cfg);

struct SimulatedDataset {
  InteractionDataset clean;
  std::optional<NoisyDataset> noisy;
  /// eps[t][i], the draws added to the clean responses (empty if no noise).
  std::vector<std::vector<Vector>> noise;

  /// What a detector observes: the noisy data if present, else the clean.
  const InteractionDataset& observed() const { return noisy ? noisy->observed : clean; }
  DatasetDocument document() const;
};

/// Random streams under `seed`: 0 probes, 1 per-epoch solver seeds,
/// 2 independent responses, 3 noise.
SimulatedDataset generate_dataset(const ScenarioConfig& cfg, std::uint64_t seed);

struct Trajectory {
  Matrix states;        // (K + 1) x N, row 0 is the initial state (zero)
  Matrix measurements;  // K x N, y_k = C x_k + v_k for k = 1..K
  Matrix process_noise; // K x N, the w_k draws
};

/// K steps of x_{k+1} = A x_k + w_k, y_k = C x_k + v_k per target with
/// w ~ N(0, diag(beta_i)) and v ~ N(0, diag(alpha)^-1). Target i uses stream
/// i of `seed`.
std::vector<Trajectory> simulate_fast_scale(const ScenarioConfig& cfg, const ProbeSignal& alpha,
                                            const std::vector<Maneuver>& betas, int K,
                                            std::uint64_t seed);

/// Moment estimate of beta from a trajectory with A = C = I:
/// var(y_k - y_{k-1}) = beta + 2 / alpha componentwise.
Maneuver estimate_maneuver(const Trajectory& traj, const ProbeSignal& alpha);

}  // namespace coord::sim
