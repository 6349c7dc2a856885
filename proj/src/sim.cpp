#include "coord/sim.hpp"

#include <cmath>

namespace coord::sim {

namespace {

constexpr std::uint64_t kProbeStream = 0;
constexpr std::uint64_t kEpochStream = 1;
constexpr std::uint64_t kResponseStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

Matrix or_identity(const Matrix& m, Index n) {
  return m.size() == 0 ? Matrix(Matrix::Identity(n, n)) : m;
}

}  // namespace

const char* to_string(Regime regime) {
  return regime == Regime::Coordinated ? "coordinated" : "independent";
}

ScenarioConfig default_scenario(ScenarioWeights weights) {
  ScenarioConfig cfg;
  cfg.utilities = moo::default_utilities();
  if (weights == ScenarioWeights::Normalized) {
    Vector raw(3);
    raw << 0.4, 0.4, 0.3;
    cfg.weights = SimplexWeights::normalized(raw);
  } else {
    cfg.weights = SimplexWeights::uniform(3);
  }
  return cfg;
}

void validate_config(const ScenarioConfig& cfg) {
  if (cfg.T <= 0 || cfg.M <= 0) throw Error(ErrorCode::EmptyDataset, "T and M must be >= 1");
  if (cfg.N <= 0) throw Error(ErrorCode::InvalidArgument, "N must be >= 1");
  if (!(cfg.probe_lo > 0.0) || !(cfg.probe_hi >= cfg.probe_lo)) {
    throw Error(ErrorCode::InvalidArgument, "probe box needs 0 < lo <= hi");
  }
  if (cfg.noise && !(cfg.noise->sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  }
  if (cfg.fast_steps < 1) throw Error(ErrorCode::InvalidArgument, "fast_steps must be >= 1");
  if (cfg.regime == Regime::Coordinated) {
    if (static_cast<Index>(cfg.utilities.size()) != cfg.M) {
      throw Error(ErrorCode::DimensionMismatch, "need one utility per agent");
    }
    if (cfg.weights.size() != cfg.M) {
      throw Error(ErrorCode::DimensionMismatch, "need one weight per agent");
    }
  }
  for (const Matrix* m : {&cfg.A, &cfg.C}) {
    if (m->size() != 0 && (m->rows() != cfg.N || m->cols() != cfg.N)) {
      throw Error(ErrorCode::DimensionMismatch, "A and C must be N x N");
    }
  }
}

DatasetDocument SimulatedDataset::document() const {
  if (noisy) return {noisy->observed, noisy->noise};
  return {clean, std::nullopt};
}

SimulatedDataset generate_dataset(const ScenarioConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  const auto T = static_cast<std::size_t>(cfg.T);
  const auto M = static_cast<std::size_t>(cfg.M);

  RngStream probe_rng = rng_stream(seed, kProbeStream);
  RngStream epoch_rng = rng_stream(seed, kEpochStream);
  RngStream response_rng = rng_stream(seed, kResponseStream);

  SimulatedDataset out;
  out.clean.probes.reserve(T);
  out.clean.responses.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    ProbeSignal alpha(cfg.N);
    for (Index n = 0; n < cfg.N; ++n) alpha(n) = probe_rng.uniform(cfg.probe_lo, cfg.probe_hi);
    const std::uint64_t epoch_seed = epoch_rng.next_u64();

    std::vector<Maneuver> betas;
    if (cfg.regime == Regime::Coordinated) {
      moo::ScalarizedOptions options = cfg.solver;
      options.seed = epoch_seed;
      betas = moo::solve_scalarized({cfg.utilities, cfg.weights, alpha}, options).maneuvers;
    } else {
      for (std::size_t i = 0; i < M; ++i) {
        Maneuver b(cfg.N);
        for (Index n = 0; n < cfg.N; ++n) b(n) = response_rng.uniform();
        betas.push_back(std::move(b));
      }
    }
    out.clean.probes.push_back(std::move(alpha));
    out.clean.responses.push_back(std::move(betas));
  }

  if (cfg.noise) {
    RngStream noise_rng = rng_stream(seed, kNoiseStream);
    NoisyDataset noisy{out.clean, *cfg.noise};
    out.noise.assign(T, std::vector<Vector>(M));
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < M; ++i) {
        Vector eps(cfg.N);
        for (Index n = 0; n < cfg.N; ++n) eps(n) = cfg.noise->sigma * noise_rng.normal();
        noisy.observed.responses[t][i] += eps;
        out.noise[t][i] = std::move(eps);
      }
    }
    out.noisy = std::move(noisy);
  }
  return out;
}

std::vector<Trajectory> simulate_fast_scale(const ScenarioConfig& cfg, const ProbeSignal& alpha,
                                            const std::vector<Maneuver>& betas, int K,
                                            std::uint64_t seed) {
  const Index n = alpha.size();
  if (K < 1) throw Error(ErrorCode::InvalidArgument, "K must be >= 1");
  if (!(alpha.array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidArgument, "alpha must be > 0 for R = diag(alpha)^-1");
  }
  const Matrix A = or_identity(cfg.A, n);
  const Matrix C = or_identity(cfg.C, n);
  if (A.rows() != n || C.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "A and C must match the probe dimension");
  }
  const Vector meas_sd = alpha.cwiseInverse().cwiseSqrt();

  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const Maneuver& beta = betas[i];
    if (beta.size() != n) throw Error(ErrorCode::DimensionMismatch, "beta dimension");
    if ((beta.array() < 0.0).any()) throw Error(ErrorCode::NegativeEntry, "beta must be >= 0");
    const Vector proc_sd = beta.cwiseSqrt();
    RngStream rng = rng_stream(seed, i);

    Trajectory traj{Matrix::Zero(K + 1, n), Matrix(K, C.rows()), Matrix(K, n)};
    Vector x = Vector::Zero(n);
    Vector w(n), v(C.rows());
    for (int k = 0; k < K; ++k) {
      for (Index j = 0; j < n; ++j) w(j) = proc_sd(j) * rng.normal();
      for (Index j = 0; j < C.rows(); ++j) v(j) = meas_sd(j % n) * rng.normal();
      x = A * x + w;
      traj.states.row(k + 1) = x.transpose();
      traj.process_noise.row(k) = w.transpose();
      traj.measurements.row(k) = (C * x + v).transpose();
    }
    out.push_back(std::move(traj));
  }
  return out;
}

Maneuver estimate_maneuver(const Trajectory& traj, const ProbeSignal& alpha) {
  const Index K = traj.measurements.rows();
  if (K < 3) throw Error(ErrorCode::InvalidArgument, "need at least 3 measurements");
  if (traj.measurements.cols() != alpha.size()) {
    throw Error(ErrorCode::DimensionMismatch, "measurement and probe dimensions differ");
  }
  const Matrix diffs =
      traj.measurements.bottomRows(K - 1) - traj.measurements.topRows(K - 1);
  const Vector mean = diffs.colwise().mean();
  const Vector var =
      (diffs.rowwise() - mean.transpose()).array().square().colwise().sum() /
      static_cast<double>(K - 2);
  return (var - 2.0 * alpha.cwiseInverse()).cwiseMax(0.0);
}

}  // namespace coord::sim
