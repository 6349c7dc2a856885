#include "coord/statdetect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace coord::stat {

namespace {

constexpr std::uint64_t kPsiStream = 5;

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1)");
  }
}

}  // namespace

PsiSample sample_psi(const std::vector<ProbeSignal>& probes, Index M, const NoiseModel& noise,
                     Index L, std::uint64_t seed) {
  if (L < 1) throw Error(ErrorCode::InvalidArgument, "L must be >= 1");
  if (probes.empty() || M < 1) throw Error(ErrorCode::EmptyDataset, "need T >= 1 and M >= 1");
  const Index T = static_cast<Index>(probes.size());
  const Index N = probes.front().size();

  Matrix alpha(T, N);
  for (Index t = 0; t < T; ++t) alpha.row(t) = probes[static_cast<std::size_t>(t)].transpose();

  RngStream rng = rng_stream(seed, kPsiStream);
  PsiSample out;
  out.values.reserve(static_cast<std::size_t>(L));
  Matrix eps(T, N);
  for (Index l = 0; l < L; ++l) {
    double psi = T > 1 ? -std::numeric_limits<double>::infinity() : 0.0;
    for (Index i = 0; i < M; ++i) {
      for (Index t = 0; t < T; ++t) {
        for (Index n = 0; n < N; ++n) eps(t, n) = noise.sigma * rng.normal();
      }
      // cross(t, s) = alpha_t' eps_s, so alpha_t'(eps_t - eps_s) is
      // cross(t, t) - cross(t, s).
      const Matrix cross = alpha * eps.transpose();
      for (Index t = 0; t < T; ++t) {
        for (Index s = 0; s < T; ++s) {
          if (s != t) psi = std::max(psi, cross(t, t) - cross(t, s));
        }
      }
    }
    out.values.push_back(psi);
  }
  return out;
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) throw Error(ErrorCode::InvalidArgument, "empty sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const {
  const auto count = std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
  return static_cast<double>(count) / static_cast<double>(sorted_.size());
}

double EmpiricalCdf::tail_at_least(double x) const {
  const auto below = std::lower_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
  return 1.0 - static_cast<double>(below) / static_cast<double>(sorted_.size());
}

const char* to_string(Decision d) {
  return d == Decision::H0Coordinated ? "H0" : "H1";
}

DetectorVerdict decide(const NoisyDataset& data, double gamma, Index L, std::uint64_t seed) {
  check_gamma(gamma);
  const NoisyDataset valid = validate_dataset(data);
  DetectorVerdict v;
  v.gamma = gamma;
  v.relaxation = revpref::relaxation_statistic(valid.observed);
  v.phi_star = v.relaxation.overall;
  const PsiSample psi =
      sample_psi(valid.observed.probes, valid.observed.M(), valid.noise, L, seed);
  v.statistic = EmpiricalCdf(psi.values).tail_at_least(v.phi_star);
  v.decision = v.statistic > gamma ? Decision::H0Coordinated : Decision::H1NotCoordinated;
  return v;
}

double trial_statistic(const sim::ScenarioConfig& config, Index L, std::uint64_t seed,
                       Index trial) {
  RngStream keys = rng_stream(seed, static_cast<std::uint64_t>(trial));
  const std::uint64_t data_seed = keys.next_u64();
  const std::uint64_t psi_seed = keys.next_u64();
  const sim::SimulatedDataset ds = sim::generate_dataset(config, data_seed);
  const NoiseModel noise = config.noise.value_or(NoiseModel{});
  const NoisyDataset noisy = ds.noisy ? *ds.noisy : NoisyDataset{ds.clean, noise};
  // gamma does not affect the statistic.
  return decide(noisy, 0.5, L, psi_seed).statistic;
}

Type1Estimate type1_error_estimate(const sim::ScenarioConfig& config, double gamma, Index trials,
                                   std::uint64_t seed, Index L, int threads) {
  check_gamma(gamma);
  if (trials < 100) throw Error(ErrorCode::InvalidArgument, "need at least 100 trials");
  if (!config.noise) throw Error(ErrorCode::InvalidArgument, "config needs a noise model");
  sim::ScenarioConfig cfg = config;
  cfg.regime = sim::Regime::Coordinated;

  std::vector<double> stats(static_cast<std::size_t>(trials));
  parallel_for(trials, threads, [&](Index k) {
    stats[static_cast<std::size_t>(k)] = trial_statistic(cfg, L, seed, k);
  });
  Type1Estimate est;
  est.trials = trials;
  for (double s : stats) {
    if (!(s > gamma)) ++est.false_alarms;
  }
  est.rate = static_cast<double>(est.false_alarms) / static_cast<double>(trials);
  return est;
}

std::vector<SweepRow> sweep(const std::vector<double>& sigma_grid, const sim::ScenarioConfig& config,
                            std::uint64_t seed, Index trials, Index L, int threads) {
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  std::vector<SweepRow> rows;
  for (std::size_t g = 0; g < sigma_grid.size(); ++g) {
    for (sim::Regime regime : {sim::Regime::Coordinated, sim::Regime::Independent}) {
      sim::ScenarioConfig cfg = config;
      cfg.regime = regime;
      cfg.noise = NoiseModel{NoiseKind::IidGaussian, sigma_grid[g]};
      // Every (sigma, regime) cell draws from its own block of streams.
      const std::uint64_t cell_seed =
          rng_stream(seed, 2 * g + (regime == sim::Regime::Coordinated ? 0 : 1)).next_u64();

      std::vector<double> stats(static_cast<std::size_t>(trials));
      parallel_for(trials, threads, [&](Index k) {
        stats[static_cast<std::size_t>(k)] = trial_statistic(cfg, L, cell_seed, k);
      });
      const Eigen::Map<const Vector> s(stats.data(), trials);
      const double mean = s.mean();
      const double sd =
          trials > 1 ? std::sqrt((s.array() - mean).square().sum() / static_cast<double>(trials - 1))
                     : 0.0;
      rows.push_back({sigma_grid[g], regime, mean, sd, trials});
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "sigma,regime,mean_statistic,std_statistic,n_trials\n";
  for (const SweepRow& r : rows) {
    out << format_number(r.sigma) << ','
        << (r.regime == sim::Regime::Coordinated ? "H0" : "H1") << ','
        << format_number(r.mean_statistic) << ',' << format_number(r.std_statistic) << ','
        << r.n_trials << '\n';
  }
}

}  // namespace coord::stat
