#pragma once

#include "coord/core.hpp"
#include "coord/revpref.hpp"
#include "coord/sim.hpp"

#include <iosfwd>
#include <vector>

namespace coord::stat {

struct PsiSample {
  std::vector<double> values;
};

/// Psi = max over agents i and ordered epoch pairs t != s of
/// probe_t' (eps_t^i - eps_s^i), for L independent noise draws. T = 1 has no
/// pairs and gives Psi = 0.
PsiSample sample_psi(const std::vector<ProbeSignal>& probes, Index M, const NoiseModel& noise,
                     Index L, std::uint64_t seed);

class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> values);

  /// Fraction of samples <= x.
  double operator()(double x) const;
  /// Fraction of samples >= x. At a point mass this is 1, not 0.
  double tail_at_least(double x) const;

  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

enum class Decision { H0Coordinated, H1NotCoordinated };

const char* to_string(Decision d);

struct DetectorVerdict {
  double statistic = 0.0;  // tail mass of Psi at phi_star
  double gamma = 0.0;
  Decision decision = Decision::H1NotCoordinated;
  double phi_star = 0.0;
  revpref::RelaxationStatistic relaxation;  // holds the saved multipliers
};

inline constexpr Index kDefaultPsiDraws = 500;

/// Statistic = P_hat(Psi >= phi_star); H0 iff statistic > gamma.
DetectorVerdict decide(const NoisyDataset& data, double gamma, Index L, std::uint64_t seed);

/// Statistic for one generated dataset (noise taken from the dataset). Both
/// the dataset and the Psi draws are keyed by (seed, trial).
double trial_statistic(const sim::ScenarioConfig& config, Index L, std::uint64_t seed,
                       Index trial);

struct Type1Estimate {
  double rate = 0.0;
  Index false_alarms = 0;
  Index trials = 0;
};

/// Fraction of coordinated noisy datasets decided H1. `config.regime` is
/// forced to Coordinated and `config.noise` must be set.
Type1Estimate type1_error_estimate(const sim::ScenarioConfig& config, double gamma, Index trials,
                                   std::uint64_t seed, Index L = kDefaultPsiDraws,
                                   int threads = 1);

struct SweepRow {
  double sigma = 0.0;
  sim::Regime regime = sim::Regime::Coordinated;
  double mean_statistic = 0.0;
  double std_statistic = 0.0;
  Index n_trials = 0;
};

/// For each sigma, `trials` datasets per regime (H0 coordinated, H1
/// independent); the statistic's sample mean and standard deviation.
std::vector<SweepRow> sweep(const std::vector<double>& sigma_grid, const sim::ScenarioConfig& config,
                            std::uint64_t seed, Index trials = 300, Index L = kDefaultPsiDraws,
                            int threads = 1);

/// `sigma,regime,mean_statistic,std_statistic,n_trials` with regime H0 or H1.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace coord::stat
