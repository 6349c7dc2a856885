#include "coord/tracking/scenario.hpp"

#include "coord/tracking/jpdaf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace coord::tracking {

namespace {

constexpr Index kMaxGated = 8;

void check(const TrackScenario& s) {
  if (s.targets < 1 || s.targets > 8) {
    throw Error(ErrorCode::InvalidArgument, "targets must be in [1, 8]");
  }
  if (s.steps < 1) throw Error(ErrorCode::InvalidArgument, "steps must be >= 1");
  if (s.alpha.size() != 2 || s.beta.size() != 2) {
    throw Error(ErrorCode::DimensionMismatch, "tracking scenario is planar");
  }
  if (!(s.detection_prob >= 0.0 && s.detection_prob <= 1.0) || !(s.clutter_per_scan >= 0.0) ||
      !(s.margin > 0.0) || !(s.gate > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "bad detection, clutter or gate parameters");
  }
}

Vector draw(RngStream& rng, const Vector& variances) {
  Vector v(variances.size());
  for (Index i = 0; i < v.size(); ++i) v(i) = std::sqrt(variances(i)) * rng.normal();
  return v;
}

}  // namespace

FilterMode parse_filter_mode(const std::string& name) {
  if (name == "coupled") return FilterMode::Coupled;
  if (name == "uncoupled") return FilterMode::Uncoupled;
  throw Error(ErrorCode::InvalidArgument, "unknown filter '" + name + "'");
}

std::vector<TrackRow> run_tracking(const TrackScenario& s, std::uint64_t seed) {
  check(s);
  const Index m = s.targets;
  const Matrix I2 = Matrix::Identity(2, 2);
  const LinearGaussianModel model = spectral_model(I2, I2, s.alpha, s.beta);
  const std::vector<LinearGaussianModel> models(static_cast<std::size_t>(m), model);
  const Vector pd = Vector::Constant(m, s.detection_prob);
  const Vector rvar = s.alpha.cwiseInverse();

  RngStream truth_rng = rng_stream(seed, 0);
  RngStream meas_rng = rng_stream(seed, 1);

  std::vector<Vector> truth;
  std::vector<GaussianBelief> beliefs;
  for (Index t = 0; t < m; ++t) {
    Vector x(2);
    x << s.spacing * static_cast<double>(t), 0.0;
    truth.push_back(x);
    beliefs.push_back({x, model.R});
  }
  GaussianBelief stacked = stack_beliefs(beliefs);

  std::vector<TrackRow> rows;
  for (int k = 1; k <= s.steps; ++k) {
    for (auto& x : truth) x += draw(truth_rng, s.beta);

    Vector lo = truth.front();
    Vector hi = truth.front();
    for (const auto& x : truth) {
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
    lo.array() -= s.margin;
    hi.array() += s.margin;
    const double volume = (hi - lo).prod();

    std::vector<Vector> meas;
    for (const auto& x : truth) {
      if (meas_rng.uniform() < s.detection_prob) meas.push_back(x + draw(meas_rng, rvar));
    }
    std::poisson_distribution<int> count(s.clutter_per_scan);
    const int n_clutter = count(meas_rng.engine());
    for (int c = 0; c < n_clutter; ++c) {
      Vector z(2);
      z << meas_rng.uniform(lo(0), hi(0)), meas_rng.uniform(lo(1), hi(1));
      meas.push_back(z);
    }

    if (s.mode == FilterMode::Coupled) {
      stacked = predict_stacked(models, stacked);
    } else {
      for (auto& b : beliefs) b = predict(model, b);
      stacked = stack_beliefs(beliefs);
    }
    const PredictedMeasurement yhat = stacked_measurement(models, stacked);
    const std::vector<PredictedMeasurement> per_target = split_measurement(yhat, m);

    // Measurements outside every gate are clutter in every event; under the
    // Poisson prior they only contribute a common factor, so they are dropped.
    // If more than eight survive, the ones closest to some target are kept.
    ValidationMatrix omega = gate(meas, per_target, s.gate);
    std::vector<std::pair<double, Index>> closest;
    for (Index j = 0; j < omega.rows(); ++j) {
      if (omega.row(j).tail(m).sum() == 0) continue;
      double best = std::numeric_limits<double>::infinity();
      for (Index t = 0; t < m; ++t) {
        const Vector r = meas[static_cast<std::size_t>(j)] - per_target[static_cast<std::size_t>(t)].mean;
        best = std::min(best, r.dot(per_target[static_cast<std::size_t>(t)].cov.ldlt().solve(r)));
      }
      closest.emplace_back(best, j);
    }
    std::stable_sort(closest.begin(), closest.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    if (static_cast<Index>(closest.size()) > kMaxGated) closest.resize(kMaxGated);
    std::sort(closest.begin(), closest.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    std::vector<Vector> used;
    ValidationMatrix used_omega(static_cast<Index>(closest.size()), m + 1);
    for (std::size_t r = 0; r < closest.size(); ++r) {
      used.push_back(meas[static_cast<std::size_t>(closest[r].second)]);
      used_omega.row(static_cast<Index>(r)) = omega.row(closest[r].second);
    }

    const ClutterModel clutter = ClutterModel::poisson(s.clutter_per_scan, volume);
    const std::vector<AssociationEvent> events = enumerate_events(used_omega);
    if (s.mode == FilterMode::Coupled) {
      const EventPosterior post =
          event_posterior_coupled(events, yhat.mean, yhat.cov, pd, clutter, used);
      stacked = jpdacf_update(stacked, post, models, used);
    } else {
      const EventPosterior post = event_posterior_uncoupled(events, per_target, pd, clutter, used);
      beliefs = pda_update(beliefs, post, models, used);
      stacked = stack_beliefs(beliefs);
    }

    for (Index t = 0; t < m; ++t) {
      const Vector mean = stacked.mean.segment(2 * t, 2);
      const Matrix cov = stacked.cov.block(2 * t, 2 * t, 2, 2);
      const Vector err = truth[static_cast<std::size_t>(t)] - mean;
      rows.push_back({k, t, mean, cov.trace(), err.dot(cov.ldlt().solve(err))});
    }
  }
  return rows;
}

void write_track_csv(std::ostream& out, const std::vector<TrackRow>& rows) {
  const Index dim = rows.empty() ? 0 : rows.front().mean.size();
  out << "k,target";
  for (Index d = 0; d < dim; ++d) out << ",mean_" << d;
  out << ",cov_trace,nees\n";
  for (const TrackRow& r : rows) {
    out << r.k << ',' << r.target;
    for (Index d = 0; d < dim; ++d) out << ',' << format_number(r.mean(d));
    out << ',' << format_number(r.cov_trace) << ',' << format_number(r.nees) << '\n';
  }
}

}  // namespace coord::tracking
