#pragma once

#include "coord/core.hpp"
#include "coord/tracking/kalman.hpp"

#include <vector>

namespace coord::tracking {

/// n x (m + 1) 0/1 matrix; column 0 is "none of the targets" and is all ones.
using ValidationMatrix = Eigen::MatrixXi;

/// Every measurement may belong to every target.
ValidationMatrix full_validation(Index n, Index m);

/// Predicted measurement of one target and its innovation covariance.
struct PredictedMeasurement {
  Vector mean;
  Matrix cov;
};

inline constexpr double kDefaultGate = 9.21;  // chi-square 99%, 2 dof

/// omega(j, t) = 1 when the normalized innovation squared of measurement j
/// against target t is <= threshold.
ValidationMatrix gate(const std::vector<Vector>& measurements,
                      const std::vector<PredictedMeasurement>& predicted,
                      double threshold = kDefaultGate);

struct AssociationEvent {
  std::vector<Index> assignment;  // per measurement: 0 clutter, t >= 1 target t

  bool detects(Index target) const;  // target is 1-based
  Index false_count() const;
  Index measurement_of(Index target) const;  // -1 when undetected
};

/// Every feasible joint event allowed by omega: one source per measurement,
/// at most one measurement per target. Throws TooLarge past n or m = 8.
std::vector<AssociationEvent> enumerate_events(const ValidationMatrix& omega);

/// Prior on the number of false measurements.
class ClutterModel {
 public:
  /// Poisson with mean `expected_count` over the surveillance volume.
  static ClutterModel poisson(double expected_count, double volume);
  /// Uninformative: the count pmf is constant and drops out.
  static ClutterModel diffuse(double volume);
  static ClutterModel table(std::vector<double> pmf, double volume);

  double log_pmf(Index count) const;
  double volume() const { return volume_; }

 private:
  enum class Kind { Poisson, Diffuse, Table };
  Kind kind_ = Kind::Diffuse;
  double mean_ = 0.0;
  double volume_ = 1.0;
  std::vector<double> pmf_;
};

struct EventPosterior {
  std::vector<AssociationEvent> events;
  std::vector<double> probs;
};

/// Weights phi! mu_F(phi) V^-phi prod_j f_{t_j}(y_j)^{tau_j}
/// prod_t PD^delta (1 - PD)^(1 - delta), normalized. The 1/m_k! factor is
/// the same for every event and is left out.
EventPosterior event_posterior_uncoupled(const std::vector<AssociationEvent>& events,
                                         const std::vector<PredictedMeasurement>& predicted,
                                         const Vector& detection_prob, const ClutterModel& clutter,
                                         const std::vector<Vector>& measurements);

/// Same, with the target-originated measurements scored jointly under the
/// stacked predicted measurement N(stacked_mean, stacked_cov) so that
/// cross-covariances between targets count.
EventPosterior event_posterior_coupled(const std::vector<AssociationEvent>& events,
                                       const Vector& stacked_mean, const Matrix& stacked_cov,
                                       const Vector& detection_prob, const ClutterModel& clutter,
                                       const std::vector<Vector>& measurements);

/// psi(j, t) = P(measurement j belongs to t), n x (m + 1), t = 0 clutter.
Matrix association_probabilities(const EventPosterior& posterior, Index n, Index m);

/// Probability of the all-clutter event.
double all_clutter_probability(const EventPosterior& posterior);

/// Block-diagonal stacking of per-target beliefs and models.
GaussianBelief stack_beliefs(const std::vector<GaussianBelief>& beliefs);
GaussianBelief predict_stacked(const std::vector<LinearGaussianModel>& models,
                               const GaussianBelief& stacked);

/// Stacked C x and C P C' + R, including cross-target blocks.
PredictedMeasurement stacked_measurement(const std::vector<LinearGaussianModel>& models,
                                         const GaussianBelief& predicted);

/// Per-target slice of stacked_measurement.
std::vector<PredictedMeasurement> split_measurement(const PredictedMeasurement& stacked,
                                                    Index targets);

/// Coupled update of the stacked predicted belief:
///   x = x_pred + W nu,   nu_t = sum_j psi_jt (y_j - C_t x_t)
///   P = P_pred - (1 - psi_0) W S W' + W S~ W'
/// with W = P C^' (C^ P C^' + R^)^-1, C^ zeroing targets no measurement can
/// belong to, and S~ block diagonal with blocks
/// sum_j psi_jt nu_jt nu_jt' - nu_t nu_t'.
GaussianBelief jpdacf_update(const GaussianBelief& predicted, const EventPosterior& posterior,
                             const std::vector<LinearGaussianModel>& models,
                             const std::vector<Vector>& measurements);

/// Uncoupled per-target PDA update from the same association probabilities.
std::vector<GaussianBelief> pda_update(const std::vector<GaussianBelief>& predicted,
                                       const EventPosterior& posterior,
                                       const std::vector<LinearGaussianModel>& models,
                                       const std::vector<Vector>& measurements);

}  // namespace coord::tracking
