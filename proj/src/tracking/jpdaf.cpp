#include "coord/tracking/jpdaf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace coord::tracking {

namespace {

constexpr Index kMaxEnumeration = 8;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_gaussian(const Vector& residual, const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularInnovation, "innovation covariance is not positive definite");
  }
  const Vector z = llt.matrixL().solve(residual);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double k = static_cast<double>(residual.size());
  return -0.5 * (z.squaredNorm() + log_det + k * std::log(2.0 * std::numbers::pi));
}

double log_or_neg_inf(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// Everything in the weight except the measurement likelihood.
double log_prior_terms(const AssociationEvent& e, const Vector& pd, const ClutterModel& clutter) {
  const Index phi = e.false_count();
  double w = std::lgamma(static_cast<double>(phi) + 1.0) + clutter.log_pmf(phi) -
             static_cast<double>(phi) * std::log(clutter.volume());
  for (Index t = 1; t <= pd.size(); ++t) {
    w += e.detects(t) ? log_or_neg_inf(pd(t - 1)) : log_or_neg_inf(1.0 - pd(t - 1));
  }
  return w;
}

EventPosterior normalize(const std::vector<AssociationEvent>& events, std::vector<double> logw) {
  const double top = logw.empty() ? kNegInf : *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(top)) {
    throw Error(ErrorCode::ZeroTotalMass, "every association event has zero weight");
  }
  double total = 0.0;
  for (double& w : logw) {
    w = std::exp(w - top);
    total += w;
  }
  for (double& w : logw) w /= total;
  return {events, std::move(logw)};
}

void check_probabilities(const Vector& pd) {
  if (!((pd.array() >= 0.0).all() && (pd.array() <= 1.0).all())) {
    throw Error(ErrorCode::InvalidParams, "detection probabilities must lie in [0, 1]");
  }
}

Index meas_dim_of(const std::vector<LinearGaussianModel>& models) {
  if (models.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one target");
  return models.front().meas_dim();
}

}  // namespace

ValidationMatrix full_validation(Index n, Index m) {
  return ValidationMatrix::Ones(n, m + 1);
}

ValidationMatrix gate(const std::vector<Vector>& measurements,
                      const std::vector<PredictedMeasurement>& predicted, double threshold) {
  const Index n = static_cast<Index>(measurements.size());
  const Index m = static_cast<Index>(predicted.size());
  ValidationMatrix omega = ValidationMatrix::Zero(n, m + 1);
  omega.col(0).setOnes();
  for (Index t = 0; t < m; ++t) {
    Eigen::LLT<Matrix> llt(predicted[static_cast<std::size_t>(t)].cov);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularInnovation, "innovation covariance is not positive definite");
    }
    for (Index j = 0; j < n; ++j) {
      const Vector r =
          measurements[static_cast<std::size_t>(j)] - predicted[static_cast<std::size_t>(t)].mean;
      if (r.dot(llt.solve(r)) <= threshold) omega(j, t + 1) = 1;
    }
  }
  return omega;
}

bool AssociationEvent::detects(Index target) const {
  return std::find(assignment.begin(), assignment.end(), target) != assignment.end();
}

Index AssociationEvent::false_count() const {
  return static_cast<Index>(std::count(assignment.begin(), assignment.end(), Index{0}));
}

Index AssociationEvent::measurement_of(Index target) const {
  const auto it = std::find(assignment.begin(), assignment.end(), target);
  return it == assignment.end() ? -1 : static_cast<Index>(it - assignment.begin());
}

std::vector<AssociationEvent> enumerate_events(const ValidationMatrix& omega) {
  const Index n = omega.rows();
  const Index m = omega.cols() - 1;
  if (m < 0) throw Error(ErrorCode::InvalidArgument, "validation matrix needs a clutter column");
  if (n > kMaxEnumeration || m > kMaxEnumeration) {
    throw Error(ErrorCode::TooLarge, "event enumeration is limited to n, m <= 8");
  }
  std::vector<AssociationEvent> events;
  std::vector<Index> assignment(static_cast<std::size_t>(n), 0);
  std::vector<char> taken(static_cast<std::size_t>(m + 1), 0);

  auto dfs = [&](auto&& self, Index j) -> void {
    if (j == n) {
      events.push_back({assignment});
      return;
    }
    for (Index t = 0; t <= m; ++t) {
      if (omega(j, t) == 0) continue;
      if (t > 0 && taken[static_cast<std::size_t>(t)]) continue;
      assignment[static_cast<std::size_t>(j)] = t;
      if (t > 0) taken[static_cast<std::size_t>(t)] = 1;
      self(self, j + 1);
      if (t > 0) taken[static_cast<std::size_t>(t)] = 0;
    }
  };
  dfs(dfs, 0);
  return events;
}

ClutterModel ClutterModel::poisson(double expected_count, double volume) {
  if (!(expected_count >= 0.0) || !(volume > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "Poisson clutter needs mean >= 0 and volume > 0");
  }
  ClutterModel c;
  c.kind_ = Kind::Poisson;
  c.mean_ = expected_count;
  c.volume_ = volume;
  return c;
}

ClutterModel ClutterModel::diffuse(double volume) {
  if (!(volume > 0.0)) throw Error(ErrorCode::InvalidParams, "volume must be > 0");
  ClutterModel c;
  c.kind_ = Kind::Diffuse;
  c.volume_ = volume;
  return c;
}

ClutterModel ClutterModel::table(std::vector<double> pmf, double volume) {
  if (!(volume > 0.0)) throw Error(ErrorCode::InvalidParams, "volume must be > 0");
  for (double p : pmf) {
    if (!(p >= 0.0)) throw Error(ErrorCode::InvalidParams, "pmf entries must be >= 0");
  }
  ClutterModel c;
  c.kind_ = Kind::Table;
  c.volume_ = volume;
  c.pmf_ = std::move(pmf);
  return c;
}

double ClutterModel::log_pmf(Index count) const {
  switch (kind_) {
    case Kind::Poisson:
      if (mean_ == 0.0) return count == 0 ? 0.0 : kNegInf;
      return -mean_ + static_cast<double>(count) * std::log(mean_) -
             std::lgamma(static_cast<double>(count) + 1.0);
    case Kind::Diffuse:
      return 0.0;
    case Kind::Table:
      return count < static_cast<Index>(pmf_.size())
                 ? log_or_neg_inf(pmf_[static_cast<std::size_t>(count)])
                 : kNegInf;
  }
  return kNegInf;
}

EventPosterior event_posterior_uncoupled(const std::vector<AssociationEvent>& events,
                                         const std::vector<PredictedMeasurement>& predicted,
                                         const Vector& detection_prob, const ClutterModel& clutter,
                                         const std::vector<Vector>& measurements) {
  check_probabilities(detection_prob);
  if (detection_prob.size() != static_cast<Index>(predicted.size())) {
    throw Error(ErrorCode::DimensionMismatch, "one detection probability per target");
  }
  const Index n = static_cast<Index>(measurements.size());
  const Index m = static_cast<Index>(predicted.size());
  // Likelihood table: log f_t(y_j).
  Matrix loglik(n, m);
  for (Index j = 0; j < n; ++j) {
    for (Index t = 0; t < m; ++t) {
      const PredictedMeasurement& p = predicted[static_cast<std::size_t>(t)];
      loglik(j, t) = log_gaussian(measurements[static_cast<std::size_t>(j)] - p.mean, p.cov);
    }
  }
  std::vector<double> logw;
  logw.reserve(events.size());
  for (const AssociationEvent& e : events) {
    double w = log_prior_terms(e, detection_prob, clutter);
    for (Index j = 0; j < n; ++j) {
      const Index t = e.assignment[static_cast<std::size_t>(j)];
      if (t > 0) w += loglik(j, t - 1);
    }
    logw.push_back(w);
  }
  return normalize(events, std::move(logw));
}

EventPosterior event_posterior_coupled(const std::vector<AssociationEvent>& events,
                                       const Vector& stacked_mean, const Matrix& stacked_cov,
                                       const Vector& detection_prob, const ClutterModel& clutter,
                                       const std::vector<Vector>& measurements) {
  check_probabilities(detection_prob);
  const Index m = detection_prob.size();
  if (m == 0 || stacked_mean.size() % m != 0) {
    throw Error(ErrorCode::DimensionMismatch, "stacked measurement does not split into targets");
  }
  const Index ny = stacked_mean.size() / m;
  const Index n = static_cast<Index>(measurements.size());

  std::vector<double> logw;
  logw.reserve(events.size());
  for (const AssociationEvent& e : events) {
    double w = log_prior_terms(e, detection_prob, clutter);
    std::vector<Index> js;
    for (Index j = 0; j < n; ++j) {
      if (e.assignment[static_cast<std::size_t>(j)] > 0) js.push_back(j);
    }
    if (!js.empty() && std::isfinite(w)) {
      const Index k = static_cast<Index>(js.size());
      Vector r(k * ny);
      Matrix S(k * ny, k * ny);
      for (Index a = 0; a < k; ++a) {
        const Index ta = e.assignment[static_cast<std::size_t>(js[static_cast<std::size_t>(a)])] - 1;
        r.segment(a * ny, ny) = measurements[static_cast<std::size_t>(js[static_cast<std::size_t>(a)])] -
                                stacked_mean.segment(ta * ny, ny);
        for (Index b = 0; b < k; ++b) {
          const Index tb =
              e.assignment[static_cast<std::size_t>(js[static_cast<std::size_t>(b)])] - 1;
          S.block(a * ny, b * ny, ny, ny) = stacked_cov.block(ta * ny, tb * ny, ny, ny);
        }
      }
      w += log_gaussian(r, S);
    }
    logw.push_back(w);
  }
  return normalize(events, std::move(logw));
}

Matrix association_probabilities(const EventPosterior& posterior, Index n, Index m) {
  Matrix psi = Matrix::Zero(n, m + 1);
  for (std::size_t k = 0; k < posterior.events.size(); ++k) {
    const auto& a = posterior.events[k].assignment;
    for (Index j = 0; j < n; ++j) psi(j, a[static_cast<std::size_t>(j)]) += posterior.probs[k];
  }
  return psi;
}

double all_clutter_probability(const EventPosterior& posterior) {
  double p = 0.0;
  for (std::size_t k = 0; k < posterior.events.size(); ++k) {
    const auto& a = posterior.events[k].assignment;
    if (std::all_of(a.begin(), a.end(), [](Index t) { return t == 0; })) p += posterior.probs[k];
  }
  return p;
}

GaussianBelief stack_beliefs(const std::vector<GaussianBelief>& beliefs) {
  Index total = 0;
  for (const auto& b : beliefs) total += b.mean.size();
  GaussianBelief s{Vector(total), Matrix::Zero(total, total)};
  Index off = 0;
  for (const auto& b : beliefs) {
    const Index d = b.mean.size();
    s.mean.segment(off, d) = b.mean;
    s.cov.block(off, off, d, d) = b.cov;
    off += d;
  }
  return s;
}

namespace {

Matrix block_diag(const std::vector<LinearGaussianModel>& models, Matrix LinearGaussianModel::*field) {
  Index rows = 0;
  Index cols = 0;
  for (const auto& md : models) {
    rows += (md.*field).rows();
    cols += (md.*field).cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Index r = 0;
  Index c = 0;
  for (const auto& md : models) {
    const Matrix& b = md.*field;
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace

GaussianBelief predict_stacked(const std::vector<LinearGaussianModel>& models,
                               const GaussianBelief& stacked) {
  const Matrix A = block_diag(models, &LinearGaussianModel::A);
  const Matrix Q = block_diag(models, &LinearGaussianModel::Q);
  const Matrix P = A * stacked.cov * A.transpose() + Q;
  return {A * stacked.mean, 0.5 * (P + P.transpose())};
}

PredictedMeasurement stacked_measurement(const std::vector<LinearGaussianModel>& models,
                                         const GaussianBelief& predicted) {
  const Matrix C = block_diag(models, &LinearGaussianModel::C);
  const Matrix R = block_diag(models, &LinearGaussianModel::R);
  const Matrix S = C * predicted.cov * C.transpose() + R;
  return {C * predicted.mean, 0.5 * (S + S.transpose())};
}

std::vector<PredictedMeasurement> split_measurement(const PredictedMeasurement& stacked,
                                                    Index targets) {
  const Index ny = stacked.mean.size() / targets;
  std::vector<PredictedMeasurement> out;
  for (Index t = 0; t < targets; ++t) {
    out.push_back({stacked.mean.segment(t * ny, ny), stacked.cov.block(t * ny, t * ny, ny, ny)});
  }
  return out;
}

GaussianBelief jpdacf_update(const GaussianBelief& predicted, const EventPosterior& posterior,
                             const std::vector<LinearGaussianModel>& models,
                             const std::vector<Vector>& measurements) {
  const Index m = static_cast<Index>(models.size());
  const Index ny = meas_dim_of(models);
  const Index n = static_cast<Index>(measurements.size());
  const Matrix psi = association_probabilities(posterior, n, m);
  const double psi0 = all_clutter_probability(posterior);

  std::vector<LinearGaussianModel> gated = models;
  Vector nu = Vector::Zero(m * ny);
  Matrix spread = Matrix::Zero(m * ny, m * ny);
  Index xoff = 0;
  for (Index t = 0; t < m; ++t) {
    const LinearGaussianModel& md = models[static_cast<std::size_t>(t)];
    const Index nx = md.state_dim();
    const Vector yhat = md.C * predicted.mean.segment(xoff, nx);
    Vector nu_t = Vector::Zero(ny);
    Matrix second = Matrix::Zero(ny, ny);
    for (Index j = 0; j < n; ++j) {
      const double p = psi(j, t + 1);
      if (p == 0.0) continue;
      const Vector r = measurements[static_cast<std::size_t>(j)] - yhat;
      nu_t += p * r;
      second += p * r * r.transpose();
    }
    if (psi.col(t + 1).sum() == 0.0) gated[static_cast<std::size_t>(t)].C.setZero();
    nu.segment(t * ny, ny) = nu_t;
    spread.block(t * ny, t * ny, ny, ny) = second - nu_t * nu_t.transpose();
    xoff += nx;
  }

  const Matrix Chat = block_diag(gated, &LinearGaussianModel::C);
  const Matrix Rhat = block_diag(gated, &LinearGaussianModel::R);
  const Matrix S = Chat * predicted.cov * Chat.transpose() + Rhat;
  Eigen::LLT<Matrix> llt(0.5 * (S + S.transpose()));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularInnovation, "stacked innovation covariance is singular");
  }
  const Matrix W = llt.solve(Chat * predicted.cov).transpose();

  GaussianBelief out;
  out.mean = predicted.mean + W * nu;
  const Matrix P = predicted.cov - (1.0 - psi0) * W * S * W.transpose() +
                   W * spread * W.transpose();
  out.cov = 0.5 * (P + P.transpose());
  return out;
}

std::vector<GaussianBelief> pda_update(const std::vector<GaussianBelief>& predicted,
                                       const EventPosterior& posterior,
                                       const std::vector<LinearGaussianModel>& models,
                                       const std::vector<Vector>& measurements) {
  const Index m = static_cast<Index>(models.size());
  const Index n = static_cast<Index>(measurements.size());
  const Matrix psi = association_probabilities(posterior, n, m);
  std::vector<GaussianBelief> out;
  for (Index t = 0; t < m; ++t) {
    const LinearGaussianModel& md = models[static_cast<std::size_t>(t)];
    const GaussianBelief& pb = predicted[static_cast<std::size_t>(t)];
    const Matrix S = md.C * pb.cov * md.C.transpose() + md.R;
    Eigen::LLT<Matrix> llt(0.5 * (S + S.transpose()));
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularInnovation, "innovation covariance is singular");
    }
    const Matrix W = llt.solve(md.C * pb.cov).transpose();
    const Vector yhat = md.C * pb.mean;
    Vector nu = Vector::Zero(md.meas_dim());
    Matrix second = Matrix::Zero(md.meas_dim(), md.meas_dim());
    double detected = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double p = psi(j, t + 1);
      if (p == 0.0) continue;
      const Vector r = measurements[static_cast<std::size_t>(j)] - yhat;
      nu += p * r;
      second += p * r * r.transpose();
      detected += p;
    }
    GaussianBelief b;
    b.mean = pb.mean + W * nu;
    const Matrix P = pb.cov - detected * W * S * W.transpose() +
                     W * (second - nu * nu.transpose()) * W.transpose();
    b.cov = 0.5 * (P + P.transpose());
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace coord::tracking
