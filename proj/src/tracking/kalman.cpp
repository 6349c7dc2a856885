#include "coord/tracking/kalman.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <limits>

namespace coord::tracking {

namespace {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// (C S C' + R)^-1 as a Cholesky factorization.
Eigen::LLT<Matrix> innovation_factor(const LinearGaussianModel& model, const Matrix& sigma) {
  const Matrix S = symmetrized(model.C * sigma * model.C.transpose() + model.R);
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularInnovation, "innovation covariance is not positive definite");
  }
  return llt;
}

bool pbh_full_rank(const Matrix& A, const Matrix& B, bool stacked_rows, double tol) {
  const Index n = A.rows();
  Eigen::EigenSolver<Matrix> es(A, false);
  using CMatrix = Eigen::MatrixXcd;
  for (Index k = 0; k < n; ++k) {
    const std::complex<double> lambda = es.eigenvalues()(k);
    if (std::abs(lambda) < 1.0) continue;
    const CMatrix shifted = A.cast<std::complex<double>>() - lambda * CMatrix::Identity(n, n);
    CMatrix pencil;
    if (stacked_rows) {
      pencil.resize(n + B.rows(), n);
      pencil << shifted, B.cast<std::complex<double>>();
    } else {
      pencil.resize(n, n + B.cols());
      pencil << shifted, B.cast<std::complex<double>>();
    }
    Eigen::JacobiSVD<CMatrix> svd(pencil);
    const auto& sv = svd.singularValues();
    const double scale = std::max(1.0, sv(0));
    if (sv(sv.size() - 1) <= tol * scale || sv.size() < n) return false;
  }
  return true;
}

}  // namespace

LinearGaussianModel spectral_model(const Matrix& A, const Matrix& C, const ProbeSignal& alpha,
                                   const Maneuver& beta) {
  if (!(alpha.array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidParams, "alpha must be > 0 for R = diag(alpha)^-1");
  }
  if ((beta.array() < 0.0).any()) throw Error(ErrorCode::InvalidParams, "beta must be >= 0");
  LinearGaussianModel model{A, C, beta.asDiagonal(), alpha.cwiseInverse().asDiagonal()};
  check_model(model);
  return model;
}

void check_model(const LinearGaussianModel& m) {
  const Index n = m.A.rows();
  if (m.A.cols() != n || m.C.cols() != n || m.Q.rows() != n || m.Q.cols() != n ||
      m.R.rows() != m.C.rows() || m.R.cols() != m.C.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "model matrices have inconsistent shapes");
  }
}

GaussianBelief predict(const LinearGaussianModel& model, const GaussianBelief& belief) {
  return {model.A * belief.mean,
          symmetrized(model.A * belief.cov * model.A.transpose() + model.Q)};
}

GaussianBelief update(const LinearGaussianModel& model, const GaussianBelief& predicted,
                      const Vector& y) {
  if (y.size() != model.meas_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "measurement dimension");
  }
  const Eigen::LLT<Matrix> K = innovation_factor(model, predicted.cov);
  const Matrix PCt = predicted.cov * model.C.transpose();
  const Vector innovation = y - model.C * predicted.mean;
  GaussianBelief out;
  out.mean = predicted.mean + PCt * K.solve(innovation);
  out.cov = symmetrized(predicted.cov - PCt * K.solve(PCt.transpose()));
  return out;
}

GaussianBelief kalman_step(const LinearGaussianModel& model, const GaussianBelief& belief,
                           const Vector& y) {
  check_model(model);
  return update(model, predict(model, belief), y);
}

Matrix riccati_map(const LinearGaussianModel& model, const Matrix& sigma) {
  const Eigen::LLT<Matrix> K = innovation_factor(model, sigma);
  const Matrix SCt = sigma * model.C.transpose();
  const Matrix filtered = sigma - SCt * K.solve(SCt.transpose());
  return symmetrized(model.A * filtered * model.A.transpose() + model.Q);
}

Matrix are_residual(const LinearGaussianModel& model, const Matrix& sigma) {
  return riccati_map(model, sigma) - sigma;
}

bool is_detectable(const Matrix& A, const Matrix& C, double tol) {
  return pbh_full_rank(A, C, true, tol);
}

bool is_stabilizable(const Matrix& A, const Matrix& Q, double tol) {
  // range(Q) = range(sqrt(Q)) for PSD Q, so Q can stand in for its root.
  return pbh_full_rank(A, Q, false, tol);
}

Matrix solve_are(const LinearGaussianModel& model, const AreOptions& options) {
  check_model(model);
  if (!is_detectable(model.A, model.C)) {
    throw Error(ErrorCode::NotDetectable, "[A, C] is not detectable");
  }
  if (!is_stabilizable(model.A, model.Q)) {
    throw Error(ErrorCode::NotStabilizable, "[A, sqrt(Q)] is not stabilizable");
  }
  Matrix sigma = model.Q;
  // Past the relative stop, keep iterating while the step still shrinks so
  // large covariances are polished down to roundoff.
  bool settled = false;
  double last = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (long it = 0; it < options.max_iterations; ++it) {
    Matrix next = riccati_map(model, sigma);
    const double diff = (next - sigma).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
    sigma = std::move(next);
    if (diff < options.tol * scale) settled = true;
    if (settled) {
      stalled = diff < last ? 0 : stalled + 1;
      last = std::min(last, diff);
      if (diff >= options.tol && stalled < 3) continue;
      const double residual = are_residual(model, sigma).cwiseAbs().maxCoeff();
      if (residual >= options.residual_tol * scale) {
        throw Error(ErrorCode::NoConvergence,
                    "Riccati iteration stalled with residual " + format_number(residual));
      }
      return sigma;
    }
  }
  throw Error(ErrorCode::NoConvergence, "Riccati iteration hit the iteration cap");
}

Matrix precision(const ProbeSignal& alpha, const Maneuver& beta, const Matrix& A, const Matrix& C,
                 const AreOptions& options) {
  const Matrix sigma = solve_are(spectral_model(A, C, alpha, beta), options);
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidParams, "steady-state covariance is singular; precision is unbounded");
  }
  return symmetrized(llt.solve(Matrix::Identity(sigma.rows(), sigma.cols())));
}

}  // namespace coord::tracking
