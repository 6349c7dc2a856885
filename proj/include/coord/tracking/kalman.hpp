#pragma once

#include "coord/core.hpp"

namespace coord::tracking {

/// x_{k+1} = A x_k + w_k, y_k = C x_k + v_k, w ~ N(0, Q), v ~ N(0, R).
struct LinearGaussianModel {
  Matrix A;
  Matrix C;
  Matrix Q;
  Matrix R;

  Index state_dim() const { return A.rows(); }
  Index meas_dim() const { return C.rows(); }
};

/// Q = diag(beta), R = diag(alpha)^-1 on top of the given A and C.
LinearGaussianModel spectral_model(const Matrix& A, const Matrix& C, const ProbeSignal& alpha,
                                   const Maneuver& beta);

void check_model(const LinearGaussianModel& model);

struct GaussianBelief {
  Vector mean;
  Matrix cov;
};

GaussianBelief predict(const LinearGaussianModel& model, const GaussianBelief& belief);

/// Measurement update of a predicted belief. Throws SingularInnovation when
/// C P C' + R is not positive definite.
GaussianBelief update(const LinearGaussianModel& model, const GaussianBelief& predicted,
                      const Vector& y);

/// predict followed by update.
GaussianBelief kalman_step(const LinearGaussianModel& model, const GaussianBelief& belief,
                           const Vector& y);

/// One step of the predicted-covariance recursion
/// A (S - S C'(C S C' + R)^-1 C S) A' + Q.
Matrix riccati_map(const LinearGaussianModel& model, const Matrix& sigma);

/// riccati_map(sigma) - sigma.
Matrix are_residual(const LinearGaussianModel& model, const Matrix& sigma);

/// Eigenvalue (PBH) tests on the modes with |lambda| >= 1.
bool is_detectable(const Matrix& A, const Matrix& C, double tol = 1e-9);
bool is_stabilizable(const Matrix& A, const Matrix& Q, double tol = 1e-9);

struct AreOptions {
  double tol = 1e-12;  // on successive iterates, relative to max(1, |S|max)
  long max_iterations = 100000;
  double residual_tol = 1e-9;
};

/// Steady-state predicted covariance by fixed-point iteration from Q.
Matrix solve_are(const LinearGaussianModel& model, const AreOptions& options = {});

/// Inverse of solve_are for the spectral model built from (alpha, beta).
Matrix precision(const ProbeSignal& alpha, const Maneuver& beta, const Matrix& A, const Matrix& C,
                 const AreOptions& options = {});

}  // namespace coord::tracking
