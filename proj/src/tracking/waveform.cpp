#include "coord/tracking/waveform.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace coord::tracking {

WaveformKind parse_waveform_kind(const std::string& name) {
  if (name == "triangular") return WaveformKind::TriangularCW;
  if (name == "gaussian") return WaveformKind::GaussianCW;
  if (name == "chirp") return WaveformKind::GaussianLfmChirp;
  throw Error(ErrorCode::InvalidParams, "unknown waveform kind '" + name + "'");
}

const char* to_string(WaveformKind kind) {
  switch (kind) {
    case WaveformKind::TriangularCW: return "triangular";
    case WaveformKind::GaussianCW: return "gaussian";
    case WaveformKind::GaussianLfmChirp: return "chirp";
  }
  return "unknown";
}

Matrix waveform_covariance(const WaveformSpec& s) {
  if (!(s.theta > 0.0) || !(s.snr > 0.0) || !(s.carrier > 0.0) || !(s.lightspeed > 0.0) ||
      !std::isfinite(s.theta2)) {
    throw Error(ErrorCode::InvalidParams, "waveform needs theta, eta, omega_c, c > 0");
  }
  const double c2 = s.lightspeed * s.lightspeed;
  const double w2 = s.carrier * s.carrier;
  const double th2 = s.theta * s.theta;
  Matrix R = Matrix::Zero(2, 2);
  switch (s.kind) {
    case WaveformKind::TriangularCW:
      R(0, 0) = c2 * th2 / (12.0 * s.snr);
      R(1, 1) = 5.0 * c2 / (2.0 * w2 * th2 * s.snr);
      break;
    case WaveformKind::GaussianCW:
      R(0, 0) = c2 * th2 / (2.0 * s.snr);
      R(1, 1) = c2 / (2.0 * w2 * th2 * s.snr);
      break;
    case WaveformKind::GaussianLfmChirp:
      R(0, 0) = c2 * th2 / (2.0 * s.snr);
      R(0, 1) = R(1, 0) = -c2 * s.theta2 * th2 / (s.carrier * s.snr);
      R(1, 1) = c2 / (w2 * s.snr) * (1.0 / (2.0 * th2) + 2.0 * s.theta2 * s.theta2 * th2);
      break;
  }
  return R;
}

ProbeSignal waveform_probe(const Matrix& R) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(R);
  if (es.info() != Eigen::Success || !(es.eigenvalues().array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidParams, "measurement covariance must be positive definite");
  }
  Vector alpha = es.eigenvalues().cwiseInverse();
  std::sort(alpha.data(), alpha.data() + alpha.size());
  return alpha;
}

}  // namespace coord::tracking
