#pragma once

#include "coord/core.hpp"

#include <string>

namespace coord::tracking {

enum class WaveformKind { TriangularCW, GaussianCW, GaussianLfmChirp };

WaveformKind parse_waveform_kind(const std::string& name);  // triangular | gaussian | chirp
const char* to_string(WaveformKind kind);

struct WaveformSpec {
  WaveformKind kind = WaveformKind::TriangularCW;
  double theta = 1.0;   // pulse width parameter (theta_1 for the chirp)
  double theta2 = 0.0;  // chirp rate, chirp only
  double carrier = 1.0; // omega_c, rad/s
  double snr = 1.0;     // eta
  double lightspeed = 299792458.0;
};

/// 2x2 range/range-rate measurement covariance of the waveform. The Gaussian
/// CW range term uses denominator 2 eta, the chirp's theta2 = 0 limit.
Matrix waveform_covariance(const WaveformSpec& spec);

/// Eigenvalues of R^-1, ascending: the probe signal the waveform realizes.
ProbeSignal waveform_probe(const Matrix& R);

}  // namespace coord::tracking
