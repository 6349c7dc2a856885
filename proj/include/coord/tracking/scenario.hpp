#pragma once

#include "coord/core.hpp"

#include <iosfwd>
#include <vector>

namespace coord::tracking {

enum class FilterMode { Coupled, Uncoupled };

FilterMode parse_filter_mode(const std::string& name);  // coupled | uncoupled

/// Planar random-walk targets (A = C = I) observed through clutter.
struct TrackScenario {
  Index targets = 2;
  int steps = 100;
  ProbeSignal alpha = Vector::Constant(2, 4.0);  // R = diag(alpha)^-1
  Maneuver beta = Vector::Constant(2, 0.01);     // Q = diag(beta)
  double spacing = 20.0;          // initial distance between neighbouring targets
  double detection_prob = 0.9;
  double clutter_per_scan = 1.0;  // Poisson mean over the surveillance box
  double margin = 10.0;           // box = target hull padded by this much
  double gate = 9.21;
  FilterMode mode = FilterMode::Coupled;
};

struct TrackRow {
  int k = 0;
  Index target = 0;
  Vector mean;
  double cov_trace = 0.0;
  double nees = 0.0;
};

/// Simulates truth, detections and uniform clutter, then runs the JPDA filter
/// from the true initial states. Stream 0 of `seed` drives truth, stream 1
/// the measurements.
std::vector<TrackRow> run_tracking(const TrackScenario& scenario, std::uint64_t seed);

void write_track_csv(std::ostream& out, const std::vector<TrackRow>& rows);

}  // namespace coord::tracking
