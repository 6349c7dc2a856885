#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coord {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Eigenvalues of the inverse measurement-noise covariance (radar probe) and
// of the state-noise covariance (agent maneuver).
using ProbeSignal = Vector;
using Maneuver = Vector;

enum class ErrorCode {
  DimensionMismatch,
  EmptyDataset,
  NegativeEntry,
  ZeroProbe,
  InvalidArgument,
  ParseError,
  NumericalBreakdown,
  NonConcaveUtility,
  DidNotConverge,
  TooLarge,
  CertificateMismatch,
  InvalidParams,
  SingularInnovation,
  NotDetectable,
  NotStabilizable,
  NoConvergence,
  ZeroTotalMass,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class NoiseKind { IidGaussian };

struct NoiseModel {
  NoiseKind kind = NoiseKind::IidGaussian;
  double sigma = 0.0;
};

/// Observed probes and per-agent responses, indexed probes[t] and
/// responses[t][i].
struct InteractionDataset {
  std::vector<ProbeSignal> probes;
  std::vector<std::vector<Maneuver>> responses;

  Index T() const { return static_cast<Index>(probes.size()); }
  Index M() const {
    return responses.empty() ? 0 : static_cast<Index>(responses.front().size());
  }
  Index N() const { return probes.empty() ? 0 : probes.front().size(); }

  friend bool operator==(const InteractionDataset& a, const InteractionDataset& b);
};

/// Responses are the noisy observations beta + eps.
struct NoisyDataset {
  InteractionDataset observed;
  NoiseModel noise;
};

/// What the dataset JSON file carries.
struct DatasetDocument {
  InteractionDataset data;
  std::optional<NoiseModel> noise;
};

/// Returns a copy of `raw` if every shape and sign invariant holds.
InteractionDataset validate_dataset(const InteractionDataset& raw);

/// Shape checks only on the responses: noisy observations may be negative.
NoisyDataset validate_dataset(const NoisyDataset& raw);

std::string serialize_dataset(const DatasetDocument& doc);
DatasetDocument parse_dataset(std::string_view json_text);
DatasetDocument load_dataset(const std::string& path);
void save_dataset(const std::string& path, const DatasetDocument& doc);

/// Nonnegative weights summing to one.
class SimplexWeights {
 public:
  SimplexWeights() = default;
  explicit SimplexWeights(Vector mu);

  /// Divides by the sum; the input must be nonnegative with positive sum.
  static SimplexWeights normalized(const Vector& raw);
  static SimplexWeights uniform(Index m);

  const Vector& mu() const { return mu_; }
  Index size() const { return mu_.size(); }
  double operator[](Index i) const { return mu_(i); }
  bool is_strict() const { return (mu_.array() > 0.0).all(); }

 private:
  Vector mu_;
};

/// Deterministic random stream keyed by (seed, stream_id).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  double uniform();
  double uniform(double lo, double hi);
  double normal();
  std::uint64_t next_u64();
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

RngStream rng_stream(std::uint64_t seed, std::uint64_t stream_id);

/// Runs fn(k) for k in [0, count) on up to `threads` workers. Results must be
/// written by index so output does not depend on scheduling.
void parallel_for(Index count, int threads, const std::function<void(Index)>& fn);

/// printf("%.9g"), the text format for every CSV and report number.
std::string format_number(double value);

}  // namespace coord
