#include "coord/core.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace coord {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::ZeroProbe: return "ZeroProbe";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::NonConcaveUtility: return "NonConcaveUtility";
    case ErrorCode::DidNotConverge: return "DidNotConverge";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::CertificateMismatch: return "CertificateMismatch";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::SingularInnovation: return "SingularInnovation";
    case ErrorCode::NotDetectable: return "NotDetectable";
    case ErrorCode::NotStabilizable: return "NotStabilizable";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ZeroTotalMass: return "ZeroTotalMass";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

bool operator==(const InteractionDataset& a, const InteractionDataset& b) {
  if (a.probes.size() != b.probes.size() || a.responses.size() != b.responses.size()) {
    return false;
  }
  for (std::size_t t = 0; t < a.probes.size(); ++t) {
    if (a.probes[t].size() != b.probes[t].size() || a.probes[t] != b.probes[t]) return false;
  }
  for (std::size_t t = 0; t < a.responses.size(); ++t) {
    if (a.responses[t].size() != b.responses[t].size()) return false;
    for (std::size_t i = 0; i < a.responses[t].size(); ++i) {
      if (a.responses[t][i].size() != b.responses[t][i].size() ||
          a.responses[t][i] != b.responses[t][i]) {
        return false;
      }
    }
  }
  return true;
}

namespace {

void check_shape(const InteractionDataset& d) {
  if (d.probes.empty() || d.responses.empty()) {
    throw Error(ErrorCode::EmptyDataset, "dataset needs T >= 1");
  }
  if (d.responses.size() != d.probes.size()) {
    throw Error(ErrorCode::DimensionMismatch, "responses must have one row per probe");
  }
  const std::size_t m = d.responses.front().size();
  if (m == 0) throw Error(ErrorCode::EmptyDataset, "dataset needs M >= 1");
  const Index n = d.probes.front().size();
  if (n == 0) throw Error(ErrorCode::DimensionMismatch, "signal dimension must be >= 1");
  for (std::size_t t = 0; t < d.probes.size(); ++t) {
    if (d.probes[t].size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "probe " + std::to_string(t) + " has length " +
                                                    std::to_string(d.probes[t].size()) +
                                                    ", expected " + std::to_string(n));
    }
    if (d.responses[t].size() != m) {
      throw Error(ErrorCode::DimensionMismatch, "epoch " + std::to_string(t) + " is ragged");
    }
    for (const auto& beta : d.responses[t]) {
      if (beta.size() != n) {
        throw Error(ErrorCode::DimensionMismatch,
                    "response at epoch " + std::to_string(t) + " has wrong length");
      }
    }
  }
}

void check_probes(const InteractionDataset& d) {
  for (std::size_t t = 0; t < d.probes.size(); ++t) {
    const Vector& a = d.probes[t];
    if (!a.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite probe entry");
    if ((a.array() < 0.0).any()) {
      throw Error(ErrorCode::NegativeEntry, "probe " + std::to_string(t) + " has a negative entry");
    }
    if (!(a.array() > 0.0).any()) {
      throw Error(ErrorCode::ZeroProbe, "probe " + std::to_string(t) + " is all zero");
    }
  }
}

}  // namespace

InteractionDataset validate_dataset(const InteractionDataset& raw) {
  check_shape(raw);
  check_probes(raw);
  for (std::size_t t = 0; t < raw.responses.size(); ++t) {
    for (const auto& beta : raw.responses[t]) {
      if (!beta.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite response entry");
      if ((beta.array() < 0.0).any()) {
        throw Error(ErrorCode::NegativeEntry,
                    "response at epoch " + std::to_string(t) + " has a negative entry");
      }
    }
  }
  return raw;
}

NoisyDataset validate_dataset(const NoisyDataset& raw) {
  check_shape(raw.observed);
  check_probes(raw.observed);
  for (const auto& row : raw.observed.responses) {
    for (const auto& beta : row) {
      if (!beta.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite response entry");
    }
  }
  if (!(raw.noise.sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  return raw;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

json to_array(const Vector& v) {
  json a = json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

Vector from_array(const json& a, const char* what) {
  if (!a.is_array()) throw Error(ErrorCode::ParseError, std::string(what) + " must be an array");
  Vector v(static_cast<Index>(a.size()));
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a[k].is_number()) throw Error(ErrorCode::ParseError, std::string(what) + " must hold numbers");
    v(static_cast<Index>(k)) = a[k].get<double>();
  }
  return v;
}

}  // namespace

std::string serialize_dataset(const DatasetDocument& doc) {
  const InteractionDataset& d = doc.data;
  json j;
  j["T"] = d.T();
  j["M"] = d.M();
  j["N"] = d.N();
  json probes = json::array();
  for (const auto& a : d.probes) probes.push_back(to_array(a));
  j["probes"] = std::move(probes);
  json responses = json::array();
  for (const auto& row : d.responses) {
    json r = json::array();
    for (const auto& beta : row) r.push_back(to_array(beta));
    responses.push_back(std::move(r));
  }
  j["responses"] = std::move(responses);
  if (doc.noise) {
    j["noise"] = {{"kind", "iid_gaussian"}, {"sigma", doc.noise->sigma}};
  } else {
    j["noise"] = nullptr;
  }
  return j.dump(1) + "\n";
}

DatasetDocument parse_dataset(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "dataset must be a JSON object");
  for (const char* key : {"T", "M", "N", "probes", "responses"}) {
    if (!j.contains(key)) throw Error(ErrorCode::ParseError, std::string("missing field ") + key);
  }
  if (!j["T"].is_number_integer() || !j["M"].is_number_integer() || !j["N"].is_number_integer()) {
    throw Error(ErrorCode::ParseError, "T, M, N must be integers");
  }
  const auto t_count = j["T"].get<long long>();
  const auto m_count = j["M"].get<long long>();
  const auto n_count = j["N"].get<long long>();
  if (t_count <= 0 || m_count <= 0) throw Error(ErrorCode::EmptyDataset, "T and M must be >= 1");

  DatasetDocument doc;
  const json& probes = j["probes"];
  const json& responses = j["responses"];
  if (!probes.is_array() || !responses.is_array()) {
    throw Error(ErrorCode::ParseError, "probes and responses must be arrays");
  }
  if (static_cast<long long>(probes.size()) != t_count ||
      static_cast<long long>(responses.size()) != t_count) {
    throw Error(ErrorCode::DimensionMismatch, "array lengths disagree with T");
  }
  for (const auto& a : probes) {
    doc.data.probes.push_back(from_array(a, "probe"));
    if (doc.data.probes.back().size() != n_count) {
      throw Error(ErrorCode::DimensionMismatch, "probe length disagrees with N");
    }
  }
  for (const auto& row : responses) {
    if (!row.is_array() || static_cast<long long>(row.size()) != m_count) {
      throw Error(ErrorCode::DimensionMismatch, "response row length disagrees with M");
    }
    std::vector<Maneuver> betas;
    for (const auto& b : row) {
      betas.push_back(from_array(b, "response"));
      if (betas.back().size() != n_count) {
        throw Error(ErrorCode::DimensionMismatch, "response length disagrees with N");
      }
    }
    doc.data.responses.push_back(std::move(betas));
  }
  if (j.contains("noise") && !j["noise"].is_null()) {
    const json& nz = j["noise"];
    if (!nz.is_object() || nz.value("kind", std::string()) != "iid_gaussian" ||
        !nz.contains("sigma") || !nz["sigma"].is_number()) {
      throw Error(ErrorCode::ParseError, "noise must be {\"kind\": \"iid_gaussian\", \"sigma\": x}");
    }
    NoiseModel noise;
    noise.sigma = nz["sigma"].get<double>();
    if (!(noise.sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
    doc.noise = noise;
  }
  return doc;
}

DatasetDocument load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

void save_dataset(const std::string& path, const DatasetDocument& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << serialize_dataset(doc);
}

// ---------------------------------------------------------------------------

SimplexWeights::SimplexWeights(Vector mu) : mu_(std::move(mu)) {
  if (mu_.size() == 0) throw Error(ErrorCode::InvalidArgument, "weights must be non-empty");
  if ((mu_.array() < 0.0).any() || !mu_.allFinite()) {
    throw Error(ErrorCode::NegativeEntry, "weights must be nonnegative");
  }
  if (std::abs(mu_.sum() - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "weights must sum to 1");
  }
}

SimplexWeights SimplexWeights::normalized(const Vector& raw) {
  if (raw.size() == 0 || (raw.array() < 0.0).any() || !(raw.sum() > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "weights need nonnegative entries and positive sum");
  }
  return SimplexWeights(raw / raw.sum());
}

SimplexWeights SimplexWeights::uniform(Index m) {
  return SimplexWeights(Vector::Constant(m, 1.0 / static_cast<double>(m)));
}

// ---------------------------------------------------------------------------

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x9e3779b9u};
  engine_.seed(seq);
}

double RngStream::uniform() { return unit_(engine_); }
double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
double RngStream::normal() { return gauss_(engine_); }
std::uint64_t RngStream::next_u64() { return engine_(); }

RngStream rng_stream(std::uint64_t seed, std::uint64_t stream_id) {
  return RngStream(seed, stream_id);
}

void parallel_for(Index count, int threads, const std::function<void(Index)>& fn) {
  if (count <= 0) return;
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  if (workers == 1) {
    for (Index k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (Index k = w; k < count; k += workers) fn(k);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

}  // namespace coord
