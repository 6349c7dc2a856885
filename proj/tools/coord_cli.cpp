// coord: simulate, detect and analyse coordination in multi-agent radar data.
//
// Exit status: 0 success or coordinated / H0, 1 not coordinated / H1,
// 2 bad input or configuration.

#include "coord/core.hpp"
#include "coord/revpref.hpp"
#include "coord/sim.hpp"
#include "coord/statdetect.hpp"
#include "coord/tracking/scenario.hpp"
#include "coord/tracking/waveform.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using nlohmann::json;
using namespace coord;

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;
constexpr int kExitError = 2;

struct Globals {
  std::uint64_t seed = 0;
  std::string output;
  std::string format;
  int threads = 1;
};

// Rounds through the 9-significant-digit text form so JSON and CSV agree.
double r9(double x) { return std::stod(format_number(x)); }

json vec_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(r9(v(i)));
  return a;
}

json mat_json(const Matrix& m) {
  json a = json::array();
  for (Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

void emit(const Globals& g, const std::string& text) {
  if (g.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(g.output, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + g.output);
  out << text;
}

std::string format_or(const Globals& g, const std::string& fallback,
                      std::initializer_list<const char*> allowed) {
  const std::string f = g.format.empty() ? fallback : g.format;
  for (const char* a : allowed) {
    if (f == a) return f;
  }
  throw Error(ErrorCode::InvalidArgument, "format '" + f + "' is not available here");
}

sim::ScenarioConfig scenario(Index M, Index T, const std::string& weights) {
  sim::ScenarioConfig cfg =
      sim::default_scenario(weights == "equal" ? sim::ScenarioWeights::Equal : sim::ScenarioWeights::Normalized);
  if (weights != "equal" && weights != "normalized") {
    throw Error(ErrorCode::InvalidArgument, "weights must be normalized or equal");
  }
  if (M != cfg.M && M > 0) {
    // Other team sizes cycle through the three reference utilities.
    const auto base = cfg.utilities;
    cfg.utilities.clear();
    for (Index i = 0; i < M; ++i) cfg.utilities.push_back(base[static_cast<std::size_t>(i % 3)]);
    cfg.weights = SimplexWeights::uniform(M);
  }
  cfg.M = M;
  cfg.T = T;
  return cfg;
}

std::vector<double> parse_range(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      parts.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad range '" + spec + "'");
    }
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0]) {
    throw Error(ErrorCode::InvalidArgument, "range must be lo:step:hi with step > 0");
  }
  std::vector<double> grid;
  const auto count = static_cast<long>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9));
  for (long k = 0; k <= count; ++k) grid.push_back(parts[0] + static_cast<double>(k) * parts[1]);
  return grid;
}

int cmd_simulate(const Globals& g, const std::string& regime, Index M, Index T, double sigma,
                 const std::string& weights) {
  format_or(g, "json", {"json"});
  sim::ScenarioConfig cfg = scenario(M, T, weights);
  if (regime == "coordinated") {
    cfg.regime = sim::Regime::Coordinated;
  } else if (regime == "independent") {
    cfg.regime = sim::Regime::Independent;
  } else {
    throw Error(ErrorCode::InvalidArgument, "regime must be coordinated or independent");
  }
  if (sigma < 0.0) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  if (sigma > 0.0) cfg.noise = NoiseModel{NoiseKind::IidGaussian, sigma};
  emit(g, serialize_dataset(sim::generate_dataset(cfg, g.seed).document()));
  return kExitOk;
}

int cmd_detect(const Globals& g, const std::string& path) {
  const std::string fmt = format_or(g, "json", {"json", "csv"});
  const DatasetDocument doc = load_dataset(path);
  const revpref::DetectionResult res = revpref::detect_coordination(doc.data);
  const char* verdict = res.coordinated() ? "Coordinated" : "NotCoordinated";
  if (fmt == "csv") {
    emit(g, std::string("verdict\n") + verdict + "\n");
  } else {
    json j;
    j["verdict"] = verdict;
    j["T"] = doc.data.T();
    j["M"] = doc.data.M();
    if (res.certificate) {
      j["certificate"] = {{"u", mat_json(res.certificate->u)},
                          {"lambda", mat_json(res.certificate->lambda)}};
    } else {
      j["certificate"] = nullptr;
    }
    emit(g, j.dump(1) + "\n");
  }
  return res.coordinated() ? kExitOk : kExitNegative;
}

int cmd_reconstruct(const Globals& g, const std::string& path, int resolution, double hi) {
  format_or(g, "csv", {"csv"});
  if (resolution < 2) throw Error(ErrorCode::InvalidArgument, "resolution must be >= 2");
  if (!(hi > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid extent must be > 0");
  const DatasetDocument doc = load_dataset(path);
  if (doc.data.N() != 2) throw Error(ErrorCode::DimensionMismatch, "grids need N = 2");
  const revpref::DetectionResult res = revpref::detect_coordination(doc.data);
  if (!res.coordinated()) {
    std::cerr << "not coordinated: the inequalities are infeasible for some agent, "
                 "so no utilities rationalize the data\n";
    return kExitNegative;
  }
  const std::string prefix = g.output.empty() ? "utility" : g.output;
  for (const auto& U : revpref::reconstruct_utilities(*res.certificate, doc.data)) {
    const std::string file = prefix + "_agent" + std::to_string(U.agent() + 1) + ".csv";
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + file);
    U.write_grid_csv(out, hi, resolution);
    std::cout << file << "\n";
  }
  return kExitOk;
}

int cmd_stat_detect(const Globals& g, const std::string& path, double gamma, Index L,
                    std::optional<double> sigma) {
  const std::string fmt = format_or(g, "json", {"json", "csv"});
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be in (0, 1)");
  if (L < 1) throw Error(ErrorCode::InvalidArgument, "L must be >= 1");
  const DatasetDocument doc = load_dataset(path);
  NoiseModel noise = doc.noise.value_or(NoiseModel{});
  if (sigma) noise.sigma = *sigma;
  const NoisyDataset data = validate_dataset(NoisyDataset{doc.data, noise});
  const stat::DetectorVerdict v = stat::decide(data, gamma, L, g.seed);
  if (fmt == "csv") {
    emit(g, "statistic,gamma,decision,phi_star\n" + format_number(v.statistic) + "," +
                format_number(gamma) + "," + stat::to_string(v.decision) + "," +
                format_number(v.phi_star) + "\n");
  } else {
    json j;
    j["statistic"] = r9(v.statistic);
    j["gamma"] = r9(gamma);
    j["decision"] = stat::to_string(v.decision);
    j["phi_star"] = r9(v.phi_star);
    j["phi_per_agent"] = vec_json(v.relaxation.per_agent);
    j["L"] = L;
    j["sigma"] = r9(noise.sigma);
    emit(g, j.dump(1) + "\n");
  }
  return v.decision == stat::Decision::H0Coordinated ? kExitOk : kExitNegative;
}

int cmd_sweep(const Globals& g, const std::string& sigmas, Index trials, Index L,
              const std::string& weights) {
  const std::string fmt = format_or(g, "csv", {"csv", "json"});
  if (trials < 1 || L < 1) throw Error(ErrorCode::InvalidArgument, "trials and L must be >= 1");
  const std::vector<double> grid = parse_range(sigmas);
  for (double s : grid) {
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigmas must be > 0");
  }
  const auto rows = stat::sweep(grid, scenario(3, 10, weights), g.seed, trials, L, g.threads);
  if (fmt == "csv") {
    std::ostringstream out;
    stat::write_sweep_csv(out, rows);
    emit(g, out.str());
  } else {
    json a = json::array();
    for (const auto& r : rows) {
      a.push_back({{"sigma", r9(r.sigma)},
                   {"regime", r.regime == sim::Regime::Coordinated ? "H0" : "H1"},
                   {"mean_statistic", r9(r.mean_statistic)},
                   {"std_statistic", r9(r.std_statistic)},
                   {"n_trials", r.n_trials}});
    }
    emit(g, a.dump(1) + "\n");
  }
  return kExitOk;
}

int cmd_track(const Globals& g, tracking::TrackScenario s, const std::string& filter) {
  format_or(g, "csv", {"csv"});
  s.mode = tracking::parse_filter_mode(filter);
  std::ostringstream out;
  tracking::write_track_csv(out, tracking::run_tracking(s, g.seed));
  emit(g, out.str());
  return kExitOk;
}

int cmd_waveform(const Globals& g, const std::string& kind, tracking::WaveformSpec spec) {
  const std::string fmt = format_or(g, "json", {"json", "csv"});
  spec.kind = tracking::parse_waveform_kind(kind);
  const Matrix R = tracking::waveform_covariance(spec);
  const Vector alpha = tracking::waveform_probe(R);
  if (fmt == "csv") {
    std::string text = "r11,r12,r21,r22,alpha1,alpha2\n";
    text += format_number(R(0, 0)) + "," + format_number(R(0, 1)) + "," + format_number(R(1, 0)) +
            "," + format_number(R(1, 1)) + "," + format_number(alpha(0)) + "," +
            format_number(alpha(1)) + "\n";
    emit(g, text);
  } else {
    json j;
    j["kind"] = tracking::to_string(spec.kind);
    j["R"] = mat_json(R);
    j["alpha"] = vec_json(alpha);
    emit(g, j.dump(1) + "\n");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordination detection for radar-probed UAV networks"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("-o,--output", g.output, "Output file (reconstruct: file prefix)");
  app.add_option("--format", g.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::function<int()> run;

  auto* sim_cmd = app.add_subcommand("simulate", "Generate a dataset");
  std::string regime = "coordinated";
  std::string sim_weights = "normalized";
  Index M = 3;
  Index T = 10;
  double sigma = 0.0;
  sim_cmd->add_option("--regime", regime, "coordinated or independent")->capture_default_str();
  sim_cmd->add_option("--M", M, "Number of agents")->capture_default_str();
  sim_cmd->add_option("--T", T, "Number of epochs")->capture_default_str();
  sim_cmd->add_option("--sigma", sigma, "Observation noise std (0 = clean)")->capture_default_str();
  sim_cmd->add_option("--weights", sim_weights, "normalized or equal")->capture_default_str();
  sim_cmd->callback([&] { run = [&] { return cmd_simulate(g, regime, M, T, sigma, sim_weights); }; });

  std::string dataset;
  auto* det_cmd = app.add_subcommand("detect", "Deterministic coordination test");
  det_cmd->add_option("dataset", dataset, "Dataset JSON")->required();
  det_cmd->callback([&] { run = [&] { return cmd_detect(g, dataset); }; });

  auto* rec_cmd = app.add_subcommand("reconstruct", "Write rationalizing utility grids");
  int resolution = 50;
  double hi = 1.2;
  rec_cmd->add_option("dataset", dataset, "Dataset JSON")->required();
  rec_cmd->add_option("--resolution", resolution, "Grid points per axis")->capture_default_str();
  rec_cmd->add_option("--hi", hi, "Grid covers [0, hi]^2")->capture_default_str();
  rec_cmd->callback([&] { run = [&] { return cmd_reconstruct(g, dataset, resolution, hi); }; });

  auto* stat_cmd = app.add_subcommand("stat-detect", "Noisy-data coordination test");
  double gamma = 0.05;
  Index L = stat::kDefaultPsiDraws;
  std::optional<double> noise_sigma;
  stat_cmd->add_option("dataset", dataset, "Dataset JSON")->required();
  stat_cmd->add_option("--gamma", gamma, "Significance level in (0, 1)")->capture_default_str();
  stat_cmd->add_option("--L", L, "Monte Carlo draws of Psi")->capture_default_str();
  stat_cmd->add_option("--sigma", noise_sigma, "Override the dataset's noise std");
  stat_cmd->callback([&] { run = [&] { return cmd_stat_detect(g, dataset, gamma, L, noise_sigma); }; });

  auto* sweep_cmd = app.add_subcommand("sweep", "Statistic mean vs noise level, both regimes");
  std::string sigmas = "0.01:0.01:0.1";
  Index trials = 300;
  std::string sweep_weights = "equal";
  sweep_cmd->add_option("--sigmas", sigmas, "lo:step:hi or a single value")->capture_default_str();
  sweep_cmd->add_option("--trials", trials, "Datasets per point and regime")->capture_default_str();
  sweep_cmd->add_option("--L", L, "Monte Carlo draws of Psi")->capture_default_str();
  sweep_cmd->add_option("--weights", sweep_weights, "normalized or equal")->capture_default_str();
  sweep_cmd->callback([&] { run = [&] { return cmd_sweep(g, sigmas, trials, L, sweep_weights); }; });

  auto* track_cmd = app.add_subcommand("track", "Multi-target JPDA tracking run");
  tracking::TrackScenario ts;
  std::string filter = "coupled";
  track_cmd->add_option("--targets", ts.targets, "Number of targets")->capture_default_str();
  track_cmd->add_option("--steps", ts.steps, "Number of scans")->capture_default_str();
  track_cmd->add_option("--pd", ts.detection_prob, "Detection probability")->capture_default_str();
  track_cmd->add_option("--clutter", ts.clutter_per_scan, "Mean clutter count per scan")
      ->capture_default_str();
  track_cmd->add_option("--spacing", ts.spacing, "Initial target spacing")->capture_default_str();
  track_cmd->add_option("--filter", filter, "coupled or uncoupled")->capture_default_str();
  track_cmd->callback([&] { run = [&] { return cmd_track(g, ts, filter); }; });

  auto* wave_cmd = app.add_subcommand("waveform", "Measurement covariance of a radar waveform");
  std::string kind = "triangular";
  tracking::WaveformSpec ws;
  wave_cmd->add_option("--kind", kind, "triangular, gaussian or chirp")->capture_default_str();
  wave_cmd->add_option("--theta", ws.theta, "Pulse width")->capture_default_str();
  wave_cmd->add_option("--theta2", ws.theta2, "Chirp rate")->capture_default_str();
  wave_cmd->add_option("--eta", ws.snr, "Signal-to-noise ratio")->capture_default_str();
  wave_cmd->add_option("--wc", ws.carrier, "Carrier frequency, rad/s")->capture_default_str();
  wave_cmd->add_option("--c", ws.lightspeed, "Propagation speed")->capture_default_str();
  wave_cmd->callback([&] { run = [&] { return cmd_waveform(g, kind, ws); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    return run();
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kExitError;
}
