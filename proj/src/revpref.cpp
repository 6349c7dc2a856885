#include "coord/revpref.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace coord::revpref {

namespace {

constexpr double kBisectionTol = 1e-8;
constexpr double kCertificateTol = 1e-6;

void check_agent(const InteractionDataset& data, Index agent) {
  if (agent < 0 || agent >= data.M()) throw Error(ErrorCode::InvalidArgument, "agent out of range");
}

}  // namespace

Matrix expenditure_gaps(const InteractionDataset& data, Index agent) {
  check_agent(data, agent);
  const Index T = data.T();
  Matrix gaps(T, T);
  for (Index t = 0; t < T; ++t) {
    const Vector& alpha = data.probes[static_cast<std::size_t>(t)];
    const Vector& beta_t = data.responses[static_cast<std::size_t>(t)][static_cast<std::size_t>(agent)];
    for (Index s = 0; s < T; ++s) {
      const Vector& beta_s =
          data.responses[static_cast<std::size_t>(s)][static_cast<std::size_t>(agent)];
      gaps(t, s) = alpha.dot(beta_s - beta_t);
    }
  }
  return gaps;
}

std::optional<Vector> solve_agent_inequalities(const Matrix& gaps, double phi,
                                               const lp::SolverOptions& options) {
  const Index T = gaps.rows();
  // Variables: [u_0 .. u_{T-1}, lambda_0 .. lambda_{T-1}].
  lp::LinearProgram program(2 * T);
  program.lower.setOnes();
  for (Index t = 0; t < T; ++t) {
    for (Index s = 0; s < T; ++s) {
      if (s == t) continue;
      Vector row = Vector::Zero(2 * T);
      row(s) += 1.0;
      row(t) -= 1.0;
      row(T + t) = -(gaps(t, s) + phi);
      program.add(std::move(row), lp::Relation::LessEqual, 0.0);
    }
  }
  lp::LpOutcome out = lp::solve(program, options);
  if (!out.has_point()) return std::nullopt;
  return std::move(out.x);
}

DetectionResult detect_coordination(const InteractionDataset& data) {
  const Index T = data.T();
  const Index M = data.M();
  AfriatCertificate cert{Matrix(T, M), Matrix(T, M)};
  for (Index i = 0; i < M; ++i) {
    auto witness = solve_agent_inequalities(expenditure_gaps(data, i), 0.0);
    if (!witness) return {Verdict::NotCoordinated, std::nullopt};
    cert.u.col(i) = witness->head(T);
    cert.lambda.col(i) = witness->tail(T);
  }
  return {Verdict::Coordinated, std::move(cert)};
}

double certificate_violation(const AfriatCertificate& cert, const InteractionDataset& data,
                             double phi) {
  const Index T = data.T();
  double worst = 0.0;
  for (Index i = 0; i < data.M(); ++i) {
    const Matrix gaps = expenditure_gaps(data, i);
    for (Index t = 0; t < T; ++t) {
      for (Index s = 0; s < T; ++s) {
        if (s == t) continue;
        const double lhs = cert.u(s, i) - cert.u(t, i) - cert.lambda(t, i) * (gaps(t, s) + phi);
        worst = std::max(worst, lhs);
      }
    }
  }
  return worst;
}

RationalizingUtility::RationalizingUtility(Index agent, Vector u, Vector lambda,
                                           std::vector<ProbeSignal> probes,
                                           std::vector<Maneuver> anchors)
    : agent_(agent), u_(std::move(u)), lambda_(std::move(lambda)) {
  const Index T = u_.size();
  const Index N = probes.empty() ? 0 : probes.front().size();
  gradients_.resize(T, N);
  intercepts_.resize(T);
  for (Index t = 0; t < T; ++t) {
    const Vector& alpha = probes[static_cast<std::size_t>(t)];
    gradients_.row(t) = lambda_(t) * alpha.transpose();
    intercepts_(t) = u_(t) - lambda_(t) * alpha.dot(anchors[static_cast<std::size_t>(t)]);
  }
}

double RationalizingUtility::operator()(const Vector& x) const {
  return (gradients_ * x + intercepts_).minCoeff();
}

Index RationalizingUtility::active_piece(const Vector& x) const {
  Index arg = 0;
  (gradients_ * x + intercepts_).minCoeff(&arg);
  return arg;
}

void RationalizingUtility::write_grid_csv(std::ostream& out, double hi, int resolution) const {
  if (gradients_.cols() != 2) {
    throw Error(ErrorCode::InvalidArgument, "grid export needs a two-dimensional signal");
  }
  if (resolution < 2) throw Error(ErrorCode::InvalidArgument, "resolution must be >= 2");
  if (!(hi > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid range must be > 0");
  out << "beta1,beta2,U\n";
  Vector x(2);
  for (int a = 0; a < resolution; ++a) {
    for (int b = 0; b < resolution; ++b) {
      x << hi * a / (resolution - 1), hi * b / (resolution - 1);
      out << format_number(x(0)) << ',' << format_number(x(1)) << ','
          << format_number((*this)(x)) << '\n';
    }
  }
}

std::vector<RationalizingUtility> reconstruct_utilities(const AfriatCertificate& cert,
                                                        const InteractionDataset& data) {
  const Index T = data.T();
  const Index M = data.M();
  if (cert.u.rows() != T || cert.u.cols() != M || cert.lambda.rows() != T ||
      cert.lambda.cols() != M) {
    throw Error(ErrorCode::CertificateMismatch, "certificate shape does not match the dataset");
  }
  if ((cert.lambda.array() <= 0.0).any()) {
    throw Error(ErrorCode::CertificateMismatch, "marginal utilities must be positive");
  }
  const double violation = certificate_violation(cert, data);
  if (violation > kCertificateTol) {
    throw Error(ErrorCode::CertificateMismatch,
                "certificate violates the inequalities by " + std::to_string(violation));
  }
  std::vector<RationalizingUtility> out;
  for (Index i = 0; i < M; ++i) {
    std::vector<Maneuver> anchors;
    for (Index t = 0; t < T; ++t) {
      anchors.push_back(data.responses[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]);
    }
    out.emplace_back(i, cert.u.col(i), cert.lambda.col(i), data.probes, std::move(anchors));
  }
  return out;
}

RelaxationStatistic relaxation_statistic(const InteractionDataset& data) {
  const Index T = data.T();
  const Index M = data.M();
  RelaxationStatistic stat;
  stat.per_agent.resize(M);
  stat.multipliers = {Matrix(T, M), Matrix(T, M)};

  for (Index i = 0; i < M; ++i) {
    const Matrix gaps = expenditure_gaps(data, i);
    const double bound = gaps.cwiseAbs().maxCoeff();
    auto store = [&](const Vector& w) {
      stat.multipliers.u.col(i) = w.head(T);
      stat.multipliers.lambda.col(i) = w.tail(T);
    };

    // phi = 0 first, so the sign of the statistic agrees exactly with the
    // unrelaxed test.
    double lo = 0.0;
    double hi = 0.0;
    auto at_zero = solve_agent_inequalities(gaps, 0.0);
    Vector witness;
    if (at_zero) {
      witness = *at_zero;
      auto at_floor = bound > 0.0 ? solve_agent_inequalities(gaps, -bound) : at_zero;
      if (at_floor) {
        stat.per_agent(i) = -bound;
        store(*at_floor);
        continue;
      }
      lo = -bound;
      hi = 0.0;
    } else {
      auto at_ceiling = solve_agent_inequalities(gaps, bound);
      if (!at_ceiling) {
        throw Error(ErrorCode::NumericalBreakdown, "relaxation infeasible at its upper bracket");
      }
      witness = *at_ceiling;
      lo = 0.0;
      hi = bound;
    }
    while (hi - lo > kBisectionTol) {
      const double mid = 0.5 * (lo + hi);
      if (auto w = solve_agent_inequalities(gaps, mid)) {
        hi = mid;
        witness = std::move(*w);
      } else {
        lo = mid;
      }
    }
    stat.per_agent(i) = hi;
    store(witness);
  }
  stat.overall = stat.per_agent.maxCoeff();
  return stat;
}

}  // namespace coord::revpref
