#include "wipt/harvester.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "wipt/error.hpp"

namespace wipt {

namespace {

constexpr double kMomentSlack = 1e-12;

double logistic(double z) {
  // Evaluated on the side that cannot overflow.
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double log1p_exp(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

void LinearParams::validate() const {
  if (!(k2 > 0.0)) throw DomainError("linear harvester: k2 must be positive");
  if (!(e3 >= 0.0 && e3 <= 1.0)) throw DomainError("linear harvester: e3 must lie in [0, 1]");
}

void DiodeNonlinearParams::validate() const {
  if (!(k2 > 0.0) || !(k4 > 0.0)) {
    throw DomainError("diode harvester: k2 and k4 must be positive");
  }
}

SaturationParams::SaturationParams(double a, double b, double p_sat)
    : a_(a), b_(b), p_sat_(p_sat), omega_(0.0) {
  if (!(a > 0.0) || !(b > 0.0) || !(p_sat > 0.0) || !std::isfinite(a) ||
      !std::isfinite(b) || !std::isfinite(p_sat)) {
    throw DomainError("saturation harvester: a, b and p_sat must be positive and finite");
  }
  omega_ = 1.0 / (1.0 + std::exp(a_ * b_));
}

double linear_dc_power(double p_rf, const LinearParams& params) {
  if (!(p_rf >= 0.0)) throw DomainError("linear_dc_power: received power must be >= 0");
  return params.e3 * p_rf;
}

double zdc_from_rf_moments(double m2, double m4, const DiodeNonlinearParams& params) {
  if (!(m2 >= 0.0)) throw DomainError("zdc_from_rf_moments: m2 must be >= 0");
  if (!(m4 >= m2 * m2 * (1.0 - kMomentSlack))) {
    throw DomainError("zdc_from_rf_moments: invalid moment pair (m4 < m2^2)");
  }
  return params.k2 * m2 + params.k4 * m4;
}

double sigmoid_dc_power(double p_rf, const SaturationParams& params) {
  if (!(p_rf >= 0.0)) throw DomainError("sigmoid_dc_power: received power must be >= 0");
  // (psi - p_sat*omega)/(1 - omega) rearranged to p_sat * s(a(p - b)) * (1 - e^{-a p}),
  // which is exactly 0 at p = 0 and has no cancellation at small p.
  const double a = params.a();
  return params.p_sat() * logistic(a * (p_rf - params.b())) * -std::expm1(-a * p_rf);
}

double sigmoid_dc_slope(double p_rf, const SaturationParams& params) {
  const double s = logistic(params.a() * (p_rf - params.b()));
  return params.a() * params.p_sat() * s * (1.0 - s) / (1.0 - params.omega());
}

double invert_sigmoid(double e_target, const SaturationParams& params) {
  if (!(e_target >= 0.0)) throw DomainError("invert_sigmoid: target must be >= 0");
  if (e_target >= params.p_sat()) {
    throw InfeasibleError("invert_sigmoid: target at or above the saturation power",
                          params.p_sat());
  }
  if (e_target == 0.0) return 0.0;
  // Closed form of the rearranged map: with t = E/p_sat,
  // p = (ln(1 + t e^{ab}) - ln(1 - t)) / a.
  const double t = e_target / params.p_sat();
  const double ab = params.a() * params.b();
  return (log1p_exp(std::log(t) + ab) - std::log1p(-t)) / params.a();
}

double harvested_dc(const HarvesterModel& model, double p_rf) {
  struct Visitor {
    double p;
    double operator()(const LinearParams& m) const { return linear_dc_power(p, m); }
    double operator()(const DiodeNonlinearParams& m) const {
      // Narrowband CSCG: E[|x|^4] = 2 P^2, RF carrier average adds 3/2.
      return zdc_from_rf_moments(p, 3.0 * p * p, m);
    }
    double operator()(const SaturationParams& m) const { return sigmoid_dc_power(p, m); }
  };
  return std::visit(Visitor{p_rf}, model);
}

nlohmann::json to_json(const HarvesterModel& model) {
  struct Visitor {
    nlohmann::json operator()(const LinearParams& m) const {
      return {{"model", "linear"}, {"k2", m.k2}, {"e3", m.e3}};
    }
    nlohmann::json operator()(const DiodeNonlinearParams& m) const {
      return {{"model", "diode"}, {"k2", m.k2}, {"k4", m.k4}};
    }
    nlohmann::json operator()(const SaturationParams& m) const {
      return {{"model", "sigmoid"}, {"a", m.a()}, {"b", m.b()}, {"p_sat", m.p_sat()}};
    }
  };
  return std::visit(Visitor{}, model);
}

HarvesterModel harvester_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("model").get<std::string>();
    if (kind == "linear") {
      LinearParams p{j.value("k2", 1.0), j.value("e3", 1.0)};
      p.validate();
      return p;
    }
    if (kind == "diode") {
      DiodeNonlinearParams p{j.at("k2").get<double>(), j.at("k4").get<double>()};
      p.validate();
      return p;
    }
    if (kind == "sigmoid") {
      return SaturationParams(j.at("a").get<double>(), j.at("b").get<double>(),
                              j.at("p_sat").get<double>());
    }
    throw DomainError("harvester JSON: unknown model '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("harvester JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Sigmoid fitting

namespace {

// theta = (ln a, ln b, ln p_sat) in data-normalized units.
using Theta = Eigen::Vector3d;

struct FitProblem {
  std::vector<double> x;
  std::vector<double> y;

  static double model(const Theta& theta, double xi) {
    const double a = std::exp(theta[0]);
    const double b = std::exp(theta[1]);
    const double p = std::exp(theta[2]);
    return p * logistic(a * (xi - b)) * -std::expm1(-a * xi);
  }

  Eigen::VectorXd residuals(const Theta& theta) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] = model(theta, x[i]) - y[i];
    }
    return r;
  }

  Eigen::MatrixXd jacobian(const Theta& theta) const {
    constexpr double h = 1e-6;
    Eigen::MatrixXd j(static_cast<Eigen::Index>(x.size()), 3);
    for (int c = 0; c < 3; ++c) {
      Theta up = theta;
      Theta dn = theta;
      up[c] += h;
      dn[c] -= h;
      j.col(c) = (residuals(up) - residuals(dn)) / (2.0 * h);
    }
    return j;
  }
};

struct StartResult {
  Theta theta = Theta::Constant(std::numeric_limits<double>::quiet_NaN());
  double cost = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

StartResult levenberg_marquardt(const FitProblem& prob, Theta theta,
                                const SigmoidFitOptions& opt) {
  StartResult out;
  Eigen::VectorXd r = prob.residuals(theta);
  double cost = r.squaredNorm();
  double damping = 1e-3;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (!std::isfinite(cost)) break;
    if (cost < 1e-30) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd j = prob.jacobian(theta);
    const Eigen::Matrix3d jtj = j.transpose() * j;
    const Eigen::Vector3d grad = j.transpose() * r;

    bool accepted = false;
    Theta step = Theta::Zero();
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      Eigen::Matrix3d lhs = jtj;
      lhs.diagonal() += damping * jtj.diagonal().cwiseMax(1e-12);
      step = lhs.ldlt().solve(-grad);
      if (!step.allFinite()) {
        damping *= 4.0;
        continue;
      }
      const Theta trial = theta + step;
      const Eigen::VectorXd rt = prob.residuals(trial);
      const double ct = rt.squaredNorm();
      if (std::isfinite(ct) && ct <= cost) {
        const double previous = cost;
        theta = trial;
        r = rt;
        cost = ct;
        damping = std::max(damping / 3.0, 1e-12);
        accepted = true;
        if (previous - ct <= opt.relative_tolerance * previous &&
            step.lpNorm<Eigen::Infinity>() <= 1e-9 * (1.0 + theta.lpNorm<Eigen::Infinity>())) {
          out.converged = true;
        }
      } else {
        damping *= 4.0;
      }
    }
    if (!accepted) {
      // No descent direction left at any damping: stationary point.
      out.converged = true;
      break;
    }
    if (out.converged) {
      ++it;
      break;
    }
  }
  out.theta = theta;
  out.cost = cost;
  out.iterations = it;
  return out;
}

}  // namespace

SigmoidFit fit_sigmoid(std::span<const MeasurementPoint> points,
                       const SigmoidFitOptions& options) {
  if (points.size() < 4) {
    throw InsufficientDataError("fit_sigmoid: need at least 4 measurement points, got " +
                                std::to_string(points.size()));
  }
  double max_x = 0.0;
  double max_y = 0.0;
  for (const auto& p : points) {
    if (!(p.p_rf >= 0.0) || !(p.p_dc >= 0.0)) {
      throw DomainError("fit_sigmoid: measurements must be non-negative");
    }
    max_x = std::max(max_x, p.p_rf);
    max_y = std::max(max_y, p.p_dc);
  }
  if (max_x <= 0.0) throw DomainError("fit_sigmoid: all input powers are zero");

  SigmoidFit fit;
  if (max_y <= 0.0) {
    fit.degenerate = true;
    return fit;
  }

  FitProblem prob;
  prob.x.reserve(points.size());
  prob.y.reserve(points.size());
  for (const auto& p : points) {
    prob.x.push_back(p.p_rf / max_x);
    prob.y.push_back(p.p_dc / max_y);
  }

  std::vector<double> sorted_x = prob.x;
  std::sort(sorted_x.begin(), sorted_x.end());
  auto quantile = [&](double q) {
    const auto idx = static_cast<std::size_t>(q * static_cast<double>(sorted_x.size() - 1));
    return std::max(sorted_x[idx], 1e-6);
  };

  StartResult best;
  bool any_converged = false;
  for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    const double b0 = quantile(q);
    for (double ab : {0.5, 2.0, 6.0}) {
      const Theta theta0(std::log(ab / b0), std::log(b0), std::log(1.05));
      const StartResult res = levenberg_marquardt(prob, theta0, options);
      if (!std::isfinite(res.cost)) continue;
      const bool better = (res.converged && !any_converged) ||
                          (res.converged == any_converged && res.cost < best.cost);
      if (better) best = res;
      any_converged = any_converged || res.converged;
    }
  }

  auto to_params = [&](const Theta& t) {
    return SaturationParams(std::exp(t[0]) / max_x, std::exp(t[1]) * max_x,
                            std::exp(t[2]) * max_y);
  };

  if (!any_converged) {
    std::vector<double> iterate;
    if (best.theta.allFinite()) {
      const auto p = to_params(best.theta);
      iterate = {p.a(), p.b(), p.p_sat()};
    }
    throw ConvergenceError("fit_sigmoid: no start converged within the iteration cap", iterate,
                           std::sqrt(best.cost) * max_y);
  }

  fit.params = to_params(best.theta);
  fit.iterations = best.iterations;
  double ss = 0.0;
  for (const auto& p : points) {
    const double d = sigmoid_dc_power(p.p_rf, *fit.params) - p.p_dc;
    ss += d * d;
  }
  fit.residual = std::sqrt(ss);
  return fit;
}

}  // namespace wipt
