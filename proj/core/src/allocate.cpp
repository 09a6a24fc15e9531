#include "wipt/allocate.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <string>

#include "wipt/error.hpp"

namespace wipt {

namespace {

constexpr double kTieTolerance = 1e-12;
constexpr double kFeasibilitySlack = 1e-10;

void check_inputs(std::span<const double> gains, double noise, double budget) {
  if (gains.empty()) throw DomainError("allocation: empty gain vector");
  bool any_positive = false;
  for (double g : gains) {
    if (!(g >= 0.0) || !std::isfinite(g)) {
      throw DomainError("allocation: channel gains must be finite and >= 0");
    }
    any_positive = any_positive || g > 0.0;
  }
  if (!any_positive) throw DomainError("allocation: all channel gains are zero");
  if (!(noise > 0.0) || !std::isfinite(noise)) throw DomainError("allocation: noise must be > 0");
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw DomainError("allocation: power budget must be > 0");
  }
}

// Problem scaled so the strongest gain and the noise are both 1.
class ScaledProblem {
 public:
  ScaledProblem(std::span<const double> gains, double noise, double budget)
      : noise_(noise), g_max_(*std::max_element(gains.begin(), gains.end())) {
    g_.reserve(gains.size());
    for (double g : gains) {
      double s = g / g_max_;
      if (s >= 1.0 - kTieTolerance) {
        s = 1.0;
        ++ties_;
      }
      g_.push_back(s);
      if (s < 1.0) g_second_ = std::max(g_second_, s);
    }
    budget_ = budget * g_max_ / noise;
  }

  double budget() const { return budget_; }

  // Allocation for water level u = 1 + t of the strongest subband, with
  // u = 1/(lambda - beta). Working with t keeps tiny budgets exact.
  void powers(double t, double beta, std::vector<double>& p) const {
    p.assign(g_.size(), 0.0);
    const double u = 1.0 + t;
    for (std::size_t n = 0; n < g_.size(); ++n) {
      const double g = g_[n];
      if (g <= 0.0) continue;
      const double d = beta * u * (1.0 - g);
      p[n] = std::max((t - d) / (1.0 + d) - (1.0 - g) / g, 0.0);
    }
  }

  double sum(const std::vector<double>& p) const {
    double s = 0.0;
    for (double x : p) s += x;
    return s;
  }

  double received(const std::vector<double>& p) const {
    double s = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) s += g_[n] * p[n];
    return s;
  }

  // Solves sum p = budget for fixed beta. Returns u.
  double solve_budget(double beta, std::vector<double>& p, int& iterations) const {
    double lo = 0.0;
    double hi = budget_;
    for (int it = 0; it < kBisectionCap; ++it) {
      ++iterations;
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      powers(mid, beta, p);
      if (sum(p) > budget_) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    // Pick the bracket end whose sum is closest to the budget.
    std::vector<double> p_lo;
    powers(lo, beta, p_lo);
    powers(hi, beta, p);
    if (std::abs(sum(p_lo) - budget_) < std::abs(sum(p) - budget_)) {
      p = std::move(p_lo);
      return 1.0 + lo;
    }
    return 1.0 + hi;
  }

  double beta_max() const {
    if (g_second_ <= 0.0) return 0.0;
    const double b =
        (g_second_ - 1.0 / (budget_ / static_cast<double>(ties_) + 1.0)) / (1.0 - g_second_);
    return std::max(b, 0.0);
  }

  PowerAllocation solve(double target) const {
    PowerAllocation out;
    int iterations = 0;
    std::vector<double> p;
    double beta = 0.0;
    double u = solve_budget(0.0, p, iterations);
    if (received(p) < target * (1.0 - kFeasibilitySlack)) {
      const double b_max = beta_max();
      double lo = 0.0;
      double hi = b_max;
      std::vector<double> p_hi;
      double u_hi = solve_budget(hi, p_hi, iterations);
      for (int it = 0; it < kBisectionCap; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        std::vector<double> pm;
        const double um = solve_budget(mid, pm, iterations);
        const double e = received(pm);
        if (e >= target) {
          hi = mid;
          p_hi = std::move(pm);
          u_hi = um;
          if (e - target <= 1e-14 * std::max(target, 1.0)) break;
        } else {
          lo = mid;
        }
      }
      beta = hi;
      p = std::move(p_hi);
      u = u_hi;
    }
    const double lambda = beta + 1.0 / u;

    // Residuals in scaled units.
    double kkt = std::abs(sum(p) - budget_) / budget_;
    for (std::size_t n = 0; n < g_.size(); ++n) {
      const double g = g_[n];
      if (g <= 0.0) continue;
      const double price = lambda - beta * g;
      if (p[n] > 0.0) {
        kkt = std::max(kkt, std::abs(g / (1.0 + g * p[n]) - price) / lambda);
      } else {
        kkt = std::max(kkt, std::max(0.0, g - price) / lambda);
      }
    }
    const double e = received(p);
    if (target > 0.0) kkt = std::max(kkt, std::max(0.0, target - e) / target);
    if (kkt > 1e-8) {
      throw ConvergenceError("water-filling: bisection did not reach the KKT tolerance", p, kkt);
    }

    out.iterations = iterations;
    out.kkt_residual = kkt;
    out.slackness = target > 0.0 ? beta * (e - target) / target : 0.0;
    double rate = 0.0;
    for (std::size_t n = 0; n < g_.size(); ++n) rate += std::log2(1.0 + g_[n] * p[n]);
    out.rate = rate;
    // Back to physical units.
    const double to_watts = noise_ / g_max_;
    out.p.resize(p.size());
    for (std::size_t n = 0; n < p.size(); ++n) out.p[n] = p[n] * to_watts;
    out.received_power = e * noise_;
    out.lambda = lambda * g_max_ / noise_;
    out.beta = beta / noise_;
    return out;
  }

 private:
  std::vector<double> g_;
  double noise_;
  double g_max_;
  double budget_ = 0.0;
  double g_second_ = 0.0;
  int ties_ = 0;
};

}  // namespace

PowerAllocation waterfill(std::span<const double> gains, double noise, double budget) {
  check_inputs(gains, noise, budget);
  return ScaledProblem(gains, noise, budget).solve(0.0);
}

PowerAllocation modified_waterfill(std::span<const double> gains, double noise, double budget,
                                   double e_target, double k2) {
  check_inputs(gains, noise, budget);
  if (!(e_target >= 0.0)) throw DomainError("modified_waterfill: energy target must be >= 0");
  if (!(k2 > 0.0)) throw DomainError("modified_waterfill: k2 must be > 0");
  const double g_max = *std::max_element(gains.begin(), gains.end());
  const double e_max = k2 * budget * g_max;
  if (e_target > e_max * (1.0 + kFeasibilitySlack)) {
    throw InfeasibleError("modified_waterfill: energy target exceeds k2 * P * max gain", e_max);
  }
  const double target = std::min(e_target, e_max) / k2;
  // Received-power target in scaled units: sum g' p' = target / noise.
  return ScaledProblem(gains, noise, budget).solve(target / noise);
}

Eigen::MatrixXcd CovarianceDesign::covariance() const {
  const auto m = eigen_basis.cols();
  Eigen::VectorXd p(m);
  for (Eigen::Index i = 0; i < m; ++i) p[i] = eigen_powers.p[static_cast<std::size_t>(i)];
  return eigen_basis * p.asDiagonal() * eigen_basis.adjoint();
}

CovarianceDesign mimo_eigen_allocate(const Eigen::MatrixXcd& h, double budget, double e_target,
                                     double k2, double noise) {
  if (h.size() == 0 || !h.allFinite()) throw DomainError("mimo_eigen_allocate: invalid H");
  if (h.norm() == 0.0) throw DomainError("mimo_eigen_allocate: H is zero");
  const Eigen::MatrixXcd gram = h.adjoint() * h;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw ConvergenceError("mimo_eigen_allocate: eigendecomposition failed", {}, 0.0);
  }
  const auto m = gram.cols();
  CovarianceDesign d;
  d.eigen_basis.resize(m, m);
  d.eigen_gains.resize(static_cast<std::size_t>(m));
  // Eigen sorts ascending.
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index src = m - 1 - i;
    d.eigen_gains[static_cast<std::size_t>(i)] = std::max(eig.eigenvalues()[src], 0.0);
    d.eigen_basis.col(i) = eig.eigenvectors().col(src);
  }
  d.eigen_powers = modified_waterfill(d.eigen_gains, noise, budget, e_target, k2);
  return d;
}

PowerAllocation saturation_allocate(std::span<const double> gains, double noise, double budget,
                                    double e_target, const SaturationParams& params) {
  check_inputs(gains, noise, budget);
  const double required = invert_sigmoid(e_target, params);
  try {
    return modified_waterfill(gains, noise, budget, required, 1.0);
  } catch (const InfeasibleError& e) {
    throw InfeasibleError("saturation_allocate: the received power needed for the DC target "
                          "exceeds P * max gain",
                          sigmoid_dc_power(e.max_attainable(), params));
  }
}

nlohmann::json to_json(const PowerAllocation& a) {
  return {{"p", a.p},
          {"lambda", a.lambda},
          {"beta", a.beta},
          {"kkt_residual", a.kkt_residual},
          {"slackness", a.slackness},
          {"iterations", a.iterations},
          {"rate", a.rate},
          {"received_power", a.received_power}};
}

nlohmann::json to_json(const CovarianceDesign& d) {
  nlohmann::json basis = nlohmann::json::array();
  for (Eigen::Index i = 0; i < d.eigen_basis.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < d.eigen_basis.cols(); ++k) {
      row.push_back({d.eigen_basis(i, k).real(), d.eigen_basis(i, k).imag()});
    }
    basis.push_back(std::move(row));
  }
  return {{"eigen_gains", d.eigen_gains},
          {"eigen_basis", std::move(basis)},
          {"eigen_powers", to_json(d.eigen_powers)}};
}

}  // namespace wipt
