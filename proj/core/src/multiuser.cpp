#include "wipt/multiuser.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "wipt/error.hpp"
#include "wipt/parallel.hpp"
#include "wipt/random.hpp"

namespace wipt {

namespace {

Eigen::MatrixXcd gram(const std::vector<Eigen::RowVectorXcd>& rows,
                      const std::vector<double>* weights = nullptr) {
  const auto m = rows.front().size();
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(m, m);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const double w = weights != nullptr ? (*weights)[j] : 1.0;
    g.noalias() += w * rows[j].adjoint() * rows[j];
  }
  return g;
}

// Dominant eigenvector, phase-normalized so the first nonzero entry is real > 0.
Eigen::VectorXcd dominant(const Eigen::MatrixXcd& m) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(m);
  if (eig.info() != Eigen::Success) {
    throw ConvergenceError("eigendecomposition failed", {}, 0.0);
  }
  Eigen::VectorXcd v = eig.eigenvectors().col(m.cols() - 1);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      v *= std::conj(v[i]) / std::abs(v[i]);
      break;
    }
  }
  return v;
}

void check_rows(const std::vector<Eigen::RowVectorXcd>& rows, const char* what) {
  if (rows.empty()) throw DomainError(std::string(what) + ": need at least one channel");
  const auto m = rows.front().size();
  if (m < 1) throw DomainError(std::string(what) + ": empty channel vector");
  for (const auto& r : rows) {
    if (r.size() != m) throw DomainError(std::string(what) + ": inconsistent antenna counts");
    if (!r.allFinite()) throw DomainError(std::string(what) + ": non-finite channel entry");
  }
}

// |row * w|^2 without Eigen's conjugating dot().
double gain_of(const Eigen::RowVectorXcd& row, const Eigen::VectorXcd& w) {
  return std::norm((row * w)(0, 0));
}

double sigmoid_sum(const std::vector<Eigen::RowVectorXcd>& g, const Eigen::VectorXcd& w,
                   const std::vector<SaturationParams>& s) {
  double total = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    total += sigmoid_dc_power(gain_of(g[j], w), s[j]);
  }
  return total;
}

nlohmann::json rows_to_json(const std::vector<Eigen::RowVectorXcd>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index i = 0; i < r.size(); ++i) row.push_back({r[i].real(), r[i].imag()});
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<Eigen::RowVectorXcd> rows_from_json(const nlohmann::json& j) {
  std::vector<Eigen::RowVectorXcd> rows;
  for (const auto& row : j) {
    Eigen::RowVectorXcd r(static_cast<Eigen::Index>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] =
          cdouble(row.at(i).at(0).get<double>(), row.at(i).at(1).get<double>());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

int MultiuserScenario::m_t() const {
  if (!ir_channels.empty()) return static_cast<int>(ir_channels.front().size());
  if (!er_channels.empty()) return static_cast<int>(er_channels.front().size());
  return 0;
}

void MultiuserScenario::validate() const {
  check_rows(ir_channels, "scenario IR channels");
  check_rows(er_channels, "scenario ER channels");
  if (ir_channels.front().size() != er_channels.front().size()) {
    throw DomainError("scenario: IR and ER channels have different antenna counts");
  }
  if (!(budget > 0.0) || !(noise > 0.0)) {
    throw DomainError("scenario: budget and noise must be positive");
  }
  if (sinr_targets.size() != ir_channels.size()) {
    throw DomainError("scenario: one SINR target per IR is required");
  }
  for (double t : sinr_targets) {
    if (!(t >= 0.0)) throw DomainError("scenario: SINR targets must be >= 0");
  }
  if (harvesters.size() != er_channels.size()) {
    throw DomainError("scenario: one harvester model per ER is required");
  }
}

double BeamformerSet::total_power() const {
  double p = 0.0;
  for (const auto& b : info_beams) p += b.squaredNorm();
  for (const auto& b : energy_beams) p += b.squaredNorm();
  return p;
}

ScenarioEvaluation evaluate_scenario(const MultiuserScenario& scenario, const BeamformerSet& beams,
                                     const EvaluateOptions& options) {
  scenario.validate();
  const auto m = static_cast<Eigen::Index>(scenario.m_t());
  if (beams.info_beams.size() != scenario.ir_channels.size()) {
    throw DomainError("evaluate_scenario: one information beam per IR is required");
  }
  for (const auto* set : {&beams.info_beams, &beams.energy_beams}) {
    for (const auto& b : *set) {
      if (b.size() != m) throw DomainError("evaluate_scenario: beam length differs from M_t");
    }
  }
  ScenarioEvaluation ev;
  const std::size_t k_count = scenario.ir_channels.size();
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto& h = scenario.ir_channels[k];
    double interference = 0.0;
    for (std::size_t i = 0; i < k_count; ++i) {
      if (i != k) interference += gain_of(h, beams.info_beams[i]);
    }
    if (!options.energy_beams_cancelled) {
      for (const auto& v : beams.energy_beams) interference += gain_of(h, v);
    }
    const double sinr = gain_of(h, beams.info_beams[k]) / (interference + scenario.noise);
    ev.sinr.push_back(sinr);
    ev.rate.push_back(std::log2(1.0 + sinr));
  }
  for (std::size_t j = 0; j < scenario.er_channels.size(); ++j) {
    const auto& g = scenario.er_channels[j];
    double rf = 0.0;
    for (const auto& p : beams.info_beams) rf += gain_of(g, p);
    for (const auto& v : beams.energy_beams) rf += gain_of(g, v);
    ev.received_rf.push_back(rf);
    const double dc = harvested_dc(scenario.harvesters[j], rf);
    ev.harvested_dc.push_back(dc);
    ev.sum_dc += dc;
  }
  return ev;
}

Eigen::VectorXcd energy_beamform_linear(const std::vector<Eigen::RowVectorXcd>& er_channels,
                                        double budget) {
  check_rows(er_channels, "energy_beamform_linear");
  if (!(budget > 0.0)) throw DomainError("energy_beamform_linear: budget must be > 0");
  const Eigen::MatrixXcd g = gram(er_channels);
  if (g.norm() == 0.0) throw DomainError("energy_beamform_linear: all ER channels are zero");
  return std::sqrt(budget) * dominant(g);
}

WeightedEigenResult weighted_eigen_saturation(const std::vector<Eigen::RowVectorXcd>& er_channels,
                                              double budget,
                                              const std::vector<SaturationParams>& sigmoids,
                                              const WeightedEigenOptions& options) {
  if (sigmoids.size() != er_channels.size()) {
    throw DomainError("weighted_eigen_saturation: one sigmoid per ER is required");
  }
  WeightedEigenResult out;
  Eigen::VectorXcd w = energy_beamform_linear(er_channels, budget);
  out.beam = w;
  out.sum_dc = sigmoid_sum(er_channels, w, sigmoids);
  out.accepted.push_back(out.sum_dc);
  int stagnant = 0;
  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    std::vector<double> beta(er_channels.size());
    for (std::size_t j = 0; j < er_channels.size(); ++j) {
      beta[j] = sigmoid_dc_slope(gain_of(er_channels[j], w), sigmoids[j]);
    }
    const Eigen::MatrixXcd m = gram(er_channels, &beta);
    if (m.norm() == 0.0) {
      out.converged = true;
      break;
    }
    const Eigen::VectorXcd next = std::sqrt(budget) * dominant(m);
    const double value = sigmoid_sum(er_channels, next, sigmoids);
    if (value > out.sum_dc + options.tolerance * std::max(1.0, std::abs(out.sum_dc))) {
      out.beam = next;
      out.sum_dc = value;
      out.accepted.push_back(value);
      stagnant = 0;
    } else if (++stagnant >= options.stagnation_limit) {
      out.stagnated = true;
      break;
    }
    if ((next - w).norm() <= 1e-12 * std::sqrt(budget)) {
      out.converged = true;
      break;
    }
    w = next;
  }
  return out;
}

Eigen::VectorXcd linear_sinr_beam(const MultiuserScenario& scenario, double sinr_target) {
  scenario.validate();
  if (scenario.ir_channels.size() != 1) {
    throw UnsupportedError("linear_sinr_beam: exactly one IR is supported");
  }
  if (!(sinr_target >= 0.0)) throw DomainError("linear_sinr_beam: SINR target must be >= 0");
  const auto& h = scenario.ir_channels.front();
  const double p = scenario.budget;
  const double sinr_max = p * h.squaredNorm() / scenario.noise;
  if (sinr_target > sinr_max * (1.0 + 1e-12)) {
    throw InfeasibleError("linear_sinr_beam: SINR target exceeds the MRT SINR", sinr_max);
  }
  const Eigen::MatrixXcd g = gram(scenario.er_channels);
  const Eigen::MatrixXcd hh = h.adjoint() * h;
  auto beam = [&](double mu) -> Eigen::VectorXcd { return std::sqrt(p) * dominant(g + mu * hh); };
  auto sinr = [&](const Eigen::VectorXcd& w) { return gain_of(h, w) / scenario.noise; };

  Eigen::VectorXcd w = beam(0.0);
  if (sinr(w) >= sinr_target) return w;
  if (sinr_target >= sinr_max * (1.0 - 1e-12)) {
    // MRT.
    Eigen::VectorXcd mrt = h.adjoint() / h.norm();
    return std::sqrt(p) * dominant(mrt * mrt.adjoint());
  }
  const double scale = std::max(g.norm(), 1e-300) / std::max(hh.norm(), 1e-300);
  double lo = 0.0;
  double hi = scale;
  for (int guard = 0; sinr(beam(hi)) < sinr_target; ++guard) {
    lo = hi;
    hi *= 2.0;
    if (guard > 200) throw ConvergenceError("linear_sinr_beam: cannot bracket mu", {}, hi);
  }
  for (int it = 0; it < kBisectionCap; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sinr(beam(mid)) >= sinr_target) {
      hi = mid;
    } else {
      lo = mid;
    }
    if (hi - lo <= 1e-14 * hi) break;
  }
  return beam(hi);
}

RERegion gridsearch_frontier(const MultiuserScenario& scenario, const GridSearchOptions& options) {
  scenario.validate();
  if (scenario.m_t() != 2 || scenario.ir_channels.size() != 1 ||
      static_cast<int>(scenario.er_channels.size()) > options.max_ers) {
    throw UnsupportedError("gridsearch_frontier: needs M_t = 2, K = 1 and J <= " +
                           std::to_string(options.max_ers));
  }
  if (options.n_theta < 2 || options.n_phi < 1 || options.n_power < 1) {
    throw DomainError("gridsearch_frontier: grid sizes must be positive");
  }
  bool all_linear = true;
  for (const auto& m : scenario.harvesters) {
    all_linear = all_linear && std::holds_alternative<LinearParams>(m);
  }
  const int n_power = all_linear ? 1 : options.n_power;
  const auto& h = scenario.ir_channels.front();
  const std::size_t n_theta = static_cast<std::size_t>(options.n_theta);
  const std::size_t n_phi = static_cast<std::size_t>(options.n_phi);

  // Each theta row keeps its own Pareto set; rows are merged in order.
  std::vector<std::vector<REPoint>> rows(n_theta);
  parallel_for(n_theta, [&](std::size_t ti) {
    const double theta = 0.5 * std::numbers::pi * static_cast<double>(ti) /
                         static_cast<double>(n_theta - 1);
    std::vector<REPoint> pts;
    pts.reserve(n_phi * static_cast<std::size_t>(n_power));
    Eigen::VectorXcd w(2);
    for (std::size_t pi = 0; pi < n_phi; ++pi) {
      const double phi = 2.0 * std::numbers::pi * static_cast<double>(pi) /
                         static_cast<double>(n_phi);
      w[0] = std::cos(theta);
      w[1] = std::polar(std::sin(theta), phi);
      const double h_gain = gain_of(h, w);
      std::vector<double> er_gain(scenario.er_channels.size());
      for (std::size_t j = 0; j < er_gain.size(); ++j) {
        er_gain[j] = gain_of(scenario.er_channels[j], w);
      }
      for (int l = n_power; l >= 1; --l) {
        const double p = scenario.budget * static_cast<double>(l) / n_power;
        double dc = 0.0;
        for (std::size_t j = 0; j < er_gain.size(); ++j) {
          dc += harvested_dc(scenario.harvesters[j], p * er_gain[j]);
        }
        pts.push_back({std::log2(1.0 + p * h_gain / scenario.noise), dc,
                       static_cast<double>(ti * n_phi + pi), "grid"});
      }
    }
    rows[ti] = pareto_front(pts);
  });
  std::vector<REPoint> all;
  for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
  RERegion region;
  region.boundary = pareto_front(all);
  region.hull = upper_hull(region.boundary);
  region.units = EnergyUnits::kWatt;
  region.model = all_linear ? "linear" : "mixed";
  region.arch = "separated";
  region.label = "grid search";
  return region;
}

RERegion linear_beam_frontier(const MultiuserScenario& scenario, int n_points) {
  scenario.validate();
  if (scenario.ir_channels.size() != 1) {
    throw UnsupportedError("linear_beam_frontier: exactly one IR is supported");
  }
  const auto& h = scenario.ir_channels.front();
  const double sinr_max = scenario.budget * h.squaredNorm() / scenario.noise;
  const int n = std::max(n_points, 2);
  // Below the SINR of the unconstrained energy beam the constraint is
  // inactive, so the sweep is uniform in rate from there to the MRT rate.
  BeamformerSet free_beam;
  free_beam.info_beams.push_back(linear_sinr_beam(scenario, 0.0));
  const double r_lo = evaluate_scenario(scenario, free_beam).rate.front();
  const double r_hi = std::log2(1.0 + sinr_max);
  std::vector<REPoint> pts(static_cast<std::size_t>(n));
  parallel_for(pts.size(), [&](std::size_t i) {
    const double r = r_lo + (r_hi - r_lo) * static_cast<double>(i) / (n - 1);
    const double target = std::min(std::exp2(r) - 1.0, sinr_max);
    BeamformerSet beams;
    beams.info_beams.push_back(linear_sinr_beam(scenario, target));
    const auto ev = evaluate_scenario(scenario, beams);
    pts[i] = {ev.rate.front(), ev.sum_dc, target, "linear-model beam"};
  });
  RERegion region;
  region.boundary = pts;
  region.hull = upper_hull(pts);
  region.units = EnergyUnits::kWatt;
  region.model = "linear-designed";
  region.arch = "separated";
  region.label = "linear-model beams";
  return region;
}

MultiuserScenario random_scenario(std::uint64_t seed, int m_t, int n_ir, int n_er, double budget,
                                  double noise, double path_gain,
                                  const HarvesterModel& harvester) {
  if (m_t < 1 || n_ir < 1 || n_er < 1) throw DomainError("random_scenario: sizes must be >= 1");
  if (!(path_gain > 0.0)) throw DomainError("random_scenario: path gain must be > 0");
  Rng rng(seed);
  const double s = std::sqrt(path_gain / 2.0);
  auto draw = [&] {
    Eigen::RowVectorXcd r(m_t);
    for (int i = 0; i < m_t; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      r[i] = cdouble(s * re, s * im);
    }
    return r;
  };
  MultiuserScenario sc;
  for (int k = 0; k < n_ir; ++k) sc.ir_channels.push_back(draw());
  for (int j = 0; j < n_er; ++j) sc.er_channels.push_back(draw());
  sc.budget = budget;
  sc.noise = noise;
  sc.sinr_targets.assign(static_cast<std::size_t>(n_ir), 0.0);
  sc.harvesters.assign(static_cast<std::size_t>(n_er), harvester);
  sc.validate();
  return sc;
}

nlohmann::json to_json(const MultiuserScenario& scenario) {
  nlohmann::json harvesters = nlohmann::json::array();
  for (const auto& m : scenario.harvesters) harvesters.push_back(to_json(m));
  return {{"ir_channels", rows_to_json(scenario.ir_channels)},
          {"er_channels", rows_to_json(scenario.er_channels)},
          {"budget", scenario.budget},
          {"noise", scenario.noise},
          {"sinr_targets", scenario.sinr_targets},
          {"harvesters", std::move(harvesters)}};
}

MultiuserScenario scenario_from_json(const nlohmann::json& j) {
  try {
    MultiuserScenario sc;
    sc.ir_channels = rows_from_json(j.at("ir_channels"));
    sc.er_channels = rows_from_json(j.at("er_channels"));
    sc.budget = j.at("budget").get<double>();
    sc.noise = j.at("noise").get<double>();
    sc.sinr_targets = j.contains("sinr_targets")
                          ? j.at("sinr_targets").get<std::vector<double>>()
                          : std::vector<double>(sc.ir_channels.size(), 0.0);
    const auto& hv = j.at("harvesters");
    if (hv.is_object()) {
      sc.harvesters.assign(sc.er_channels.size(), harvester_from_json(hv));
    } else {
      for (const auto& m : hv) sc.harvesters.push_back(harvester_from_json(m));
    }
    sc.validate();
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("scenario JSON: ") + e.what());
  }
}

}  // namespace wipt
