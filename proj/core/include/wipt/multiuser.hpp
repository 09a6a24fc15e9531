#pragma once

// Multi-user downlink with separated receivers: K information receivers
// (IRs) and J energy receivers (ERs) served by an M_t-antenna transmitter.
//
//   x = sum_k p_k s_k + sum_j v_j e_j
//   gamma_k = |h_k p_k|^2 / (sum_{i != k} |h_k p_i|^2 + sum_j |h_k v_j|^2 + sigma^2)

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <vector>

#include "wipt/harvester.hpp"
#include "wipt/region.hpp"

namespace wipt {

struct MultiuserScenario {
  std::vector<Eigen::RowVectorXcd> ir_channels;  // h_k, 1 x M_t
  std::vector<Eigen::RowVectorXcd> er_channels;  // g_j, 1 x M_t
  double budget = 0.0;
  double noise = 0.0;
  std::vector<double> sinr_targets;              // one per IR
  std::vector<HarvesterModel> harvesters;        // one per ER

  int m_t() const;
  void validate() const;
};

struct BeamformerSet {
  std::vector<Eigen::VectorXcd> info_beams;    // p_k
  std::vector<Eigen::VectorXcd> energy_beams;  // v_j, empty by default

  double total_power() const;
};

struct EvaluateOptions {
  /// Set when IRs can cancel the energy signals (evaluation-only studies).
  bool energy_beams_cancelled = false;
};

struct ScenarioEvaluation {
  std::vector<double> sinr;
  std::vector<double> rate;          // log2(1 + sinr)
  std::vector<double> received_rf;   // per ER [W]
  std::vector<double> harvested_dc;  // per ER, through its harvester model
  double sum_dc = 0.0;
};

ScenarioEvaluation evaluate_scenario(const MultiuserScenario& scenario, const BeamformerSet& beams,
                                     const EvaluateOptions& options = {});

/// sqrt(P) * v_max(sum_j g_j^H g_j), first nonzero entry real and positive.
Eigen::VectorXcd energy_beamform_linear(const std::vector<Eigen::RowVectorXcd>& er_channels,
                                        double budget);

struct WeightedEigenOptions {
  int max_iterations = 200;
  int stagnation_limit = 10;
  double tolerance = 1e-12;
};

struct WeightedEigenResult {
  Eigen::VectorXcd beam;
  double sum_dc = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stagnated = false;
  std::vector<double> accepted;  // sum-DC of each accepted (improving) iterate
};

/// Fixed point beta_j <- sigmoid slope at ER j, beam <- v_max(sum beta_j g_j^H g_j),
/// started from the linear-model beam. Keeps the best iterate.
WeightedEigenResult weighted_eigen_saturation(const std::vector<Eigen::RowVectorXcd>& er_channels,
                                              double budget,
                                              const std::vector<SaturationParams>& sigmoids,
                                              const WeightedEigenOptions& options = {});

/// Linear-model optimal single-IR beam: maximizes sum_j |g_j w|^2 subject to
/// SINR >= target, as sqrt(P) v_max(G + mu h^H h) with mu found by bisection.
/// Throws InfeasibleError (carrying the MRT SINR) above P |h|^2 / sigma^2.
Eigen::VectorXcd linear_sinr_beam(const MultiuserScenario& scenario, double sinr_target);

struct GridSearchOptions {
  int n_theta = 181;
  int n_phi = 361;
  int n_power = 32;  // power levels, only when some ER is not linear
  int max_ers = 8;
};

/// Exhaustive (theta, phi) search over unit beams [cos t, sin t e^{j p}]
/// for M_t = 2, K = 1. Returns the Pareto frontier of (IR rate, sum DC).
RERegion gridsearch_frontier(const MultiuserScenario& scenario,
                             const GridSearchOptions& options = {});

/// The linear-model optimal beams over an SINR sweep, scored with the
/// scenario's own harvesters.
RERegion linear_beam_frontier(const MultiuserScenario& scenario, int n_points = 64);

/// CN(0, 1) channels scaled by `path_gain`.
MultiuserScenario random_scenario(std::uint64_t seed, int m_t, int n_ir, int n_er, double budget,
                                  double noise, double path_gain,
                                  const HarvesterModel& harvester);

nlohmann::json to_json(const MultiuserScenario& scenario);
MultiuserScenario scenario_from_json(const nlohmann::json& j);

}  // namespace wipt
