#pragma once

// Power allocation and single-user transmit design.
//
//   waterfill            max sum log(1 + g_n p_n / s2)  s.t. sum p_n = P
//   modified_waterfill   ... and k2 * sum g_n p_n >= E
//                        p_n = max(1/(lambda - beta g_n) - s2/g_n, 0)
//   mimo_eigen_allocate  same on the eigenmodes of H^H H
//   saturation_allocate  received-power target from the inverted sigmoid
//   superposed_waveform_allocate
//                        multisine + CSCG split maximizing diode z_dc
//                        under a rate floor (projected gradient)
//
// Rates are in bit/s/Hz summed over subbands. Dual variables are for the
// natural-log objective.

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <span>
#include <vector>

#include "wipt/channel.hpp"
#include "wipt/harvester.hpp"
#include "wipt/signal.hpp"

namespace wipt {

struct PowerAllocation {
  std::vector<double> p;
  double lambda = 0.0;
  double beta = 0.0;
  double kkt_residual = 0.0;   // max stationarity / primal residual, relative
  double slackness = 0.0;      // beta * (received_power - target), relative
  int iterations = 0;          // total bisection steps
  double rate = 0.0;           // bit/s/Hz
  double received_power = 0.0; // sum g_n p_n [W]
};

inline constexpr int kBisectionCap = 200;

PowerAllocation waterfill(std::span<const double> gains, double noise, double budget);

/// Throws InfeasibleError (carrying k2 * P * max g) when e_target exceeds
/// what all power on the strongest subband delivers.
PowerAllocation modified_waterfill(std::span<const double> gains, double noise, double budget,
                                   double e_target, double k2);

struct CovarianceDesign {
  Eigen::MatrixXcd eigen_basis;    // columns: eigenvectors of H^H H, descending
  std::vector<double> eigen_gains; // eigenvalues of H^H H, descending
  PowerAllocation eigen_powers;

  Eigen::MatrixXcd covariance() const;
};

/// Unit noise by default; a general noise level rescales H <- H / sigma.
CovarianceDesign mimo_eigen_allocate(const Eigen::MatrixXcd& h, double budget, double e_target,
                                     double k2, double noise = 1.0);

/// Throws InfeasibleError when e_target >= p_sat, or when the received power
/// it needs exceeds budget * max g (carrying the best attainable DC power).
PowerAllocation saturation_allocate(std::span<const double> gains, double noise, double budget,
                                    double e_target, const SaturationParams& params);

// ---------------------------------------------------------------------------
// Superposed waveform

struct SuperposedOptions {
  int max_iterations = 500;
  double armijo = 0.1;
  double backtrack = 0.5;
  double tolerance = 1e-10;   // stop when the step moves less than this * P
  double power_floor = 1e-14; // relative floor on power-symbol powers for gradients
};

struct SuperposedAllocation {
  std::vector<SuperposedSubband> subbands;  // phase = -arg(h_n)
  double rate = 0.0;
  double z_dc = 0.0;
  double m2_rf = 0.0;
  double m4_rf = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after each accepted step of the winning start

  Superposed waveform(double budget) const;
};

/// z_dc and its gradient for coherent power symbols of powers p_power and
/// CSCG information symbols of powers p_info over channel gains g. The
/// envelope average is exact (tone grid of 4N samples).
struct SuperposedObjective {
  std::vector<double> gains;
  DiodeNonlinearParams harvester;

  struct Value {
    double z_dc = 0.0;
    double m2_rf = 0.0;
    double m4_rf = 0.0;
  };

  Value value(std::span<const double> p_power, std::span<const double> p_info) const;
  /// Gradient w.r.t. (p_power, p_info), concatenated. Power-symbol entries
  /// are evaluated at max(p, floor) to stay finite at zero.
  std::vector<double> gradient(std::span<const double> p_power, std::span<const double> p_info,
                               double floor = 0.0) const;
};

double info_rate(std::span<const double> gains, double noise, std::span<const double> p_info);

/// Throws InfeasibleError (carrying the water-filling rate) when rate_floor
/// exceeds the full-power water-filling rate.
SuperposedAllocation superposed_waveform_allocate(std::span<const cdouble> response,
                                                  double noise, double budget, double rate_floor,
                                                  const DiodeNonlinearParams& harvester,
                                                  const SuperposedOptions& options = {});

SuperposedAllocation superposed_waveform_allocate(const ChannelRealization& channel, double noise,
                                                  double budget, double rate_floor,
                                                  const DiodeNonlinearParams& harvester,
                                                  const SuperposedOptions& options = {});

/// Euclidean projection of (p_power, p_info) onto {x >= 0, sum x = P,
/// info rate >= rate_floor}. Exposed for tests.
void project_superposed(std::span<const double> gains, double noise, double budget,
                        double rate_floor, std::vector<double>& p_power,
                        std::vector<double>& p_info);

nlohmann::json to_json(const PowerAllocation& a);
nlohmann::json to_json(const CovarianceDesign& d);
nlohmann::json to_json(const SuperposedAllocation& a);

}  // namespace wipt
