#pragma once

// Energy-harvester models mapping received RF statistics to DC output.
//
// Three models are provided:
//   * linear:          P_dc = e3 * P_rf, or z_dc = k2 * E[y^2]
//   * diode nonlinear: z_dc = k2 * E[y^2] + k4 * E[y^4]  (Taylor order 4)
//   * saturation:      logistic map of P_rf with ceiling p_sat
//
// All powers are in watts. The diode model returns z_dc, a proxy for the
// rectifier output current; maximizing it maximizes delivered DC power.

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <span>
#include <variant>

namespace wipt {

struct LinearParams {
  double k2 = 1.0;  // z_dc per watt of E[y_rf^2]
  double e3 = 1.0;  // RF-to-DC efficiency, in [0, 1]

  void validate() const;
};

struct DiodeNonlinearParams {
  double k2 = 0.0;
  double k4 = 0.0;

  void validate() const;
};

/// Logistic saturation model. `omega` is derived from (a, b) and is never
/// set independently.
class SaturationParams {
 public:
  /// a: steepness [1/W], b: turn-on point [W], p_sat: ceiling [W].
  SaturationParams(double a, double b, double p_sat);

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double p_sat() const noexcept { return p_sat_; }
  double omega() const noexcept { return omega_; }

  friend bool operator==(const SaturationParams&, const SaturationParams&) = default;

 private:
  double a_;
  double b_;
  double p_sat_;
  double omega_;
};

using HarvesterModel = std::variant<LinearParams, DiodeNonlinearParams, SaturationParams>;

struct MeasurementPoint {
  double p_rf = 0.0;
  double p_dc = 0.0;
};

double linear_dc_power(double p_rf, const LinearParams& params);

/// k2*m2 + k4*m4 for an RF moment pair. Throws DomainError unless
/// m2 >= 0 and m4 >= m2^2.
double zdc_from_rf_moments(double m2, double m4, const DiodeNonlinearParams& params);

double sigmoid_dc_power(double p_rf, const SaturationParams& params);

/// d(sigmoid_dc_power)/d(p_rf).
double sigmoid_dc_slope(double p_rf, const SaturationParams& params);

/// Received RF power at which the sigmoid delivers `e_target`.
/// Throws InfeasibleError when e_target >= p_sat (no finite input reaches it).
double invert_sigmoid(double e_target, const SaturationParams& params);

struct SigmoidFitOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-12;
};

struct SigmoidFit {
  /// Empty when the measurement set is degenerate (all p_dc == 0).
  std::optional<SaturationParams> params;
  double residual = 0.0;  // sqrt of the sum of squared residuals [W]
  int iterations = 0;
  bool degenerate = false;
};

/// Least-squares logistic fit, damped Gauss-Newton with multiple starts.
/// Throws InsufficientDataError for fewer than 4 points and ConvergenceError
/// if no start converges within the iteration cap.
SigmoidFit fit_sigmoid(std::span<const MeasurementPoint> points,
                       const SigmoidFitOptions& options = {});

/// DC output (watts, or z_dc for the diode model) for a narrowband CSCG
/// signal of received power `p_rf`.
double harvested_dc(const HarvesterModel& model, double p_rf);

/// {"model": "linear" | "diode" | "sigmoid", ...parameters}
nlohmann::json to_json(const HarvesterModel& model);
HarvesterModel harvester_from_json(const nlohmann::json& j);

}  // namespace wipt
