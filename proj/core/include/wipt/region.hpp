#pragma once

// Rate-energy regions. A region is a list of achievable boundary points
// plus its upper-right concave hull (time sharing between boundary points
// is always achievable).

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wipt/allocate.hpp"
#include "wipt/channel.hpp"
#include "wipt/harvester.hpp"

namespace wipt {

struct IdealReceiver {};
/// Fraction tau of the time harvests, 1 - tau decodes.
struct TimeSwitching {};
/// Fraction rho of the received power goes to the harvester. Antenna noise
/// sigma_a_sq hits both branches; processing noise sigma_p_sq only the decoder.
struct PowerSplitting {
  double sigma_a_sq = 0.0;
  double sigma_p_sq = 0.0;

  void validate() const;
  /// Decoder noise referred to the antenna for split rho.
  double effective_noise(double rho) const;
};

using ReceiverArch = std::variant<IdealReceiver, TimeSwitching, PowerSplitting>;

std::string arch_name(const ReceiverArch& arch);
/// Worst-case split used when only the total noise is known.
PowerSplitting worst_case_split(double noise);

enum class EnergyUnits { kWatt, kZdc };
std::string units_name(EnergyUnits units);

struct REPoint {
  double rate = 0.0;    // bit/s/Hz
  double energy = 0.0;  // W or z_dc, see RERegion::units
  double param = 0.0;   // sweep parameter (tau, rho, target, Pr, l, ...)
  std::string strategy;
};

struct RERegion {
  std::vector<REPoint> boundary;
  std::vector<REPoint> hull;
  EnergyUnits units = EnergyUnits::kWatt;
  std::string model;
  std::string arch;
  std::string label;  // legend text; defaults to "model / arch"

  double max_rate() const;
  double max_energy() const;
};

/// Concave upper-right frontier from the max-energy point to the max-rate
/// point; rate increasing, energy nonincreasing.
std::vector<REPoint> upper_hull(std::span<const REPoint> points);

/// Largest energy achievable at `rate` by time sharing along a hull.
/// -infinity beyond the hull's maximum rate.
double energy_at(std::span<const REPoint> hull, double rate);

/// Largest energy among points whose rate is at least `rate` (no time sharing).
double max_energy_at_rate(std::span<const REPoint> points, double rate);

/// Non-dominated subset, sorted by increasing rate.
std::vector<REPoint> pareto_front(std::span<const REPoint> points);

inline constexpr int kDefaultRegionPoints = 64;

// ---------------------------------------------------------------------------
// Linear harvester

/// One boundary point of the single-subband linear region: param is tau
/// for TS and rho for PS, ignored for the ideal receiver.
REPoint linear_single_point(double gain, double budget, double noise, const ReceiverArch& arch,
                            double k2, double param);

RERegion region_linear_single(double gain, double budget, double noise, const ReceiverArch& arch,
                              double k2, int n_points = kDefaultRegionPoints);

/// Maps total received RF power to the harvested energy metric.
using EnergyMap = std::function<double(double)>;

struct GainsRegionSpec {
  std::vector<double> gains;
  double budget = 0.0;
  double noise = 0.0;
  EnergyMap energy;
  EnergyUnits units = EnergyUnits::kWatt;
  std::string model;
  int n_points = kDefaultRegionPoints;
};

/// Region over parallel channels with CSCG inputs and a monotone energy
/// map: the rate-optimal allocation for each received-power target is the
/// modified water-filling solution.
RERegion region_from_gains(const GainsRegionSpec& spec, const ReceiverArch& arch);

RERegion region_linear_multisubband(const ChannelRealization& channel, double budget, double noise,
                                    double k2, const ReceiverArch& arch,
                                    int n_points = kDefaultRegionPoints);

RERegion region_mimo_linear(const Eigen::MatrixXcd& h, double budget, double noise, double k2,
                            const ReceiverArch& arch, int n_points = kDefaultRegionPoints);

RERegion region_saturation(std::span<const double> gains, double budget, double noise,
                           const SaturationParams& params, const ReceiverArch& arch,
                           int n_points = kDefaultRegionPoints);

RERegion region_saturation(const ChannelRealization& channel, double budget, double noise,
                           const SaturationParams& params, const ReceiverArch& arch,
                           int n_points = kDefaultRegionPoints);

// ---------------------------------------------------------------------------
// Diode nonlinear harvester

inline constexpr double kDefaultFlashMaxScale = 10.0;

struct NonlinearSingleRegion {
  RERegion asymmetric;  // Pr from P/2 (CSCG) to P (real Gaussian)
  RERegion flash;       // CSCG point time-shared with Flash(l), l in [1, l_max]
  RERegion combined;
};

NonlinearSingleRegion region_diode_nonlinear_single(double gain, double budget, double noise,
                                                    const DiodeNonlinearParams& harvester,
                                                    double flash_l_max = kDefaultFlashMaxScale,
                                                    int n_points = kDefaultRegionPoints);

struct NonlinearMultiOptions {
  int n_points = kDefaultRegionPoints;  // rate-floor sweep
  int n_split = 12;       // rho grid for PS
  SuperposedOptions solver;
};

/// Superposed multisine + CSCG region via a rate-floor sweep.
RERegion region_diode_nonlinear_multisubband(std::span<const cdouble> response, double budget,
                                             double noise, const DiodeNonlinearParams& harvester,
                                             const ReceiverArch& arch,
                                             const NonlinearMultiOptions& options = {});

RERegion region_diode_nonlinear_multisubband(const ChannelRealization& channel, double budget,
                                             double noise, const DiodeNonlinearParams& harvester,
                                             const ReceiverArch& arch,
                                             const NonlinearMultiOptions& options = {});

/// CSCG-only baseline: modified water-filling allocations scored with z_dc.
RERegion region_cscg_under_nonlinear(std::span<const double> gains, double budget, double noise,
                                     const DiodeNonlinearParams& harvester,
                                     int n_points = kDefaultRegionPoints);

// ---------------------------------------------------------------------------
// Output

/// `rate,energy,param` with leading "#" lines carrying version and config.
void write_csv(std::ostream& out, const RERegion& region, const nlohmann::json& config,
               bool hull_only = false);
nlohmann::json to_json(const REPoint& p);
nlohmann::json to_json(const RERegion& region);

/// Self-contained SVG 1.1 plot. Throws DomainError if the regions mix
/// energy units, unless `normalize` is set (each curve is then scaled to
/// its own maximum energy).
std::string render_svg(std::span<const RERegion> regions, const std::string& title,
                       bool normalize = false);

}  // namespace wipt
