#pragma once

// Input distributions, their moments, and time-domain RF evaluation.
//
// RF moments are true time averages of y_rf(t) over one period 1/delta_f.
// With y_rf = sqrt(2) Re{s(t) e^{j 2 pi f0 t}}:
//   avg y^2 = avg |s|^2,   avg y^4 = 3/2 avg |s|^4.

#include <nlohmann/json_fwd.hpp>

#include <complex>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "wipt/channel.hpp"
#include "wipt/harvester.hpp"

namespace wipt {

struct CW {
  double power = 0.0;
};
struct CSCG {
  double power = 0.0;
};
struct RealGaussian {
  double power = 0.0;
};
struct AsymmetricGaussian {
  double p_real = 0.0;
  double p_imag = 0.0;
};
/// Amplitude l*sqrt(P) with probability 1/l^2, else 0; uniform phase.
struct Flash {
  double l = 1.0;
  double power = 0.0;
};

/// One subband of a superposed waveform: deterministic power symbol of
/// power p_power and phase `phase`, plus CSCG information symbol of power p_info.
struct SuperposedSubband {
  double p_power = 0.0;
  double phase = 0.0;
  double p_info = 0.0;
};

struct Superposed {
  std::vector<SuperposedSubband> subbands;
  double budget = 0.0;

  double total_power() const;
  /// Checks non-negativity and that the total matches the budget.
  void validate(double rel_tol = 1e-9) const;
};

using InputDistribution =
    std::variant<CW, CSCG, RealGaussian, AsymmetricGaussian, Flash, Superposed>;

void validate(const InputDistribution& dist);
double average_power(const InputDistribution& dist);

struct MomentPair {
  double m2 = 0.0;  // E[|x|^2] [W]
  double m4 = 0.0;  // E[|x|^4] [W^2]
};

/// Baseband moments. Superposed raises UnsupportedError.
MomentPair analytic_moments(const InputDistribution& dist);

/// n i.i.d. draws. Superposed raises UnsupportedError.
std::vector<cdouble> sample_symbols(const InputDistribution& dist, std::size_t n,
                                    std::uint64_t seed);

/// (m2_rf, m4_rf) of a single-subband signal over a channel with |h|^2.
MomentPair rf_moments_single_subband(const InputDistribution& dist, double channel_gain_sq);

inline constexpr int kDefaultOversampling = 8;

/// Number of samples synthesize_rf produces for this grid.
std::size_t rf_samples_per_period(const FrequencyGrid& grid, int oversampling);

/// y_rf(t) = sqrt(2) Re{sum_n h_n x_n e^{j 2 pi f_n t}} sampled uniformly
/// over one period 1/delta_f, `oversampling` samples per cycle of the
/// highest carrier. Requires oversampling >= 8 and f0 an integer multiple
/// of delta_f (the period must close exactly).
std::vector<double> synthesize_rf(std::span<const cdouble> symbols,
                                  const ChannelRealization& channel,
                                  int oversampling = kDefaultOversampling);

struct RfStatistics {
  double m2_rf = 0.0;
  double m4_rf = 0.0;
  double m2_stderr = 0.0;
  double m4_stderr = 0.0;
  double z_dc = 0.0;
  double z_dc_stderr = 0.0;
  int runs = 0;
};

/// Time-domain z_dc for a random waveform. Superposed draws per-subband
/// CSCG information symbols on top of its deterministic power symbols;
/// any other distribution is drawn i.i.d. on every subband. Runs use
/// counter-based streams and are reduced in run order.
RfStatistics evaluate_zdc_timedomain(const InputDistribution& waveform,
                                     const ChannelRealization& channel,
                                     const DiodeNonlinearParams& harvester, int mc_runs,
                                     std::uint64_t seed,
                                     int oversampling = kDefaultOversampling);

/// Time-domain z_dc for fixed per-subband symbols (one run, zero error).
RfStatistics evaluate_zdc_timedomain(std::span<const cdouble> symbols,
                                     const ChannelRealization& channel,
                                     const DiodeNonlinearParams& harvester,
                                     int oversampling = kDefaultOversampling);

/// {"subbands": [{"p_power", "phase_power", "p_info"}], "budget"}
nlohmann::json to_json(const Superposed& waveform);
Superposed superposed_from_json(const nlohmann::json& j);

}  // namespace wipt
