#pragma once

// Per-subband MIMO frequency responses built from multipath components.
//
//   h[i,m,n] = sum_l alpha_l * exp(j * (-2*pi*f_n*tau_l + zeta[i,m,n,l]))
//
// Noise is never added here; it belongs to the rate expressions.

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace wipt {

using cdouble = std::complex<double>;

struct FrequencyGrid {
  double f0 = 0.0;       // carrier of subband 0 [Hz]
  double delta_f = 0.0;  // subband spacing [Hz]
  int n_subbands = 1;
  double f_w = 0.0;      // per-subband bandwidth [Hz], <= delta_f

  double frequency(int n) const { return f0 + n * delta_f; }
  void validate() const;

  friend bool operator==(const FrequencyGrid&, const FrequencyGrid&) = default;
};

/// Phase shifts zeta[rx, tx, n] of one path. Compact forms cover the
/// common cases where the phase does not depend on the subband.
class PhaseShifts {
 public:
  static PhaseShifts zero() { return PhaseShifts(); }
  static PhaseShifts uniform(double phase);
  /// values laid out [rx][tx]; independent of subband.
  static PhaseShifts per_antenna(int m_r, int m_t, std::vector<double> values);
  /// values laid out [rx][tx][n].
  static PhaseShifts full(int m_r, int m_t, int n_subbands, std::vector<double> values);

  double at(int rx, int tx, int n) const;
  /// Throws DomainError if this tensor cannot be indexed for the given shape.
  void check_shape(int m_r, int m_t, int n_subbands) const;

 private:
  enum class Kind { kZero, kUniform, kPerAntenna, kFull };
  Kind kind_ = Kind::kZero;
  int m_r_ = 0;
  int m_t_ = 0;
  int n_ = 0;
  std::vector<double> values_;
};

struct PathComponent {
  double alpha = 0.0;  // amplitude gain
  double tau = 0.0;    // delay [s]
  PhaseShifts zeta;
};

struct ChannelRealization {
  FrequencyGrid grid;
  int m_r = 1;
  int m_t = 1;
  std::vector<Eigen::MatrixXcd> h;  // one M_r x M_t matrix per subband
  /// Set when the path delay spread is >= 1/f_w, i.e. the per-subband
  /// flat-fading approximation does not hold.
  bool narrowband_violation = false;

  int n_subbands() const { return static_cast<int>(h.size()); }
  bool is_siso() const { return m_r == 1 && m_t == 1; }
  /// h_n for a SISO channel. Throws DomainError for MIMO channels.
  std::vector<cdouble> siso_response() const;
  /// |h_n|^2 for a SISO channel.
  std::vector<double> siso_gains() const;
  void validate() const;
};

ChannelRealization frequency_response(std::span<const PathComponent> paths,
                                      const FrequencyGrid& grid, int m_t, int m_r);

/// Random multipath channel: Rayleigh path amplitudes with E[alpha^2] =
/// 1/n_paths, independent uniform phases per (rx, tx, path), delays uniform
/// within the narrowband limit. Same seed gives a bit-identical result.
ChannelRealization random_channel(std::uint64_t seed, const FrequencyGrid& grid, int m_t,
                                  int m_r, int n_paths);

/// SISO channel with the given per-subband responses (test and CLI helper).
ChannelRealization channel_from_response(const FrequencyGrid& grid,
                                         std::span<const cdouble> response);

/// JSON layout: {"grid": {...}, "m_r", "m_t", "narrowband_violation",
/// "h": [subband][rx][tx] -> [re, im]}.
nlohmann::json to_json(const ChannelRealization& channel);
ChannelRealization channel_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FrequencyGrid& grid);
FrequencyGrid grid_from_json(const nlohmann::json& j);

}  // namespace wipt
