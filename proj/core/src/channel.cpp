#include "wipt/channel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "wipt/error.hpp"
#include "wipt/random.hpp"

namespace wipt {

void FrequencyGrid::validate() const {
  if (!(f0 > 0.0) || !(delta_f > 0.0) || !(f_w > 0.0)) {
    throw DomainError("frequency grid: f0, delta_f and f_w must be positive");
  }
  if (n_subbands < 1) throw DomainError("frequency grid: need at least one subband");
  if (f_w > delta_f) throw DomainError("frequency grid: f_w must not exceed delta_f");
}

PhaseShifts PhaseShifts::uniform(double phase) {
  PhaseShifts p;
  p.kind_ = Kind::kUniform;
  p.values_ = {phase};
  return p;
}

PhaseShifts PhaseShifts::per_antenna(int m_r, int m_t, std::vector<double> values) {
  if (m_r < 1 || m_t < 1 || values.size() != static_cast<std::size_t>(m_r * m_t)) {
    throw DomainError("PhaseShifts::per_antenna: expected m_r*m_t values");
  }
  PhaseShifts p;
  p.kind_ = Kind::kPerAntenna;
  p.m_r_ = m_r;
  p.m_t_ = m_t;
  p.values_ = std::move(values);
  return p;
}

PhaseShifts PhaseShifts::full(int m_r, int m_t, int n_subbands, std::vector<double> values) {
  if (m_r < 1 || m_t < 1 || n_subbands < 1 ||
      values.size() != static_cast<std::size_t>(m_r * m_t * n_subbands)) {
    throw DomainError("PhaseShifts::full: expected m_r*m_t*n_subbands values");
  }
  PhaseShifts p;
  p.kind_ = Kind::kFull;
  p.m_r_ = m_r;
  p.m_t_ = m_t;
  p.n_ = n_subbands;
  p.values_ = std::move(values);
  return p;
}

double PhaseShifts::at(int rx, int tx, int n) const {
  switch (kind_) {
    case Kind::kZero:
      return 0.0;
    case Kind::kUniform:
      return values_[0];
    case Kind::kPerAntenna:
      return values_[static_cast<std::size_t>(rx * m_t_ + tx)];
    case Kind::kFull:
      return values_[static_cast<std::size_t>((rx * m_t_ + tx) * n_ + n)];
  }
  return 0.0;
}

void PhaseShifts::check_shape(int m_r, int m_t, int n_subbands) const {
  const bool ok = (kind_ == Kind::kZero || kind_ == Kind::kUniform) ||
                  (kind_ == Kind::kPerAntenna && m_r_ == m_r && m_t_ == m_t) ||
                  (kind_ == Kind::kFull && m_r_ == m_r && m_t_ == m_t && n_ == n_subbands);
  if (!ok) throw DomainError("path phase tensor does not match the channel shape");
}

std::vector<cdouble> ChannelRealization::siso_response() const {
  if (!is_siso()) throw DomainError("expected a SISO channel");
  std::vector<cdouble> out;
  out.reserve(h.size());
  for (const auto& m : h) out.push_back(m(0, 0));
  return out;
}

std::vector<double> ChannelRealization::siso_gains() const {
  std::vector<double> g;
  for (const auto& v : siso_response()) g.push_back(std::norm(v));
  return g;
}

void ChannelRealization::validate() const {
  grid.validate();
  if (m_r < 1 || m_t < 1) throw DomainError("channel: antenna counts must be >= 1");
  if (static_cast<int>(h.size()) != grid.n_subbands) {
    throw DomainError("channel: number of matrices differs from the subband count");
  }
  for (const auto& m : h) {
    if (m.rows() != m_r || m.cols() != m_t) {
      throw DomainError("channel: inconsistent matrix dimensions across subbands");
    }
    if (!m.allFinite()) throw DomainError("channel: non-finite entry");
  }
}

ChannelRealization frequency_response(std::span<const PathComponent> paths,
                                      const FrequencyGrid& grid, int m_t, int m_r) {
  grid.validate();
  if (paths.empty()) throw DomainError("frequency_response: empty path list");
  if (m_t < 1 || m_r < 1) throw DomainError("frequency_response: antenna counts must be >= 1");
  double tau_min = paths.front().tau;
  double tau_max = paths.front().tau;
  for (const auto& p : paths) {
    if (!(p.alpha >= 0.0) || !(p.tau >= 0.0)) {
      throw DomainError("frequency_response: path amplitude and delay must be >= 0");
    }
    p.zeta.check_shape(m_r, m_t, grid.n_subbands);
    tau_min = std::min(tau_min, p.tau);
    tau_max = std::max(tau_max, p.tau);
  }

  ChannelRealization ch;
  ch.grid = grid;
  ch.m_r = m_r;
  ch.m_t = m_t;
  ch.narrowband_violation = (tau_max - tau_min) >= 1.0 / grid.f_w;
  ch.h.assign(static_cast<std::size_t>(grid.n_subbands), Eigen::MatrixXcd::Zero(m_r, m_t));
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (int n = 0; n < grid.n_subbands; ++n) {
    const double fn = grid.frequency(n);
    auto& hn = ch.h[static_cast<std::size_t>(n)];
    for (int i = 0; i < m_r; ++i) {
      for (int m = 0; m < m_t; ++m) {
        cdouble acc{0.0, 0.0};
        for (const auto& p : paths) {
          acc += std::polar(p.alpha, -two_pi * fn * p.tau + p.zeta.at(i, m, n));
        }
        hn(i, m) = acc;
      }
    }
  }
  return ch;
}

ChannelRealization random_channel(std::uint64_t seed, const FrequencyGrid& grid, int m_t,
                                  int m_r, int n_paths) {
  if (n_paths < 1) throw DomainError("random_channel: need at least one path");
  grid.validate();
  Rng rng(seed);
  const double mean_power = 1.0 / n_paths;
  // Keep the delay spread strictly inside 1/f_w.
  const double max_delay = 0.999 / grid.f_w;
  std::vector<PathComponent> paths;
  paths.reserve(static_cast<std::size_t>(n_paths));
  for (int l = 0; l < n_paths; ++l) {
    PathComponent p;
    p.alpha = std::sqrt(-mean_power * std::log(rng.uniform_open()));
    p.tau = max_delay * rng.uniform();
    std::vector<double> phases(static_cast<std::size_t>(m_r * m_t));
    for (auto& z : phases) z = 2.0 * std::numbers::pi * rng.uniform();
    p.zeta = PhaseShifts::per_antenna(m_r, m_t, std::move(phases));
    paths.push_back(std::move(p));
  }
  return frequency_response(paths, grid, m_t, m_r);
}

ChannelRealization channel_from_response(const FrequencyGrid& grid,
                                         std::span<const cdouble> response) {
  grid.validate();
  if (static_cast<int>(response.size()) != grid.n_subbands) {
    throw DomainError("channel_from_response: response length differs from subband count");
  }
  ChannelRealization ch;
  ch.grid = grid;
  for (const auto& v : response) {
    Eigen::MatrixXcd m(1, 1);
    m(0, 0) = v;
    ch.h.push_back(m);
  }
  ch.validate();
  return ch;
}

nlohmann::json to_json(const FrequencyGrid& grid) {
  return {{"f0", grid.f0},
          {"delta_f", grid.delta_f},
          {"n_subbands", grid.n_subbands},
          {"f_w", grid.f_w}};
}

FrequencyGrid grid_from_json(const nlohmann::json& j) {
  FrequencyGrid g;
  g.f0 = j.at("f0").get<double>();
  g.delta_f = j.at("delta_f").get<double>();
  g.n_subbands = j.at("n_subbands").get<int>();
  g.f_w = j.value("f_w", g.delta_f);
  g.validate();
  return g;
}

nlohmann::json to_json(const ChannelRealization& channel) {
  nlohmann::json h = nlohmann::json::array();
  for (const auto& m : channel.h) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int k = 0; k < m.cols(); ++k) row.push_back({m(i, k).real(), m(i, k).imag()});
      rows.push_back(std::move(row));
    }
    h.push_back(std::move(rows));
  }
  return {{"grid", to_json(channel.grid)},
          {"m_r", channel.m_r},
          {"m_t", channel.m_t},
          {"narrowband_violation", channel.narrowband_violation},
          {"h", std::move(h)}};
}

ChannelRealization channel_from_json(const nlohmann::json& j) {
  try {
    ChannelRealization ch;
    ch.grid = grid_from_json(j.at("grid"));
    const auto& h = j.at("h");
    ch.m_r = j.value("m_r", static_cast<int>(h.at(0).size()));
    ch.m_t = j.value("m_t", static_cast<int>(h.at(0).at(0).size()));
    ch.narrowband_violation = j.value("narrowband_violation", false);
    for (const auto& rows : h) {
      if (static_cast<int>(rows.size()) != ch.m_r) {
        throw DomainError("channel JSON: row count differs from m_r");
      }
      Eigen::MatrixXcd m(ch.m_r, ch.m_t);
      for (int i = 0; i < ch.m_r; ++i) {
        const auto& row = rows.at(static_cast<std::size_t>(i));
        if (static_cast<int>(row.size()) != ch.m_t) {
          throw DomainError("channel JSON: column count differs from m_t");
        }
        for (int k = 0; k < ch.m_t; ++k) {
          const auto& z = row.at(static_cast<std::size_t>(k));
          m(i, k) = cdouble(z.at(0).get<double>(), z.at(1).get<double>());
        }
      }
      ch.h.push_back(std::move(m));
    }
    ch.validate();
    return ch;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("channel JSON: ") + e.what());
  }
}

}  // namespace wipt
