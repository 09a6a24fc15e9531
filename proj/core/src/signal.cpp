#include "wipt/signal.hpp"

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

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_power(double p, const char* what) {
  if (!(p >= 0.0) || !std::isfinite(p)) {
    throw DomainError(std::string(what) + ": power must be finite and >= 0");
  }
}

cdouble draw(const InputDistribution& dist, Rng& rng) {
  struct Visitor {
    Rng& rng;
    cdouble operator()(const CW& d) const { return {std::sqrt(d.power), 0.0}; }
    cdouble operator()(const CSCG& d) const {
      const double s = std::sqrt(d.power / 2.0);
      const double re = rng.normal();
      const double im = rng.normal();
      return {s * re, s * im};
    }
    cdouble operator()(const RealGaussian& d) const {
      return {std::sqrt(d.power) * rng.normal(), 0.0};
    }
    cdouble operator()(const AsymmetricGaussian& d) const {
      const double re = rng.normal();
      const double im = rng.normal();
      return {std::sqrt(d.p_real) * re, std::sqrt(d.p_imag) * im};
    }
    cdouble operator()(const Flash& d) const {
      const double u = rng.uniform();
      const double theta = kTwoPi * rng.uniform();
      if (u >= 1.0 / (d.l * d.l)) return {0.0, 0.0};
      return std::polar(d.l * std::sqrt(d.power), theta);
    }
    cdouble operator()(const Superposed&) const {
      throw UnsupportedError("per-symbol draws are not defined for a superposed waveform");
    }
  };
  return std::visit(Visitor{rng}, dist);
}

bool is_deterministic(const InputDistribution& dist) {
  if (std::holds_alternative<CW>(dist)) return true;
  if (const auto* s = std::get_if<Superposed>(&dist)) {
    for (const auto& sb : s->subbands) {
      if (sb.p_info > 0.0) return false;
    }
    return true;
  }
  return false;
}

/// Precomputed one-period synthesis for a SISO channel.
class RfSynth {
 public:
  RfSynth(const ChannelRealization& channel, int oversampling) {
    if (!channel.is_siso()) throw DomainError("RF synthesis needs a SISO channel");
    channel.validate();
    const auto& grid = channel.grid;
    if (oversampling < 8) {
      throw DomainError("synthesize_rf: oversampling must be >= 8 samples per carrier cycle");
    }
    const double ratio = grid.f0 / grid.delta_f;
    const double m0 = std::round(ratio);
    if (std::abs(ratio - m0) > 1e-9 * std::max(1.0, ratio) || m0 < 1.0) {
      throw DomainError("synthesize_rf: f0 must be an integer multiple of delta_f");
    }
    const auto base = static_cast<std::size_t>(m0);
    const std::size_t n = static_cast<std::size_t>(grid.n_subbands);
    k_ = static_cast<std::size_t>(oversampling) * (base + n - 1);
    twiddle_.resize(k_);
    for (std::size_t i = 0; i < k_; ++i) {
      twiddle_[i] = std::polar(1.0, kTwoPi * static_cast<double>(i) / static_cast<double>(k_));
    }
    step_.resize(n);
    for (std::size_t i = 0; i < n; ++i) step_[i] = (base + i) % k_;
    h_ = channel.siso_response();
  }

  std::size_t samples() const { return k_; }

  std::vector<double> synthesize(std::span<const cdouble> symbols) const {
    std::vector<double> y(k_, 0.0);
    accumulate(symbols, [&](std::size_t k, double v) { y[k] = v; });
    return y;
  }

  MomentPair moments(std::span<const cdouble> symbols) const {
    double s2 = 0.0;
    double s4 = 0.0;
    accumulate(symbols, [&](std::size_t, double v) {
      const double v2 = v * v;
      s2 += v2;
      s4 += v2 * v2;
    });
    const double kk = static_cast<double>(k_);
    return {s2 / kk, s4 / kk};
  }

 private:
  template <typename Sink>
  void accumulate(std::span<const cdouble> symbols, Sink&& sink) const {
    if (symbols.size() != h_.size()) {
      throw DomainError("synthesize_rf: symbol count differs from subband count");
    }
    std::vector<cdouble> c(h_.size());
    for (std::size_t n = 0; n < h_.size(); ++n) c[n] = h_[n] * symbols[n];
    std::vector<std::size_t> idx(h_.size(), 0);
    for (std::size_t k = 0; k < k_; ++k) {
      double re = 0.0;
      for (std::size_t n = 0; n < c.size(); ++n) {
        const cdouble& w = twiddle_[idx[n]];
        re += c[n].real() * w.real() - c[n].imag() * w.imag();
        idx[n] += step_[n];
        if (idx[n] >= k_) idx[n] -= k_;
      }
      sink(k, std::numbers::sqrt2 * re);
    }
  }

  std::size_t k_ = 0;
  std::vector<cdouble> twiddle_;
  std::vector<std::size_t> step_;
  std::vector<cdouble> h_;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

double Superposed::total_power() const {
  double s = 0.0;
  for (const auto& sb : subbands) s += sb.p_power + sb.p_info;
  return s;
}

void Superposed::validate(double rel_tol) const {
  if (subbands.empty()) throw DomainError("superposed waveform: no subbands");
  for (const auto& sb : subbands) {
    require_power(sb.p_power, "superposed waveform");
    require_power(sb.p_info, "superposed waveform");
    if (!std::isfinite(sb.phase)) throw DomainError("superposed waveform: non-finite phase");
  }
  require_power(budget, "superposed waveform budget");
  if (std::abs(total_power() - budget) > rel_tol * std::max(budget, 1e-300)) {
    throw DomainError("superposed waveform: subband powers do not sum to the budget");
  }
}

void validate(const InputDistribution& dist) {
  struct Visitor {
    void operator()(const CW& d) const { require_power(d.power, "CW"); }
    void operator()(const CSCG& d) const { require_power(d.power, "CSCG"); }
    void operator()(const RealGaussian& d) const { require_power(d.power, "real Gaussian"); }
    void operator()(const AsymmetricGaussian& d) const {
      require_power(d.p_real, "asymmetric Gaussian");
      require_power(d.p_imag, "asymmetric Gaussian");
    }
    void operator()(const Flash& d) const {
      require_power(d.power, "flash");
      if (!(d.l >= 1.0) || !std::isfinite(d.l)) throw DomainError("flash: l must be >= 1");
    }
    void operator()(const Superposed& d) const { d.validate(); }
  };
  std::visit(Visitor{}, dist);
}

double average_power(const InputDistribution& dist) {
  struct Visitor {
    double operator()(const CW& d) const { return d.power; }
    double operator()(const CSCG& d) const { return d.power; }
    double operator()(const RealGaussian& d) const { return d.power; }
    double operator()(const AsymmetricGaussian& d) const { return d.p_real + d.p_imag; }
    double operator()(const Flash& d) const { return d.power; }
    double operator()(const Superposed& d) const { return d.total_power(); }
  };
  return std::visit(Visitor{}, dist);
}

MomentPair analytic_moments(const InputDistribution& dist) {
  validate(dist);
  struct Visitor {
    MomentPair operator()(const CW& d) const { return {d.power, d.power * d.power}; }
    MomentPair operator()(const CSCG& d) const { return {d.power, 2.0 * d.power * d.power}; }
    MomentPair operator()(const RealGaussian& d) const {
      return {d.power, 3.0 * d.power * d.power};
    }
    MomentPair operator()(const AsymmetricGaussian& d) const {
      const double pr = d.p_real;
      const double pi = d.p_imag;
      return {pr + pi, 3.0 * pr * pr + 2.0 * pr * pi + 3.0 * pi * pi};
    }
    MomentPair operator()(const Flash& d) const {
      return {d.power, d.l * d.l * d.power * d.power};
    }
    MomentPair operator()(const Superposed&) const {
      throw UnsupportedError(
          "analytic_moments: superposed waveforms have per-subband structure; use "
          "evaluate_zdc_timedomain");
    }
  };
  return std::visit(Visitor{}, dist);
}

std::vector<cdouble> sample_symbols(const InputDistribution& dist, std::size_t n,
                                    std::uint64_t seed) {
  validate(dist);
  if (n < 1) throw DomainError("sample_symbols: n must be >= 1");
  Rng rng(seed);
  std::vector<cdouble> out(n);
  for (auto& x : out) x = draw(dist, rng);
  return out;
}

MomentPair rf_moments_single_subband(const InputDistribution& dist, double channel_gain_sq) {
  if (!(channel_gain_sq >= 0.0)) throw DomainError("channel gain must be >= 0");
  const MomentPair m = analytic_moments(dist);
  return {channel_gain_sq * m.m2, 1.5 * channel_gain_sq * channel_gain_sq * m.m4};
}

std::size_t rf_samples_per_period(const FrequencyGrid& grid, int oversampling) {
  grid.validate();
  const double m0 = std::round(grid.f0 / grid.delta_f);
  return static_cast<std::size_t>(oversampling) *
         (static_cast<std::size_t>(m0) + static_cast<std::size_t>(grid.n_subbands) - 1);
}

std::vector<double> synthesize_rf(std::span<const cdouble> symbols,
                                  const ChannelRealization& channel, int oversampling) {
  return RfSynth(channel, oversampling).synthesize(symbols);
}

RfStatistics evaluate_zdc_timedomain(const InputDistribution& waveform,
                                     const ChannelRealization& channel,
                                     const DiodeNonlinearParams& harvester, int mc_runs,
                                     std::uint64_t seed, int oversampling) {
  harvester.validate();
  validate(waveform);
  const bool deterministic = is_deterministic(waveform);
  if (!deterministic && mc_runs < 1) {
    throw DomainError("evaluate_zdc_timedomain: mc_runs must be >= 1 for random symbols");
  }
  const RfSynth synth(channel, oversampling);
  const auto n_sub = static_cast<std::size_t>(channel.n_subbands());
  const Superposed* sup = std::get_if<Superposed>(&waveform);
  if (sup != nullptr && sup->subbands.size() != n_sub) {
    throw DomainError("evaluate_zdc_timedomain: waveform and channel subband counts differ");
  }

  const std::size_t runs = deterministic ? 1 : static_cast<std::size_t>(mc_runs);
  std::vector<double> m2(runs);
  std::vector<double> m4(runs);
  parallel_for(runs, [&](std::size_t r) {
    Rng rng = Rng::stream(seed, r);
    std::vector<cdouble> x(n_sub);
    for (std::size_t n = 0; n < n_sub; ++n) {
      if (sup != nullptr) {
        const auto& sb = sup->subbands[n];
        x[n] = std::polar(std::sqrt(sb.p_power), sb.phase);
        if (sb.p_info > 0.0) x[n] += draw(CSCG{sb.p_info}, rng);
      } else {
        x[n] = draw(waveform, rng);
      }
    }
    const MomentPair m = synth.moments(x);
    m2[r] = m.m2;
    m4[r] = m.m4;
  });

  std::vector<double> z(runs);
  for (std::size_t r = 0; r < runs; ++r) z[r] = harvester.k2 * m2[r] + harvester.k4 * m4[r];

  RfStatistics st;
  st.runs = static_cast<int>(runs);
  st.m2_rf = mean_of(m2);
  st.m4_rf = mean_of(m4);
  st.z_dc = mean_of(z);
  st.m2_stderr = stderr_of(m2, st.m2_rf);
  st.m4_stderr = stderr_of(m4, st.m4_rf);
  st.z_dc_stderr = stderr_of(z, st.z_dc);
  return st;
}

RfStatistics evaluate_zdc_timedomain(std::span<const cdouble> symbols,
                                     const ChannelRealization& channel,
                                     const DiodeNonlinearParams& harvester, int oversampling) {
  harvester.validate();
  const MomentPair m = RfSynth(channel, oversampling).moments(symbols);
  RfStatistics st;
  st.runs = 1;
  st.m2_rf = m.m2;
  st.m4_rf = m.m4;
  st.z_dc = harvester.k2 * m.m2 + harvester.k4 * m.m4;
  return st;
}

nlohmann::json to_json(const Superposed& waveform) {
  nlohmann::json subbands = nlohmann::json::array();
  for (const auto& sb : waveform.subbands) {
    subbands.push_back({{"p_power", sb.p_power}, {"phase_power", sb.phase}, {"p_info", sb.p_info}});
  }
  return {{"subbands", std::move(subbands)}, {"budget", waveform.budget}};
}

Superposed superposed_from_json(const nlohmann::json& j) {
  try {
    Superposed w;
    for (const auto& sb : j.at("subbands")) {
      w.subbands.push_back({sb.at("p_power").get<double>(), sb.value("phase_power", 0.0),
                            sb.at("p_info").get<double>()});
    }
    w.budget = j.contains("budget") ? j.at("budget").get<double>() : w.total_power();
    w.validate();
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("waveform JSON: ") + e.what());
  }
}

}  // namespace wipt
