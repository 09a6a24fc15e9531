#include "wipt/region.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

#include "wipt/error.hpp"
#include "wipt/parallel.hpp"
#include "wipt/signal.hpp"

namespace wipt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// n values from lo to hi, geometrically dense towards hi.
std::vector<double> sweep_towards(double lo, double hi, int n) {
  std::vector<double> out;
  if (n < 2 || hi <= lo) {
    out.push_back(hi);
    return out;
  }
  constexpr double kSmallest = 1e-6;
  const double span = hi - lo;
  for (int i = 0; i < n - 1; ++i) {
    const double s = std::pow(kSmallest, static_cast<double>(i) / std::max(1, n - 2));
    out.push_back(hi - span * s);
  }
  out.front() = lo;
  out.push_back(hi);
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  if (n < 2) return {lo};
  for (int i = 0; i < n; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.back() = hi;
  return out;
}

void check_noise_split(const ReceiverArch& arch, double noise) {
  if (const auto* ps = std::get_if<PowerSplitting>(&arch)) {
    ps->validate();
    const double total = ps->sigma_a_sq + ps->sigma_p_sq;
    if (std::abs(total - noise) > 1e-9 * noise) {
      throw DomainError("power splitting: sigma_a^2 + sigma_p^2 must equal the noise power");
    }
  }
}

RERegion finish(std::vector<REPoint> boundary, EnergyUnits units, std::string model,
                const ReceiverArch& arch) {
  RERegion r;
  r.hull = upper_hull(boundary);
  r.boundary = std::move(boundary);
  r.units = units;
  r.model = std::move(model);
  r.arch = arch_name(arch);
  return r;
}

std::vector<REPoint> ts_segment(double r_max, double e_max, int n) {
  std::vector<REPoint> pts;
  for (double tau : linspace(0.0, 1.0, std::max(n, 2))) {
    pts.push_back({(1.0 - tau) * r_max, tau * e_max, tau, "time-switching"});
  }
  return pts;
}

std::vector<double> sorted_eigen_gains(const Eigen::MatrixXcd& h) {
  if (h.size() == 0 || !h.allFinite()) throw DomainError("MIMO region: invalid channel matrix");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h.adjoint() * h,
                                                           Eigen::EigenvaluesOnly);
  std::vector<double> g;
  for (Eigen::Index i = eig.eigenvalues().size() - 1; i >= 0; --i) {
    g.push_back(std::max(eig.eigenvalues()[i], 0.0));
  }
  return g;
}

}  // namespace

void PowerSplitting::validate() const {
  if (!(sigma_a_sq >= 0.0) || !(sigma_p_sq >= 0.0)) {
    throw DomainError("power splitting: noise powers must be >= 0");
  }
  if (sigma_a_sq + sigma_p_sq <= 0.0) {
    throw DomainError("power splitting: sigma_a^2 and sigma_p^2 cannot both be zero");
  }
}

double PowerSplitting::effective_noise(double rho) const {
  if (rho >= 1.0) return std::numeric_limits<double>::infinity();
  return sigma_a_sq + sigma_p_sq / (1.0 - rho);
}

std::string arch_name(const ReceiverArch& arch) {
  struct Visitor {
    std::string operator()(const IdealReceiver&) const { return "ideal"; }
    std::string operator()(const TimeSwitching&) const { return "ts"; }
    std::string operator()(const PowerSplitting&) const { return "ps"; }
  };
  return std::visit(Visitor{}, arch);
}

PowerSplitting worst_case_split(double noise) { return PowerSplitting{0.0, noise}; }

std::string units_name(EnergyUnits units) {
  return units == EnergyUnits::kWatt ? "W" : "z_dc";
}

double RERegion::max_rate() const {
  double r = 0.0;
  for (const auto& p : boundary) r = std::max(r, p.rate);
  return r;
}

double RERegion::max_energy() const {
  double e = 0.0;
  for (const auto& p : boundary) e = std::max(e, p.energy);
  return e;
}

std::vector<REPoint> upper_hull(std::span<const REPoint> points) {
  if (points.empty()) return {};
  std::vector<REPoint> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const REPoint& a, const REPoint& b) {
    return a.rate < b.rate || (a.rate == b.rate && a.energy > b.energy);
  });
  double e_top = kNegInf;
  for (const auto& p : pts) e_top = std::max(e_top, p.energy);
  double start_rate = kNegInf;
  for (const auto& p : pts) {
    if (p.energy == e_top) start_rate = std::max(start_rate, p.rate);
  }
  const double end_rate = pts.back().rate;

  std::vector<REPoint> hull;
  bool have_start = false;
  bool have_end = false;
  for (const auto& p : pts) {
    if (p.rate < start_rate) continue;
    if (p.rate == start_rate) {
      // Only the top-energy point at the start rate.
      if (have_start || p.energy != e_top) continue;
      have_start = true;
    }
    if (p.rate == end_rate && p.rate != start_rate) {
      if (have_end) continue;
      have_end = true;
    }
    while (hull.size() >= 2) {
      const REPoint& o = hull[hull.size() - 2];
      const REPoint& a = hull.back();
      const double cross =
          (a.rate - o.rate) * (p.energy - o.energy) - (a.energy - o.energy) * (p.rate - o.rate);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }
  return hull;
}

double energy_at(std::span<const REPoint> hull, double rate) {
  if (hull.empty()) return kNegInf;
  if (rate <= hull.front().rate) return hull.front().energy;
  const double r_max = hull.back().rate;
  if (rate > r_max + 1e-12 * std::max(1.0, r_max)) return kNegInf;
  for (std::size_t i = 1; i < hull.size(); ++i) {
    if (rate <= hull[i].rate) {
      const REPoint& a = hull[i - 1];
      const REPoint& b = hull[i];
      const double t = (rate - a.rate) / (b.rate - a.rate);
      return a.energy + t * (b.energy - a.energy);
    }
  }
  return hull.back().energy;
}

double max_energy_at_rate(std::span<const REPoint> points, double rate) {
  double best = kNegInf;
  const double slack = 1e-12 * std::max(1.0, std::abs(rate));
  for (const auto& p : points) {
    if (p.rate >= rate - slack) best = std::max(best, p.energy);
  }
  return best;
}

std::vector<REPoint> pareto_front(std::span<const REPoint> points) {
  std::vector<REPoint> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const REPoint& a, const REPoint& b) {
    return a.rate > b.rate || (a.rate == b.rate && a.energy > b.energy);
  });
  std::vector<REPoint> front;
  double best = kNegInf;
  for (const auto& p : pts) {
    if (p.energy > best) {
      front.push_back(p);
      best = p.energy;
    }
  }
  std::reverse(front.begin(), front.end());
  return front;
}

// ---------------------------------------------------------------------------
// Linear harvester

REPoint linear_single_point(double gain, double budget, double noise, const ReceiverArch& arch,
                            double k2, double param) {
  if (!(gain >= 0.0) || !(budget > 0.0) || !(noise > 0.0) || !(k2 > 0.0)) {
    throw DomainError("linear region: need gain >= 0 and positive budget, noise, k2");
  }
  const double rx = gain * budget;
  struct Visitor {
    double rx, noise, k2, param;
    REPoint operator()(const IdealReceiver&) const {
      return {std::log2(1.0 + rx / noise), k2 * rx, 0.0, "cscg"};
    }
    REPoint operator()(const TimeSwitching&) const {
      if (!(param >= 0.0 && param <= 1.0)) throw DomainError("time switching: tau in [0, 1]");
      return {(1.0 - param) * std::log2(1.0 + rx / noise), param * k2 * rx, param,
              "time-switching"};
    }
    REPoint operator()(const PowerSplitting& ps) const {
      if (!(param >= 0.0 && param <= 1.0)) throw DomainError("power splitting: rho in [0, 1]");
      const double sig = (1.0 - param) * rx;
      const double den = (1.0 - param) * ps.sigma_a_sq + ps.sigma_p_sq;
      const double rate = sig > 0.0 ? std::log2(1.0 + sig / den) : 0.0;
      return {rate, param * k2 * rx, param, "power-splitting"};
    }
  };
  check_noise_split(arch, noise);
  return std::visit(Visitor{rx, noise, k2, param}, arch);
}

RERegion region_linear_single(double gain, double budget, double noise, const ReceiverArch& arch,
                              double k2, int n_points) {
  std::vector<REPoint> pts;
  if (std::holds_alternative<IdealReceiver>(arch)) {
    pts.push_back(linear_single_point(gain, budget, noise, arch, k2, 0.0));
  } else {
    for (double t : linspace(0.0, 1.0, std::max(n_points, 2))) {
      pts.push_back(linear_single_point(gain, budget, noise, arch, k2, t));
    }
  }
  return finish(std::move(pts), EnergyUnits::kWatt, "linear", arch);
}

RERegion region_from_gains(const GainsRegionSpec& spec, const ReceiverArch& arch) {
  if (!spec.energy) throw DomainError("region: missing energy map");
  check_noise_split(arch, spec.noise);
  const auto& g = spec.gains;
  const PowerAllocation wf = waterfill(g, spec.noise, spec.budget);
  const double x_max = spec.budget * *std::max_element(g.begin(), g.end());
  const int n = std::max(spec.n_points, 2);

  std::vector<REPoint> pts;
  if (std::holds_alternative<IdealReceiver>(arch)) {
    const auto targets = sweep_towards(wf.received_power, x_max, n);
    pts.resize(targets.size());
    parallel_for(targets.size(), [&](std::size_t i) {
      const auto a = modified_waterfill(g, spec.noise, spec.budget, targets[i], 1.0);
      pts[i] = {a.rate, spec.energy(a.received_power), spec.energy(targets[i]), "modified-wf"};
    });
  } else if (std::holds_alternative<TimeSwitching>(arch)) {
    pts = ts_segment(wf.rate, spec.energy(x_max), n);
  } else {
    const auto& ps = std::get<PowerSplitting>(arch);
    const auto rhos = linspace(0.0, 1.0, n);
    const int n_x = std::max(8, n / 2);
    std::vector<std::vector<REPoint>> per_rho(rhos.size());
    parallel_for(rhos.size(), [&](std::size_t i) {
      const double rho = rhos[i];
      if (rho >= 1.0) {
        per_rho[i].push_back({0.0, spec.energy(x_max), rho, "power-splitting"});
        return;
      }
      const double noise = ps.effective_noise(rho);
      const PowerAllocation wf_rho = waterfill(g, noise, spec.budget);
      for (double x : sweep_towards(wf_rho.received_power, x_max, n_x)) {
        const auto a = modified_waterfill(g, noise, spec.budget, x, 1.0);
        per_rho[i].push_back({a.rate, spec.energy(rho * a.received_power), rho,
                              "power-splitting"});
      }
    });
    std::vector<REPoint> all;
    for (auto& v : per_rho) all.insert(all.end(), v.begin(), v.end());
    pts = pareto_front(all);
  }
  return finish(std::move(pts), spec.units, spec.model, arch);
}

RERegion region_linear_multisubband(const ChannelRealization& channel, double budget, double noise,
                                    double k2, const ReceiverArch& arch, int n_points) {
  if (!(k2 > 0.0)) throw DomainError("linear region: k2 must be > 0");
  GainsRegionSpec spec;
  spec.gains = channel.siso_gains();
  spec.budget = budget;
  spec.noise = noise;
  spec.energy = [k2](double x) { return k2 * x; };
  spec.units = EnergyUnits::kWatt;
  spec.model = "linear";
  spec.n_points = n_points;
  return region_from_gains(spec, arch);
}

RERegion region_mimo_linear(const Eigen::MatrixXcd& h, double budget, double noise, double k2,
                            const ReceiverArch& arch, int n_points) {
  if (!(k2 > 0.0)) throw DomainError("linear region: k2 must be > 0");
  GainsRegionSpec spec;
  spec.gains = sorted_eigen_gains(h);
  spec.budget = budget;
  spec.noise = noise;
  spec.energy = [k2](double x) { return k2 * x; };
  spec.units = EnergyUnits::kWatt;
  spec.model = "linear";
  spec.n_points = n_points;
  return region_from_gains(spec, arch);
}

RERegion region_saturation(std::span<const double> gains, double budget, double noise,
                           const SaturationParams& params, const ReceiverArch& arch,
                           int n_points) {
  GainsRegionSpec spec;
  spec.gains.assign(gains.begin(), gains.end());
  spec.budget = budget;
  spec.noise = noise;
  spec.energy = [params](double x) { return sigmoid_dc_power(x, params); };
  spec.units = EnergyUnits::kWatt;
  spec.model = "saturation";
  spec.n_points = n_points;
  return region_from_gains(spec, arch);
}

RERegion region_saturation(const ChannelRealization& channel, double budget, double noise,
                           const SaturationParams& params, const ReceiverArch& arch,
                           int n_points) {
  const auto g = channel.siso_gains();
  return region_saturation(g, budget, noise, params, arch, n_points);
}

// ---------------------------------------------------------------------------
// Diode nonlinear harvester

NonlinearSingleRegion region_diode_nonlinear_single(double gain, double budget, double noise,
                                                    const DiodeNonlinearParams& harvester,
                                                    double flash_l_max, int n_points) {
  harvester.validate();
  if (!(gain >= 0.0) || !(budget > 0.0) || !(noise > 0.0)) {
    throw DomainError("nonlinear region: need gain >= 0 and positive budget and noise");
  }
  if (!(flash_l_max >= 1.0)) throw DomainError("nonlinear region: flash l_max must be >= 1");
  const int n = std::max(n_points, 2);
  auto zdc = [&](const InputDistribution& d) {
    const MomentPair m = rf_moments_single_subband(d, gain);
    return zdc_from_rf_moments(m.m2, m.m4, harvester);
  };

  std::vector<REPoint> asym;
  for (double pr : linspace(budget / 2.0, budget, n)) {
    const double pi = std::max(budget - pr, 0.0);
    const double rate = 0.5 * std::log2(1.0 + 2.0 * gain * pr / noise) +
                        0.5 * std::log2(1.0 + 2.0 * gain * pi / noise);
    asym.push_back({rate, zdc(AsymmetricGaussian{pr, pi}), pr, "asymmetric-gaussian"});
  }
  const REPoint cscg = asym.front();

  std::vector<REPoint> flash{cscg};
  for (double l : linspace(1.0, flash_l_max, n)) {
    flash.push_back({0.0, zdc(Flash{l, budget}), l, "flash"});
  }

  const ReceiverArch ideal = IdealReceiver{};
  NonlinearSingleRegion out;
  std::vector<REPoint> all = asym;
  all.insert(all.end(), flash.begin(), flash.end());
  out.asymmetric = finish(std::move(asym), EnergyUnits::kZdc, "diode-nonlinear", ideal);
  out.flash = finish(std::move(flash), EnergyUnits::kZdc, "diode-nonlinear", ideal);
  out.combined = finish(std::move(all), EnergyUnits::kZdc, "diode-nonlinear", ideal);
  return out;
}

RERegion region_diode_nonlinear_multisubband(std::span<const cdouble> response, double budget,
                                             double noise, const DiodeNonlinearParams& harvester,
                                             const ReceiverArch& arch,
                                             const NonlinearMultiOptions& options) {
  harvester.validate();
  check_noise_split(arch, noise);
  std::vector<double> g;
  for (const auto& h : response) g.push_back(std::norm(h));
  const int n = std::max(options.n_points, 2);

  auto sweep = [&](double noise_eff, const DiodeNonlinearParams& hv, double param,
                   std::vector<REPoint>& out) {
    const double r_wf = waterfill(g, noise_eff, budget).rate;
    // Floors below the unconstrained optimum's rate all return that point,
    // so the sweep starts there.
    const auto free = superposed_waveform_allocate(response, noise_eff, budget, 0.0, hv,
                                                   options.solver);
    out.push_back({free.rate, free.z_dc, std::isnan(param) ? 0.0 : param, "superposed"});
    if (free.rate >= r_wf) return;
    // Floors follow the CSCG-only boundary, which is dense where the
    // region bends.
    const double x_max = budget * *std::max_element(g.begin(), g.end());
    const double x_wf = waterfill(g, noise_eff, budget).received_power;
    std::vector<double> floors = {free.rate, r_wf};
    for (double x : sweep_towards(x_wf, x_max, n)) {
      const double r = modified_waterfill(g, noise_eff, budget, x, 1.0).rate;
      if (r > free.rate && r < r_wf) floors.push_back(r);
    }
    std::sort(floors.begin(), floors.end());
    floors.erase(std::unique(floors.begin(), floors.end()), floors.end());
    std::vector<REPoint> pts(floors.size());
    parallel_for(floors.size(), [&](std::size_t i) {
      const auto a = superposed_waveform_allocate(response, noise_eff, budget, floors[i], hv,
                                                  options.solver);
      pts[i] = {a.rate, a.z_dc, std::isnan(param) ? floors[i] : param, "superposed"};
    });
    out.insert(out.end(), pts.begin(), pts.end());
  };

  std::vector<REPoint> pts;
  if (std::holds_alternative<IdealReceiver>(arch)) {
    sweep(noise, harvester, std::numeric_limits<double>::quiet_NaN(), pts);
  } else if (std::holds_alternative<TimeSwitching>(arch)) {
    const double r_wf = waterfill(g, noise, budget).rate;
    const auto top = superposed_waveform_allocate(response, noise, budget, 0.0, harvester,
                                                  options.solver);
    pts = ts_segment(r_wf, top.z_dc, n);
  } else {
    const auto& ps = std::get<PowerSplitting>(arch);
    std::vector<REPoint> all;
    const double r_wf = waterfill(g, noise, budget).rate;
    all.push_back({r_wf, 0.0, 0.0, "power-splitting"});
    for (double rho : linspace(0.0, 1.0, std::max(options.n_split, 2))) {
      if (rho <= 0.0) continue;
      const DiodeNonlinearParams hv{rho * harvester.k2, rho * rho * harvester.k4};
      if (rho >= 1.0) {
        const auto top =
            superposed_waveform_allocate(response, noise, budget, 0.0, hv, options.solver);
        all.push_back({0.0, top.z_dc, rho, "power-splitting"});
        continue;
      }
      std::vector<REPoint> part;
      sweep(ps.effective_noise(rho), hv, rho, part);
      for (auto& p : part) p.strategy = "power-splitting";
      all.insert(all.end(), part.begin(), part.end());
    }
    pts = pareto_front(all);
  }
  return finish(std::move(pts), EnergyUnits::kZdc, "diode-nonlinear", arch);
}

RERegion region_diode_nonlinear_multisubband(const ChannelRealization& channel, double budget,
                                             double noise, const DiodeNonlinearParams& harvester,
                                             const ReceiverArch& arch,
                                             const NonlinearMultiOptions& options) {
  channel.validate();
  const auto h = channel.siso_response();
  return region_diode_nonlinear_multisubband(h, budget, noise, harvester, arch, options);
}

RERegion region_cscg_under_nonlinear(std::span<const double> gains, double budget, double noise,
                                     const DiodeNonlinearParams& harvester, int n_points) {
  harvester.validate();
  const std::vector<double> g(gains.begin(), gains.end());
  const PowerAllocation wf = waterfill(g, noise, budget);
  const double x_max = budget * *std::max_element(g.begin(), g.end());
  const SuperposedObjective objective{g, harvester};
  const std::vector<double> zeros(g.size(), 0.0);
  std::vector<REPoint> pts;
  for (double x : sweep_towards(wf.received_power, x_max, std::max(n_points, 2))) {
    const auto a = modified_waterfill(g, noise, budget, x, 1.0);
    pts.push_back({a.rate, objective.value(zeros, a.p).z_dc, x, "cscg-modified-wf"});
  }
  return finish(std::move(pts), EnergyUnits::kZdc, "diode-nonlinear", IdealReceiver{});
}

}  // namespace wipt
