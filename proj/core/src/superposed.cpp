#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "wipt/allocate.hpp"
#include "wipt/error.hpp"

namespace wipt {

namespace {

constexpr double kLn2 = std::numbers::ln2;

// Positive root of g x^2 + (s2 - c g) x - (c s2 + mu g / ln2) = 0, or 0.
double info_root(double g, double s2, double c, double mu) {
  if (g <= 0.0) return std::max(c, 0.0);
  const double b = s2 - c * g;
  const double cc = c * s2 + mu * g / kLn2;
  if (cc <= 0.0) return 0.0;
  const double disc = std::sqrt(b * b + 4.0 * g * cc);
  return b > 0.0 ? 2.0 * cc / (b + disc) : (-b + disc) / (2.0 * g);
}

struct Projector {
  std::span<const double> g;
  double s2;
  double budget;
  std::span<const double> y_power;
  std::span<const double> y_info;

  double fill(double nu, double mu, std::vector<double>& xp, std::vector<double>& xi) const {
    const std::size_t n = g.size();
    xp.resize(n);
    xi.resize(n);
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      xp[k] = std::max(y_power[k] - nu, 0.0);
      xi[k] = info_root(g[k], s2, y_info[k] - nu, mu);
      s += xp[k] + xi[k];
    }
    return s;
  }

  // nu such that the budget holds with equality.
  double solve_nu(double mu, std::vector<double>& xp, std::vector<double>& xi) const {
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -y_min;
    for (std::size_t k = 0; k < g.size(); ++k) {
      y_min = std::min({y_min, y_power[k], y_info[k]});
      y_max = std::max({y_max, y_power[k], y_info[k]});
    }
    double lo = y_min - budget;
    double hi = y_max;
    double width = std::max(budget, 1e-300);
    int guard = 0;
    while (fill(hi, mu, xp, xi) > budget) {
      hi += width;
      width *= 2.0;
      if (++guard > 2000) throw ConvergenceError("projection: cannot bracket the budget", {}, 0.0);
    }
    for (int it = 0; it < kBisectionCap; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (fill(mid, mu, xp, xi) > budget) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    // Choose the end closest to the budget, then absorb the residual.
    std::vector<double> lp;
    std::vector<double> li;
    const double s_lo = fill(lo, mu, lp, li);
    const double s_hi = fill(hi, mu, xp, xi);
    double nu = hi;
    if (std::abs(s_lo - budget) < std::abs(s_hi - budget)) {
      xp = std::move(lp);
      xi = std::move(li);
      nu = lo;
    }
    return nu;
  }
};

std::vector<double> waterfill_or_zero(std::span<const double> g, double s2, double p) {
  if (p <= 0.0) return std::vector<double>(g.size(), 0.0);
  return waterfill(g, s2, p).p;
}

struct StartOutcome {
  std::vector<double> p_power;
  std::vector<double> p_info;
  double z = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

bool lexicographically_less(const StartOutcome& a, const StartOutcome& b) {
  if (a.p_power != b.p_power) return a.p_power < b.p_power;
  return a.p_info < b.p_info;
}

}  // namespace

Superposed SuperposedAllocation::waveform(double budget) const {
  Superposed w;
  w.subbands = subbands;
  w.budget = budget;
  return w;
}

SuperposedObjective::Value SuperposedObjective::value(std::span<const double> p_power,
                                                      std::span<const double> p_info) const {
  const std::size_t n = gains.size();
  if (p_power.size() != n || p_info.size() != n) {
    throw DomainError("superposed objective: power vectors must match the subband count");
  }
  double d = 0.0;
  double s = 0.0;
  std::vector<double> a(n);
  for (std::size_t k = 0; k < n; ++k) {
    a[k] = std::sqrt(gains[k] * std::max(p_power[k], 0.0));
    d += gains[k] * p_power[k];
    s += gains[k] * p_info[k];
  }
  // |envelope|^4 averaged on a grid fine enough to hold every product tone.
  const std::size_t kk = 4 * n;
  double a4 = 0.0;
  for (std::size_t t = 0; t < kk; ++t) {
    cdouble env{0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
      if (a[k] == 0.0) continue;
      const double ph = 2.0 * std::numbers::pi * static_cast<double>((k * t) % kk) /
                        static_cast<double>(kk);
      env += a[k] * cdouble(std::cos(ph), std::sin(ph));
    }
    const double e2 = std::norm(env);
    a4 += e2 * e2;
  }
  a4 /= static_cast<double>(kk);
  Value v;
  v.m2_rf = d + s;
  v.m4_rf = 1.5 * (a4 + 4.0 * s * d + 2.0 * s * s);
  v.z_dc = harvester.k2 * v.m2_rf + harvester.k4 * v.m4_rf;
  return v;
}

std::vector<double> SuperposedObjective::gradient(std::span<const double> p_power,
                                                  std::span<const double> p_info,
                                                  double floor) const {
  const std::size_t n = gains.size();
  if (p_power.size() != n || p_info.size() != n) {
    throw DomainError("superposed objective: power vectors must match the subband count");
  }
  double d = 0.0;
  double s = 0.0;
  std::vector<double> a(n);
  for (std::size_t k = 0; k < n; ++k) {
    a[k] = std::sqrt(gains[k] * std::max(p_power[k], 0.0));
    d += gains[k] * p_power[k];
    s += gains[k] * p_info[k];
  }
  const std::size_t kk = 4 * n;
  std::vector<cdouble> tw(kk);
  for (std::size_t i = 0; i < kk; ++i) {
    tw[i] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(kk));
  }
  // corr[k] = avg_t |env|^2 Re{conj(env) e^{j w_k t}}
  std::vector<double> corr(n, 0.0);
  for (std::size_t t = 0; t < kk; ++t) {
    cdouble env{0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) env += a[k] * tw[(k * t) % kk];
    const double e2 = std::norm(env);
    for (std::size_t k = 0; k < n; ++k) {
      corr[k] += e2 * (std::conj(env) * tw[(k * t) % kk]).real();
    }
  }
  std::vector<double> grad(2 * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double g = gains[k];
    if (g <= 0.0) continue;
    const double ak = std::sqrt(g * std::max(p_power[k], floor));
    const double da4 = ak > 0.0 ? 2.0 * g * (corr[k] / static_cast<double>(kk)) / ak : 0.0;
    grad[k] = harvester.k2 * g + harvester.k4 * 1.5 * (da4 + 4.0 * g * s);
    grad[n + k] = g * (harvester.k2 + 6.0 * harvester.k4 * (d + s));
  }
  return grad;
}

double info_rate(std::span<const double> gains, double noise, std::span<const double> p_info) {
  double r = 0.0;
  for (std::size_t k = 0; k < gains.size(); ++k) r += std::log2(1.0 + gains[k] * p_info[k] / noise);
  return r;
}

void project_superposed(std::span<const double> gains, double noise, double budget,
                        double rate_floor, std::vector<double>& p_power,
                        std::vector<double>& p_info) {
  const std::vector<double> yp = p_power;
  const std::vector<double> yi = p_info;
  const Projector proj{gains, noise, budget, yp, yi};
  std::vector<double> xp;
  std::vector<double> xi;
  proj.solve_nu(0.0, xp, xi);
  if (rate_floor > 0.0 && info_rate(gains, noise, xi) < rate_floor) {
    double lo = 0.0;
    double hi = budget * (noise / *std::max_element(gains.begin(), gains.end()) + budget);
    std::vector<double> hp;
    std::vector<double> hi_info;
    int guard = 0;
    for (;;) {
      proj.solve_nu(hi, hp, hi_info);
      if (info_rate(gains, noise, hi_info) >= rate_floor) break;
      lo = hi;
      hi *= 2.0;
      if (++guard > 200) {
        throw ConvergenceError("projection: rate floor cannot be reached", hi_info, rate_floor);
      }
    }
    for (int it = 0; it < kBisectionCap; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      std::vector<double> mp;
      std::vector<double> mi;
      proj.solve_nu(mid, mp, mi);
      const double r = info_rate(gains, noise, mi);
      if (r >= rate_floor) {
        hi = mid;
        hp = std::move(mp);
        hi_info = std::move(mi);
        if (r - rate_floor <= 1e-13 * std::max(rate_floor, 1.0)) break;
      } else {
        lo = mid;
      }
    }
    xp = std::move(hp);
    xi = std::move(hi_info);
  }
  p_power = std::move(xp);
  p_info = std::move(xi);
}

SuperposedAllocation superposed_waveform_allocate(std::span<const cdouble> response,
                                                  double noise, double budget, double rate_floor,
                                                  const DiodeNonlinearParams& harvester,
                                                  const SuperposedOptions& options) {
  harvester.validate();
  if (!(rate_floor >= 0.0)) throw DomainError("superposed allocation: rate floor must be >= 0");
  std::vector<double> g;
  for (const auto& h : response) g.push_back(std::norm(h));
  const PowerAllocation wf = waterfill(g, noise, budget);  // validates inputs
  const std::size_t n = g.size();
  constexpr double kRateTol = 1e-9;
  if (rate_floor > wf.rate * (1.0 + kRateTol) + 1e-12) {
    throw InfeasibleError("superposed allocation: rate floor exceeds the water-filling rate",
                          wf.rate);
  }

  const SuperposedObjective objective{g, harvester};
  auto finish = [&](const std::vector<double>& pp, const std::vector<double>& pi,
                    SuperposedAllocation out) {
    out.subbands.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      out.subbands[k] = {pp[k], -std::arg(response[k]), pi[k]};
    }
    const auto v = objective.value(pp, pi);
    out.z_dc = v.z_dc;
    out.m2_rf = v.m2_rf;
    out.m4_rf = v.m4_rf;
    out.rate = info_rate(g, noise, pi);
    return out;
  };

  if (rate_floor >= wf.rate * (1.0 - kRateTol)) {
    SuperposedAllocation out;
    out.converged = true;
    return finish(std::vector<double>(n, 0.0), wf.p, out);
  }

  // Starting points.
  std::vector<std::pair<std::vector<double>, std::vector<double>>> starts;
  const double share = budget / static_cast<double>(n);
  starts.emplace_back(std::vector<double>(n, share), std::vector<double>(n, 0.0));
  starts.emplace_back(std::vector<double>(n, 0.0), wf.p);
  {
    // CSCG-only allocation with the most received power at the rate floor.
    const double x_max = budget * *std::max_element(g.begin(), g.end());
    double lo = wf.received_power;
    double hi = x_max;
    std::vector<double> best = wf.p;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const auto a = modified_waterfill(g, noise, budget, mid, 1.0);
      if (a.rate >= rate_floor) {
        lo = mid;
        best = a.p;
      } else {
        hi = mid;
      }
    }
    starts.emplace_back(std::vector<double>(n, 0.0), std::move(best));
  }
  starts.emplace_back(std::vector<double>(n, share / 2.0), std::vector<double>(n, share / 2.0));
  {
    // Strongest subband carries a power symbol; the rest water-fills the
    // information symbols just enough to meet the rate floor.
    const auto best = static_cast<std::size_t>(std::max_element(g.begin(), g.end()) - g.begin());
    double lo = 0.0;
    double hi = budget;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (info_rate(g, noise, waterfill_or_zero(g, noise, budget - mid)) >= rate_floor) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    std::vector<double> pp(n, 0.0);
    pp[best] = lo;
    starts.emplace_back(std::move(pp), waterfill_or_zero(g, noise, budget - lo));
  }

  const double floor = options.power_floor * budget;
  auto run = [&](std::vector<double> pp, std::vector<double> pi) {
    StartOutcome o;
    project_superposed(g, noise, budget, rate_floor, pp, pi);
    double f = objective.value(pp, pi).z_dc;
    o.trace.push_back(f);
    double step = -1.0;
    for (int it = 0; it < options.max_iterations; ++it) {
      const auto grad = objective.gradient(pp, pi, floor);
      if (step < 0.0) {
        double gmax = 0.0;
        for (double v : grad) gmax = std::max(gmax, std::abs(v));
        step = gmax > 0.0 ? budget / gmax : 1.0;
      }
      double t = 2.0 * step;
      bool accepted = false;
      std::vector<double> np;
      std::vector<double> ni;
      double nf = f;
      double moved = 0.0;
      for (int bt = 0; bt < 60; ++bt) {
        np.resize(n);
        ni.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
          np[k] = pp[k] + t * grad[k];
          ni[k] = pi[k] + t * grad[n + k];
        }
        project_superposed(g, noise, budget, rate_floor, np, ni);
        double dir = 0.0;
        moved = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          dir += grad[k] * (np[k] - pp[k]) + grad[n + k] * (ni[k] - pi[k]);
          moved = std::max({moved, std::abs(np[k] - pp[k]), std::abs(ni[k] - pi[k])});
        }
        nf = objective.value(np, ni).z_dc;
        if (nf >= f && nf >= f + options.armijo * dir) {
          accepted = true;
          break;
        }
        t *= options.backtrack;
      }
      ++o.iterations;
      if (!accepted) {
        o.converged = true;
        break;
      }
      step = t;
      pp = std::move(np);
      pi = std::move(ni);
      const double gain = nf - f;
      f = nf;
      o.trace.push_back(f);
      if (moved <= options.tolerance * budget || gain <= 1e-15 * std::abs(f)) {
        o.converged = true;
        break;
      }
    }
    o.p_power = std::move(pp);
    o.p_info = std::move(pi);
    o.z = f;
    return o;
  };

  std::vector<StartOutcome> outcomes;
  for (auto& [pp, pi] : starts) outcomes.push_back(run(pp, pi));
  std::size_t win = 0;
  for (std::size_t s = 1; s < outcomes.size(); ++s) {
    const double a = outcomes[s].z;
    const double b = outcomes[win].z;
    if (a > b * (1.0 + 1e-12) ||
        (a >= b * (1.0 - 1e-12) && lexicographically_less(outcomes[s], outcomes[win]))) {
      win = s;
    }
  }
  SuperposedAllocation out;
  out.iterations = outcomes[win].iterations;
  out.converged = outcomes[win].converged;
  out.trace = outcomes[win].trace;
  return finish(outcomes[win].p_power, outcomes[win].p_info, std::move(out));
}

SuperposedAllocation superposed_waveform_allocate(const ChannelRealization& channel, double noise,
                                                  double budget, double rate_floor,
                                                  const DiodeNonlinearParams& harvester,
                                                  const SuperposedOptions& options) {
  channel.validate();
  const auto h = channel.siso_response();
  return superposed_waveform_allocate(h, noise, budget, rate_floor, harvester, options);
}

nlohmann::json to_json(const SuperposedAllocation& a) {
  nlohmann::json subbands = nlohmann::json::array();
  for (const auto& sb : a.subbands) {
    subbands.push_back({{"p_power", sb.p_power}, {"phase_power", sb.phase}, {"p_info", sb.p_info}});
  }
  return {{"subbands", std::move(subbands)},
          {"rate", a.rate},
          {"z_dc", a.z_dc},
          {"m2_rf", a.m2_rf},
          {"m4_rf", a.m4_rf},
          {"iterations", a.iterations},
          {"converged", a.converged}};
}

}  // namespace wipt
