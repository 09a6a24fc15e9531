#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "wipt/allocate.hpp"
#include "wipt/error.hpp"
#include "wipt/random.hpp"

using namespace wipt;

namespace {

const DiodeNonlinearParams kHv{0.17, 19.145};

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

struct Split {
  std::vector<double> power, info;
};

Split split(const SuperposedAllocation& a) {
  Split s;
  for (const auto& sb : a.subbands) {
    s.power.push_back(sb.p_power);
    s.info.push_back(sb.p_info);
  }
  return s;
}

}  // namespace

TEST_SUITE("superposed") {

TEST_CASE("objective matches the quadruple sum") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 5;
    std::vector<double> g(n), pp(n), pi(n);
    for (int i = 0; i < n; ++i) {
      g[i] = 0.1 + 2 * rng.uniform();
      pp[i] = rng.uniform();
      pi[i] = rng.uniform();
    }
    const SuperposedObjective obj{g, kHv};
    CHECK(obj.value(pp, pi).z_dc == doctest::Approx(oracle::superposed_zdc(g, pp, pi, kHv)).epsilon(1e-11));
  }
}

TEST_CASE("gradient matches central differences") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 4;
    std::vector<double> g(n), pp(n), pi(n);
    for (int i = 0; i < n; ++i) {
      g[i] = 0.1 + 2 * rng.uniform();
      pp[i] = 0.05 + rng.uniform();
      pi[i] = 0.05 + rng.uniform();
    }
    const SuperposedObjective obj{g, kHv};
    const auto grad = obj.gradient(pp, pi);
    REQUIRE(grad.size() == static_cast<std::size_t>(2 * n));
    for (int i = 0; i < 2 * n; ++i) {
      auto& v = i < n ? pp[i] : pi[i - n];
      const double h = 1e-6 * v;
      const double x = v;
      v = x + h;
      const double up = obj.value(pp, pi).z_dc;
      v = x - h;
      const double dn = obj.value(pp, pi).z_dc;
      v = x;
      CHECK(grad[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("rate floor at water-filling leaves no power symbols") {
  const std::vector<cdouble> h = {{1.2, 0.3}, {0.4, -0.9}, {-0.2, 0.5}};
  std::vector<double> g;
  for (const auto& x : h) g.push_back(std::norm(x));
  const auto wf = waterfill(g, 0.1, 1.0);
  const auto a = superposed_waveform_allocate(h, 0.1, 1.0, wf.rate, kHv);
  const auto s = split(a);
  CHECK(sum(s.power) < 1e-6);
  CHECK(a.rate == doctest::Approx(wf.rate).epsilon(1e-9));
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(s.info[i] - wf.p[i]) < 1e-5);
}

TEST_CASE("zero floor on a flat channel puts everything into power symbols") {
  const std::vector<cdouble> h(4, cdouble(0.8, 0.0));
  const auto a = superposed_waveform_allocate(h, 0.1, 1.0, 0.0, kHv);
  const auto s = split(a);
  CHECK(sum(s.info) < 1e-6);
  CHECK(sum(s.power) == doctest::Approx(1.0).epsilon(1e-9));
  // middle tones sit in more index quadruples, so the optimum is symmetric,
  // tilted towards the centre, and beats equal amplitudes
  CHECK(s.power[0] == doctest::Approx(s.power[3]).epsilon(1e-6));
  CHECK(s.power[1] == doctest::Approx(s.power[2]).epsilon(1e-6));
  CHECK(s.power[1] > s.power[0]);
  const std::vector<double> g(4, 0.64);
  const std::vector<double> even(4, 0.25);
  CHECK(a.z_dc > oracle::superposed_zdc(g, even, std::vector<double>(4, 0.0), kHv));
}

TEST_CASE("phases align the power symbols with the channel") {
  const std::vector<cdouble> h = {std::polar(1.0, 0.7), std::polar(0.5, -2.0)};
  const auto a = superposed_waveform_allocate(h, 0.1, 1.0, 0.5, kHv);
  CHECK(a.subbands[0].phase == doctest::Approx(-0.7));
  CHECK(a.subbands[1].phase == doctest::Approx(2.0));
  CHECK_NOTHROW(a.waveform(1.0).validate());
}

TEST_CASE("N = 2 against the grid and time sharing") {
  const std::vector<cdouble> h = {{1.1, 0.2}, {0.3, 0.6}};
  const std::vector<double> g = {std::norm(h[0]), std::norm(h[1])};
  const double s2 = 0.05;
  const double r_wf = waterfill(g, s2, 1.0).rate;
  const auto lo = superposed_waveform_allocate(h, s2, 1.0, 0.0, kHv);
  const double z_wf = oracle::superposed_zdc(g, std::vector<double>(2, 0.0), waterfill(g, s2, 1.0).p, kHv);
  for (double frac : {0.2, 0.5, 0.8, 0.95}) {
    const double floor = frac * r_wf;
    const auto a = superposed_waveform_allocate(h, s2, 1.0, floor, kHv);
    const auto ref = oracle::grid_superposed_n2(g, s2, 1.0, floor, kHv, 100);
    CHECK(a.rate >= floor - 1e-9);
    CHECK(a.z_dc >= ref.z_dc * 0.98);
    const double share = floor <= lo.rate ? 0.0 : (floor - lo.rate) / (r_wf - lo.rate);
    CHECK(a.z_dc >= (lo.z_dc + share * (z_wf - lo.z_dc)) * (1 - 1e-9));
  }
}

TEST_CASE("objective trace never decreases") {
  const std::vector<cdouble> h = {{0.9, 0.1}, {0.2, 0.7}, {0.5, -0.5}, {1.3, 0.0}};
  std::vector<double> g;
  for (const auto& x : h) g.push_back(std::norm(x));
  const double r_wf = waterfill(g, 0.05, 1.0).rate;
  for (double frac : {0.0, 0.3, 0.7}) {
    const auto a = superposed_waveform_allocate(h, 0.05, 1.0, frac * r_wf, kHv);
    for (std::size_t i = 1; i < a.trace.size(); ++i) CHECK(a.trace[i] >= a.trace[i - 1] - 1e-12);
    if (!a.trace.empty()) CHECK(a.z_dc >= a.trace.back() - 1e-12);
  }
}

TEST_CASE("projection") {
  Rng rng(12);
  const std::vector<double> g = {2.0, 0.7, 0.3};
  const double s2 = 0.1;
  const double r_wf = waterfill(g, s2, 1.0).rate;
  for (int trial = 0; trial < 50; ++trial) {
    const double floor = r_wf * rng.uniform();
    std::vector<double> pp(3), pi(3);
    for (int i = 0; i < 3; ++i) {
      pp[i] = 2 * rng.uniform() - 0.5;
      pi[i] = 2 * rng.uniform() - 0.5;
    }
    project_superposed(g, s2, 1.0, floor, pp, pi);
    for (int i = 0; i < 3; ++i) {
      CHECK(pp[i] >= 0.0);
      CHECK(pi[i] >= 0.0);
    }
    CHECK(sum(pp) + sum(pi) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(info_rate(g, s2, pi) >= floor - 1e-9);
    // a feasible point stays put
    auto pp2 = pp;
    auto pi2 = pi;
    project_superposed(g, s2, 1.0, floor, pp2, pi2);
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(pp2[i] - pp[i]) < 1e-9);
      CHECK(std::abs(pi2[i] - pi[i]) < 1e-9);
    }
  }
}

TEST_CASE("floor above water-filling is infeasible") {
  const std::vector<cdouble> h = {{1.0, 0.0}, {0.5, 0.0}};
  const double r_wf = waterfill(std::vector<double>{1.0, 0.25}, 0.1, 1.0).rate;
  try {
    superposed_waveform_allocate(h, 0.1, 1.0, r_wf * 1.01, kHv);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.max_attainable() == doctest::Approx(r_wf));
  }
  CHECK_THROWS_AS(superposed_waveform_allocate(h, 0.1, -1.0, 0.0, kHv), DomainError);
}

TEST_CASE("superposed allocation json") {
  const std::vector<cdouble> h = {{1.0, 0.0}, {0.5, 0.0}};
  const auto j = to_json(superposed_waveform_allocate(h, 0.1, 1.0, 0.5, kHv));
  CHECK(j.at("subbands").size() == 2);
  CHECK(j.contains("z_dc"));
}

}  // TEST_SUITE
