#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "wipt/allocate.hpp"
#include "wipt/error.hpp"
#include "wipt/random.hpp"
#include "wipt/region.hpp"

using namespace wipt;

namespace {

constexpr double kK2 = 0.5, kG = 12.0, kP = 10.0, kS2 = 3.0;

// outer hull on or above inner hull up to the inner maximum rate
bool contains(const RERegion& outer, const RERegion& inner, int n = 40) {
  const double top = inner.max_rate();
  for (int i = 0; i <= n; ++i) {
    const double r = top * i / n * (1 - 1e-12);
    if (energy_at(outer.hull, r) < energy_at(inner.hull, r) * (1 - 1e-9) - 1e-12) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("region") {

TEST_CASE("fig7 single-subband examples") {
  const auto ts = linear_single_point(kG, kP, kS2, TimeSwitching{}, kK2, 0.5);
  CHECK(ts.rate == doctest::Approx(0.5 * std::log2(41.0)).epsilon(1e-12));
  CHECK(ts.rate == doctest::Approx(2.679).epsilon(1e-3));
  CHECK(ts.energy == doctest::Approx(30.0).epsilon(1e-12));

  const auto ps = linear_single_point(kG, kP, kS2, worst_case_split(kS2), kK2, 0.5);
  CHECK(ps.rate == doctest::Approx(std::log2(21.0)).epsilon(1e-12));
  CHECK(ps.energy == doctest::Approx(30.0).epsilon(1e-12));

  const auto ideal = region_linear_single(kG, kP, kS2, IdealReceiver{}, kK2);
  CHECK(ideal.max_rate() == doctest::Approx(std::log2(41.0)));
  CHECK(ideal.max_energy() == doctest::Approx(60.0));
  CHECK(energy_at(ideal.hull, std::log2(41.0) * (1 - 1e-12)) == doctest::Approx(60.0));
}

TEST_CASE("power splitting scales energy by rho and decoder SNR by 1 - rho") {
  for (double rho : {0.1, 0.35, 0.8}) {
    const auto p = linear_single_point(kG, kP, kS2, worst_case_split(kS2), kK2, rho);
    CHECK(p.energy == doctest::Approx(rho * kK2 * kG * kP).epsilon(1e-12));
    CHECK(p.rate == doctest::Approx(std::log2(1 + (1 - rho) * kG * kP / kS2)).epsilon(1e-12));
  }
  const PowerSplitting split{1.0, 2.0};
  CHECK(split.effective_noise(0.5) == doctest::Approx(5.0));
  CHECK(std::isinf(split.effective_noise(1.0)));
  CHECK_THROWS_AS((PowerSplitting{-1.0, 0.0}).validate(), DomainError);
}

TEST_CASE("architectures are nested") {
  const auto ideal = region_linear_single(kG, kP, kS2, IdealReceiver{}, kK2);
  const auto ts = region_linear_single(kG, kP, kS2, TimeSwitching{}, kK2);
  const auto ps = region_linear_single(kG, kP, kS2, worst_case_split(kS2), kK2);
  CHECK(contains(ps, ts));
  CHECK(contains(ideal, ps));

  const FrequencyGrid grid{5.18e9, 1e6, 4, 1e6};
  const auto ch = random_channel(3, grid, 1, 1, 6);
  const auto mi = region_linear_multisubband(ch, 1.0, 0.1, kK2, IdealReceiver{});
  const auto mt = region_linear_multisubband(ch, 1.0, 0.1, kK2, TimeSwitching{});
  const auto mp = region_linear_multisubband(ch, 1.0, 0.1, kK2, worst_case_split(0.1));
  CHECK(contains(mp, mt));
  CHECK(contains(mi, mp));
}

TEST_CASE("multisubband endpoints") {
  const FrequencyGrid grid{5.18e9, 1e6, 8, 1e6};
  const auto ch = random_channel(9, grid, 1, 1, 10);
  const auto g = ch.siso_gains();
  const auto reg = region_linear_multisubband(ch, 2.0, 0.05, kK2, IdealReceiver{});
  CHECK(reg.max_rate() == doctest::Approx(waterfill(g, 0.05, 2.0).rate).epsilon(1e-9));
  CHECK(reg.max_energy() == doctest::Approx(kK2 * 2.0 * *std::max_element(g.begin(), g.end())).epsilon(1e-9));
  CHECK(reg.units == EnergyUnits::kWatt);
}

TEST_CASE("MIMO regions reduce to parallel channels") {
  Eigen::MatrixXcd miso(1, 3);
  miso << cdouble(0.6, 0.2), cdouble(-0.4, 0.9), cdouble(0.1, -0.3);
  const auto a = region_mimo_linear(miso, 2.0, 0.1, kK2, IdealReceiver{});
  const auto b = region_linear_single(miso.squaredNorm(), 2.0, 0.1, IdealReceiver{}, kK2);
  CHECK(a.max_rate() == doctest::Approx(b.max_rate()));
  CHECK(a.max_energy() == doctest::Approx(b.max_energy()));
  // rank one: rate and energy peak together
  CHECK(energy_at(a.hull, a.max_rate() * (1 - 1e-12)) == doctest::Approx(a.max_energy()));

  Eigen::MatrixXcd d(2, 2);
  d << 2.0, 0.0, 0.0, 1.0;
  const auto m = region_mimo_linear(d, 1.0, 1.0, kK2, IdealReceiver{});
  GainsRegionSpec spec;
  spec.gains = {4.0, 1.0};
  spec.budget = 1.0;
  spec.noise = 1.0;
  spec.energy = [](double x) { return kK2 * x; };
  const auto p = region_from_gains(spec, IdealReceiver{});
  for (int i = 0; i <= 20; ++i) {
    const double r = m.max_rate() * i / 20 * (1 - 1e-12);
    CHECK(energy_at(m.hull, r) == doctest::Approx(energy_at(p.hull, r)).epsilon(1e-9));
  }
}

TEST_CASE("saturation on one subband is a clipped rectangle") {
  const SaturationParams s(5365.0, 0.2308e-3, 10.73e-3);
  const std::vector<double> g = {0.5};
  const auto reg = region_saturation(g, 1e-3, 1e-6, s, IdealReceiver{});
  CHECK(reg.max_rate() == doctest::Approx(std::log2(1 + 0.5e-3 / 1e-6)));
  CHECK(reg.max_energy() == doctest::Approx(sigmoid_dc_power(0.5e-3, s)));
  CHECK(reg.max_energy() < s.p_sat());
  CHECK(energy_at(reg.hull, reg.max_rate() * (1 - 1e-12)) == doctest::Approx(reg.max_energy()));
}

TEST_CASE("nonlinear single-subband endpoints") {
  const DiodeNonlinearParams hv{0.17, 19.145};
  const auto reg = region_diode_nonlinear_single(1.0, 1.0, 1e-4, hv, kDefaultFlashMaxScale, 16);
  const auto& b = reg.asymmetric.boundary;
  REQUIRE(b.size() >= 2);
  CHECK(b.front().param == doctest::Approx(0.5));
  CHECK(b.back().param == doctest::Approx(1.0));
  CHECK(b.front().rate == doctest::Approx(std::log2(1 + 1.0 / 1e-4)));
  CHECK(b.back().energy > b.front().energy);
  CHECK(reg.combined.units == EnergyUnits::kZdc);
  CHECK(reg.combined.max_energy() >= reg.asymmetric.max_energy());
  CHECK(reg.combined.max_energy() >= reg.flash.max_energy());
  CHECK(contains(reg.combined, reg.asymmetric));
}

TEST_CASE("upper hull properties") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<REPoint> pts(30);
    for (auto& p : pts) {
      p.rate = 5 * rng.uniform();
      p.energy = 3 * rng.uniform();
    }
    const auto hull = upper_hull(pts);
    REQUIRE(!hull.empty());
    for (std::size_t i = 1; i < hull.size(); ++i) {
      CHECK(hull[i].rate > hull[i - 1].rate);
      CHECK(hull[i].energy <= hull[i - 1].energy);
    }
    // slopes get steeper (concave)
    for (std::size_t i = 2; i < hull.size(); ++i) {
      const double s1 = (hull[i - 1].energy - hull[i - 2].energy) / (hull[i - 1].rate - hull[i - 2].rate);
      const double s2 = (hull[i].energy - hull[i - 1].energy) / (hull[i].rate - hull[i - 1].rate);
      CHECK(s2 <= s1 + 1e-12);
    }
    for (const auto& p : pts) CHECK(energy_at(hull, p.rate) >= p.energy - 1e-12);
    CHECK(energy_at(hull, 10.0) == -std::numeric_limits<double>::infinity());

    const auto front = pareto_front(pts);
    for (const auto& f : front) CHECK(max_energy_at_rate(pts, f.rate) == f.energy);
  }
}

TEST_CASE("relabelling subbands leaves the region unchanged") {
  GainsRegionSpec spec;
  spec.gains = {0.3, 2.0, 1.1, 0.7};
  spec.budget = 1.0;
  spec.noise = 0.1;
  spec.energy = [](double x) { return x; };
  const auto a = region_from_gains(spec, IdealReceiver{});
  std::reverse(spec.gains.begin(), spec.gains.end());
  const auto b = region_from_gains(spec, IdealReceiver{});
  for (int i = 0; i <= 20; ++i) {
    const double r = a.max_rate() * i / 20 * (1 - 1e-12);
    CHECK(energy_at(a.hull, r) == doctest::Approx(energy_at(b.hull, r)).epsilon(1e-12));
  }
}

TEST_CASE("superposed region contains the CSCG-only region") {
  const FrequencyGrid grid{5.18e9, 1e6, 3, 1e6};
  const auto ch = random_channel(21, grid, 1, 1, 8);
  const auto g = ch.siso_gains();
  const DiodeNonlinearParams hv{0.17, 19.145};
  NonlinearMultiOptions opt;
  opt.n_points = 16;
  const auto sup = region_diode_nonlinear_multisubband(ch, 1.0, 0.02, hv, IdealReceiver{}, opt);
  const auto base = region_cscg_under_nonlinear(g, 1.0, 0.02, hv, 16);
  CHECK(sup.units == EnergyUnits::kZdc);
  CHECK(sup.max_rate() == doctest::Approx(waterfill(g, 0.02, 1.0).rate).epsilon(1e-6));
  CHECK(contains(sup, base, 20));
}

TEST_CASE("csv layout") {
  const auto reg = region_linear_single(kG, kP, kS2, TimeSwitching{}, kK2, 8);
  for (bool hull_only : {false, true}) {
    std::ostringstream s;
    write_csv(s, reg, nlohmann::json{{"k", 1}}, hull_only);
    std::istringstream in(s.str());
    std::string line;
    int comments = 0, rows = 0;
    bool header = false;
    while (std::getline(in, line)) {
      if (line.starts_with("#")) {
        CHECK_FALSE(header);
        ++comments;
      } else if (!header) {
        CHECK(line == "rate,energy,param");
        header = true;
      } else {
        CHECK(std::count(line.begin(), line.end(), ',') == 2);
        ++rows;
      }
    }
    CHECK(comments == 3);
    CHECK(rows == static_cast<int>(hull_only ? reg.hull.size() : reg.boundary.size()));
  }
}

TEST_CASE("svg rendering") {
  const auto w = region_linear_single(kG, kP, kS2, IdealReceiver{}, kK2, 8);
  const auto z = region_diode_nonlinear_single(1.0, 1.0, 1e-4, DiodeNonlinearParams{0.17, 19.145},
                                               kDefaultFlashMaxScale, 8)
                     .combined;
  const std::vector<RERegion> same = {w, w};
  const std::string svg = render_svg(same, "t");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  const std::vector<RERegion> mixed = {w, z};
  CHECK_THROWS_AS(render_svg(mixed, "t"), DomainError);
  CHECK_NOTHROW(render_svg(mixed, "t", true));
  CHECK_THROWS_AS(render_svg(std::vector<RERegion>{}, "t"), DomainError);
}

TEST_CASE("region json") {
  const auto reg = region_linear_single(kG, kP, kS2, IdealReceiver{}, kK2, 8);
  const auto j = to_json(reg);
  CHECK(j.at("units") == "W");
  CHECK(j.at("boundary").size() == reg.boundary.size());
  CHECK(j.at("arch") == "ideal");
}

}  // TEST_SUITE
