#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "wipt/error.hpp"
#include "wipt/parallel.hpp"
#include "wipt/signal.hpp"

using namespace wipt;

namespace {

ChannelRealization flat(int n, double gain = 1.0) {
  const FrequencyGrid grid{64e6, 1e6, n, 1e6};
  const std::vector<cdouble> h(static_cast<std::size_t>(n), cdouble(std::sqrt(gain), 0.0));
  return channel_from_response(grid, h);
}

double mean_square(const std::vector<double>& y) {
  double s = 0.0;
  for (double v : y) s += v * v;
  return s / static_cast<double>(y.size());
}

}  // namespace

TEST_SUITE("signal") {

TEST_CASE("analytic moments") {
  auto check = [](const InputDistribution& d, double m2, double m4) {
    const auto m = analytic_moments(d);
    CHECK(m.m2 == doctest::Approx(m2).epsilon(1e-14));
    CHECK(m.m4 == doctest::Approx(m4).epsilon(1e-14));
  };
  check(CW{2.0}, 2.0, 4.0);
  check(CSCG{1.0}, 1.0, 2.0);
  check(RealGaussian{2.0}, 2.0, 12.0);
  check(AsymmetricGaussian{0.5, 0.5}, 1.0, 2.0);
  check(AsymmetricGaussian{1.0, 0.0}, 1.0, 3.0);
  check(AsymmetricGaussian{0.8, 0.2}, 1.0, 3 * 0.64 + 2 * 0.16 + 3 * 0.04);
  check(Flash{2.0, 1.0}, 1.0, 4.0);
  CHECK_THROWS_AS(analytic_moments(Superposed{{{0.5, 0.0, 0.5}}, 1.0}), UnsupportedError);
  CHECK_THROWS_AS(validate(Flash{0.5, 1.0}), DomainError);
  CHECK_THROWS_AS(validate(CSCG{-1.0}), DomainError);
}

TEST_CASE("sampling") {
  const auto cw = sample_symbols(CW{2.0}, 1000, 3);
  for (const auto& x : cw) CHECK(std::abs(x) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(sample_symbols(CSCG{1.0}, 100, 9) == sample_symbols(CSCG{1.0}, 100, 9));
  CHECK(sample_symbols(CSCG{1.0}, 100, 9) != sample_symbols(CSCG{1.0}, 100, 10));

  const auto f = oracle::sample_moments(sample_symbols(Flash{3.0, 1.0}, 1000000, 5));
  CHECK(std::abs(f.m2 - 1.0) < 3 * f.m2_se);

  // flash amplitudes take only two values
  for (const auto& x : sample_symbols(Flash{2.0, 1.0}, 1000, 1)) {
    const double a = std::abs(x);
    CHECK((a == 0.0 || std::abs(a - 2.0) < 1e-12));
  }
}

TEST_CASE("Monte Carlo moments within four standard errors") {
  const std::vector<InputDistribution> dists = {CSCG{1.0}, RealGaussian{0.5},
                                                AsymmetricGaussian{0.7, 0.3}, Flash{2.5, 1.0}};
  std::uint64_t seed = 100;
  for (const auto& d : dists) {
    const auto mc = oracle::sample_moments(sample_symbols(d, 100000, seed++));
    const auto m = analytic_moments(d);
    CHECK(std::abs(mc.m2 - m.m2) < 4 * mc.m2_se);
    CHECK(std::abs(mc.m4 - m.m4) < 4 * mc.m4_se);
  }
}

TEST_CASE("single-subband RF moments") {
  const auto cw = rf_moments_single_subband(CW{0.3}, 1.0);
  CHECK(cw.m2 == doctest::Approx(0.3));
  CHECK(cw.m4 == doctest::Approx(1.5 * 0.09));
  const auto rg = rf_moments_single_subband(RealGaussian{1.0}, 1.0);
  CHECK(rg.m4 == doctest::Approx(4.5));
  const auto z = rf_moments_single_subband(CSCG{1.0}, 0.0);
  CHECK(z.m2 == 0.0);
  CHECK(z.m4 == 0.0);
  const auto g = rf_moments_single_subband(CSCG{1.0}, 2.0);
  CHECK(g.m4 == doctest::Approx(1.5 * 4.0 * 2.0));
}

TEST_CASE("synthesis") {
  const auto one = synthesize_rf(std::vector<cdouble>{std::sqrt(0.7)}, flat(1));
  CHECK(mean_square(one) == doctest::Approx(0.7).epsilon(1e-12));

  const std::vector<cdouble> ones(4, cdouble(1.0, 0.0));
  const auto four = synthesize_rf(ones, flat(4));
  const auto single = synthesize_rf(std::vector<cdouble>{1.0}, flat(1));
  const double peak4 = *std::max_element(four.begin(), four.end());
  const double peak1 = *std::max_element(single.begin(), single.end());
  CHECK(four.front() == doctest::Approx(4 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(peak4 == doctest::Approx(4 * peak1).epsilon(1e-9));

  // Parseval over a frequency-selective channel
  const FrequencyGrid grid{8e6, 1e6, 3, 1e6};
  const std::vector<cdouble> h = {{0.3, -1.1}, {0.9, 0.2}, {-0.4, 0.5}};
  const std::vector<cdouble> x = {{1.0, 0.5}, {-0.2, 0.7}, {0.1, -1.3}};
  double want = 0.0;
  for (int n = 0; n < 3; ++n) want += std::norm(h[n] * x[n]);
  CHECK(mean_square(synthesize_rf(x, channel_from_response(grid, h))) ==
        doctest::Approx(want).epsilon(1e-9));

  CHECK_THROWS_AS(synthesize_rf(ones, flat(4), 4), DomainError);
  const FrequencyGrid off{2.5e6, 1e6, 2, 1e6};
  CHECK_THROWS_AS(synthesize_rf(std::vector<cdouble>(2, 1.0),
                                channel_from_response(off, std::vector<cdouble>(2, 1.0))),
                  DomainError);
}

TEST_CASE("time-domain moments match the closed forms") {
  const DiodeNonlinearParams hv{0.17, 19.145};
  const auto cw = evaluate_zdc_timedomain(std::vector<cdouble>{std::sqrt(0.5)}, flat(1, 2.0), hv);
  const auto closed = rf_moments_single_subband(CW{0.5}, 2.0);
  CHECK(cw.m2_rf == doctest::Approx(closed.m2).epsilon(1e-12));
  CHECK(cw.m4_rf == doctest::Approx(closed.m4).epsilon(1e-12));
  CHECK(cw.z_dc == doctest::Approx(zdc_from_rf_moments(closed.m2, closed.m4, hv)).epsilon(1e-12));

  // multisine fourth moment equals the index-quadruple sum
  const std::vector<double> amps = {0.3, 1.0, 0.6, 0.2, 0.8};
  std::vector<cdouble> sym(amps.begin(), amps.end());
  const auto ms = evaluate_zdc_timedomain(sym, flat(5), hv);
  CHECK(ms.m4_rf == doctest::Approx(1.5 * oracle::multisine_fourth_moment(amps)).epsilon(1e-10));

  const auto zero = evaluate_zdc_timedomain(std::vector<cdouble>(3, 0.0), flat(3), hv);
  CHECK(zero.z_dc == 0.0);
}

TEST_CASE("multisine beats a single tone at equal power") {
  const DiodeNonlinearParams hv{0.17, 19.145};
  const auto z1 = evaluate_zdc_timedomain(std::vector<cdouble>{1.0}, flat(1), hv).z_dc;
  const std::vector<cdouble> eight(8, cdouble(std::sqrt(1.0 / 8), 0.0));
  const auto z8 = evaluate_zdc_timedomain(eight, flat(8), hv).z_dc;
  CHECK(z8 > z1);
}

TEST_CASE("random waveforms") {
  const DiodeNonlinearParams hv{0.17, 19.145};
  const auto st = evaluate_zdc_timedomain(CSCG{1.0}, flat(1), hv, 20000, 11);
  CHECK(st.m4_rf / (st.m2_rf * st.m2_rf) == doctest::Approx(3.0).epsilon(0.03));
  CHECK(st.runs == 20000);
  CHECK(st.m4_stderr > 0.0);
  CHECK_THROWS_AS(evaluate_zdc_timedomain(CSCG{1.0}, flat(1), hv, 0, 1), DomainError);

  // Superposed: deterministic power symbols plus CSCG information symbols.
  Superposed w;
  w.budget = 1.0;
  w.subbands = {{0.25, 0.0, 0.25}, {0.25, 0.0, 0.25}};
  const auto sp = evaluate_zdc_timedomain(w, flat(2), hv, 20000, 3);
  const std::vector<double> g = {1.0, 1.0};
  const std::vector<double> pp = {0.25, 0.25};
  const double want = oracle::superposed_zdc(g, pp, pp, hv);
  CHECK(std::abs(sp.z_dc - want) < 4 * sp.z_dc_stderr);
}

TEST_CASE("Monte Carlo results do not depend on the thread cap") {
  const DiodeNonlinearParams hv{0.17, 19.145};
  set_max_threads(1);
  const auto a = evaluate_zdc_timedomain(CSCG{0.25}, flat(4), hv, 500, 21);
  set_max_threads(4);
  const auto b = evaluate_zdc_timedomain(CSCG{0.25}, flat(4), hv, 500, 21);
  set_max_threads(0);
  CHECK(a.z_dc == b.z_dc);
  CHECK(a.m4_stderr == b.m4_stderr);
}

TEST_CASE("ordering and flash crossover") {
  const DiodeNonlinearParams hv{0.17, 19.145};
  auto z = [&](const InputDistribution& d) {
    const auto m = rf_moments_single_subband(d, 1.0);
    return zdc_from_rf_moments(m.m2, m.m4, hv);
  };
  CHECK(z(RealGaussian{1.0}) > z(CSCG{1.0}));
  CHECK(z(CSCG{1.0}) > z(CW{1.0}));
  double prev = 0.0;
  for (double l = 1.0; l <= 5.0; l += 0.25) {
    const double v = z(Flash{l, 1.0});
    CHECK(v > prev);
    CHECK((v > z(RealGaussian{1.0})) == (l * l > 3.0));
    prev = v;
  }
}

TEST_CASE("superposed waveform json") {
  Superposed w;
  w.budget = 1.0;
  w.subbands = {{0.5, 0.3, 0.1}, {0.2, -1.0, 0.2}};
  const auto back = superposed_from_json(to_json(w));
  REQUIRE(back.subbands.size() == 2);
  CHECK(back.subbands[1].phase == -1.0);
  CHECK(back.budget == 1.0);
  w.subbands[0].p_power = 0.9;
  CHECK_THROWS_AS(w.validate(), DomainError);
}

}  // TEST_SUITE
