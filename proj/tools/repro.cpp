// Built-in reproduction recipes. Each writes CSV, SVG and a JSON summary
// into --out-dir and lists the files it wrote on stdout.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>

#include "cli_internal.hpp"
#include "wipt/multiuser.hpp"
#include "wipt/signal.hpp"

namespace wipt::cli {

namespace {

struct Writer {
  const Context& ctx;
  std::filesystem::path dir;
  std::vector<std::string> written;

  void put(const std::string& name, const std::string& content) {
    const auto path = (dir / name).string();
    write_file(path, content);
    written.push_back(path);
  }

  void finish(const std::string& stem, nlohmann::json summary) {
    put(stem + ".json", envelope(ctx, std::move(summary)).dump(2) + "\n");
    for (const auto& w : written) *ctx.out << w << '\n';
  }
};

Writer make_writer(const Context& ctx) {
  std::filesystem::path dir = ctx.string("out_dir", ".");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  return Writer{ctx, dir, {}};
}

int fig7(const Context& ctx) {
  constexpr double kK2 = 0.5;
  constexpr double kGain = 12.0;
  constexpr double kBudget = 10.0;
  constexpr double kNoise = 3.0;
  const int n = static_cast<int>(ctx.integer("points", kDefaultRegionPoints));
  std::vector<RERegion> regions = {
      region_linear_single(kGain, kBudget, kNoise, IdealReceiver{}, kK2, n),
      region_linear_single(kGain, kBudget, kNoise, TimeSwitching{}, kK2, n),
      region_linear_single(kGain, kBudget, kNoise, worst_case_split(kNoise), kK2, n)};
  regions[0].label = "ideal receiver";
  regions[1].label = "time switching";
  regions[2].label = "power splitting";

  Writer w = make_writer(ctx);
  for (const auto& r : regions) w.put("fig7_" + r.arch + ".csv", region_csv(ctx, r));
  w.put("fig7.svg", svg_with_config(ctx, render_svg(regions, "Receiver architectures, linear harvester")));
  nlohmann::json summary = {{"corner", {{"rate", regions[0].max_rate()}, {"energy", regions[0].max_energy()}}}};
  for (const auto& r : regions) summary["regions"][r.arch] = to_json(r);
  w.finish("fig7", std::move(summary));
  return 0;
}

int fig9_shape(const Context& ctx) {
  constexpr double kBudget = 1.0;
  constexpr double kNoise = 1e-4;
  const DiodeNonlinearParams hv{0.17, 19.145};
  const int n = static_cast<int>(ctx.integer("points", kDefaultRegionPoints));
  auto reg = region_diode_nonlinear_single(1.0, kBudget, kNoise, hv, kDefaultFlashMaxScale, n);
  reg.asymmetric.label = "asymmetric Gaussian";
  reg.flash.label = "CSCG / flash time sharing";

  const auto& b = reg.asymmetric.boundary;
  const MomentPair d = rf_moments_single_subband(AsymmetricGaussian{kBudget / 2, kBudget / 2}, 1.0);
  const MomentPair a = rf_moments_single_subband(AsymmetricGaussian{kBudget, 0.0}, 1.0);
  bool monotone = true;
  for (std::size_t i = 1; i < b.size(); ++i) {
    monotone = monotone && b[i].rate <= b[i - 1].rate && b[i].energy >= b[i - 1].energy;
  }

  Writer w = make_writer(ctx);
  w.put("fig9_asymmetric.csv", region_csv(ctx, reg.asymmetric));
  w.put("fig9_flash.csv", region_csv(ctx, reg.flash));
  const std::vector<RERegion> plot{reg.asymmetric, reg.flash};
  w.put("fig9.svg", svg_with_config(ctx, render_svg(plot, "Single-subband inputs, diode harvester")));
  w.finish("fig9", {{"point_d", to_json(b.front())},
                    {"point_a", to_json(b.back())},
                    {"m4_ratio_a_to_d", a.m4 / d.m4},
                    {"monotone", monotone},
                    {"asymmetric", to_json(reg.asymmetric)},
                    {"flash", to_json(reg.flash)}});
  return 0;
}

int fig13_ordering(const Context& ctx) {
  constexpr double kPower = 1.0;
  const DiodeNonlinearParams hv{0.17, 19.145};
  const auto n = static_cast<std::size_t>(ctx.integer("runs", 100000));
  const std::uint64_t seed = ctx.seed();
  auto zdc = [&](const InputDistribution& d) {
    const MomentPair m = rf_moments_single_subband(d, 1.0);
    return zdc_from_rf_moments(m.m2, m.m4, hv);
  };

  nlohmann::json dists = nlohmann::json::array();
  const std::vector<std::pair<std::string, InputDistribution>> cases = {
      {"cw", CW{kPower}},
      {"cscg", CSCG{kPower}},
      {"real-gaussian", RealGaussian{kPower}},
      {"flash-l2", Flash{2.0, kPower}}};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& [name, d] = cases[i];
    const MomentPair m = analytic_moments(d);
    const auto x = sample_symbols(d, n, seed + i);
    double s2 = 0.0;
    double s4 = 0.0;
    for (const auto& v : x) {
      const double p = std::norm(v);
      s2 += p;
      s4 += p * p;
    }
    dists.push_back({{"name", name},
                     {"m2", m.m2},
                     {"m4", m.m4},
                     {"m2_mc", s2 / static_cast<double>(n)},
                     {"m4_mc", s4 / static_cast<double>(n)},
                     {"z_dc", zdc(d)}});
  }

  // z_dc of Flash(l) against the real Gaussian level.
  std::string csv = "# wipt " + std::string(WIPT_VERSION) + "\n# config: " +
                    nlohmann::json({{"command", ctx.command}, {"config", ctx.config}}).dump() +
                    "\nl,z_dc_flash,z_dc_real_gaussian\n";
  const double real = zdc(RealGaussian{kPower});
  double crossover = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double l = 1.0 + 2.0 * i / 200.0;
    const double f = zdc(Flash{l, kPower});
    if (crossover == 0.0 && f > real) crossover = l;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", l, f, real);
    csv += buf;
  }

  Writer w = make_writer(ctx);
  w.put("fig13_flash.csv", csv);
  w.finish("fig13", {{"distributions", dists},
                     {"samples", n},
                     {"first_l_above_real_gaussian", crossover},
                     {"crossover_l", std::sqrt(3.0)}});
  return 0;
}

int sat_mismatch(const Context& ctx) {
  const SaturationParams er(5365.0, 0.2308e-3, 10.73e-3);
  auto sc = random_scenario(ctx.seed(), 2, 1, 5, 1.0, 1e-5, 1e-4, er);
  // ERs from near (deep saturation) to far (linear regime).
  const double spread[] = {30.0, 10.0, 3.0, 1.0, 0.3};
  for (std::size_t j = 0; j < sc.er_channels.size(); ++j) sc.er_channels[j] *= std::sqrt(spread[j]);
  GridSearchOptions g;
  g.n_theta = static_cast<int>(ctx.integer("theta_points", g.n_theta));
  g.n_phi = static_cast<int>(ctx.integer("phi_points", g.n_phi));
  RERegion grid = gridsearch_frontier(sc, g);
  RERegion lin = linear_beam_frontier(sc, static_cast<int>(ctx.integer("points", 64)));
  grid.label = "saturation-aware (grid search)";
  lin.label = "linear-model design";

  Writer w = make_writer(ctx);
  w.put("sat_mismatch_grid.csv", region_csv(ctx, grid));
  w.put("sat_mismatch_linear.csv", region_csv(ctx, lin));
  const std::vector<RERegion> plot{grid, lin};
  w.put("sat_mismatch.svg", svg_with_config(ctx, render_svg(plot, "Saturation-aware vs linear-model design")));
  w.finish("sat_mismatch", {{"scenario", to_json(sc)},
                            {"gridsearch", to_json(grid)},
                            {"linear_beams", to_json(lin)}});
  return 0;
}

}  // namespace

int run_repro(const Context& ctx, const std::string& recipe) {
  if (recipe == "fig7") return fig7(ctx);
  if (recipe == "fig9-shape") return fig9_shape(ctx);
  if (recipe == "fig13-ordering") return fig13_ordering(ctx);
  if (recipe == "sat-mismatch") return sat_mismatch(ctx);
  throw UsageError("unknown recipe '" + recipe + "'");
}

}  // namespace wipt::cli
