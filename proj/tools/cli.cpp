#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "cli_internal.hpp"
#include "wipt/allocate.hpp"
#include "wipt/channel.hpp"
#include "wipt/error.hpp"
#include "wipt/multiuser.hpp"
#include "wipt/parallel.hpp"
#include "wipt/signal.hpp"

namespace wipt::cli {

namespace {

// "ceiling [W]" -> "ceiling [dBm]"
std::string dbm_help(const std::string& help) {
  const auto at = help.rfind("[W]");
  if (at == std::string::npos) return help + " [dBm]";
  return help.substr(0, at) + "[dBm]" + help.substr(at + 3);
}

double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
  while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
  if (first < last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    throw UsageError(what + ": not a number: '" + text + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) out.push_back(parse_number(item, what));
  if (out.empty()) throw UsageError(what + ": empty list");
  return out;
}

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return "--" + key;
}

const std::vector<Param>& common_params() {
  static const std::vector<Param> p = {
      {"seed", Kind::kInteger, "RNG seed (falls back to WIPT_SEED, then 1)"},
      {"threads", Kind::kInteger, "worker thread cap (0 = hardware concurrency)"},
  };
  return p;
}

struct Command {
  std::string name;
  std::string help;
  std::vector<Param> params;
};

std::vector<Command> commands() {
  const Param json_out{"json", Kind::kString, "write the JSON result here instead of stdout"};
  const Param csv_out{"csv", Kind::kString, "write the boundary as CSV"};
  const Param svg_out{"svg", Kind::kString, "write an SVG plot"};
  const Param power{"power", Kind::kNumber, "transmit budget P [W]", true};
  const Param noise{"noise", Kind::kNumber, "noise power per subband [W]", true};
  const std::vector<Param> harvester = {
      {"model", Kind::kString, "harvester model: linear | diode | sigmoid"},
      {"k2", Kind::kNumber, "second-order coefficient"},
      {"k4", Kind::kNumber, "fourth-order coefficient (diode)"},
      {"e3", Kind::kNumber, "RF-to-DC efficiency (linear)"},
      {"a", Kind::kNumber, "sigmoid steepness [1/W]"},
      {"b", Kind::kNumber, "sigmoid turn-on power [W]", true},
      {"p_sat", Kind::kNumber, "sigmoid ceiling [W]", true},
  };
  const std::vector<Param> channel_src = {
      {"h2", Kind::kNumber, "single-subband channel gain |h|^2"},
      {"gains", Kind::kList, "comma-separated subband gains |h_n|^2"},
      {"channel", Kind::kString, "channel JSON file"},
      {"subbands", Kind::kInteger, "draw a random SISO channel with this many subbands"},
      {"paths", Kind::kInteger, "multipath components of the random channel"},
      {"f0", Kind::kNumber, "carrier of subband 0 [Hz]"},
      {"delta_f", Kind::kNumber, "subband spacing [Hz]"},
  };
  auto join = [](std::vector<Param> a, const std::vector<Param>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };

  std::vector<Command> cmds;
  cmds.push_back({"fit-sigmoid",
                  "least-squares fit of the logistic saturation model",
                  {{"input", Kind::kString, "CSV of p_rf,p_dc measurements"},
                   {"input_units", Kind::kString, "units of the CSV columns: W | mW | dBm"},
                   json_out}});
  cmds.push_back({"eval-harvester", "evaluate a harvester model at given input powers",
                  join(harvester, {{"p_rf", Kind::kList, "comma-separated input powers [W]", true},
                                   json_out})});
  cmds.push_back(
      {"re-region", "rate-energy region for one receiver architecture",
       join(join(harvester, channel_src),
            {power, noise,
             {"arch", Kind::kString, "receiver: ideal | ts | ps"},
             {"sigma_a", Kind::kNumber, "PS antenna noise [W]", true},
             {"sigma_p", Kind::kNumber, "PS processing noise [W]", true},
             {"points", Kind::kInteger, "boundary points"},
             {"split_points", Kind::kInteger, "rho grid for nonlinear PS"},
             {"flash_l_max", Kind::kNumber, "largest flash scale"},
             {"hull_only", Kind::kFlag, "write only the hull to CSV"}, json_out, csv_out,
             svg_out})});
  cmds.push_back(
      {"allocate", "power allocation and transmit design",
       join(join(harvester, channel_src),
            {power, noise,
             {"method", Kind::kString,
              "waterfill | modified | mimo | saturation | superposed"},
             {"target", Kind::kNumber, "energy target [W or z_dc]", true},
             {"rate_floor", Kind::kNumber, "rate floor for superposed [bit/s/Hz]"},
             {"max_iterations", Kind::kInteger, "projected-gradient iteration cap"}, json_out})});
  cmds.push_back(
      {"waveform-zdc", "time-domain z_dc of a waveform over a channel",
       join(join(harvester, channel_src),
            {power,
             {"dist", Kind::kString, "cw | cscg | real | asym | flash | superposed"},
             {"p_real", Kind::kNumber, "asymmetric Gaussian real-part power [W]", true},
             {"p_imag", Kind::kNumber, "asymmetric Gaussian imaginary-part power [W]", true},
             {"l", Kind::kNumber, "flash scale"},
             {"waveform", Kind::kString, "superposed waveform JSON file"},
             {"runs", Kind::kInteger, "Monte Carlo runs"},
             {"oversampling", Kind::kInteger, "samples per cycle of the top carrier"},
             json_out})});
  cmds.push_back(
      {"multiuser-frontier", "rate/sum-DC frontier for a K=1 multi-user scenario",
       join(harvester,
            {{"scenario", Kind::kString, "scenario JSON file"},
             {"m_t", Kind::kInteger, "transmit antennas of the random scenario"},
             {"ers", Kind::kInteger, "energy receivers of the random scenario"},
             {"path_gain", Kind::kNumber, "channel power gain of the random scenario"},
             power, noise,
             {"theta_points", Kind::kInteger, "grid points in theta"},
             {"phi_points", Kind::kInteger, "grid points in phi"},
             {"power_levels", Kind::kInteger, "power levels for non-linear ERs"},
             {"linear_points", Kind::kInteger, "SINR sweep points for the linear-model beams"},
             json_out, csv_out,
             {"linear_csv", Kind::kString, "write the linear-model beam frontier as CSV"},
             svg_out})});
  cmds.push_back({"repro",
                  "built-in reproduction recipes: fig7 | fig9-shape | fig13-ordering | "
                  "sat-mismatch",
                  {{"out_dir", Kind::kString, "output directory"},
                   {"points", Kind::kInteger, "boundary points"},
                   {"runs", Kind::kInteger, "Monte Carlo samples"},
                   {"theta_points", Kind::kInteger, "grid points in theta"},
                   {"phi_points", Kind::kInteger, "grid points in phi"}}});
  for (auto& c : cmds) c.params = join(c.params, common_params());
  return cmds;
}

nlohmann::json convert(const Param& p, const std::string& raw, bool dbm) {
  const std::string what = dashed(p.key) + (dbm ? "-dbm" : "");
  switch (p.kind) {
    case Kind::kNumber: {
      const double v = parse_number(raw, what);
      return dbm ? dbm_to_watt(v) : v;
    }
    case Kind::kInteger: {
      const double v = parse_number(raw, what);
      if (v != std::floor(v)) throw UsageError(what + ": expected an integer");
      return static_cast<long long>(v);
    }
    case Kind::kList: {
      auto v = parse_list(raw, what);
      if (dbm) {
        for (double& x : v) x = dbm_to_watt(x);
      }
      return v;
    }
    case Kind::kString: return raw;
    case Kind::kFlag: return true;
  }
  return nullptr;
}

// Checks one config-file entry against its declared kind and converts dBm.
nlohmann::json from_config(const Param& p, const nlohmann::json& v, bool dbm) {
  const std::string what = "config key '" + p.key + (dbm ? "_dbm" : "") + "'";
  auto scale = [&](double x) { return dbm ? dbm_to_watt(x) : x; };
  switch (p.kind) {
    case Kind::kNumber:
      if (!v.is_number()) throw UsageError(what + ": expected a number");
      return scale(v.get<double>());
    case Kind::kInteger:
      if (!v.is_number_integer()) throw UsageError(what + ": expected an integer");
      return v;
    case Kind::kList: {
      std::vector<double> out;
      if (v.is_number()) {
        out.push_back(scale(v.get<double>()));
      } else if (v.is_array()) {
        for (const auto& x : v) {
          if (!x.is_number()) throw UsageError(what + ": expected numbers");
          out.push_back(scale(x.get<double>()));
        }
      } else {
        throw UsageError(what + ": expected a number or an array of numbers");
      }
      return out;
    }
    case Kind::kString:
      if (!v.is_string()) throw UsageError(what + ": expected a string");
      return v;
    case Kind::kFlag:
      if (!v.is_boolean()) throw UsageError(what + ": expected true or false");
      return v;
  }
  return nullptr;
}

nlohmann::json load_config(const std::string& path, const std::vector<Param>& params) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("malformed config '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw UsageError("config '" + path + "' must be a JSON object");
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& p : params) {
      if (key == p.key) {
        out[p.key] = from_config(p, value, false);
        known = true;
      } else if (p.power && key == p.key + "_dbm") {
        if (j.contains(p.key)) throw UsageError("config sets both '" + p.key + "' and '" + key + "'");
        out[p.key] = from_config(p, value, true);
        known = true;
      }
    }
    if (!known) throw UsageError("unknown config key '" + key + "'");
  }
  return out;
}

HarvesterModel model_or_throw(const Context& ctx, const std::string& fallback) {
  return harvester_from_context(ctx, fallback);
}

// Single-subband or parallel-channel gains from h2 / gains.
std::vector<double> gains_from_context(const Context& ctx) {
  if (ctx.has("h2")) return {ctx.number("h2")};
  if (ctx.has("gains")) return ctx.list("gains");
  throw UsageError("need --h2 or --gains");
}

int count_sources(const Context& ctx) {
  int n = 0;
  for (const char* k : {"h2", "gains", "channel", "subbands"}) n += ctx.has(k) ? 1 : 0;
  return n;
}

FrequencyGrid grid_from_context(const Context& ctx, int n) {
  FrequencyGrid grid;
  grid.delta_f = ctx.number("delta_f", 1e6);
  grid.f0 = ctx.number("f0", grid.delta_f * std::max(16, 4 * n));
  grid.n_subbands = n;
  grid.f_w = grid.delta_f;
  grid.validate();
  return grid;
}

ChannelRealization load_channel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read channel file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("malformed channel file '" + path + "': " + e.what());
  }
  return channel_from_json(j);
}

// SISO channel from any of the four sources.
ChannelRealization channel_from_context(const Context& ctx) {
  if (count_sources(ctx) != 1) {
    throw UsageError("give exactly one of --h2, --gains, --channel, --subbands");
  }
  if (ctx.has("channel")) return load_channel(ctx.required_string("channel"));
  if (ctx.has("subbands")) {
    const auto n = ctx.integer("subbands", 1);
    if (n < 1) throw UsageError("--subbands must be >= 1");
    const auto grid = grid_from_context(ctx, static_cast<int>(n));
    return random_channel(ctx.seed(), grid, 1, 1, static_cast<int>(ctx.integer("paths", 18)));
  }
  const auto g = gains_from_context(ctx);
  std::vector<cdouble> h;
  for (double x : g) {
    if (!(x >= 0.0)) throw DomainError("channel gains must be >= 0");
    h.emplace_back(std::sqrt(x), 0.0);
  }
  return channel_from_response(grid_from_context(ctx, static_cast<int>(h.size())), h);
}

DiodeNonlinearParams diode_from_context(const Context& ctx) {
  const auto m = harvester_from_context(ctx, "diode");
  if (const auto* d = std::get_if<DiodeNonlinearParams>(&m)) return *d;
  throw UsageError("this command needs the diode model (--k2, --k4)");
}

void emit_region(const Context& ctx, RERegion region) {
  if (ctx.has("csv")) write_file(ctx.required_string("csv"), region_csv(ctx, region, ctx.flag("hull_only")));
  if (ctx.has("svg")) {
    const std::vector<RERegion> one{region};
    write_file(ctx.required_string("svg"),
               svg_with_config(ctx, render_svg(one, "R-E region: " + region.label)));
  }
  auto result = to_json(region);
  result["corner"] = {{"rate", region.max_rate()}, {"energy", region.max_energy()}};
  emit_json(ctx, result);
}

// ---------------------------------------------------------------------------

int cmd_fit_sigmoid(const Context& ctx) {
  const std::string path = ctx.required_string("input");
  const std::string units = ctx.string("input_units", "W");
  if (units != "W" && units != "mW" && units != "dBm") {
    throw UsageError("--input-units must be W, mW or dBm");
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  auto to_watt = [&](double v) {
    return units == "W" ? v : units == "mW" ? 1e-3 * v : dbm_to_watt(v);
  };
  std::vector<MeasurementPoint> pts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2) throw DomainError(path + ":" + std::to_string(line_no) + ": need p_rf,p_dc");
    try {
      pts.push_back({to_watt(parse_number(cells[0], "p_rf")), to_watt(parse_number(cells[1], "p_dc"))});
    } catch (const UsageError&) {
      if (pts.empty() && line_no == 1) continue;  // header
      throw DomainError(path + ":" + std::to_string(line_no) + ": not numeric");
    }
  }
  const SigmoidFit fit = fit_sigmoid(pts);
  nlohmann::json result = {{"points", pts.size()},
                           {"degenerate", fit.degenerate},
                           {"residual", fit.residual},
                           {"iterations", fit.iterations},
                           {"units", "W"}};
  if (fit.params) {
    result["a"] = fit.params->a();
    result["b"] = fit.params->b();
    result["p_sat"] = fit.params->p_sat();
    result["omega"] = fit.params->omega();
  }
  emit_json(ctx, result);
  return 0;
}

int cmd_eval_harvester(const Context& ctx) {
  const auto model = model_or_throw(ctx, "");
  if (!ctx.has("p_rf")) throw UsageError("need --p-rf or --p-rf-dbm");
  nlohmann::json pts = nlohmann::json::array();
  for (double p : ctx.list("p_rf")) pts.push_back({{"p_rf", p}, {"p_dc", harvested_dc(model, p)}});
  emit_json(ctx, {{"harvester", to_json(model)}, {"points", std::move(pts)}});
  return 0;
}

int cmd_re_region(const Context& ctx) {
  const std::string model = ctx.string("model", "linear");
  const double budget = ctx.number("power");
  const double noise = ctx.number("noise");
  const ReceiverArch arch = arch_from_context(ctx, noise);
  const int n = static_cast<int>(ctx.integer("points", model == "diode" && !ctx.has("h2") ? 24 : kDefaultRegionPoints));
  if (count_sources(ctx) != 1) {
    throw UsageError("give exactly one of --h2, --gains, --channel, --subbands");
  }

  RERegion region;
  if (model == "linear") {
    const double k2 = ctx.number("k2", 1.0);
    if (ctx.has("h2")) {
      region = region_linear_single(ctx.number("h2"), budget, noise, arch, k2, n);
    } else if (ctx.has("channel")) {
      const auto ch = load_channel(ctx.required_string("channel"));
      if (ch.is_siso()) {
        region = region_linear_multisubband(ch, budget, noise, k2, arch, n);
      } else if (ch.n_subbands() == 1) {
        region = region_mimo_linear(ch.h.front(), budget, noise, k2, arch, n);
      } else {
        throw UnsupportedError("multi-subband MIMO regions are not supported");
      }
    } else {
      region = region_linear_multisubband(channel_from_context(ctx), budget, noise, k2, arch, n);
    }
  } else if (model == "sigmoid") {
    const auto m = harvester_from_context(ctx, "sigmoid");
    const auto ch = channel_from_context(ctx);
    region = region_saturation(ch, budget, noise, std::get<SaturationParams>(m), arch, n);
  } else if (model == "diode") {
    const auto hv = diode_from_context(ctx);
    if (ctx.has("h2") && std::holds_alternative<IdealReceiver>(arch)) {
      region = region_diode_nonlinear_single(ctx.number("h2"), budget, noise, hv,
                                             ctx.number("flash_l_max", kDefaultFlashMaxScale), n)
                   .combined;
    } else {
      NonlinearMultiOptions opts;
      opts.n_points = n;
      opts.n_split = static_cast<int>(ctx.integer("split_points", opts.n_split));
      region = region_diode_nonlinear_multisubband(channel_from_context(ctx), budget, noise, hv,
                                                   arch, opts);
    }
  } else {
    throw UsageError("--model must be linear, diode or sigmoid");
  }
  region.label = region.model + " / " + region.arch;
  emit_region(ctx, std::move(region));
  return 0;
}

int cmd_allocate(const Context& ctx) {
  const std::string method = ctx.required_string("method");
  const double budget = ctx.number("power");
  const double noise = ctx.number("noise", 1.0);
  if (method == "waterfill") {
    emit_json(ctx, to_json(waterfill(channel_from_context(ctx).siso_gains(), noise, budget)));
  } else if (method == "modified") {
    emit_json(ctx, to_json(modified_waterfill(channel_from_context(ctx).siso_gains(), noise, budget,
                                              ctx.number("target"), ctx.number("k2", 1.0))));
  } else if (method == "saturation") {
    const auto m = harvester_from_context(ctx, "sigmoid");
    if (!std::holds_alternative<SaturationParams>(m)) throw UsageError("saturation needs --model sigmoid");
    emit_json(ctx, to_json(saturation_allocate(channel_from_context(ctx).siso_gains(), noise, budget,
                                               ctx.number("target"), std::get<SaturationParams>(m))));
  } else if (method == "mimo") {
    if (!ctx.has("channel")) throw UsageError("mimo needs --channel");
    const auto ch = load_channel(ctx.required_string("channel"));
    if (ch.n_subbands() != 1) throw UnsupportedError("mimo allocation needs a single subband");
    emit_json(ctx, to_json(mimo_eigen_allocate(ch.h.front(), budget, ctx.number("target", 0.0),
                                               ctx.number("k2", 1.0), noise)));
  } else if (method == "superposed") {
    SuperposedOptions opts;
    opts.max_iterations = static_cast<int>(ctx.integer("max_iterations", opts.max_iterations));
    emit_json(ctx, to_json(superposed_waveform_allocate(channel_from_context(ctx), noise, budget,
                                                        ctx.number("rate_floor", 0.0),
                                                        diode_from_context(ctx), opts)));
  } else {
    throw UsageError("--method must be waterfill, modified, mimo, saturation or superposed");
  }
  return 0;
}

int cmd_waveform_zdc(const Context& ctx) {
  const std::string dist = ctx.string("dist", "cscg");
  const auto hv = diode_from_context(ctx);
  InputDistribution d;
  if (dist == "cw") {
    d = CW{ctx.number("power")};
  } else if (dist == "cscg") {
    d = CSCG{ctx.number("power")};
  } else if (dist == "real") {
    d = RealGaussian{ctx.number("power")};
  } else if (dist == "asym") {
    d = AsymmetricGaussian{ctx.number("p_real"), ctx.number("p_imag")};
  } else if (dist == "flash") {
    d = Flash{ctx.number("l"), ctx.number("power")};
  } else if (dist == "superposed") {
    const std::string path = ctx.required_string("waveform");
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path + "'");
    try {
      d = superposed_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw DomainError("malformed waveform file '" + path + "': " + e.what());
    }
  } else {
    throw UsageError("--dist must be cw, cscg, real, asym, flash or superposed");
  }
  validate(d);

  ChannelRealization ch;
  if (count_sources(ctx) == 0) {
    const auto* sp = std::get_if<Superposed>(&d);
    const std::size_t n = sp != nullptr ? sp->subbands.size() : 1;
    const std::vector<cdouble> flat(n, cdouble(1.0, 0.0));
    ch = channel_from_response(grid_from_context(ctx, static_cast<int>(n)), flat);
  } else {
    ch = channel_from_context(ctx);
  }
  const int runs = static_cast<int>(ctx.integer("runs", 1000));
  const int os = static_cast<int>(ctx.integer("oversampling", kDefaultOversampling));
  const RfStatistics s = evaluate_zdc_timedomain(d, ch, hv, runs, ctx.seed(), os);
  nlohmann::json result = {{"m2_rf", s.m2_rf},         {"m4_rf", s.m4_rf},
                           {"m2_stderr", s.m2_stderr}, {"m4_stderr", s.m4_stderr},
                           {"z_dc", s.z_dc},           {"z_dc_stderr", s.z_dc_stderr},
                           {"runs", s.runs},           {"subbands", ch.n_subbands()}};
  if (ch.n_subbands() == 1 && !std::holds_alternative<Superposed>(d)) {
    const MomentPair m = rf_moments_single_subband(d, ch.siso_gains().front());
    result["analytic"] = {{"m2_rf", m.m2},
                          {"m4_rf", m.m4},
                          {"z_dc", zdc_from_rf_moments(m.m2, m.m4, hv)}};
  }
  emit_json(ctx, result);
  return 0;
}

int cmd_multiuser_frontier(const Context& ctx) {
  MultiuserScenario sc;
  if (ctx.has("scenario")) {
    const std::string path = ctx.required_string("scenario");
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path + "'");
    try {
      sc = scenario_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw DomainError("malformed scenario file '" + path + "': " + e.what());
    }
  } else {
    sc = random_scenario(ctx.seed(), static_cast<int>(ctx.integer("m_t", 2)), 1,
                         static_cast<int>(ctx.integer("ers", 2)), ctx.number("power"),
                         ctx.number("noise"), ctx.number("path_gain", 1.0),
                         harvester_from_context(ctx, "linear"));
  }
  GridSearchOptions g;
  g.n_theta = static_cast<int>(ctx.integer("theta_points", g.n_theta));
  g.n_phi = static_cast<int>(ctx.integer("phi_points", g.n_phi));
  g.n_power = static_cast<int>(ctx.integer("power_levels", g.n_power));
  RERegion grid = gridsearch_frontier(sc, g);
  RERegion lin = linear_beam_frontier(sc, static_cast<int>(ctx.integer("linear_points", 64)));
  if (ctx.has("csv")) write_file(ctx.required_string("csv"), region_csv(ctx, grid));
  if (ctx.has("linear_csv")) write_file(ctx.required_string("linear_csv"), region_csv(ctx, lin));
  if (ctx.has("svg")) {
    const std::vector<RERegion> both{grid, lin};
    write_file(ctx.required_string("svg"),
               svg_with_config(ctx, render_svg(both, "IR rate vs sum harvested power")));
  }
  emit_json(ctx, {{"scenario", to_json(sc)},
                  {"gridsearch", to_json(grid)},
                  {"linear_beams", to_json(lin)}});
  return 0;
}

int dispatch(const Context& ctx, const std::string& recipe) {
  if (ctx.command == "fit-sigmoid") return cmd_fit_sigmoid(ctx);
  if (ctx.command == "eval-harvester") return cmd_eval_harvester(ctx);
  if (ctx.command == "re-region") return cmd_re_region(ctx);
  if (ctx.command == "allocate") return cmd_allocate(ctx);
  if (ctx.command == "waveform-zdc") return cmd_waveform_zdc(ctx);
  if (ctx.command == "multiuser-frontier") return cmd_multiuser_frontier(ctx);
  return run_repro(ctx, recipe);
}

}  // namespace

// ---------------------------------------------------------------------------

bool Context::has(const std::string& key) const { return config.contains(key); }

double Context::number(const std::string& key) const {
  if (!has(key)) throw UsageError("missing required " + dashed(key));
  return config.at(key).get<double>();
}

double Context::number(const std::string& key, double fallback) const {
  return has(key) ? config.at(key).get<double>() : fallback;
}

long long Context::integer(const std::string& key, long long fallback) const {
  return has(key) ? config.at(key).get<long long>() : fallback;
}

std::string Context::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? config.at(key).get<std::string>() : fallback;
}

std::string Context::required_string(const std::string& key) const {
  if (!has(key)) throw UsageError("missing required " + dashed(key));
  return config.at(key).get<std::string>();
}

std::vector<double> Context::list(const std::string& key) const {
  if (!has(key)) throw UsageError("missing required " + dashed(key));
  return config.at(key).get<std::vector<double>>();
}

bool Context::flag(const std::string& key) const {
  return has(key) && config.at(key).get<bool>();
}

std::uint64_t Context::seed() const {
  return static_cast<std::uint64_t>(config.at("seed").get<long long>());
}

nlohmann::json envelope(const Context& ctx, nlohmann::json result) {
  return {{"wipt_version", WIPT_VERSION},
          {"command", ctx.command},
          {"config", ctx.config},
          {"result", std::move(result)}};
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << content;
  f.close();
  if (!f) throw IoError("failed writing '" + path + "'");
}

void emit_json(const Context& ctx, const nlohmann::json& result) {
  const std::string text = envelope(ctx, result).dump(2) + "\n";
  if (ctx.has("json")) {
    write_file(ctx.required_string("json"), text);
  } else {
    *ctx.out << text;
  }
}

std::string region_csv(const Context& ctx, const RERegion& region, bool hull_only) {
  std::ostringstream s;
  write_csv(s, region, {{"command", ctx.command}, {"config", ctx.config}}, hull_only);
  return s.str();
}

std::string svg_with_config(const Context& ctx, const std::string& svg) {
  std::string cfg = nlohmann::json({{"command", ctx.command}, {"config", ctx.config}}).dump();
  for (std::size_t pos = 0; (pos = cfg.find("--", pos)) != std::string::npos;) cfg.replace(pos, 2, "-\\u002d");
  const std::string comment = "<!-- wipt " + std::string(WIPT_VERSION) + " " + cfg + " -->\n";
  const auto eol = svg.find('\n');
  if (eol == std::string::npos) return comment + svg;
  return svg.substr(0, eol + 1) + comment + svg.substr(eol + 1);
}

HarvesterModel harvester_from_context(const Context& ctx, const std::string& fallback_model) {
  const std::string model = ctx.string("model", fallback_model);
  if (model == "linear") {
    LinearParams p{ctx.number("k2", 1.0), ctx.number("e3", 1.0)};
    p.validate();
    return p;
  }
  if (model == "diode") {
    DiodeNonlinearParams p{ctx.number("k2"), ctx.number("k4")};
    p.validate();
    return p;
  }
  if (model == "sigmoid") return SaturationParams(ctx.number("a"), ctx.number("b"), ctx.number("p_sat"));
  if (model.empty()) throw UsageError("missing required --model");
  throw UsageError("--model must be linear, diode or sigmoid");
}

ReceiverArch arch_from_context(const Context& ctx, double noise) {
  const std::string arch = ctx.string("arch", "ideal");
  if (arch == "ideal") return IdealReceiver{};
  if (arch == "ts") return TimeSwitching{};
  if (arch != "ps") throw UsageError("--arch must be ideal, ts or ps");
  if (!ctx.has("sigma_a") && !ctx.has("sigma_p")) return worst_case_split(noise);
  PowerSplitting ps;
  ps.sigma_a_sq = ctx.has("sigma_a") ? ctx.number("sigma_a") : noise - ctx.number("sigma_p");
  ps.sigma_p_sq = ctx.has("sigma_p") ? ctx.number("sigma_p") : noise - ps.sigma_a_sq;
  return ps;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wireless information and power transfer toolkit", "wipt"};
  app.set_version_flag("--version", std::string(WIPT_VERSION));
  app.require_subcommand(1);

  const auto cmds = commands();
  struct Bound {
    std::map<std::string, std::string> raw;
    std::map<std::string, std::string> raw_dbm;
    std::map<std::string, bool> flags;
    std::map<std::string, CLI::Option*> opts;
    std::map<std::string, CLI::Option*> dbm_opts;
    std::string config_path;
    std::string recipe;
  };
  std::map<std::string, Bound> bound;
  std::map<std::string, CLI::App*> subs;
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    auto& b = bound[c.name];
    sub->add_option("--config", b.config_path, "JSON config; flags override its fields");
    if (c.name == "repro") {
      sub->add_option("recipe", b.recipe, "fig7 | fig9-shape | fig13-ordering | sat-mismatch")
          ->required()
          ->check(CLI::IsMember({"fig7", "fig9-shape", "fig13-ordering", "sat-mismatch"}));
    }
    for (const auto& p : c.params) {
      if (p.kind == Kind::kFlag) {
        b.opts[p.key] = sub->add_flag(dashed(p.key), b.flags[p.key], p.help);
        continue;
      }
      b.opts[p.key] = sub->add_option(dashed(p.key), b.raw[p.key], p.help);
      if (p.power) {
        b.dbm_opts[p.key] =
            sub->add_option(dashed(p.key) + "-dbm", b.raw_dbm[p.key], dbm_help(p.help))
                ->excludes(b.opts[p.key]);
      }
    }
    subs[c.name] = sub;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << WIPT_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "wipt: " << e.what() << '\n';
    const auto parsed = app.get_subcommands();
    err << (parsed.empty() ? app.help() : parsed.front()->help());
    return 2;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const auto& cmd = *std::find_if(cmds.begin(), cmds.end(),
                                  [&](const Command& c) { return c.name == chosen->get_name(); });
  auto& b = bound[cmd.name];
  Context ctx;
  ctx.command = cmd.name == "repro" ? "repro " + b.recipe : cmd.name;
  ctx.out = &out;
  ctx.err = &err;
  try {
    try {
      if (!b.config_path.empty()) ctx.config = load_config(b.config_path, cmd.params);
      for (const auto& p : cmd.params) {
        if (b.opts[p.key]->count() > 0) {
          ctx.config[p.key] = convert(p, p.kind == Kind::kFlag ? "" : b.raw[p.key], false);
        } else if (p.power && b.dbm_opts[p.key]->count() > 0) {
          ctx.config[p.key] = convert(p, b.raw_dbm[p.key], true);
        }
      }
      if (!ctx.has("seed")) {
        long long seed = 1;
        if (const char* env = std::getenv("WIPT_SEED"); env != nullptr && *env != '\0') {
          const double v = parse_number(env, "WIPT_SEED");
          if (v < 0 || v != std::floor(v)) throw UsageError("WIPT_SEED must be a non-negative integer");
          seed = static_cast<long long>(v);
        }
        ctx.config["seed"] = seed;
      }
      if (ctx.config.at("seed").get<long long>() < 0) throw UsageError("--seed must be >= 0");
      if (ctx.has("threads")) {
        const auto t = ctx.integer("threads", 0);
        if (t < 0) throw UsageError("--threads must be >= 0");
        set_max_threads(static_cast<unsigned>(t));
      }
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("bad config value: ") + e.what());
    }
    try {
      return dispatch(ctx, b.recipe);
    } catch (const nlohmann::json::type_error& e) {
      throw UsageError(std::string("bad config value: ") + e.what());
    }
  } catch (const UsageError& e) {
    err << "wipt " << cmd.name << ": " << e.what() << '\n';
    return 2;
  } catch (const InfeasibleError& e) {
    err << "wipt " << cmd.name << ": infeasible: " << e.what()
        << " (max attainable " << e.max_attainable() << ")\n";
    return 1;
  } catch (const Error& e) {
    err << "wipt " << cmd.name << ": " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "wipt " << cmd.name << ": " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "wipt " << cmd.name << ": " << e.what() << '\n';
    return 1;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace wipt::cli
