#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include "wipt/error.hpp"
#include "wipt/region.hpp"

namespace wipt {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// 1, 2, 5 x 10^k tick step for roughly five ticks.
double tick_step(double span) {
  if (span <= 0.0) return 1.0;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

}  // namespace

void write_csv(std::ostream& out, const RERegion& region, const nlohmann::json& config,
               bool hull_only) {
  out << "# wipt " << WIPT_VERSION << '\n';
  out << "# model=" << region.model << " arch=" << region.arch
      << " units=" << units_name(region.units) << " curve=" << (hull_only ? "hull" : "boundary")
      << '\n';
  out << "# config: " << config.dump() << '\n';
  out << "rate,energy,param\n";
  for (const auto& p : hull_only ? region.hull : region.boundary) {
    out << num(p.rate) << ',' << num(p.energy) << ',' << num(p.param) << '\n';
  }
}

nlohmann::json to_json(const REPoint& p) {
  return {{"rate", p.rate}, {"energy", p.energy}, {"param", p.param}, {"strategy", p.strategy}};
}

nlohmann::json to_json(const RERegion& region) {
  nlohmann::json boundary = nlohmann::json::array();
  for (const auto& p : region.boundary) boundary.push_back(to_json(p));
  nlohmann::json hull = nlohmann::json::array();
  for (const auto& p : region.hull) hull.push_back(to_json(p));
  return {{"model", region.model},
          {"arch", region.arch},
          {"label", region.label},
          {"units", units_name(region.units)},
          {"boundary", std::move(boundary)},
          {"hull", std::move(hull)}};
}

std::string render_svg(std::span<const RERegion> regions, const std::string& title,
                       bool normalize) {
  if (regions.empty()) throw DomainError("render_svg: nothing to plot");
  for (const auto& r : regions) {
    if (r.units != regions.front().units && !normalize) {
      throw DomainError("render_svg: regions use different energy units; pass normalize");
    }
  }
  constexpr double kW = 640.0;
  constexpr double kH = 440.0;
  constexpr double kLeft = 70.0;
  constexpr double kRight = 170.0;
  constexpr double kTop = 40.0;
  constexpr double kBottom = 55.0;
  constexpr std::array<const char*, 8> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                  "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

  double r_max = 0.0;
  double e_max = 0.0;
  for (const auto& r : regions) {
    r_max = std::max(r_max, r.max_rate());
    e_max = std::max(e_max, normalize ? 1.0 : r.max_energy());
  }
  if (r_max <= 0.0) r_max = 1.0;
  if (e_max <= 0.0) e_max = 1.0;
  const double r_step = tick_step(r_max);
  const double e_step = tick_step(e_max);
  r_max = std::ceil(r_max / r_step) * r_step;
  e_max = std::ceil(e_max / e_step) * e_step;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto sx = [&](double r) { return kLeft + pw * r / r_max; };
  auto sy = [&](double e) { return kTop + ph * (1.0 - e / e_max); };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kW
    << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" font-size=\"15\">" << escape_xml(title) << "</text>\n";

  s << "<g font-family=\"sans-serif\" font-size=\"11\" stroke-width=\"1\">\n";
  for (double r = 0.0; r <= r_max * (1 + 1e-9); r += r_step) {
    s << "<line x1=\"" << sx(r) << "\" y1=\"" << kTop << "\" x2=\"" << sx(r) << "\" y2=\""
      << kTop + ph << "\" stroke=\"#e6e6e6\"/>\n"
      << "<text x=\"" << sx(r) << "\" y=\"" << kTop + ph + 16
      << "\" text-anchor=\"middle\">" << short_num(r) << "</text>\n";
  }
  for (double e = 0.0; e <= e_max * (1 + 1e-9); e += e_step) {
    s << "<line x1=\"" << kLeft << "\" y1=\"" << sy(e) << "\" x2=\"" << kLeft + pw << "\" y2=\""
      << sy(e) << "\" stroke=\"#e6e6e6\"/>\n"
      << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(e) + 4 << "\" text-anchor=\"end\">"
      << short_num(e) << "</text>\n";
  }
  s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  const std::string e_label =
      normalize ? "Energy [normalized]" : "Energy [" + units_name(regions.front().units) + "]";
  s << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 14
    << "\" text-anchor=\"middle\">Rate [bit/s/Hz]</text>\n"
    << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << kTop + ph / 2 << ")\">" << escape_xml(e_label) << "</text>\n</g>\n";

  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& r = regions[i];
    const char* color = kColors[i % kColors.size()];
    const double scale = normalize && r.max_energy() > 0.0 ? 1.0 / r.max_energy() : 1.0;
    // Hull closed against the axes, so the plotted curve is the region outline.
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    if (!r.hull.empty()) {
      s << sx(0.0) << ',' << sy(r.hull.front().energy * scale) << ' ';
      for (const auto& p : r.hull) s << sx(p.rate) << ',' << sy(p.energy * scale) << ' ';
      s << sx(r.hull.back().rate) << ',' << sy(0.0);
    }
    s << "\"/>\n";
    for (const auto& p : r.boundary) {
      s << "<circle cx=\"" << sx(p.rate) << "\" cy=\"" << sy(p.energy * scale)
        << "\" r=\"1.8\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(i);
    const double lx = kLeft + pw + 12.0;
    s << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 22 << "\" y2=\""
      << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << lx + 28 << "\" y=\"" << ly
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(r.label.empty() ? r.model + " / " + r.arch : r.label)
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace wipt
