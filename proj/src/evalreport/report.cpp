// Copyright 2026 The MAPSS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "evalreport/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "common/error.hpp"
#include "evalreport/correlation.hpp"

namespace mapss {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\"");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\"");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double measure_value(const ScoreRow& r, Measure m) { return m == Measure::kPS ? r.ps : r.pm; }
const UtteranceBound& measure_bound(const ScoreRow& r, Measure m) { return m == Measure::kPS ? r.ps_bound : r.pm_bound; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string num(double v, const char* f = "%.4f") { return std::isfinite(v) ? fmt(f, v) : std::string("n/a"); }

nlohmann::json opt_num(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

nlohmann::json bound_json(const std::optional<CorrelationBound>& b) {
  if (!b) return nullptr;
  return {{"value", b->value}, {"b", b->b}, {"h", b->h}};
}

double entropy(const std::vector<double>& counts, double total) {
  double h = 0.0;
  for (double c : counts)
    if (c > 0.0) h -= (c / total) * std::log(c / total);
  return h;
}

std::vector<std::size_t> bin_index(std::span<const double> x, std::size_t bins) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double a = *lo, w = *hi - *lo;
  std::vector<std::size_t> out(x.size(), 0);
  if (!(w > 0.0)) return out;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto b = static_cast<std::size_t>(std::floor((x[k] - a) / w * static_cast<double>(bins)));
    out[k] = std::min(b, bins - 1);
  }
  return out;
}

}  // namespace

void ScoreTable::check_unique() const {
  std::set<std::tuple<std::string, std::string, int>> seen;
  for (const auto& r : rows)
    require(seen.emplace(r.trial, r.system, r.source).second, ErrorCode::kInvalidArgument,
            "duplicate score row for trial " + r.trial + " system " + r.system + " source " +
                std::to_string(r.source));
}

std::vector<MosEntry> parse_mos_csv(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> col;
  std::vector<MosEntry> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (col.empty()) {
      for (std::size_t k = 0; k < cells.size(); ++k) col[cells[k]] = k;
      for (const char* name : {"trial", "system", "source", "mos"})
        require(col.count(name) > 0, ErrorCode::kFormatError, std::string("MOS csv lacks column ") + name);
      continue;
    }
    auto cell = [&](const char* name) -> const std::string& {
      const std::size_t k = col.at(name);
      require(k < cells.size(), ErrorCode::kFormatError, "MOS csv line " + std::to_string(lineno) + " is short");
      return cells[k];
    };
    MosEntry e;
    e.trial = cell("trial");
    e.system = cell("system");
    try {
      std::size_t used = 0;
      e.source = std::stoi(cell("source"), &used);
      require(used == cell("source").size(), ErrorCode::kFormatError, "bad source");
      e.mos = std::stod(cell("mos"), &used);
      require(used == cell("mos").size() && std::isfinite(e.mos), ErrorCode::kFormatError, "bad mos");
    } catch (const std::logic_error&) {
      fail(ErrorCode::kFormatError, "MOS csv line " + std::to_string(lineno) + " has a non-numeric field");
    } catch (const Error&) {
      fail(ErrorCode::kFormatError, "MOS csv line " + std::to_string(lineno) + " has a non-numeric field");
    }
    out.push_back(std::move(e));
  }
  require(!col.empty(), ErrorCode::kFormatError, "MOS csv is empty");
  return out;
}

std::vector<MosEntry> read_mos_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_mos_csv(ss.str());
}

std::size_t attach_mos(ScoreTable& table, const std::vector<MosEntry>& mos) {
  std::map<std::tuple<std::string, std::string, int>, double> lookup;
  for (const auto& e : mos)
    require(lookup.emplace(std::make_tuple(e.trial, e.system, e.source), e.mos).second, ErrorCode::kFormatError,
            "duplicate MOS entry for trial " + e.trial + " system " + e.system);
  std::size_t hit = 0;
  for (auto& r : table.rows) {
    auto it = lookup.find({r.trial, r.system, r.source});
    if (it == lookup.end()) continue;
    r.mos = it->second;
    ++hit;
  }
  return hit;
}

MeasureReport measure_report(const ScoreTable& table, Measure m, const ReportOptions& opt) {
  table.check_unique();
  // trial -> source -> system -> row
  std::map<std::string, std::map<int, std::map<std::string, const ScoreRow*>>> g;
  for (const auto& r : table.rows)
    if (r.mos) g[r.trial][r.source][r.system] = &r;
  require(!g.empty(), ErrorCode::kInsufficientSystems, "no scored utterance has a MOS");

  MeasureReport out;
  std::vector<std::vector<CorrelationBound>> pcc_b, srcc_b;
  bool all_bounds = true;
  std::uint64_t stream = 0;
  for (const auto& [trial, sources] : g) {
    std::set<std::string> systems;
    for (const auto& [sys, row] : sources.begin()->second) systems.insert(sys);
    pcc_b.emplace_back();
    srcc_b.emplace_back();
    for (const auto& [source, rows] : sources) {
      std::set<std::string> here;
      for (const auto& [sys, row] : rows) here.insert(sys);
      require(here == systems, ErrorCode::kInvalidArgument,
              "trial " + trial + " scores sources on different system sets");
      require(rows.size() >= 2, ErrorCode::kInsufficientSystems,
              "trial " + trial + " source " + std::to_string(source) + " has fewer than two systems");
      std::vector<double> v, mos, b, h;
      for (const auto& [sys, row] : rows) {
        v.push_back(measure_value(*row, m));
        mos.push_back(*row->mos);
        b.push_back(measure_bound(*row, m).b);
        h.push_back(measure_bound(*row, m).h);
      }
      GroupCoefficient c{trial, source, rows.size(), 0.0, 0.0, std::nullopt, std::nullopt};
      if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
        ++out.skipped;
        continue;
      }
      try {
        c.pcc = pcc(v, mos);
        c.srcc = srcc(v, mos);
        if (rows.size() >= 3) {
          c.pcc_bound = pcc_bound(v, mos, b, h, opt.confidence);
          c.srcc_bound = srcc_bound(v, mos, b, h, opt.confidence, opt.draws, opt.seed + stream);
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kZeroVariance) throw;
        ++out.skipped;
        continue;
      }
      ++stream;
      if (c.pcc_bound) {
        pcc_b.back().push_back(*c.pcc_bound);
        srcc_b.back().push_back(*c.srcc_bound);
      } else {
        all_bounds = false;
      }
      out.groups.push_back(std::move(c));
    }
  }
  if (out.groups.empty()) {
    out.pcc = out.srcc = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  for (const auto& c : out.groups) {
    out.pcc += c.pcc;
    out.srcc += c.srcc;
  }
  out.pcc /= static_cast<double>(out.groups.size());
  out.srcc /= static_cast<double>(out.groups.size());
  if (all_bounds) {
    const std::vector<double> rho(pcc_b.size(), opt.rho);
    out.pcc_bound = combine_scenario(pcc_b, rho, opt.confidence);
    out.srcc_bound = combine_scenario(srcc_b, rho, opt.confidence);
  }
  return out;
}

ScenarioReport scenario_report(const ScoreTable& table, const ReportOptions& opt) {
  return {table.scenario, measure_report(table, Measure::kPS, opt), measure_report(table, Measure::kPM, opt)};
}

std::vector<double> minmax_normalize(std::span<const double> x) {
  std::vector<double> out(x.size(), 0.0);
  if (x.empty()) return out;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double w = *hi - *lo;
  if (!(w > 0.0)) return out;
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = (x[k] - *lo) / w;
  return out;
}

double nmi(std::span<const double> x, std::span<const double> y, std::size_t bins) {
  require(x.size() == y.size(), ErrorCode::kDimensionMismatch, "nmi needs aligned pairs");
  require(!x.empty(), ErrorCode::kEmptySet, "nmi of no pairs");
  require(bins >= 2, ErrorCode::kInvalidArgument, "nmi needs at least two bins");
  const auto bx = bin_index(x, bins), by = bin_index(y, bins);
  std::vector<double> joint(bins * bins, 0.0), px(bins, 0.0), py(bins, 0.0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    joint[bx[k] * bins + by[k]] += 1.0;
    px[bx[k]] += 1.0;
    py[by[k]] += 1.0;
  }
  const double n = static_cast<double>(x.size());
  const double hx = entropy(px, n), hy = entropy(py, n);
  const double mean_h = 0.5 * (hx + hy);
  if (mean_h <= 0.0) return 0.0;
  const double mi = hx + hy - entropy(joint, n);
  return std::clamp(mi / mean_h, 0.0, 1.0);
}

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int k = 1; k <= 10; ++k) t.push_back(k / 10.0);
  return t;
}

std::vector<NmiPoint> nmi_thresholded(std::span<const double> ps, std::span<const double> pm,
                                      std::span<const double> thresholds, std::size_t bins, std::size_t min_frames) {
  require(ps.size() == pm.size(), ErrorCode::kDimensionMismatch, "PS and PM frames are not aligned");
  std::vector<NmiPoint> out;
  for (double t : thresholds) {
    require(t > 0.0 && t <= 1.0, ErrorCode::kInvalidArgument, "thresholds must lie in (0, 1]");
    NmiPoint p;
    p.threshold = t;
    for (int dir = 0; dir < 2; ++dir) {
      std::span<const double> cond = dir == 0 ? ps : pm;
      std::vector<double> xs, ys;
      for (std::size_t k = 0; k < ps.size(); ++k)
        if (cond[k] <= t) {
          xs.push_back(ps[k]);
          ys.push_back(pm[k]);
        }
      std::optional<double> v;
      if (xs.size() >= min_frames && !xs.empty()) v = nmi(xs, ys, bins);
      if (dir == 0) {
        p.count_ps = xs.size();
        p.nmi_ps = v;
      } else {
        p.count_pm = xs.size();
        p.nmi_pm = v;
      }
    }
    out.push_back(p);
  }
  return out;
}

nlohmann::json report_json(const ScenarioReport& r) {
  auto measure = [](const MeasureReport& m) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& c : m.groups)
      groups.push_back({{"trial", c.trial},
                        {"source", c.source},
                        {"systems", c.systems},
                        {"pcc", c.pcc},
                        {"srcc", c.srcc},
                        {"pcc_bound", bound_json(c.pcc_bound)},
                        {"srcc_bound", bound_json(c.srcc_bound)}});
    return nlohmann::json{{"pcc", std::isfinite(m.pcc) ? nlohmann::json(m.pcc) : nlohmann::json()},
                          {"srcc", std::isfinite(m.srcc) ? nlohmann::json(m.srcc) : nlohmann::json()},
                          {"pcc_bound", bound_json(m.pcc_bound)},
                          {"srcc_bound", bound_json(m.srcc_bound)},
                          {"skipped", m.skipped},
                          {"groups", groups}};
  };
  return {{"scenario", r.scenario}, {"PS", measure(r.ps)}, {"PM", measure(r.pm)}};
}

nlohmann::json nmi_json(const std::vector<NmiPoint>& curve) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : curve)
    a.push_back({{"threshold", p.threshold},
                 {"count_ps", p.count_ps},
                 {"nmi_ps", opt_num(p.nmi_ps)},
                 {"count_pm", p.count_pm},
                 {"nmi_pm", opt_num(p.nmi_pm)}});
  return a;
}

std::string report_text(const ScenarioReport& r) {
  std::string s = "scenario " + r.scenario + "\n";
  s += "measure      PCC      SRCC   PCC b    PCC h    SRCC b   SRCC h   groups\n";
  for (const auto* m : {&r.ps, &r.pm}) {
    char line[200];
    auto bb = [](const std::optional<CorrelationBound>& b, bool h) { return b ? num(h ? b->h : b->b) : std::string("n/a"); };
    std::snprintf(line, sizeof line, "%-8s %8s %8s %8s %8s %8s %8s %6zu\n", m == &r.ps ? "PS" : "PM",
                  num(m->pcc).c_str(), num(m->srcc).c_str(), bb(m->pcc_bound, false).c_str(),
                  bb(m->pcc_bound, true).c_str(), bb(m->srcc_bound, false).c_str(), bb(m->srcc_bound, true).c_str(),
                  m->groups.size());
    s += line;
  }
  return s;
}

std::string nmi_text(const std::vector<NmiPoint>& curve) {
  std::string s = "threshold  frames|PS   NMI|PS  frames|PM   NMI|PM\n";
  for (const auto& p : curve) {
    char line[160];
    std::snprintf(line, sizeof line, "%9.2f  %9zu  %7s  %9zu  %7s\n", p.threshold, p.count_ps,
                  p.nmi_ps ? num(*p.nmi_ps).c_str() : "undef", p.count_pm,
                  p.nmi_pm ? num(*p.nmi_pm).c_str() : "undef");
    s += line;
  }
  return s;
}

namespace {

constexpr double kW = 480, kH = 300, kL = 50, kR = 20, kT = 20, kB = 40;

std::string svg_open() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"300\" font-family=\"sans-serif\" "
         "font-size=\"11\">\n<rect width=\"480\" height=\"300\" fill=\"white\"/>\n";
}

std::string axes(const char* xlabel, const char* ylabel, double ymax) {
  std::string s;
  s += "<line x1=\"" + fmt("%.1f", kL) + "\" y1=\"" + fmt("%.1f", kH - kB) + "\" x2=\"" + fmt("%.1f", kW - kR) +
       "\" y2=\"" + fmt("%.1f", kH - kB) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + fmt("%.1f", kL) + "\" y1=\"" + fmt("%.1f", kT) + "\" x2=\"" + fmt("%.1f", kL) + "\" y2=\"" +
       fmt("%.1f", kH - kB) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double f = k / 5.0;
    const double x = kL + f * (kW - kL - kR), y = kH - kB - f * (kH - kT - kB);
    s += "<text x=\"" + fmt("%.1f", x) + "\" y=\"" + fmt("%.1f", kH - kB + 14) + "\" text-anchor=\"middle\">" +
         fmt("%.1f", f) + "</text>\n";
    s += "<text x=\"" + fmt("%.1f", kL - 6) + "\" y=\"" + fmt("%.1f", y + 4) + "\" text-anchor=\"end\">" +
         fmt(ymax >= 10 ? "%.0f" : "%.2f", f * ymax) + "</text>\n";
  }
  s += std::string("<text x=\"") + fmt("%.1f", (kW + kL) / 2) + "\" y=\"" + fmt("%.1f", kH - 8) +
       "\" text-anchor=\"middle\">" + xlabel + "</text>\n";
  s += std::string("<text x=\"12\" y=\"") + fmt("%.1f", kH / 2) + "\" transform=\"rotate(-90 12 " +
       fmt("%.1f", kH / 2) + ")\" text-anchor=\"middle\">" + ylabel + "</text>\n";
  return s;
}

std::string legend(const char* a, const char* ca, const char* b, const char* cb) {
  std::string s;
  s += std::string("<rect x=\"") + fmt("%.1f", kW - 110) + "\" y=\"24\" width=\"10\" height=\"10\" fill=\"" + ca + "\"/>";
  s += std::string("<text x=\"") + fmt("%.1f", kW - 95) + "\" y=\"33\">" + a + "</text>\n";
  s += std::string("<rect x=\"") + fmt("%.1f", kW - 110) + "\" y=\"40\" width=\"10\" height=\"10\" fill=\"" + cb + "\"/>";
  s += std::string("<text x=\"") + fmt("%.1f", kW - 95) + "\" y=\"49\">" + b + "</text>\n";
  return s;
}

}  // namespace

std::string nmi_svg(const std::vector<NmiPoint>& curve) {
  std::string s = svg_open() + axes("threshold", "NMI", 1.0);
  for (int dir = 0; dir < 2; ++dir) {
    std::string pts;
    for (const auto& p : curve) {
      const auto& v = dir == 0 ? p.nmi_ps : p.nmi_pm;
      if (!v) continue;
      pts += fmt("%.1f", kL + p.threshold * (kW - kL - kR)) + "," + fmt("%.1f", kH - kB - *v * (kH - kT - kB)) + " ";
    }
    s += "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" + std::string(dir == 0 ? "#1f77b4" : "#d62728") +
         "\" points=\"" + pts + "\"/>\n";
  }
  s += legend("given PS", "#1f77b4", "given PM", "#d62728");
  return s + "</svg>\n";
}

std::string histogram_svg(std::span<const double> ps, std::span<const double> pm, std::size_t bins) {
  require(bins >= 1, ErrorCode::kInvalidArgument, "histogram needs bins");
  auto count = [&](std::span<const double> x) {
    std::vector<double> c(bins, 0.0);
    for (double v : x) {
      const auto b = static_cast<std::size_t>(std::clamp(v, 0.0, 1.0) * static_cast<double>(bins));
      c[std::min(b, bins - 1)] += 1.0;
    }
    return c;
  };
  const auto a = count(ps), b = count(pm);
  double top = 1.0;
  for (std::size_t k = 0; k < bins; ++k) top = std::max({top, a[k], b[k]});
  std::string s = svg_open() + axes("score", "frames", top);
  const double bw = (kW - kL - kR) / static_cast<double>(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    for (int dir = 0; dir < 2; ++dir) {
      const double c = dir == 0 ? a[k] : b[k];
      const double h = c / top * (kH - kT - kB);
      s += "<rect x=\"" + fmt("%.1f", kL + k * bw + dir * bw / 2) + "\" y=\"" + fmt("%.1f", kH - kB - h) +
           "\" width=\"" + fmt("%.1f", bw / 2 - 1) + "\" height=\"" + fmt("%.1f", h) + "\" fill=\"" +
           (dir == 0 ? "#1f77b4" : "#d62728") + "\"/>\n";
    }
  }
  s += legend("PS", "#1f77b4", "PM", "#d62728");
  return s + "</svg>\n";
}

}  // namespace mapss
