#include "crossrsa/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "crossrsa/error.hpp"
#include "crossrsa/io.hpp"
#include "json.hpp"

namespace crossrsa {

namespace {

std::string csv_cell(const Table::Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) {
    if (s->find_first_of(",\"\n") == std::string::npos) return *s;
    std::string q = "\"";
    for (char ch : *s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  if (const auto* d = std::get_if<double>(&c)) return io::format_double(*d);
  return std::to_string(std::get<long long>(c));
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw DataError("error writing '" + path.string() + "'");
}

std::string rule_label(LearningRule r) { return std::string(to_string(r)); }

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_cell(row[i]);
    out += '\n';
  }
  return out;
}

std::string Table::to_jsonl() const {
  std::string out;
  for (const auto& row : rows) {
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::visit([&](const auto& v) { j[header[i]] = v; }, row[i]);
    }
    out += j.dump() + '\n';
  }
  return out;
}

TableFormat parse_table_format(std::string_view text) {
  if (text == "csv") return TableFormat::csv;
  if (text == "jsonl") return TableFormat::jsonl;
  throw ConfigError("unknown output format '" + std::string(text) + "' (expected csv or jsonl)");
}

void write_table(const Table& table, const std::filesystem::path& path, TableFormat format) {
  write_text(format == TableFormat::csv ? table.to_csv() : table.to_jsonl(), path);
}

Table ranking_table(const std::vector<RankingComparison>& comparisons) {
  Table t;
  t.header = {"region", "label_a", "label_b", "rules", "rho_a", "rho_b", "tau", "p_one_sided", "p_two_sided",
              "n_permutations"};
  for (const auto& c : comparisons) {
    std::string rules, a, b;
    for (std::size_t i = 0; i < c.rules.size(); ++i) {
      const char* sep = i ? ";" : "";
      rules += sep + rule_label(c.rules[i]);
      a += sep + io::format_double(c.rho_a[i]);
      b += sep + io::format_double(c.rho_b[i]);
    }
    t.rows.push_back({c.region, c.label_a, c.label_b, rules, a, b, c.tau, c.p_one_sided, c.p_two_sided,
                      static_cast<long long>(c.n_permutations)});
  }
  return t;
}

Table interaction_table(const std::vector<InteractionCell>& cells) {
  Table t;
  t.header = {"rule", "region", "delta_human", "delta_macaque", "interaction"};
  for (const auto& c : cells) {
    t.rows.push_back({rule_label(c.rule), c.region, c.delta_human, c.delta_macaque, c.interaction});
  }
  return t;
}

Table invariance_table(const std::vector<std::pair<std::string, RegionRhos>>& by_label) {
  Table t;
  t.header = {"label", "region", "delta_rho", "min_rule", "max_rule"};
  for (const auto& [label, regions] : by_label) {
    std::vector<std::string> names;
    for (const auto& [r, v] : regions) names.push_back(r);
    for (const auto& region : ordered_regions(names)) {
      const auto& rhos = regions.at(region);
      if (rhos.empty()) continue;
      const auto cmp = [](const auto& x, const auto& y) { return x.second < y.second; };
      const auto lo = std::min_element(rhos.begin(), rhos.end(), cmp);
      const auto hi = std::max_element(rhos.begin(), rhos.end(), cmp);
      t.rows.push_back({label, region, v1_invariance(rhos), rule_label(lo->first), rule_label(hi->first)});
    }
  }
  return t;
}

Table aggregate_table(const std::vector<SeedAggregate>& aggregates) {
  Table t;
  t.header = {"species", "stimulus_set", "condition", "region", "layer", "mean_rho", "std_rho",
              "ci_lower", "ci_upper", "seeds_used", "seeds_excluded"};
  const auto join = [](const std::vector<long long>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
    return s;
  };
  for (const auto& a : aggregates) {
    t.rows.push_back({a.species, a.stimulus_set, a.condition, a.region, a.layer, a.mean_rho, a.std_rho,
                      a.has_ci ? Table::Cell(a.mean_ci_lower) : Table::Cell(std::string()),
                      a.has_ci ? Table::Cell(a.mean_ci_upper) : Table::Cell(std::string()), join(a.seeds_used),
                      join(a.seeds_excluded)});
  }
  return t;
}

std::vector<RankingComparison> compare_regions(const RegionRhos& a, const RegionRhos& b, const std::string& label_a,
                                               const std::string& label_b) {
  std::vector<std::string> shared;
  for (const auto& [region, rhos] : a) {
    if (b.count(region)) shared.push_back(region);
  }
  std::vector<RankingComparison> out;
  for (const auto& region : ordered_regions(shared)) {
    out.push_back(ranking_comparison(a.at(region), b.at(region), region, label_a, label_b));
  }
  return out;
}

// --- SVG ---------------------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* condition_colour(const std::string& condition) {
  if (condition == "BP") return "#1f77b4";
  if (condition == "FA") return "#ff7f0e";
  if (condition == "PC") return "#2ca02c";
  if (condition == "STDP") return "#d62728";
  if (condition == "Random") return "#7f7f7f";
  return "#9467bd";
}

class Svg {
 public:
  Svg(double w, double h) : w_(w), h_(h) {}

  void text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 11) {
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size << "\" text-anchor=\""
          << anchor << "\">" << escape(s) << "</text>\n";
  }
  void line(double x1, double y1, double x2, double y2, const char* stroke, double width = 1.0,
            const char* dash = nullptr) {
    body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
          << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"";
    if (dash) body_ << " stroke-dasharray=\"" << dash << "\"";
    body_ << "/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill, double opacity = 1.0) {
    if (h < 0) y += h, h = -h;
    body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
          << "\" fill=\"" << fill << "\" fill-opacity=\"" << num(opacity) << "\"/>\n";
  }
  void circle(double x, double y, double r, const char* fill) {
    body_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\"" << fill
          << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) body_ << (i ? " " : "") << num(pts[i].first) << ',' << num(pts[i].second);
    body_ << "\"/>\n";
  }
  void polygon(const std::vector<std::pair<double, double>>& pts, const char* fill, double opacity) {
    body_ << "<polygon fill=\"" << fill << "\" fill-opacity=\"" << num(opacity) << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) body_ << (i ? " " : "") << num(pts[i].first) << ',' << num(pts[i].second);
    body_ << "\"/>\n";
  }
  std::string str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w_) + "\" height=\"" + num(h_) +
           "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_.str() +
           "</svg>\n";
  }

 private:
  double w_, h_;
  std::ostringstream body_;
};

// Vertical axis mapping for a plot box.
struct Axis {
  double lo, hi, top, bottom;
  double y(double v) const { return bottom - (v - lo) / (hi - lo) * (bottom - top); }
};

Axis make_axis(std::vector<double> values, double top, double bottom) {
  double lo = 0.0, hi = 0.1;
  for (double v : values) {
    if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad, top, bottom};
}

void draw_y_axis(Svg& svg, const Axis& ax, double x, double right) {
  svg.line(x, ax.top, x, ax.bottom, "#000");
  for (int i = 0; i <= 4; ++i) {
    const double v = ax.lo + (ax.hi - ax.lo) * i / 4.0;
    svg.line(x - 3, ax.y(v), x, ax.y(v), "#000");
    svg.text(x - 5, ax.y(v) + 4, num(v), "end", 9);
  }
  if (ax.lo < 0.0 && ax.hi > 0.0) svg.line(x, ax.y(0.0), right, ax.y(0.0), "#999", 0.5, "3,3");
}

void draw_legend(Svg& svg, const std::vector<std::string>& conditions, double x, double y) {
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    svg.rect(x, y + 14.0 * static_cast<double>(i) - 8, 10, 10, condition_colour(conditions[i]));
    svg.text(x + 14, y + 14.0 * static_cast<double>(i), conditions[i], "start", 10);
  }
}

struct BarGroup {
  std::string label;
  std::vector<std::pair<std::string, double>> bars;  // series label, value
};

std::string bar_chart(const std::string& title, const std::string& ylabel, const std::vector<BarGroup>& groups,
                      const std::vector<std::string>& series) {
  const double w = 120.0 + 90.0 * static_cast<double>(std::max<std::size_t>(groups.size(), 1)), h = 300.0;
  Svg svg(w + 110.0, h);
  svg.text((w + 110.0) / 2, 18, title, "middle", 13);
  std::vector<double> values;
  for (const auto& g : groups) {
    for (const auto& b : g.bars) values.push_back(b.second);
  }
  const Axis ax = make_axis(values, 40, h - 40);
  draw_y_axis(svg, ax, 60, w);
  svg.text(14, (ax.top + ax.bottom) / 2, ylabel, "start", 10);
  const double zero = ax.y(std::clamp(0.0, ax.lo, ax.hi));
  svg.line(60, zero, w, zero, "#000");
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double x0 = 80.0 + 90.0 * static_cast<double>(gi);
    const double bw = 70.0 / static_cast<double>(std::max<std::size_t>(series.size(), 1));
    for (const auto& [name, v] : groups[gi].bars) {
      const auto k = static_cast<double>(std::find(series.begin(), series.end(), name) - series.begin());
      svg.rect(x0 + k * bw, ax.y(v), bw - 1, zero - ax.y(v), condition_colour(name));
    }
    svg.text(x0 + 35, h - 22, groups[gi].label);
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    svg.rect(w + 10, 48 + 14.0 * static_cast<double>(i) - 8, 10, 10, condition_colour(series[i]));
    svg.text(w + 24, 48 + 14.0 * static_cast<double>(i), series[i], "start", 10);
  }
  return svg.str();
}

std::vector<std::string> conditions_of(const std::vector<SeedAggregate>& aggs) {
  std::vector<std::string> out;
  for (const auto& a : aggs) {
    if (std::find(out.begin(), out.end(), a.condition) == out.end()) out.push_back(a.condition);
  }
  std::stable_sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
    const auto rank = [](const std::string& c) {
      try {
        return static_cast<int>(parse_learning_rule(c));
      } catch (const Error&) {
        return 100;
      }
    };
    return std::make_pair(rank(a), a) < std::make_pair(rank(b), b);
  });
  return out;
}

// Figure 1: rho along the hierarchy per species with CI and ceiling bands.
void figure_hierarchy(const std::vector<SeedAggregate>& aggs, const std::vector<CeilingRecord>& ceilings,
                      const std::vector<std::pair<std::string, std::string>>& panels, Table& table,
                      std::string& svg_text) {
  table.header = {"species", "stimulus_set", "condition", "region", "layer", "mean_rho", "std_rho", "ci_lower",
                  "ci_upper", "n_seeds", "ceiling_mean", "ceiling_std"};
  const double pw = 340.0, ph = 300.0;
  Svg svg(pw * static_cast<double>(panels.size()) + 90.0, ph + 20.0);
  std::vector<std::string> all_conditions;
  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const auto& [species, set] = panels[pi];
    std::vector<SeedAggregate> mine;
    for (const auto& a : aggs) {
      if (a.species == species && (set.empty() || a.stimulus_set == set)) mine.push_back(a);
    }
    std::vector<std::string> regions;
    for (const auto& a : mine) regions.push_back(a.region);
    regions = ordered_regions(regions);
    const auto ceiling_for = [&](const std::string& region) -> const CeilingRecord* {
      for (const auto& c : ceilings) {
        if (c.species == species && c.region == region && (set.empty() || c.stimulus_set.empty() || c.stimulus_set == set)) {
          return &c;
        }
      }
      return nullptr;
    };
    std::vector<double> values;
    for (const auto& a : mine) {
      values.push_back(a.mean_rho);
      if (a.has_ci) values.push_back(a.mean_ci_lower), values.push_back(a.mean_ci_upper);
    }
    for (const auto& r : regions) {
      if (const auto* c = ceiling_for(r)) {
        values.push_back(c->ceiling.mean_corrected + c->ceiling.std_corrected);
        values.push_back(c->ceiling.mean_corrected - c->ceiling.std_corrected);
      }
    }
    const double x0 = pw * static_cast<double>(pi) + 60.0, x1 = x0 + pw - 80.0;
    const Axis ax = make_axis(values, 40, ph - 30);
    svg.text((x0 + x1) / 2, 20, species + (set.empty() ? "" : " (" + set + ")"), "middle", 13);
    draw_y_axis(svg, ax, x0, x1);
    const auto xpos = [&](std::size_t i) {
      return regions.size() < 2 ? (x0 + x1) / 2
                                : x0 + 20 + (x1 - x0 - 40) * static_cast<double>(i) / static_cast<double>(regions.size() - 1);
    };
    for (std::size_t i = 0; i < regions.size(); ++i) {
      svg.text(xpos(i), ph - 12, regions[i]);
      if (const auto* c = ceiling_for(regions[i])) {
        const double m = c->ceiling.mean_corrected, s = c->ceiling.std_corrected;
        svg.rect(xpos(i) - 15, ax.y(m + s), 30, ax.y(m - s) - ax.y(m + s), "#bbbbbb", 0.5);
        svg.line(xpos(i) - 15, ax.y(m), xpos(i) + 15, ax.y(m), "#555", 1.0, "2,2");
      }
    }
    for (const auto& cond : conditions_of(mine)) {
      if (std::find(all_conditions.begin(), all_conditions.end(), cond) == all_conditions.end()) {
        all_conditions.push_back(cond);
      }
      std::vector<std::pair<double, double>> line, upper, lower;
      for (std::size_t i = 0; i < regions.size(); ++i) {
        for (const auto& a : mine) {
          if (a.condition != cond || a.region != regions[i]) continue;
          line.emplace_back(xpos(i), ax.y(a.mean_rho));
          if (a.has_ci) upper.emplace_back(xpos(i), ax.y(a.mean_ci_upper)), lower.emplace_back(xpos(i), ax.y(a.mean_ci_lower));
          const auto* c = ceiling_for(a.region);
          table.rows.push_back({a.species, a.stimulus_set, a.condition, a.region, a.layer, a.mean_rho, a.std_rho,
                                a.has_ci ? Table::Cell(a.mean_ci_lower) : Table::Cell(std::string()),
                                a.has_ci ? Table::Cell(a.mean_ci_upper) : Table::Cell(std::string()),
                                static_cast<long long>(a.seeds_used.size()),
                                c ? Table::Cell(c->ceiling.mean_corrected) : Table::Cell(std::string()),
                                c ? Table::Cell(c->ceiling.std_corrected) : Table::Cell(std::string())});
        }
      }
      if (upper.size() == line.size() && !upper.empty()) {
        std::vector<std::pair<double, double>> band = upper;
        band.insert(band.end(), lower.rbegin(), lower.rend());
        svg.polygon(band, condition_colour(cond), 0.15);
      }
      svg.polyline(line, condition_colour(cond));
      for (const auto& [x, y] : line) svg.circle(x, y, 3, condition_colour(cond));
    }
  }
  draw_legend(svg, conditions_of(aggs), pw * static_cast<double>(panels.size()) + 5.0, 50);
  svg_text = svg.str();
}

// Figure 2: human vs macaque rho per rule and region with the identity line.
void figure_scatter(const RegionRhos& human, const RegionRhos& macaque, Table& table, std::string& svg_text) {
  table.header = {"region", "rule", "rho_human", "rho_macaque"};
  std::vector<std::string> regions;
  for (const auto& [r, v] : human) {
    if (macaque.count(r)) regions.push_back(r);
  }
  std::vector<double> values;
  for (const auto& region : ordered_regions(regions)) {
    for (const auto& [rule, rh] : human.at(region)) {
      const auto it = macaque.at(region).find(rule);
      if (it == macaque.at(region).end()) continue;
      table.rows.push_back({region, rule_label(rule), rh, it->second});
      values.push_back(rh);
      values.push_back(it->second);
    }
  }
  const double size = 320.0;
  Svg svg(size + 150.0, size + 60.0);
  const Axis ax = make_axis(values, 30, 30 + size - 40);
  const auto xmap = [&](double v) { return 60 + (v - ax.lo) / (ax.hi - ax.lo) * (size - 40); };
  svg.text(60 + (size - 40) / 2, 18, "cross-species rho", "middle", 13);
  draw_y_axis(svg, ax, 60, 60 + size - 40);
  svg.line(60, ax.bottom, 60 + size - 40, ax.bottom, "#000");
  svg.line(xmap(ax.lo), ax.y(ax.lo), xmap(ax.hi), ax.y(ax.hi), "#999", 1.0, "4,3");
  svg.text(60 + (size - 40) / 2, ax.bottom + 30, "human rho");
  svg.text(10, 24, "macaque rho", "start", 10);
  for (const auto& row : table.rows) {
    const auto& rule = std::get<std::string>(row[1]);
    const double x = xmap(std::get<double>(row[2])), y = ax.y(std::get<double>(row[3]));
    svg.circle(x, y, 4, condition_colour(rule));
    svg.text(x + 6, y - 4, std::get<std::string>(row[0]), "start", 8);
  }
  std::vector<std::string> rules;
  for (auto r : kAllRules) rules.push_back(rule_label(r));
  draw_legend(svg, rules, size + 20, 50);
  svg_text = svg.str();
}

// Figure 5: interaction heat table (rules x regions).
std::string interaction_svg(const std::vector<InteractionCell>& cells) {
  std::vector<std::string> regions;
  std::vector<LearningRule> rules;
  double mag = 1e-9;
  for (const auto& c : cells) {
    if (std::find(regions.begin(), regions.end(), c.region) == regions.end()) regions.push_back(c.region);
    if (std::find(rules.begin(), rules.end(), c.rule) == rules.end()) rules.push_back(c.rule);
    mag = std::max(mag, std::abs(c.interaction));
  }
  std::sort(rules.begin(), rules.end());
  const double cw = 80.0, ch = 32.0;
  Svg svg(90.0 + cw * static_cast<double>(regions.size()), 60.0 + ch * static_cast<double>(rules.size()));
  svg.text(45.0 + cw * static_cast<double>(regions.size()) / 2, 18, "interaction (delta human - delta macaque)", "middle", 12);
  for (std::size_t j = 0; j < regions.size(); ++j) svg.text(90 + cw * (static_cast<double>(j) + 0.5), 44, regions[j]);
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const double y = 52 + ch * static_cast<double>(i);
    svg.text(80, y + ch / 2 + 4, rule_label(rules[i]), "end");
    for (std::size_t j = 0; j < regions.size(); ++j) {
      for (const auto& c : cells) {
        if (c.rule != rules[i] || c.region != regions[j]) continue;
        const double t = std::clamp(c.interaction / mag, -1.0, 1.0);
        const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(t))));
        char colour[8];
        std::snprintf(colour, sizeof colour, "#%02x%02x%02x", t > 0 ? 255 : fade, fade, t < 0 ? 255 : fade);
        svg.rect(90 + cw * static_cast<double>(j), y, cw - 2, ch - 2, colour);
        char label[32];
        std::snprintf(label, sizeof label, "%+.3f", c.interaction);
        svg.text(90 + cw * (static_cast<double>(j) + 0.5), y + ch / 2 + 4, label, "middle", 10);
      }
    }
  }
  return svg.str();
}

std::vector<BarGroup> tau_groups(const std::vector<RankingComparison>& comps, const std::string& series) {
  std::vector<BarGroup> groups;
  for (const auto& c : comps) groups.push_back({c.region, {{series, c.tau}}});
  return groups;
}

}  // namespace

std::vector<std::string> write_report(const std::vector<RsaResult>& results, const std::vector<CeilingRecord>& ceilings,
                                      const ReportOptions& options, const std::filesystem::path& out_dir) {
  if (results.empty()) throw DataError("report: no results");
  std::filesystem::create_directories(out_dir);
  const auto aggs = aggregate_all(results);
  std::vector<std::string> written;
  const auto emit = [&](const std::string& stem, const Table& table, const std::string& svg) {
    write_text(table.to_csv(), out_dir / (stem + ".csv"));
    write_text(svg, out_dir / (stem + ".svg"));
    written.push_back(stem + ".csv");
    written.push_back(stem + ".svg");
  };

  Table t1;
  std::string s1;
  figure_hierarchy(aggs, ceilings,
                   {{options.human_species, options.human_set}, {options.macaque_species, options.macaque_set}}, t1, s1);
  emit("fig1_hierarchy", t1, s1);

  const auto human = region_rhos(aggs, options.human_species, options.human_set);
  const auto macaque = region_rhos(aggs, options.macaque_species, options.macaque_set);
  Table t2;
  std::string s2;
  figure_scatter(human, macaque, t2, s2);
  emit("fig2_species_scatter", t2, s2);

  const auto ranking = compare_regions(human, macaque, options.human_species, options.macaque_species);
  emit("fig3_ranking", ranking_table(ranking),
       bar_chart("Kendall tau, " + options.human_species + " vs " + options.macaque_species + " rankings", "tau",
                 tau_groups(ranking, "tau"), {"tau"}));

  const Table t4 = invariance_table({{options.human_species, human}, {options.macaque_species, macaque}});
  std::vector<BarGroup> g4;
  for (const auto& row : t4.rows) {
    const auto& region = std::get<std::string>(row[1]);
    auto it = std::find_if(g4.begin(), g4.end(), [&](const BarGroup& g) { return g.label == region; });
    if (it == g4.end()) it = g4.insert(g4.end(), BarGroup{region, {}});
    it->bars.emplace_back(std::get<std::string>(row[0]), std::get<double>(row[2]));
  }
  std::sort(g4.begin(), g4.end(), [](const BarGroup& a, const BarGroup& b) {
    return std::make_pair(region_rank(a.label), a.label) < std::make_pair(region_rank(b.label), b.label);
  });
  emit("fig4_invariance", t4,
       bar_chart("rule spread (max - min rho)", "delta rho", g4, {options.human_species, options.macaque_species}));

  std::vector<InteractionCell> cells;
  bool has_baseline = true;
  for (const auto& [region, rhos] : human) {
    if (macaque.count(region) && (!rhos.count(LearningRule::random) || !macaque.at(region).count(LearningRule::random))) {
      has_baseline = false;
    }
  }
  if (has_baseline) cells = interaction_effects(human, macaque);
  emit("fig5_interaction", interaction_table(cells), interaction_svg(cells));

  std::vector<RankingComparison> control;
  if (!options.control_set_a.empty() && !options.control_set_b.empty()) {
    control = compare_regions(region_rhos(aggs, "", options.control_set_a), region_rhos(aggs, "", options.control_set_b),
                              options.control_set_a, options.control_set_b);
  }
  emit("fig6_stimulus_control", ranking_table(control),
       bar_chart("stimulus control: Kendall tau across stimulus sets", "tau", tau_groups(control, "tau"), {"tau"}));
  return written;
}

}  // namespace crossrsa
