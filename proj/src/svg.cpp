#include "msekit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

#include "msekit/common.hpp"

namespace msekit {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(std::string_view s) {
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

std::string tick_label(double v) {
  if (v == 0.0) return "0";
  return format_double(v, 4);
}

double nice_step(double range) {
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  void fit(std::vector<double> values) {
    values.erase(std::remove_if(values.begin(), values.end(), [this](double v) { return !std::isfinite(v) || (log && v <= 0.0); }),
                 values.end());
    if (values.empty()) return;
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = log ? std::log10(*mn) : *mn;
    hi = log ? std::log10(*mx) : *mx;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.04 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  double frac(double v) const { return ((log ? std::log10(v) : v) - lo) / (hi - lo); }
  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (double e = std::ceil(lo); e <= hi + 1e-9; e += 1.0) t.push_back(std::pow(10.0, e));
      return t;
    }
    const double step = nice_step(hi - lo);
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(std::fabs(v) < 1e-12 * step ? 0.0 : v);
    return t;
  }
};

class Canvas {
 public:
  Canvas(const std::string& title, const std::string& x_label, const std::string& y_label, Axis x, Axis y)
      : x_(x), y_(y) {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
         << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         << "<rect x=\"0\" y=\"0\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight) << "\" fill=\"white\"/>\n";
    if (!title.empty())
      out_ << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
           << "</text>\n";
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    out_ << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n"
         << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(y0) << "\"/>\n"
         << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(y1) << "\"/>\n";
    for (double t : x_.ticks())
      out_ << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(px(t)) << "\" y2=\"" << num(y0 + 5) << "\"/>\n";
    for (double t : y_.ticks())
      out_ << "<line x1=\"" << num(x0 - 5) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(py(t)) << "\"/>\n";
    out_ << "</g>\n<g class=\"tick-labels\">\n";
    for (double t : x_.ticks())
      out_ << "<text x=\"" << num(px(t)) << "\" y=\"" << num(y0 + 18) << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
    for (double t : y_.ticks())
      out_ << "<text x=\"" << num(x0 - 8) << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
    out_ << "</g>\n"
         << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 18) << "\" text-anchor=\"middle\">"
         << escape(x_label) << "</text>\n"
         << "<text x=\"18\" y=\"" << num((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
         << num((y0 + y1) / 2) << ")\">" << escape(y_label) << "</text>\n";
  }

  double px(double v) const { return kLeft + x_.frac(v) * (kWidth - kLeft - kRight); }
  double py(double v) const { return kHeight - kBottom - y_.frac(v) * (kHeight - kTop - kBottom); }
  const Axis& x() const { return x_; }
  const Axis& y() const { return y_; }

  void raw(const std::string& s) { out_ << s; }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color, double width) {
    if (pts.empty()) return;
    out_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << num(width) << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) out_ << (i ? " " : "") << num(px(pts[i].first)) << ',' << num(py(pts[i].second));
    out_ << "\"/>\n";
  }

  void band(const std::vector<double>& xs, const std::vector<double>& lo, const std::vector<double>& hi, const std::string& color) {
    if (xs.empty()) return;
    out_ << "<polygon fill=\"" << color << "\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) out_ << (i ? " " : "") << num(px(xs[i])) << ',' << num(py(hi[i]));
    for (std::size_t i = xs.size(); i-- > 0;) out_ << ' ' << num(px(xs[i])) << ',' << num(py(lo[i]));
    out_ << "\"/>\n";
  }

  void hrule(double y, const std::string& color, const std::string& dash) {
    out_ << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(kWidth - kRight) << "\" y2=\""
         << num(py(y)) << "\" stroke=\"" << color << "\" stroke-dasharray=\"" << dash << "\"/>\n";
  }

  void vrule(double x, const std::string& color, const std::string& dash) {
    out_ << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(px(x)) << "\" y2=\""
         << num(kHeight - kBottom) << "\" stroke=\"" << color << "\" stroke-width=\"0.5\" stroke-dasharray=\"" << dash
         << "\"/>\n";
  }

  void dot(double x, double y, const std::string& color) {
    out_ << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
  }

  void legend(const std::vector<std::pair<std::string, std::string>>& entries) {
    double y = kTop + 10;
    for (const auto& [label, color] : entries) {
      out_ << "<rect x=\"" << num(kWidth - kRight + 15) << "\" y=\"" << num(y - 9) << "\" width=\"10\" height=\"10\" fill=\""
           << color << "\"/>\n<text x=\"" << num(kWidth - kRight + 30) << "\" y=\"" << num(y) << "\">" << escape(label)
           << "</text>\n";
      y += 16;
    }
  }

  std::string finish(bool empty) {
    if (empty)
      out_ << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num((kTop + kHeight - kBottom) / 2)
           << "\" text-anchor=\"middle\" font-size=\"16\" fill=\"#666666\">no data</text>\n";
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  Axis x_;
  Axis y_;
  std::ostringstream out_;
};

std::vector<double> column_values(const CsvTable& t, const std::string& name) {
  std::vector<double> v;
  const int c = t.column(name);
  for (std::size_t r = 0; r < t.rows.size(); ++r) v.push_back(t.number(r, c));
  return v;
}

std::string color(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof kPalette[0])]; }

std::string render_sweep(const CsvTable& t, const FigureOptions& o) {
  const auto xs = column_values(t, "value");
  const auto pt = column_values(t, "point");
  const auto lo = column_values(t, "lower");
  const auto hi = column_values(t, "upper");
  Axis x, y;
  x.fit(xs);
  auto ys = lo;
  ys.insert(ys.end(), hi.begin(), hi.end());
  ys.insert(ys.end(), pt.begin(), pt.end());
  y.fit(ys);
  const std::string kind = t.rows.empty() ? "" : t.rows.front()[0];
  Canvas c(o.title.empty() ? kind : o.title, kind.empty() ? "value" : kind, "population size", x, y);
  std::vector<double> bx, bl, bh;
  std::vector<std::pair<double, double>> line;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(pt[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i])) continue;
    bx.push_back(xs[i]);
    bl.push_back(lo[i]);
    bh.push_back(hi[i]);
    line.emplace_back(xs[i], pt[i]);
  }
  c.band(bx, bl, bh, color(0));
  c.polyline(line, color(0), 1.5);
  for (const auto& [xv, yv] : line) c.dot(xv, yv, color(0));
  return c.finish(line.empty());
}

std::string render_trajectory(const CsvTable& t, const FigureOptions& o) {
  const auto ms = column_values(t, "m");
  const auto ratio = column_values(t, "ratio");
  Axis x, y;
  x.fit(ms);
  auto ys = ratio;
  if (o.truth) ys.push_back(*o.truth);
  y.fit(ys);
  Canvas c(o.title.empty() ? "estimate trajectories" : o.title, "m", "ratio", x, y);
  // One series per (dataset, estimator, seed), in order of first appearance.
  std::vector<std::string> keys;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto key = t.rows[r][0] + "/" + t.rows[r][1] + "/" + t.rows[r][2];
    if (!series.count(key)) keys.push_back(key);
    auto& s = series[key];
    if (std::isfinite(ratio[r])) s.emplace_back(ms[r], ratio[r]);
  }
  std::map<std::string, std::size_t> estimator_color;
  std::vector<std::pair<std::string, std::string>> legend;
  bool any = false;
  double max_m = 0.0;
  for (double m : ms)
    if (std::isfinite(m)) max_m = std::max(max_m, m);
  if (max_m > 0.0) c.vrule(max_m / 2.0, "#444444", "2,2");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& est = t.rows[r][1];
    if (!estimator_color.count(est)) {
      estimator_color[est] = estimator_color.size();
      legend.emplace_back(est, color(estimator_color[est]));
    }
  }
  for (const auto& key : keys) {
    const auto est = key.substr(key.find('/') + 1, key.rfind('/') - key.find('/') - 1);
    const auto& s = series[key];
    any = any || !s.empty();
    c.polyline(s, color(estimator_color[est]), 0.8);
  }
  if (o.truth) c.hrule(*o.truth, "black", "6,3");
  c.legend(legend);
  return c.finish(!any);
}

std::string render_bias_curve(const CsvTable& t, const FigureOptions& o) {
  const auto ls = column_values(t, "L");
  const auto prec = column_values(t, "precision");
  const auto bias = column_values(t, "relative_bias");
  Axis x, y;
  x.log = true;
  x.fit(prec);
  auto ys = bias;
  ys.push_back(0.0);
  y.fit(ys);
  Canvas c(o.title.empty() ? "asymptotic relative bias" : o.title, "precision a+b", "relative bias", x, y);
  std::vector<int> order;
  std::map<int, std::vector<std::pair<double, double>>> curves;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!std::isfinite(ls[r]) || !std::isfinite(prec[r]) || !std::isfinite(bias[r]) || prec[r] <= 0.0) continue;
    const int l = static_cast<int>(ls[r]);
    if (!curves.count(l)) order.push_back(l);
    curves[l].emplace_back(prec[r], bias[r]);
  }
  c.hrule(0.0, "#888888", "4,4");
  std::vector<std::pair<std::string, std::string>> legend;
  for (std::size_t i = 0; i < order.size(); ++i) {
    c.polyline(curves[order[i]], color(i), 1.5);
    legend.emplace_back("L = " + std::to_string(order[i]), color(i));
  }
  c.legend(legend);
  return c.finish(order.empty());
}

std::string render_consistency(const CsvTable& t, const FigureOptions& o) {
  const auto bias = column_values(t, "logbias");
  std::vector<std::string> rows_order;
  std::map<std::string, std::size_t> row_index;
  std::vector<std::string> estimators;
  std::map<std::string, std::size_t> est_index;
  for (const auto& r : t.rows) {
    const auto key = r[0] + "|" + r[1];
    if (!row_index.count(key)) {
      row_index[key] = rows_order.size();
      rows_order.push_back(key);
    }
    if (!est_index.count(r[3])) {
      est_index[r[3]] = estimators.size();
      estimators.push_back(r[3]);
    }
  }
  Axis x, y;
  auto xs = bias;
  xs.push_back(0.0);
  x.fit(xs);
  y.lo = -0.5;
  y.hi = std::max<double>(static_cast<double>(rows_order.size()) - 0.5, 0.5);
  Canvas c(o.title.empty() ? "internal consistency" : o.title, "log relative bias", "conditioned dataset", x, y);
  c.vrule(0.0, "#444444", "4,4");
  bool any = false;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!std::isfinite(bias[r])) continue;
    const auto key = t.rows[r][0] + "|" + t.rows[r][1];
    const double offset = (static_cast<double>(est_index[t.rows[r][3]]) - (static_cast<double>(estimators.size()) - 1.0) / 2.0) * 0.15;
    c.dot(bias[r], static_cast<double>(row_index[key]) + offset, color(est_index[t.rows[r][3]]));
    any = true;
  }
  std::ostringstream labels;
  for (std::size_t i = 0; i < rows_order.size(); ++i)
    labels << "<text x=\"" << num(kLeft + 4) << "\" y=\"" << num(c.py(static_cast<double>(i)) - 6)
           << "\" font-size=\"10\" fill=\"#444444\">" << escape(rows_order[i]) << "</text>\n";
  c.raw(labels.str());
  std::vector<std::pair<std::string, std::string>> legend;
  for (std::size_t i = 0; i < estimators.size(); ++i) legend.emplace_back(estimators[i], color(i));
  c.legend(legend);
  return c.finish(!any);
}

}  // namespace

std::string to_string(FigureKind kind) {
  switch (kind) {
    case FigureKind::sweep_band: return "sweep-band";
    case FigureKind::trajectory: return "trajectory";
    case FigureKind::bias_curve: return "bias-curve";
    case FigureKind::consistency_dots: return "consistency-dots";
  }
  throw Error("unknown figure kind");
}

std::optional<FigureKind> parse_figure_kind(std::string_view name) {
  for (auto k : {FigureKind::sweep_band, FigureKind::trajectory, FigureKind::bias_curve, FigureKind::consistency_dots})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

const std::vector<std::string>& figure_schema(FigureKind kind) {
  static const std::vector<std::string> sweep = {"kind", "value", "point", "lower", "upper"};
  static const std::vector<std::string> trajectory = {"dataset", "estimator", "seed", "m", "point", "lower", "upper", "ratio"};
  static const std::vector<std::string> bias = {"L", "precision", "a", "b", "gamma", "p0", "relative_bias"};
  static const std::vector<std::string> consistency = {"dataset", "reference", "truth", "estimator", "point",
                                                       "lower",   "upper",     "logbias", "covered", "outlier"};
  switch (kind) {
    case FigureKind::sweep_band: return sweep;
    case FigureKind::trajectory: return trajectory;
    case FigureKind::bias_curve: return bias;
    case FigureKind::consistency_dots: return consistency;
  }
  throw Error("unknown figure kind");
}

std::string render_figure(const CsvTable& table, FigureKind kind, const FigureOptions& options) {
  if (table.header != figure_schema(kind)) {
    std::string expected;
    for (const auto& h : figure_schema(kind)) expected += (expected.empty() ? "" : ",") + h;
    throw Error("table does not match the " + to_string(kind) + " schema (expected header " + expected + ")");
  }
  switch (kind) {
    case FigureKind::sweep_band: return render_sweep(table, options);
    case FigureKind::trajectory: return render_trajectory(table, options);
    case FigureKind::bias_curve: return render_bias_curve(table, options);
    case FigureKind::consistency_dots: return render_consistency(table, options);
  }
  throw Error("unknown figure kind");
}

}  // namespace msekit
