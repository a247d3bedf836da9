#include "clipsgd/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "clipsgd/harness/csv.hpp"

namespace clipsgd::harness {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

double parse_double_field(const std::optional<std::string>& f) {
  if (!f) throw DataError("summary CSV: missing value");
  if (*f == "inf") return kInfinity;
  if (*f == "-inf") return -kInfinity;
  if (*f == "nan") return std::nan("");
  return std::stod(*f);
}

}  // namespace

std::string trace_csv(const RunTrace& trace, std::uint64_t run_id, const std::string& label) {
  std::string out = kTraceHeader;
  out += '\n';
  const std::string prefix = std::to_string(run_id) + "," + std::to_string(trace.seed) + "," +
                             csv_escape(label) + ",";
  for (const auto& r : trace.records) {
    out += prefix;
    out += std::to_string(r.t) + "," + std::to_string(r.oracle_calls) + ",";
    out += format_double(r.f_gap) + "," + format_double(r.grad_norm) + "," +
           format_double(r.g_tilde_norm) + "," + format_double(r.eta_alpha) + ",";
    out += r.clipped ? "1," : "0,";
    out += format_double(r.dist_to_opt);
    out += '\n';
  }
  return out;
}

std::string summary_csv(const std::vector<SeriesSummary>& series) {
  std::string out = kSummaryHeader;
  out += '\n';
  for (const auto& s : series) {
    for (const auto& cp : s.checkpoints) {
      out += csv_escape(s.label) + "," + std::to_string(cp.t) + "," +
             std::to_string(cp.oracle_calls) + "," + format_double(cp.median) + "," +
             format_double(cp.q25) + "," + format_double(cp.q75) + "\n";
    }
  }
  return out;
}

std::vector<SeriesSummary> parse_summary_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  const std::size_t cm = t.column("method"), ct = t.column("t"), co = t.column("oracle_calls"),
                    cmed = t.column("median_gap"), c25 = t.column("q25_gap"),
                    c75 = t.column("q75_gap");
  std::vector<SeriesSummary> out;
  for (const auto& row : t.rows) {
    const std::string label = row[cm].value_or("");
    if (out.empty() || out.back().label != label) out.push_back({label, {}});
    Checkpoint cp;
    cp.t = std::stoull(row[ct].value_or("0"));
    cp.oracle_calls = std::stoull(row[co].value_or("0"));
    cp.median = parse_double_field(row[cmed]);
    cp.q25 = parse_double_field(row[c25]);
    cp.q75 = parse_double_field(row[c75]);
    out.back().checkpoints.push_back(cp);
  }
  return out;
}

std::string finals_csv_rows(const std::string& label, const EnsembleSummary& summary,
                            bool with_header) {
  std::string out;
  if (with_header) out = "method,seed,status,final_gap,t2_fraction,sum_eta_alpha_delta,error\n";
  for (const auto& r : summary.runs) {
    out += csv_escape(label) + "," + std::to_string(r.seed) + "," +
           (r.ok ? "ok" : (r.diverged_at ? "diverged" : "error")) + "," +
           format_double(r.final_gap) + "," + format_double(r.t2_fraction) + "," +
           format_double(r.sum_eta_alpha_delta) + "," + csv_escape(r.error) + "\n";
  }
  return out;
}

std::string checks_csv(const std::vector<LabeledCheck>& checks) {
  std::string out =
      "method,check,status,trials,violations,worst_margin,observed_frequency,"
      "required_frequency,details\n";
  for (const auto& c : checks) {
    const CheckReport& r = c.report;
    out += csv_escape(c.method) + "," + csv_escape(r.name) + "," + to_string(r.status) + "," +
           std::to_string(r.trials) + "," + std::to_string(r.violations) + "," +
           format_double(r.worst_margin) + "," + format_double(r.observed_frequency) + "," +
           format_double(r.required_frequency) + "," + csv_escape(r.details) + "\n";
  }
  return out;
}

std::string checks_json(const std::vector<LabeledCheck>& checks) {
  nlohmann::json arr = nlohmann::json::array();
  auto finite_or_string = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return format_double(v);
  };
  for (const auto& c : checks) {
    const CheckReport& r = c.report;
    arr.push_back({{"method", c.method},
                   {"check", r.name},
                   {"status", to_string(r.status)},
                   {"trials", r.trials},
                   {"violations", r.violations},
                   {"worst_margin", finite_or_string(r.worst_margin)},
                   {"observed_frequency", finite_or_string(r.observed_frequency)},
                   {"required_frequency", finite_or_string(r.required_frequency)},
                   {"details", r.details}});
  }
  return arr.dump(2) + "\n";
}

std::string tuning_csv(const TuneResult& result) {
  std::string out = "level,lr,c,median_gap,q25_gap,q75_gap,failures,selected\n";
  for (const auto& cell : result.cells) {
    const bool selected = cell.lr == result.lr && cell.c == result.c;
    out += std::to_string(cell.level) + "," + format_double(cell.lr) + "," +
           (cell.c ? format_double(*cell.c) : std::string()) + "," + format_double(cell.median) +
           "," + format_double(cell.q25) + "," + format_double(cell.q75) + "," +
           std::to_string(cell.failures) + "," + (selected ? "1" : "0") + "\n";
  }
  return out;
}

std::string convergence_svg(const std::vector<SeriesSummary>& series, const std::string& title) {
  const double W = 720, H = 460, left = 80, right = 190, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;

  double xmax = 1.0, ymin = kInfinity, ymax = -kInfinity;
  for (const auto& s : series) {
    for (const auto& cp : s.checkpoints) {
      xmax = std::max(xmax, static_cast<double>(cp.oracle_calls));
      for (double v : {cp.median, cp.q25, cp.q75}) {
        if (v > 0.0 && std::isfinite(v)) {
          ymin = std::min(ymin, v);
          ymax = std::max(ymax, v);
        }
      }
    }
  }
  if (!std::isfinite(ymin)) {
    ymin = 1e-16;
    ymax = 1.0;
  }
  double lo = std::floor(std::log10(ymin));
  double hi = std::ceil(std::log10(ymax));
  if (hi <= lo) hi = lo + 1.0;

  auto px = [&](double x) { return left + pw * x / xmax; };
  auto py = [&](double v) {
    double l = (v > 0.0 && std::isfinite(v)) ? std::log10(v) : (v > 0.0 ? hi : lo);
    l = std::clamp(l, lo, hi);
    return top + ph * (hi - l) / (hi - lo);
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << xml_escape(title) << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  const int decades = static_cast<int>(hi - lo);
  const int step = std::max(1, decades / 8);
  for (int k = 0; k <= decades; k += step) {
    const double y = top + ph * (decades - k) / static_cast<double>(decades);
    o << "<line x1=\"" << left << "\" y1=\"" << num(y) << "\" x2=\"" << left + pw << "\" y2=\""
      << num(y) << "\" stroke=\"#dddddd\"/>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">1e"
      << static_cast<int>(lo) + k << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmax * k / 4.0;
    char label[32];
    std::snprintf(label, sizeof label, "%.0f", xv);
    o << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + ph + 18)
      << "\" text-anchor=\"middle\">" << label << "</text>\n";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - 16)
    << "\" text-anchor=\"middle\">number of stochastic gradients</text>\n";
  o << "<text transform=\"translate(20," << num(top + ph / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">f(x) - f* (median, IQR)</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
    if (s.checkpoints.empty()) continue;
    o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (const auto& cp : s.checkpoints) o << num(px(cp.oracle_calls)) << "," << num(py(cp.q75)) << " ";
    for (auto it = s.checkpoints.rbegin(); it != s.checkpoints.rend(); ++it) {
      o << num(px(it->oracle_calls)) << "," << num(py(it->q25)) << " ";
    }
    o << "\"/>\n";
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (const auto& cp : s.checkpoints) o << num(px(cp.oracle_calls)) << "," << num(py(cp.median)) << " ";
    o << "\"/>\n";
    const double ly = top + 14 + 20.0 * static_cast<double>(i);
    o << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << num(ly) << "\" x2=\"" << left + pw + 36
      << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>\n";
    o << "<text x=\"" << left + pw + 42 << "\" y=\"" << num(ly + 4) << "\">" << xml_escape(s.label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace clipsgd::harness
