#include "clipsgd/harness/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "clipsgd/errors.hpp"
#include "clipsgd/random.hpp"

namespace clipsgd::harness {

namespace {

std::optional<double> parse_number(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  if (b == e) return std::nullopt;
  double v = 0.0;
  const char* first = s.data() + b;
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + e, v);
  if (res.ec != std::errc() || res.ptr != s.data() + e || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

}  // namespace

RegressionData ingest_table(const CsvTable& table, const std::string& target,
                            const IngestOptions& options, IngestReport* report) {
  IngestReport rep;
  rep.rows_in = table.rows.size();
  const std::size_t tcol = table.column(target);

  // Rows with a usable target.
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cell = table.rows[r][tcol];
    if (!cell) continue;
    if (!parse_number(*cell)) {
      throw DataError("target column '" + target + "' has a non-numeric value in record " +
                      std::to_string(r + 1));
    }
    keep.push_back(r);
  }
  rep.rows_dropped = table.rows.size() - keep.size();
  if (keep.empty()) throw DataError("dataset has no rows with a target value");

  std::vector<std::string> names;
  std::vector<ColumnKind> kinds;
  std::vector<std::vector<double>> columns;

  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == tcol) continue;
    const std::string& name = table.header[c];
    bool numeric = true;
    bool any_present = false;
    for (std::size_t r : keep) {
      const auto& cell = table.rows[r][c];
      if (!cell) continue;
      any_present = true;
      if (!parse_number(*cell)) {
        numeric = false;
        break;
      }
    }
    if (!any_present) {
      rep.dropped_columns.push_back(name);
      rep.warnings.push_back("column '" + name + "' has no values; dropped");
      continue;
    }
    if (numeric) {
      std::vector<double> values;
      double sum = 0.0;
      std::size_t present = 0;
      for (std::size_t r : keep) {
        if (const auto& cell = table.rows[r][c]) {
          sum += *parse_number(*cell);
          ++present;
        }
      }
      const double fill = sum / static_cast<double>(present);
      for (std::size_t r : keep) {
        const auto& cell = table.rows[r][c];
        values.push_back(cell ? *parse_number(*cell) : fill);
      }
      const Moments m = moments(values);
      if (!(m.std > 0.0)) {
        rep.dropped_columns.push_back(name);
        rep.warnings.push_back("column '" + name + "' is constant; dropped");
        continue;
      }
      for (double& v : values) v = (v - m.mean) / m.std;
      rep.numeric_columns.push_back(name);
      names.push_back(name);
      kinds.push_back(ColumnKind::numeric);
      columns.push_back(std::move(values));
    } else {
      std::map<std::string, std::size_t> counts;
      for (std::size_t r : keep) {
        if (const auto& cell = table.rows[r][c]) ++counts[*cell];
      }
      // Mode; ties go to the lexicographically smallest level.
      std::string mode;
      std::size_t best = 0;
      for (const auto& [level, n] : counts) {
        if (n > best) {
          best = n;
          mode = level;
        }
      }
      rep.categorical_columns.push_back(name);
      auto it = counts.begin();
      if (options.drop_first_level) ++it;
      for (; it != counts.end(); ++it) {
        std::vector<double> ind;
        ind.reserve(keep.size());
        for (std::size_t r : keep) {
          const auto& cell = table.rows[r][c];
          ind.push_back((cell ? *cell : mode) == it->first ? 1.0 : 0.0);
        }
        names.push_back(name + "=" + it->first);
        kinds.push_back(ColumnKind::one_hot);
        columns.push_back(std::move(ind));
      }
    }
  }

  std::vector<double> y;
  for (std::size_t r : keep) y.push_back(*parse_number(*table.rows[r][tcol]));
  const Moments ym = moments(y);
  rep.target_mean = ym.mean;
  rep.target_std = ym.std;
  if (!(ym.std > 0.0)) throw DataError("target column '" + target + "' is constant");
  for (double& v : y) v = (v - ym.mean) / ym.std;

  const std::size_t n = keep.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (options.shuffle) {
    // Fisher-Yates from the back, one uniform_index per swap.
    RandomStream s(options.shuffle_seed, 0x5348);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(s.uniform_index(i));
      std::swap(order[i - 1], order[j]);
    }
  }

  RegressionData data;
  const auto d = static_cast<Eigen::Index>(columns.size() + 1);
  data.X.resize(static_cast<Eigen::Index>(n), d);
  data.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    data.X(row, 0) = 1.0;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      data.X(row, static_cast<Eigen::Index>(c + 1)) = columns[c][order[i]];
    }
    data.y(row) = y[order[i]];
  }
  data.feature_names.push_back("bias");
  data.kinds.push_back(ColumnKind::bias);
  data.feature_names.insert(data.feature_names.end(), names.begin(), names.end());
  data.kinds.insert(data.kinds.end(), kinds.begin(), kinds.end());
  data.target_name = target;
  if (report) *report = std::move(rep);
  return data;
}

RegressionData ingest_csv(const std::filesystem::path& path, const std::string& target,
                          const IngestOptions& options, IngestReport* report) {
  const CsvTable table = read_csv(path);
  if (table.rows.empty()) throw DataError(path.string() + ": empty dataset");
  return ingest_table(table, target, options, report);
}

std::string regression_data_to_csv(const RegressionData& data) {
  std::ostringstream out;
  bool first = true;
  for (std::size_t c = 0; c < data.cols(); ++c) {
    if (c < data.kinds.size() && data.kinds[c] == ColumnKind::bias) continue;
    out << (first ? "" : ",") << csv_escape(data.feature_names.at(c));
    first = false;
  }
  out << (first ? "" : ",") << csv_escape(data.target_name) << '\n';
  for (Eigen::Index r = 0; r < data.X.rows(); ++r) {
    first = true;
    for (std::size_t c = 0; c < data.cols(); ++c) {
      if (c < data.kinds.size() && data.kinds[c] == ColumnKind::bias) continue;
      out << (first ? "" : ",") << format_double(data.X(r, static_cast<Eigen::Index>(c)));
      first = false;
    }
    out << (first ? "" : ",") << format_double(data.y(r)) << '\n';
  }
  return out.str();
}

}  // namespace clipsgd::harness
