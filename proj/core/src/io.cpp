#include "fluidq/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fluidq/error.hpp"
#include "fluidq/version.hpp"

namespace fluidq {

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCategory::io, "cannot open " + path);
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::parse, path + ": " + e.what());
  }
}

void save_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCategory::io, "cannot write " + path);
  }
  out << text;
  if (!out) {
    throw Error(ErrorCategory::io, "failed while writing " + path);
  }
}

Eigen::MatrixXd parse_matrix(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty()) {
    throw Error(ErrorCategory::parse, what + " must be a non-empty array of rows");
  }
  const std::size_t n = rows.size();
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!rows[i].is_array() || rows[i].size() != n) {
      throw Error(ErrorCategory::parse, what + " row " + std::to_string(i) +
                                            " is not a length-" + std::to_string(n) +
                                            " array");
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!rows[i][j].is_number()) {
        throw Error(ErrorCategory::parse, what + " has a non-numeric entry");
      }
      m(i, j) = rows[i][j].get<double>();
    }
  }
  return m;
}

json dump_matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd parse_vector(const json& entries, const std::string& what) {
  if (!entries.is_array()) {
    throw Error(ErrorCategory::parse, what + " must be an array");
  }
  Eigen::VectorXd v(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].is_number()) {
      throw Error(ErrorCategory::parse, what + " has a non-numeric entry");
    }
    v(i) = entries[i].get<double>();
  }
  return v;
}

void expect_schema(const json& doc, const std::string& schema,
                   const std::string& path) {
  if (!doc.is_object() || doc.value("schema", "") != schema) {
    throw Error(ErrorCategory::parse,
                path + ": expected a document with schema \"" + schema + "\"");
  }
}

// Civil date to days since 1970-01-01 (Gregorian).
long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

struct ParsedStamp {
  long long epoch_seconds = 0;
  int month = 0;
  int hour = 0;
};

ParsedStamp parse_timestamp(const std::string& text, std::size_t line,
                            const std::string& path) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  const int matched =
      std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
  if (matched != 7 || (sep != 'T' && sep != ' ') || mo < 1 || mo > 12 || d < 1 ||
      d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) {
    throw Error(ErrorCategory::parse,
                path + ":" + std::to_string(line) + ": bad ISO-8601 timestamp \"" +
                    text + "\"");
  }
  ParsedStamp stamp;
  stamp.epoch_seconds =
      static_cast<long long>(days_from_civil(y, mo, d)) * 86400 + h * 3600 + mi * 60 + s;
  stamp.month = mo;
  stamp.hour = h;
  return stamp;
}

bool hour_in_window(int hour, const TraceFilter& filter) {
  if (filter.hour_begin == 0 && filter.hour_end == 24) return true;
  if (filter.hour_begin < filter.hour_end) {
    return hour >= filter.hour_begin && hour < filter.hour_end;
  }
  return hour >= filter.hour_begin || hour < filter.hour_end;
}

}  // namespace

std::map<std::string, std::string> default_model_units() {
  return {{"time", "s"}, {"power", "MW"}, {"energy", "MJ"}};
}

ModelDocument read_model(const std::string& path) {
  const json doc = load_json(path);
  expect_schema(doc, "fluidq.model/1", path);
  if (!doc.contains("Q") || !doc.contains("rates")) {
    throw Error(ErrorCategory::parse, path + ": model needs \"Q\" and \"rates\"");
  }
  const Eigen::MatrixXd q = parse_matrix(doc["Q"], "Q");
  const Eigen::VectorXd rates = parse_vector(doc["rates"], "rates");
  std::vector<std::string> labels;
  if (doc.contains("states")) {
    for (const auto& label : doc["states"]) {
      if (!label.is_string()) {
        throw Error(ErrorCategory::parse, path + ": state labels must be strings");
      }
      labels.push_back(label.get<std::string>());
    }
  }
  ModelDocument result{NetGenModel(RateMatrix(q), rates, std::move(labels)), {}};
  if (doc.contains("units")) {
    for (const auto& [key, value] : doc["units"].items()) {
      result.units[key] = value.get<std::string>();
    }
  }
  return result;
}

void write_model(const NetGenModel& model, const std::string& path,
                 const std::map<std::string, std::string>& units) {
  json doc;
  doc["schema"] = "fluidq.model/1";
  doc["units"] = units;
  if (!model.labels().empty()) doc["states"] = model.labels();
  doc["Q"] = dump_matrix(model.q_matrix().entries());
  json rates = json::array();
  for (Eigen::Index i = 0; i < model.rates().size(); ++i) {
    rates.push_back(model.rates()(i));
  }
  doc["rates"] = std::move(rates);
  save_text(path, doc.dump(2) + "\n");
}

void write_fitted(const FittedModel& fitted, const std::string& path) {
  json doc;
  doc["schema"] = "fluidq.fitted/1";
  doc["bin_edges"] = fitted.binning.edges();
  doc["tau"] = fitted.tau;
  doc["retained_bins"] = fitted.retained_bins;
  json dropped = json::array();
  for (const auto& d : fitted.dropped_states) {
    dropped.push_back({{"bin", d.bin}, {"reason", d.reason}});
  }
  doc["dropped_states"] = std::move(dropped);
  doc["T"] = dump_matrix(fitted.t_matrix);
  json visits = json::array();
  for (Eigen::Index i = 0; i < fitted.visit_counts.size(); ++i) {
    visits.push_back(fitted.visit_counts(i));
  }
  doc["visit_counts"] = std::move(visits);
  json counts = json::array();
  for (Eigen::Index i = 0; i < fitted.transition_counts.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < fitted.transition_counts.cols(); ++j) {
      row.push_back(fitted.transition_counts(i, j));
    }
    counts.push_back(std::move(row));
  }
  doc["transition_counts"] = std::move(counts);
  save_text(path, doc.dump(2) + "\n");
}

FittedModel read_fitted(const std::string& path) {
  const json doc = load_json(path);
  expect_schema(doc, "fluidq.fitted/1", path);
  try {
    std::vector<double> edges = doc.at("bin_edges").get<std::vector<double>>();
    const double tau = doc.at("tau").get<double>();
    const Eigen::MatrixXd t = parse_matrix(doc.at("T"), "T");
    std::vector<int> retained = doc.at("retained_bins").get<std::vector<int>>();
    if (static_cast<Eigen::Index>(retained.size()) != t.rows()) {
      throw Error(ErrorCategory::parse,
                  path + ": retained_bins does not match T dimensions");
    }
    std::vector<DroppedState> dropped;
    for (const auto& d : doc.value("dropped_states", json::array())) {
      dropped.push_back({d.at("bin").get<int>(), d.at("reason").get<std::string>()});
    }
    Eigen::VectorXi visits = Eigen::VectorXi::Zero(t.rows());
    if (doc.contains("visit_counts")) {
      const auto v = doc["visit_counts"].get<std::vector<int>>();
      if (static_cast<Eigen::Index>(v.size()) != t.rows()) {
        throw Error(ErrorCategory::parse, path + ": visit_counts length mismatch");
      }
      for (std::size_t i = 0; i < v.size(); ++i) visits(i) = v[i];
    }
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(t.rows(), t.cols());
    if (doc.contains("transition_counts")) {
      const auto& rows = doc["transition_counts"];
      if (static_cast<Eigen::Index>(rows.size()) != t.rows()) {
        throw Error(ErrorCategory::parse,
                    path + ": transition_counts dimension mismatch");
      }
      for (Eigen::Index i = 0; i < t.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.cols(); ++j) {
          counts(i, j) = rows[i][j].get<int>();
        }
      }
    }
    return FittedModel{BinningSpec(std::move(edges)),
                       t,
                       tau,
                       to_rate_matrix(t, tau),
                       std::move(retained),
                       std::move(dropped),
                       std::move(visits),
                       std::move(counts)};
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::parse, path + ": " + e.what());
  }
}

std::vector<std::vector<double>> Trace::segments() const {
  std::vector<std::vector<double>> result;
  for (std::size_t k = 0; k < segment_offsets.size(); ++k) {
    const std::size_t begin = segment_offsets[k];
    const std::size_t end =
        k + 1 < segment_offsets.size() ? segment_offsets[k + 1] : values.size();
    result.emplace_back(values.begin() + begin, values.begin() + end);
  }
  return result;
}

Trace read_trace_csv(const std::string& path, const TraceFilter& filter) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCategory::io, "cannot open " + path);
  }
  for (int m : filter.months) {
    if (m < 1 || m > 12) {
      throw Error(ErrorCategory::model, "month filter entries must lie in 1..12");
    }
  }

  std::string line;
  if (!std::getline(in, line) || line.find(',') == std::string::npos) {
    throw Error(ErrorCategory::parse, path + ": missing CSV header row");
  }

  struct Sample {
    long long t;
    double value;
    std::size_t line_number;
  };
  std::vector<Sample> kept;
  std::size_t line_number = 1;
  long long previous_t = 0;
  bool have_previous = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCategory::parse,
                  path + ":" + std::to_string(line_number) + ": expected two columns");
    }
    const ParsedStamp stamp =
        parse_timestamp(line.substr(0, comma), line_number, path);
    double value = 0.0;
    try {
      value = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCategory::parse,
                  path + ":" + std::to_string(line_number) + ": bad power value");
    }
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw Error(ErrorCategory::parse,
                  path + ":" + std::to_string(line_number) +
                      ": power must be finite and nonnegative");
    }
    if (have_previous && stamp.epoch_seconds <= previous_t) {
      throw Error(ErrorCategory::parse,
                  path + ":" + std::to_string(line_number) +
                      ": timestamps must be strictly increasing");
    }
    previous_t = stamp.epoch_seconds;
    have_previous = true;

    if (!filter.months.empty() &&
        std::find(filter.months.begin(), filter.months.end(), stamp.month) ==
            filter.months.end()) {
      continue;
    }
    if (!hour_in_window(stamp.hour, filter)) continue;
    kept.push_back({stamp.epoch_seconds, value, line_number});
  }

  if (kept.size() < 2) {
    throw Error(ErrorCategory::parse,
                path + ": fewer than 2 samples" +
                    (filter.active() ? " after filtering" : ""));
  }

  long long interval = 0;
  for (std::size_t k = 0; k + 1 < kept.size(); ++k) {
    const long long delta = kept[k + 1].t - kept[k].t;
    if (interval == 0 || delta < interval) interval = delta;
  }

  Trace trace;
  trace.sample_interval = static_cast<double>(interval);
  trace.segment_offsets.push_back(0);
  trace.values.reserve(kept.size());
  trace.values.push_back(kept[0].value);
  std::vector<std::size_t> gap_rows;
  for (std::size_t k = 1; k < kept.size(); ++k) {
    const long long delta = kept[k].t - kept[k - 1].t;
    if (delta != interval) {
      if (filter.active()) {
        trace.segment_offsets.push_back(trace.values.size());
      } else {
        gap_rows.push_back(kept[k].line_number);
      }
    }
    trace.values.push_back(kept[k].value);
  }
  if (!gap_rows.empty()) {
    std::ostringstream message;
    message << path << ": sampling interval is not constant (" << interval
            << " s inferred); offending rows:";
    for (std::size_t i = 0; i < gap_rows.size() && i < 20; ++i) {
      message << ' ' << gap_rows[i];
    }
    if (gap_rows.size() > 20) message << " ...";
    throw Error(ErrorCategory::parse, message.str());
  }
  return trace;
}

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

TableWriter::TableWriter(
    std::ostream& out, std::vector<std::string> columns,
    const std::vector<std::pair<std::string, std::string>>& metadata)
    : out_(out), column_count_(columns.size()) {
  out_ << "# fluidq " << kVersion << "\n";
  for (const auto& [key, value] : metadata) {
    out_ << "# " << key << ": " << value << "\n";
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out_ << (i ? "," : "") << columns[i];
  }
  out_ << "\n";
}

void TableWriter::row(const std::vector<double>& values) {
  if (values.size() != column_count_) {
    throw Error(ErrorCategory::numeric, "table row has wrong number of columns");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    out_ << (i ? "," : "") << format_double(values[i]);
  }
  out_ << "\n";
}

std::uint64_t fnv1a_hash(std::string_view data) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace fluidq
