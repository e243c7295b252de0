#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fluidq/ctmc.hpp"
#include "fluidq/fit.hpp"

namespace fluidq {

// ---------------------------------------------------------------------------
// Model documents (JSON, schema "fluidq.model/1"): fields `states`, `Q`
// (row-major), `rates`, and a declarative `units` map. Numeric round-trips
// are lossless (shortest round-trip float formatting).
// ---------------------------------------------------------------------------

struct ModelDocument {
  NetGenModel model;
  std::map<std::string, std::string> units;
};

std::map<std::string, std::string> default_model_units();

ModelDocument read_model(const std::string& path);
void write_model(const NetGenModel& model, const std::string& path,
                 const std::map<std::string, std::string>& units =
                     default_model_units());

// ---------------------------------------------------------------------------
// Fitted-model documents (JSON, schema "fluidq.fitted/1"): full fitting
// provenance (edges, tau, retained bins, drop log, T, counts). Q is
// re-derived from T and tau on read.
// ---------------------------------------------------------------------------

void write_fitted(const FittedModel& fitted, const std::string& path);
FittedModel read_fitted(const std::string& path);

// ---------------------------------------------------------------------------
// Trace CSV: header row required, two columns (ISO-8601 timestamp, power).
// The sampling interval is inferred and validated; unexpected gaps are an
// error unless a time-window filter is active, in which case they start a
// new contiguous segment.
// ---------------------------------------------------------------------------

struct TraceFilter {
  std::vector<int> months;  // 1..12; empty keeps all months
  int hour_begin = 0;       // inclusive
  int hour_end = 24;        // exclusive; wraps past midnight when <= begin

  bool active() const {
    return !months.empty() || hour_begin != 0 || hour_end != 24;
  }
};

struct Trace {
  std::vector<double> values;
  double sample_interval = 0.0;              // seconds
  std::vector<std::size_t> segment_offsets;  // first index of each segment

  std::vector<std::vector<double>> segments() const;
};

Trace read_trace_csv(const std::string& path, const TraceFilter& filter = {});

// ---------------------------------------------------------------------------
// Delimited output tables: '#'-prefixed metadata preamble, a header row,
// then one CSV row per record with 17-significant-digit numbers.
// ---------------------------------------------------------------------------

class TableWriter {
 public:
  TableWriter(std::ostream& out, std::vector<std::string> columns,
              const std::vector<std::pair<std::string, std::string>>& metadata);

  void row(const std::vector<double>& values);

 private:
  std::ostream& out_;
  std::size_t column_count_;
};

std::string format_double(double value);  // shortest 17-significant-digit form

std::uint64_t fnv1a_hash(std::string_view data);

}  // namespace fluidq
