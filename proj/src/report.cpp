#include "rwpf/report.hpp"

#include <charconv>
#include <stdexcept>

#include <json.hpp>

namespace rwpf {

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

const ReportRow& BenchmarkReport::find(const std::string& configuration,
                                       const std::string& statistic) const {
  for (const auto& row : rows) {
    if (row.configuration == configuration && row.statistic == statistic) {
      return row;
    }
  }
  throw std::out_of_range("BenchmarkReport: no row " + configuration + " / " +
                          statistic);
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void write_report_csv(const BenchmarkReport& report, std::ostream& os) {
  for (const auto& [key, value] : report.metadata) {
    os << "# " << key << '=' << value << '\n';
  }
  os << "configuration,statistic,value,standard_error,n\n";
  for (const auto& row : report.rows) {
    os << csv_escape(row.configuration) << ',' << csv_escape(row.statistic)
       << ',' << format_double(row.value) << ','
       << format_double(row.standard_error) << ',' << row.n << '\n';
  }
}

void write_report_json(const BenchmarkReport& report, std::ostream& os) {
  nlohmann::json j;
  j["metadata"] = report.metadata;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    j["rows"].push_back({{"configuration", row.configuration},
                         {"statistic", row.statistic},
                         {"value", row.value},
                         {"standard_error", row.standard_error},
                         {"n", row.n}});
  }
  os << j.dump(2) << '\n';
}

void write_trace_csv(const std::vector<StepRecord>& trace, std::ostream& os) {
  os << "time,pseudo,ess_weights,ess_betas,resampled,clamp_count,mean,"
        "variance,q05,q95,mean_abs,q05_abs,q95_abs\n";
  for (const auto& r : trace) {
    os << format_double(r.time) << ',' << (r.pseudo ? 1 : 0) << ','
       << format_double(r.ess_weights) << ',' << format_double(r.ess_betas)
       << ',' << (r.resampled ? 1 : 0) << ',' << r.clamp_count << ','
       << format_double(r.mean) << ',' << format_double(r.variance) << ','
       << format_double(r.q05) << ',' << format_double(r.q95) << ','
       << format_double(r.mean_abs) << ',' << format_double(r.q05_abs) << ','
       << format_double(r.q95_abs) << '\n';
  }
}

void write_trace_json(const std::vector<StepRecord>& trace, std::ostream& os) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : trace) {
    j.push_back({{"time", r.time},
                 {"pseudo", r.pseudo},
                 {"ess_weights", r.ess_weights},
                 {"ess_betas", r.ess_betas},
                 {"resampled", r.resampled},
                 {"clamp_count", r.clamp_count},
                 {"mean", r.mean},
                 {"variance", r.variance},
                 {"q05", r.q05},
                 {"q95", r.q95},
                 {"mean_abs", r.mean_abs},
                 {"q05_abs", r.q05_abs},
                 {"q95_abs", r.q95_abs}});
  }
  os << j.dump(2) << '\n';
}

}  // namespace rwpf
