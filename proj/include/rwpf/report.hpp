#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "rwpf/filter.hpp"

namespace rwpf {

// Shortest round-trip decimal form, locale-independent.
std::string format_double(double v);

struct ReportRow {
  std::string configuration;
  std::string statistic;
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t n = 0;
};

struct BenchmarkReport {
  std::vector<ReportRow> rows;
  std::map<std::string, std::string> metadata;

  void add(std::string configuration, std::string statistic, double value,
           double standard_error, std::size_t n) {
    rows.push_back(ReportRow{std::move(configuration), std::move(statistic),
                             value, standard_error, n});
  }
  const ReportRow& find(const std::string& configuration,
                        const std::string& statistic) const;
};

void write_report_csv(const BenchmarkReport& report, std::ostream& os);
void write_report_json(const BenchmarkReport& report, std::ostream& os);

void write_trace_csv(const std::vector<StepRecord>& trace, std::ostream& os);
void write_trace_json(const std::vector<StepRecord>& trace, std::ostream& os);

}  // namespace rwpf
