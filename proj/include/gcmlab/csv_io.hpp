#ifndef GCMLAB_CSV_IO_HPP
#define GCMLAB_CSV_IO_HPP

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcmlab/harness.hpp"

namespace gcmlab {

/// Data files: header `id,y1,...,yT[,aux]`, one row per subject, an empty
/// field for a missing value. Values carry 17 significant digits so a read
/// reproduces the in-memory panel exactly.
void write_data_csv(std::ostream& out, const LongData& data);
LongData read_data_csv(std::istream& in);

inline constexpr const char* kSummarySchemaLine = "# gcmlab-summary v1";
inline constexpr const char* kSummaryHeader =
    "N,rate,mechanism,method,parameter,bias_type,bias,mc_se,coverage,convergence_rate";

/// Summary files: schema line, header, then one row per (cell, parameter)
/// sorted by N, mechanism, rate, method, parameter. Numbers use 6
/// significant digits; undefined values are empty fields.
void write_summary_csv(std::ostream& out, std::span<const SimSummary> summaries);

struct SummaryRow {
  int n = 0;
  double rate = 0.0;
  std::string mechanism;
  std::string method;
  std::string parameter;
  std::string bias_type;
  std::optional<double> bias;
  std::optional<double> mc_se;
  std::optional<double> coverage;
  std::optional<double> convergence_rate;
};

std::vector<SummaryRow> read_summary_csv(std::istream& in);

/// Splits one CSV line on commas (no quoting; none of our fields need it).
std::vector<std::string> split_csv_line(const std::string& line);

} // namespace gcmlab

#endif // GCMLAB_CSV_IO_HPP
