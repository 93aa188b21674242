#include "gcmlab/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string_view>

#include "gcmlab/errors.hpp"

namespace gcmlab {

namespace {

std::string format_g(double v, int digits) {
  if (!std::isfinite(v)) return {};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  // never emit "-0"
  if (std::string_view(buf) == "-0") return "0";
  return buf;
}

std::optional<double> parse_optional(const std::string& field, const char* what) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ValidationError(std::string("csv: bad number in ") + what + ": '" + field + "'");
  return v;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

} // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

void write_data_csv(std::ostream& out, const LongData& data) {
  out << "id";
  for (Eigen::Index t = 0; t < data.occasions(); ++t) out << ",y" << (t + 1);
  if (data.aux) out << ",aux";
  out << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    out << (i + 1);
    for (Eigen::Index t = 0; t < data.occasions(); ++t) {
      out << ',';
      if (data.mask(i, t)) out << format_g(data.y(i, t), 17);
    }
    if (data.aux) out << ',' << format_g((*data.aux)(i), 17);
    out << '\n';
  }
}

LongData read_data_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("data csv: empty input");
  strip_cr(line);
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "id") throw ValidationError("data csv: bad header");
  const bool has_aux = header.back() == "aux";
  const auto occasions = static_cast<Eigen::Index>(header.size() - 1 - (has_aux ? 1 : 0));
  for (Eigen::Index t = 0; t < occasions; ++t) {
    if (header[t + 1] != "y" + std::to_string(t + 1))
      throw ValidationError("data csv: expected column y" + std::to_string(t + 1));
  }

  std::vector<std::vector<std::optional<double>>> rows;
  std::vector<double> aux;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ValidationError("data csv: row " + std::to_string(rows.size() + 1) +
                            " has the wrong number of fields");
    std::vector<std::optional<double>> row;
    for (Eigen::Index t = 0; t < occasions; ++t) row.push_back(parse_optional(fields[t + 1], "y"));
    if (has_aux) {
      const auto a = parse_optional(fields.back(), "aux");
      if (!a) throw ValidationError("data csv: aux must not be empty");
      aux.push_back(*a);
    }
    rows.push_back(std::move(row));
  }

  LongData data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  data.y = Eigen::MatrixXd::Zero(n, occasions);
  data.mask = Mask::Constant(n, occasions, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index t = 0; t < occasions; ++t) {
      if (rows[i][t]) {
        data.y(i, t) = *rows[i][t];
        data.mask(i, t) = true;
      }
    }
  }
  if (has_aux) data.aux = Eigen::Map<const Eigen::VectorXd>(aux.data(), n);
  return data;
}

void write_summary_csv(std::ostream& out, std::span<const SimSummary> summaries) {
  std::vector<const SimSummary*> order;
  for (const auto& s : summaries) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](const SimSummary* a, const SimSummary* b) {
    const auto key = [](const SimSummary* s) {
      return std::make_tuple(s->cell.n, static_cast<int>(s->cell.mechanism), s->cell.rate,
                             static_cast<int>(s->cell.method), static_cast<int>(s->parameter));
    };
    return key(a) < key(b);
  });

  out << kSummarySchemaLine << '\n' << kSummaryHeader << '\n';
  for (const SimSummary* s : order) {
    out << s->cell.n << ',' << format_g(s->cell.rate, 6) << ',' << mechanism_name(s->cell.mechanism)
        << ',' << method_name(s->cell.method) << ',' << param_name(s->parameter) << ','
        << (s->truth_is_zero ? "raw" : "relative") << ',' << format_g(s->bias, 6) << ','
        << format_g(s->mc_se, 6) << ',' << (s->coverage ? format_g(*s->coverage, 6) : "") << ','
        << format_g(s->convergence_rate, 6) << '\n';
  }
}

std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("summary csv: empty input");
  strip_cr(line);
  if (line != kSummarySchemaLine) throw ValidationError("summary csv: missing schema line");
  if (!std::getline(in, line)) throw ValidationError("summary csv: missing header");
  strip_cr(line);
  if (line != kSummaryHeader) throw ValidationError("summary csv: unexpected header");

  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) throw ValidationError("summary csv: wrong field count");
    SummaryRow r;
    const auto n = parse_optional(f[0], "N");
    const auto rate = parse_optional(f[1], "rate");
    if (!n || !rate) throw ValidationError("summary csv: N and rate are required");
    r.n = static_cast<int>(*n);
    r.rate = *rate;
    r.mechanism = f[2];
    r.method = f[3];
    r.parameter = f[4];
    r.bias_type = f[5];
    r.bias = parse_optional(f[6], "bias");
    r.mc_se = parse_optional(f[7], "mc_se");
    r.coverage = parse_optional(f[8], "coverage");
    r.convergence_rate = parse_optional(f[9], "convergence_rate");
    rows.push_back(std::move(r));
  }
  return rows;
}

} // namespace gcmlab
