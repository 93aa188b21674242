#include "gcmlab/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "gcmlab/errors.hpp"

namespace gcmlab {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ValidationError("config: empty list element in '" + value + "'");
    out.push_back(item);
  }
  if (out.empty()) throw ValidationError("config: empty list");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ValidationError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ValidationError("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ValidationError("config: '" + key + "' expects an unsigned integer, got '" + v + "'");
  return out;
}

int positive(const std::string& key, long long v, long long min = 1) {
  if (v < min || v > 1'000'000'000)
    throw ValidationError("config: '" + key + "' must be >= " + std::to_string(min));
  return static_cast<int>(v);
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"n_values",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid.n_values.clear();
         for (const auto& s : split_list(v)) c.grid.n_values.push_back(positive(k, to_int(k, s), 10));
       }},
      {"rates",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid.rates.clear();
         for (const auto& s : split_list(v)) {
           const double r = to_double(k, s);
           if (!(r >= 0.0 && r < 1.0)) throw ValidationError("config: rates must lie in [0, 1)");
           c.grid.rates.push_back(r);
         }
       }},
      {"mechanisms",
       [](RunConfig& c, const std::string&, const std::string& v) {
         c.grid.mechanisms.clear();
         for (const auto& s : split_list(v)) {
           const auto m = mechanism_from_name(s);
           if (!m) throw ValidationError("config: unknown mechanism '" + s + "'");
           c.grid.mechanisms.push_back(*m);
         }
       }},
      {"methods",
       [](RunConfig& c, const std::string&, const std::string& v) {
         c.grid.methods.clear();
         for (const auto& s : split_list(v)) {
           const auto m = method_from_name(s);
           if (!m) throw ValidationError("config: unknown method '" + s + "'");
           c.grid.methods.push_back(*m);
         }
       }},
      {"reps", [](RunConfig& c, const std::string& k,
                  const std::string& v) { c.grid.reps = positive(k, to_int(k, v)); }},
      {"base_seed", [](RunConfig& c, const std::string& k,
                       const std::string& v) { c.grid.base_seed = to_u64(k, v); }},
      {"occasions", [](RunConfig& c, const std::string& k,
                       const std::string& v) { c.analysis.occasions = positive(k, to_int(k, v), 2); }},
      {"parallelism", [](RunConfig& c, const std::string& k,
                         const std::string& v) { c.parallelism = positive(k, to_int(k, v), 0); }},
      {"output_dir",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v.empty()) throw ValidationError("config: '" + k + "' must not be empty");
         c.output_dir = v;
       }},
      {"aux_noise_sd",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const double x = to_double(k, v);
         if (!(x >= 0.0)) throw ValidationError("config: aux_noise_sd must be >= 0");
         c.analysis.aux_noise_sd = x;
       }},
      {"truth.beta_L", [](RunConfig& c, const std::string& k,
                          const std::string& v) { c.analysis.truth.intercept_mean = to_double(k, v); }},
      {"truth.beta_S", [](RunConfig& c, const std::string& k,
                          const std::string& v) { c.analysis.truth.slope_mean = to_double(k, v); }},
      {"truth.var_L", [](RunConfig& c, const std::string& k,
                         const std::string& v) { c.analysis.truth.intercept_var = to_double(k, v); }},
      {"truth.var_S", [](RunConfig& c, const std::string& k,
                         const std::string& v) { c.analysis.truth.slope_var = to_double(k, v); }},
      {"truth.corr_LS",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.analysis.truth.intercept_slope_corr = to_double(k, v);
       }},
      {"truth.var_e", [](RunConfig& c, const std::string& k,
                         const std::string& v) { c.analysis.truth.error_var = to_double(k, v); }},
      {"forest.ntree", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.analysis.forest.forest.ntree = positive(k, to_int(k, v));
       }},
      {"forest.mtry", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.analysis.forest.forest.mtry = positive(k, to_int(k, v), 0);
       }},
      {"forest.min_node", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.analysis.forest.forest.min_node = positive(k, to_int(k, v));
       }},
      {"forest.max_iter", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.analysis.forest.max_iter = positive(k, to_int(k, v));
       }},
      {"knn.k", [](RunConfig& c, const std::string& k,
                   const std::string& v) { c.analysis.knn.k = positive(k, to_int(k, v)); }},
      {"knn.weighting",
       [](RunConfig& c, const std::string&, const std::string& v) {
         const auto w = weighting_from_name(v);
         if (!w) throw ValidationError("config: unknown knn.weighting '" + v + "'");
         c.analysis.knn.weighting = *w;
       }},
      {"knn.scaling",
       [](RunConfig& c, const std::string&, const std::string& v) {
         const auto s = scaling_from_name(v);
         if (!s) throw ValidationError("config: unknown knn.scaling '" + v + "'");
         c.analysis.knn.scaling = *s;
       }},
      {"optimizer.max_iter", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.analysis.optimizer.max_iter = positive(k, to_int(k, v));
       }},
      {"optimizer.grad_tol",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const double x = to_double(k, v);
         if (!(x > 0.0)) throw ValidationError("config: optimizer.grad_tol must be > 0");
         c.analysis.optimizer.grad_tol = x;
       }},
  };
  return table;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

} // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end())
      throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second)
      throw ValidationError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    it->second(cfg, key, value);
  }
  cfg.analysis.truth.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  return parse_config(in);
}

std::string format_config(const RunConfig& c) {
  auto join = [](const auto& items, auto&& fmt) {
    std::string out;
    for (const auto& x : items) {
      if (!out.empty()) out += ", ";
      out += fmt(x);
    }
    return out;
  };
  std::ostringstream os;
  os << "n_values = " << join(c.grid.n_values, [](int n) { return std::to_string(n); }) << '\n';
  os << "rates = " << join(c.grid.rates, fmt_double) << '\n';
  os << "mechanisms = "
     << join(c.grid.mechanisms, [](Mechanism m) { return std::string(mechanism_name(m)); }) << '\n';
  os << "methods = " << join(c.grid.methods, [](Method m) { return std::string(method_name(m)); })
     << '\n';
  os << "reps = " << c.grid.reps << '\n';
  os << "base_seed = " << c.grid.base_seed << '\n';
  os << "occasions = " << c.analysis.occasions << '\n';
  os << "parallelism = " << c.parallelism << '\n';
  os << "output_dir = " << c.output_dir << '\n';
  os << "aux_noise_sd = " << fmt_double(c.analysis.aux_noise_sd) << '\n';
  const auto truth = c.analysis.truth.to_array();
  for (int k = 0; k < kNumParams; ++k) {
    os << "truth." << param_name(static_cast<Param>(k)) << " = " << fmt_double(truth[k]) << '\n';
  }
  os << "forest.ntree = " << c.analysis.forest.forest.ntree << '\n';
  os << "forest.mtry = " << c.analysis.forest.forest.mtry << '\n';
  os << "forest.min_node = " << c.analysis.forest.forest.min_node << '\n';
  os << "forest.max_iter = " << c.analysis.forest.max_iter << '\n';
  os << "knn.k = " << c.analysis.knn.k << '\n';
  os << "knn.weighting = " << weighting_name(c.analysis.knn.weighting) << '\n';
  os << "knn.scaling = " << scaling_name(c.analysis.knn.scaling) << '\n';
  os << "optimizer.max_iter = " << c.analysis.optimizer.max_iter << '\n';
  os << "optimizer.grad_tol = " << fmt_double(c.analysis.optimizer.grad_tol) << '\n';
  return os.str();
}

std::string describe_plan(const RunConfig& cfg) {
  const auto cells = expand_grid(cfg.grid);
  std::ostringstream os;
  long total = 0;
  for (const auto& c : cells) {
    os << "N=" << c.n << " rate=" << c.rate << " mechanism=" << mechanism_name(c.mechanism)
       << " method=" << method_name(c.method) << " reps=" << c.reps << " seed=" << c.base_seed
       << '\n';
    total += c.reps;
  }
  os << cells.size() << " cells, " << total << " replicate fits\n";
  return os.str();
}

} // namespace gcmlab
