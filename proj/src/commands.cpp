#include "gcmlab/commands.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include "gcmlab/csv_io.hpp"
#include "gcmlab/errors.hpp"
#include "gcmlab/svg_plot.hpp"

namespace gcmlab {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

} // namespace

std::vector<std::filesystem::path> cmd_generate(const RunConfig& cfg,
                                                const std::filesystem::path& out_dir,
                                                std::ostream& log) {
  ensure_dir(out_dir);
  std::set<std::tuple<int, int, long long>> seen;
  std::vector<std::filesystem::path> written;
  for (const DesignCell& cell : expand_grid(cfg.grid)) {
    const long long rate_key = std::llround(cell.rate * 1e6);
    if (!seen.insert({cell.n, static_cast<int>(cell.mechanism), rate_key}).second) continue;
    // data are shared by every method of a condition
    DesignCell data_cell = cell;
    data_cell.method = cell.rate == 0.0 ? Method::COMPLETE : Method::FIML;
    for (int rep = 0; rep < cell.reps; ++rep) {
      char name[96];
      std::snprintf(name, sizeof name, "data_N%d_%s_rate%03lld_rep%04d.csv", cell.n,
                    std::string(mechanism_name(cell.mechanism)).c_str(),
                    std::llround(cell.rate * 100.0), rep);
      const auto path = out_dir / name;
      auto out = open_output(path);
      write_data_csv(out, replicate_dataset(data_cell, rep, cfg.analysis));
      written.push_back(path);
    }
  }
  log << "wrote " << written.size() << " data files to " << out_dir.string() << '\n';
  return written;
}

std::filesystem::path cmd_run(const RunConfig& cfg, std::ostream& log) {
  const auto cells = expand_grid(cfg.grid);
  const auto summaries = run_grid(cells, cfg.analysis, cfg.parallelism);
  for (const auto& s : summaries) {
    if (s.parameter != kSummaryParams.front()) continue;
    if (s.convergence_rate < 1.0) {
      log << "N=" << s.cell.n << " rate=" << s.cell.rate << ' ' << mechanism_name(s.cell.mechanism)
          << ' ' << method_name(s.cell.method) << ": "
          << static_cast<int>(std::lround((1.0 - s.convergence_rate) * s.cell.reps))
          << " of " << s.cell.reps << " replicates excluded (not converged or failed)\n";
    }
  }
  const std::filesystem::path dir(cfg.output_dir);
  ensure_dir(dir);
  const auto path = dir / "summary.csv";
  auto out = open_output(path);
  write_summary_csv(out, summaries);
  log << "wrote " << summaries.size() << " summary rows to " << path.string() << '\n';
  return path;
}

std::vector<std::filesystem::path> cmd_plot(const std::filesystem::path& summary_csv,
                                            const std::string& parameter,
                                            const std::filesystem::path& out_dir) {
  std::ifstream in(summary_csv, std::ios::binary);
  if (!in) throw ValidationError("cannot open summary " + summary_csv.string());
  const auto rows = read_summary_csv(in);
  const auto panels = bias_panels(rows, parameter);
  ensure_dir(out_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& p : panels) {
    const auto path = out_dir / (p.file_stem + ".svg");
    auto out = open_output(path);
    out << render_svg(p.panel);
    written.push_back(path);
  }
  return written;
}

} // namespace gcmlab
