#ifndef GCMLAB_COMMANDS_HPP
#define GCMLAB_COMMANDS_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gcmlab/config.hpp"

namespace gcmlab {

/// Writes one data CSV per (N, mechanism, rate, rep) condition into out_dir.
std::vector<std::filesystem::path> cmd_generate(const RunConfig& cfg,
                                                const std::filesystem::path& out_dir,
                                                std::ostream& log);

/// Runs the grid and writes <output_dir>/summary.csv. Failed replicates are
/// logged per cell and show up as a reduced convergence rate.
std::filesystem::path cmd_run(const RunConfig& cfg, std::ostream& log);

/// Writes <parameter>_<mechanism>_N<n>.svg files into out_dir. Nothing is
/// written when the parameter is unknown or unmatched.
std::vector<std::filesystem::path> cmd_plot(const std::filesystem::path& summary_csv,
                                            const std::string& parameter,
                                            const std::filesystem::path& out_dir);

} // namespace gcmlab

#endif // GCMLAB_COMMANDS_HPP
