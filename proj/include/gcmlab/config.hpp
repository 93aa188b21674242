#ifndef GCMLAB_CONFIG_HPP
#define GCMLAB_CONFIG_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gcmlab/harness.hpp"

namespace gcmlab {

/// Everything a run needs. Parsed from `key = value` text; lists are comma
/// separated, `#` starts a comment, unknown or repeated keys are errors.
struct RunConfig {
  GridSpec grid;
  AnalysisConfig analysis;
  std::string output_dir = "results";
  int parallelism = 0;
};

inline constexpr int kDeskScaleReps = 200;

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(format_config(c)) reproduces c.
std::string format_config(const RunConfig& cfg);

/// The design cells a run executes, one per line.
std::string describe_plan(const RunConfig& cfg);

} // namespace gcmlab

#endif // GCMLAB_CONFIG_HPP
