#ifndef GCMLAB_HARNESS_HPP
#define GCMLAB_HARNESS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcmlab/amputation.hpp"
#include "gcmlab/fiml.hpp"
#include "gcmlab/forest.hpp"
#include "gcmlab/knn.hpp"

namespace gcmlab {

enum class Method { FIML, RF, KNN, COMPLETE };

std::string_view method_name(Method m);
std::optional<Method> method_from_name(std::string_view name);

/// One simulation condition analyzed by one method.
struct DesignCell {
  int n = 100;
  double rate = 0.0;
  Mechanism mechanism = Mechanism::MAR;
  Method method = Method::FIML;
  int reps = 500;
  std::uint64_t base_seed = 0;

  bool operator==(const DesignCell&) const = default;
};

struct GridSpec {
  std::vector<int> n_values{100, 200, 300};
  std::vector<double> rates{0.0, 0.05, 0.15, 0.30};
  std::vector<Mechanism> mechanisms{Mechanism::MAR, Mechanism::MNAR};
  std::vector<Method> methods{Method::FIML, Method::RF, Method::KNN};
  int reps = 500;
  std::uint64_t base_seed = 20240917;
};

/// Cartesian product in (N, mechanism, rate, method) order. A rate-0
/// condition yields a single COMPLETE cell since every method reduces to
/// ML on complete data there.
std::vector<DesignCell> expand_grid(const GridSpec& spec);

struct AnalysisConfig {
  GcmParams truth = reference_params();
  int occasions = 4;
  double aux_noise_sd = 1.0;
  MissForestConfig forest;
  KnnConfig knn;
  OptimizerConfig optimizer;
};

/// Hash of the data-defining part of a cell (N, rate, mechanism). The method
/// is excluded so every method sees the same datasets.
std::uint64_t cell_hash(const DesignCell& cell);
Seed replicate_seed(const DesignCell& cell, int rep);

/// Generated and amputed dataset for (cell, rep), aux included. For
/// COMPLETE cells no amputation is applied.
LongData replicate_dataset(const DesignCell& cell, int rep, const AnalysisConfig& cfg);

struct ReplicateResult {
  FitResult fit;
  bool failed = false;
  std::string error;

  /// Enters bias and coverage summaries.
  bool usable() const {
    return !failed && fit.converged && fit.se_status != SeStatus::not_negative_definite;
  }
};

ReplicateResult run_replicate(const DesignCell& cell, int rep, const AnalysisConfig& cfg);

struct BiasValue {
  double value = 0.0;
  bool truth_is_zero = false; ///< value is raw bias rather than relative bias
};

/// (mean - truth) / truth, or mean - truth when truth == 0. Throws
/// UndefinedSummary on empty input.
BiasValue relative_bias(std::span<const double> estimates, double truth);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Fraction of intervals containing truth; nullopt for an empty list.
std::optional<double> coverage(std::span<const Interval> intervals, double truth);

/// Parameters reported in summaries (the error variance is estimated but not
/// summarized).
inline constexpr std::array<Param, 5> kSummaryParams = {
    Param::intercept_mean, Param::slope_mean, Param::intercept_var, Param::slope_var,
    Param::intercept_slope_corr};

struct SimSummary {
  DesignCell cell;
  Param parameter = Param::slope_mean;
  double truth = 0.0;
  /// NaN when no replicate was usable.
  double bias = 0.0;
  bool truth_is_zero = false;
  /// sd(estimates) / sqrt(used), on the same scale as `bias`.
  double mc_se = 0.0;
  std::optional<double> coverage;
  double mean_se = 0.0;
  double convergence_rate = 0.0;
  int used = 0;
  int coverage_excluded = 0;
};

std::vector<SimSummary> summarize_cell(const DesignCell& cell,
                                       std::span<const ReplicateResult> results,
                                       const GcmParams& truth);

/// Runs every (cell, rep) task on a pool of `parallelism` OpenMP threads
/// (<= 0: all available) and folds results in (cell, rep) order, so output
/// does not depend on the thread count.
std::vector<SimSummary> run_grid(std::span<const DesignCell> cells, const AnalysisConfig& cfg,
                                 int parallelism);
std::vector<SimSummary> run_grid_serial(std::span<const DesignCell> cells,
                                        const AnalysisConfig& cfg);

} // namespace gcmlab

#endif // GCMLAB_HARNESS_HPP
