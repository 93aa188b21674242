#include "gcmlab/harness.hpp"

#include <cmath>
#include <limits>

#include <omp.h>

#include "gcmlab/errors.hpp"

namespace gcmlab {

namespace {

constexpr std::uint64_t kImputeStream = 0xf0e5;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

} // namespace

std::string_view method_name(Method m) {
  switch (m) {
  case Method::FIML: return "FIML";
  case Method::RF: return "RF";
  case Method::KNN: return "KNN";
  case Method::COMPLETE: return "COMPLETE";
  }
  return "?";
}

std::optional<Method> method_from_name(std::string_view name) {
  for (Method m : {Method::FIML, Method::RF, Method::KNN, Method::COMPLETE}) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

std::vector<DesignCell> expand_grid(const GridSpec& spec) {
  std::vector<DesignCell> cells;
  for (int n : spec.n_values) {
    for (Mechanism mech : spec.mechanisms) {
      for (double rate : spec.rates) {
        if (rate == 0.0) {
          cells.push_back({n, rate, mech, Method::COMPLETE, spec.reps, spec.base_seed});
          continue;
        }
        for (Method method : spec.methods) {
          cells.push_back({n, rate, mech, method, spec.reps, spec.base_seed});
        }
      }
    }
  }
  return cells;
}

std::uint64_t cell_hash(const DesignCell& cell) {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(cell.n));
  h = splitmix64(h ^ static_cast<std::uint64_t>(std::llround(cell.rate * 1e6)));
  h = splitmix64(h ^ (cell.mechanism == Mechanism::MAR ? 0x4d4152ULL : 0x4d4e4152ULL));
  return h;
}

Seed replicate_seed(const DesignCell& cell, int rep) {
  return {cell.base_seed, cell_hash(cell) ^ static_cast<std::uint64_t>(rep)};
}

LongData replicate_dataset(const DesignCell& cell, int rep, const AnalysisConfig& cfg) {
  const Seed seed = replicate_seed(cell, rep);
  LongData data =
      sample_dataset_with_aux(cfg.truth, cell.n, cfg.occasions, cfg.aux_noise_sd, seed);
  if (cell.method == Method::COMPLETE || cell.rate == 0.0) return data;
  MissingSpec spec;
  spec.mechanism = cell.mechanism;
  spec.rate = cell.rate;
  return ampute(data, spec);
}

ReplicateResult run_replicate(const DesignCell& cell, int rep, const AnalysisConfig& cfg) {
  ReplicateResult result;
  try {
    LongData data = replicate_dataset(cell, rep, cfg);
    data.aux.reset();
    data.true_params.reset();
    switch (cell.method) {
    case Method::RF:
      data = missforest_impute(data, cfg.forest, replicate_seed(cell, rep).child(kImputeStream))
                 .first;
      break;
    case Method::KNN:
      data = knn_impute(data, cfg.knn).completed;
      break;
    case Method::FIML:
    case Method::COMPLETE:
      break;
    }
    result.fit = fit_fiml(data, std::nullopt, cfg.optimizer);
  } catch (const std::exception& e) {
    result.failed = true;
    result.error = e.what();
  }
  return result;
}

BiasValue relative_bias(std::span<const double> estimates, double truth) {
  if (estimates.empty()) throw UndefinedSummary("relative_bias: no estimates");
  double s = 0.0;
  for (double e : estimates) s += e;
  const double mean = s / static_cast<double>(estimates.size());
  if (truth == 0.0) return {mean - truth, true};
  return {(mean - truth) / truth, false};
}

std::optional<double> coverage(std::span<const Interval> intervals, double truth) {
  if (intervals.empty()) return std::nullopt;
  std::size_t hit = 0;
  for (const auto& iv : intervals) {
    if (iv.low <= truth && truth <= iv.high) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(intervals.size());
}

std::vector<SimSummary> summarize_cell(const DesignCell& cell,
                                       std::span<const ReplicateResult> results,
                                       const GcmParams& truth) {
  std::vector<SimSummary> out;
  int usable = 0;
  for (const auto& r : results) usable += r.usable() ? 1 : 0;
  const double conv_rate =
      results.empty() ? 0.0 : static_cast<double>(usable) / static_cast<double>(results.size());

  for (Param p : kSummaryParams) {
    const int k = static_cast<int>(p);
    SimSummary s;
    s.cell = cell;
    s.parameter = p;
    s.truth = truth[p];
    s.convergence_rate = conv_rate;

    std::vector<double> estimates;
    std::vector<Interval> intervals;
    double se_sum = 0.0;
    for (const auto& r : results) {
      if (!r.usable()) continue;
      estimates.push_back(r.fit.estimates[p]);
      if (std::isfinite(r.fit.se[k])) {
        intervals.push_back({r.fit.ci_low[k], r.fit.ci_high[k]});
        se_sum += r.fit.se[k];
      } else {
        ++s.coverage_excluded;
      }
    }
    s.used = static_cast<int>(estimates.size());
    s.truth_is_zero = s.truth == 0.0;
    if (estimates.empty()) {
      s.bias = kNaN;
      s.mc_se = kNaN;
      s.mean_se = kNaN;
    } else {
      const BiasValue b = relative_bias(estimates, s.truth);
      s.bias = b.value;
      double mean = 0.0;
      for (double e : estimates) mean += e;
      mean /= static_cast<double>(estimates.size());
      double ss = 0.0;
      for (double e : estimates) ss += (e - mean) * (e - mean);
      const double n = static_cast<double>(estimates.size());
      const double scale = s.truth_is_zero ? 1.0 : std::abs(s.truth);
      s.mc_se = estimates.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) / scale : kNaN;
      s.mean_se = intervals.empty() ? kNaN : se_sum / static_cast<double>(intervals.size());
    }
    s.coverage = coverage(intervals, s.truth);
    out.push_back(s);
  }
  return out;
}

namespace {

std::vector<SimSummary> fold(std::span<const DesignCell> cells,
                             const std::vector<std::vector<ReplicateResult>>& results,
                             const AnalysisConfig& cfg) {
  std::vector<SimSummary> out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto part = summarize_cell(cells[c], results[c], cfg.truth);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

} // namespace

std::vector<SimSummary> run_grid(std::span<const DesignCell> cells, const AnalysisConfig& cfg,
                                 int parallelism) {
  std::vector<std::vector<ReplicateResult>> results(cells.size());
  std::vector<std::pair<int, int>> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    results[c].resize(static_cast<std::size_t>(std::max(cells[c].reps, 0)));
    for (int r = 0; r < cells[c].reps; ++r) tasks.emplace_back(static_cast<int>(c), r);
  }
  const int threads = parallelism > 0 ? parallelism : omp_get_max_threads();
  const auto count = static_cast<long>(tasks.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long t = 0; t < count; ++t) {
    const auto [c, r] = tasks[t];
    results[c][r] = run_replicate(cells[c], r, cfg);
  }
  return fold(cells, results, cfg);
}

std::vector<SimSummary> run_grid_serial(std::span<const DesignCell> cells,
                                        const AnalysisConfig& cfg) {
  std::vector<std::vector<ReplicateResult>> results(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int r = 0; r < cells[c].reps; ++r) results[c].push_back(run_replicate(cells[c], r, cfg));
  }
  return fold(cells, results, cfg);
}

} // namespace gcmlab
