// Times the OpenMP kernels against their serial references on
// simulation-sized inputs and checks that both produce the same output.

#include <chrono>
#include <cstdio>
#include <functional>

#include <omp.h>

#include "gcmlab/amputation.hpp"
#include "gcmlab/forest.hpp"
#include "gcmlab/harness.hpp"
#include "gcmlab/knn.hpp"

using namespace gcmlab;

namespace {

double time_ms(const std::function<void()>& fn, int repeats) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / repeats;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-28s serial %9.2f ms   omp %9.2f ms   speedup %5.2fx   %s\n", name, serial, parallel,
              serial / parallel, same ? "identical" : "MISMATCH");
}

} // namespace

int main() {
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
  const GcmParams truth = reference_params();

  {
    LongData full = sample_dataset(truth, 2000, 4, {7, 1});
    MissingSpec spec{Mechanism::MAR, 0.30, {}};
    const LongData data = ampute_mar(full, spec);
    KnnResult a, b;
    const double s = time_ms([&] { a = knn_impute_serial(data); }, 3);
    const double p = time_ms([&] { b = knn_impute(data); }, 3);
    report("knn_impute (N=2000)", s, p, a.completed.y == b.completed.y);
  }

  {
    const LongData d = sample_dataset(truth, 300, 4, {7, 2});
    const Eigen::MatrixXd x = d.y.leftCols(3);
    const Eigen::VectorXd yv = d.y.col(3);
    std::span<const double> y(yv.data(), static_cast<std::size_t>(yv.size()));
    ForestConfig cfg;
    cfg.ntree = 500;
    Forest a, b;
    const double s = time_ms([&] { a = fit_forest_serial(x, y, cfg, {3, 4}); }, 3);
    const double p = time_ms([&] { b = fit_forest(x, y, cfg, {3, 4}); }, 3);
    bool same = a.oob_error == b.oob_error;
    for (Eigen::Index i = 0; i < x.rows(); ++i) same = same && a.predict(x.row(i)) == b.predict(x.row(i));
    report("fit_forest (500 trees)", s, p, same);
  }

  {
    GridSpec spec;
    spec.n_values = {200};
    spec.rates = {0.30};
    spec.mechanisms = {Mechanism::MAR};
    spec.methods = {Method::FIML, Method::KNN, Method::RF};
    spec.reps = 8;
    const auto cells = expand_grid(spec);
    AnalysisConfig cfg;
    std::vector<SimSummary> a, b;
    const double s = time_ms([&] { a = run_grid_serial(cells, cfg); }, 1);
    const double p = time_ms([&] { b = run_grid(cells, cfg, 0); }, 1);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].bias == b[i].bias && a[i].mc_se == b[i].mc_se;
    report("run_grid (24 replicates)", s, p, same);
  }
  return 0;
}
