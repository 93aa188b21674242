#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "gcmlab/amputation.hpp"
#include "gcmlab/errors.hpp"
#include "gcmlab/forest.hpp"

using namespace gcmlab;

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

double sse(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s;
}

struct OracleSplit {
  double best_sse = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> optimal_gaps; ///< (x_left, x_right) of optimal cuts
};

// Exhaustive root split for one predictor, min_node = 1: every cut between
// consecutive distinct sorted x values, children SSE computed directly.
OracleSplit enumerate_root(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> xs = x;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<std::pair<double, double>> cuts;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) cuts.emplace_back(xs[k], xs[k + 1]);
  std::vector<double> scores;
  for (auto [lo, hi] : cuts) {
    std::vector<double> left, right;
    for (std::size_t i = 0; i < x.size(); ++i) (x[i] <= lo ? left : right).push_back(y[i]);
    scores.push_back(sse(left) + sse(right));
  }
  OracleSplit out;
  for (double s : scores) out.best_sse = std::min(out.best_sse, s);
  const double scale = std::max(1.0, sse(y));
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    if (scores[k] <= out.best_sse + 1e-9 * scale) out.optimal_gaps.push_back(cuts[k]);
  }
  return out;
}

} // namespace

TEST_CASE("constant response gives a single leaf") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(20, 3);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(20, 4.25);
  Rng rng({1, 1});
  const RegressionTree t = fit_tree(x, as_span(y), 3, 1, rng);
  CHECK(t.nodes().size() == 1);
  CHECK(t.predict(x.row(3)) == 4.25);
  CHECK(t.predict(Eigen::RowVector3d(100, -100, 0)) == 4.25);
}

TEST_CASE("binary predictor that separates the response") {
  Eigen::MatrixXd x(8, 1);
  Eigen::VectorXd y(8);
  for (int i = 0; i < 8; ++i) {
    x(i, 0) = i % 2;
    y(i) = (i % 2) * 10.0;
  }
  Rng rng({1, 2});
  const RegressionTree t = fit_tree(x, as_span(y), 1, 1, rng);
  REQUIRE(t.nodes().size() == 3);
  CHECK(t.root().var == 0);
  CHECK(t.nodes()[t.root().left].value == 0.0);
  CHECK(t.nodes()[t.root().right].value == 10.0);
  for (int i = 0; i < 8; ++i) CHECK(t.predict(x.row(i)) == y(i));
}

TEST_CASE("four-point hand example splits between 2 and 3") {
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  Eigen::VectorXd y(4);
  y << 1, 2, 8, 9;
  Rng rng({1, 3});
  const RegressionTree t = fit_tree(x, as_span(y), 1, 1, rng);
  CHECK(t.root().var == 0);
  CHECK(t.root().threshold > 2.0);
  CHECK(t.root().threshold < 3.0);
}

TEST_CASE("root split matches exhaustive enumeration on small fixtures") {
  std::mt19937_64 eng(2718);
  int checked = 0;
  for (int n = 2; n <= 8; ++n) {
    for (int rep = 0; rep < 400; ++rep) {
      std::vector<double> xv(n), yv(n);
      std::uniform_int_distribution<int> xi(0, 5);
      std::uniform_int_distribution<int> yi(-3, 3);
      std::normal_distribution<double> yn(0.0, 2.0);
      const bool integer_y = rep % 2 == 0; // integer responses produce exact SSE ties
      for (int i = 0; i < n; ++i) {
        xv[i] = rep % 3 == 0 ? static_cast<double>(i) : xi(eng);
        yv[i] = integer_y ? yi(eng) : yn(eng);
      }
      Eigen::MatrixXd x(n, 1);
      for (int i = 0; i < n; ++i) x(i, 0) = xv[i];
      Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(yv.data(), n);
      Rng rng({5, static_cast<std::uint64_t>(rep)});
      const RegressionTree t = fit_tree(x, as_span(y), 1, 1, rng);
      const OracleSplit oracle = enumerate_root(xv, yv);

      const bool splits = t.root().var >= 0;
      const bool oracle_splits = !oracle.optimal_gaps.empty() && oracle.best_sse < sse(yv) - 1e-9;
      CHECK(splits == oracle_splits);
      if (!splits || !oracle_splits) continue;
      // lowest optimal cut wins ties
      const auto [lo, hi] = oracle.optimal_gaps.front();
      CHECK(t.root().threshold >= lo);
      CHECK(t.root().threshold < hi);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("unique predictor values are shattered with min_node 1") {
  std::mt19937_64 eng(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(60, 2);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) {
    x(i, 0) = i * 0.37;
    x(i, 1) = nd(eng);
    y(i) = nd(eng);
  }
  Rng rng({2, 2});
  const RegressionTree t = fit_tree(x, as_span(y), 2, 1, rng);
  for (int i = 0; i < 60; ++i) CHECK(t.predict(x.row(i)) == doctest::Approx(y(i)).epsilon(1e-12));
}

TEST_CASE("leaves hold at least min_node rows and splits are binary") {
  std::mt19937_64 eng(4);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(300, 3);
  Eigen::VectorXd y(300);
  for (int i = 0; i < 300; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = nd(eng);
    y(i) = x(i, 0) - 2 * x(i, 2) + 0.3 * nd(eng);
  }
  for (int min_node : {1, 5, 20}) {
    Rng rng({3, static_cast<std::uint64_t>(min_node)});
    const RegressionTree t = fit_tree(x, as_span(y), 1, min_node, rng);
    for (const auto& node : t.nodes()) {
      if (node.var < 0) {
        CHECK(node.count >= min_node);
      } else {
        CHECK(node.left > 0);
        CHECK(node.right > 0);
        CHECK(t.nodes()[node.left].count + t.nodes()[node.right].count == node.count);
        CHECK(node.count >= 2 * min_node);
      }
    }
  }
}

TEST_CASE("split ties prefer the lower variable index") {
  Eigen::MatrixXd x(10, 2);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = x(i, 1) = i;
    y(i) = i < 5 ? 0.0 : 1.0;
  }
  Rng rng({4, 4});
  const RegressionTree t = fit_tree(x, as_span(y), 2, 1, rng);
  CHECK(t.root().var == 0);
}

TEST_CASE("tree argument validation") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Random(4);
  Rng rng({0, 0});
  CHECK_THROWS_AS(fit_tree(x, as_span(y), 1, 5, rng), ValidationError);
  CHECK_THROWS_AS(fit_tree(Eigen::MatrixXd(4, 0), as_span(y), 1, 1, rng), ValidationError);
}

TEST_CASE("single unbootstrapped tree forest equals the tree") {
  std::mt19937_64 eng(6);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(100, 3);
  Eigen::VectorXd y(100);
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = nd(eng);
    y(i) = x(i, 1) + nd(eng);
  }
  ForestConfig cfg;
  cfg.ntree = 1;
  cfg.bootstrap = false;
  const Seed seed{8, 8};
  const Forest f = fit_forest(x, as_span(y), cfg, seed);
  Rng rng(seed.child(0));
  const RegressionTree t = fit_tree(x, as_span(y), resolve_mtry(cfg, 3), cfg.min_node, rng);
  for (int i = 0; i < 100; ++i) CHECK(f.predict(x.row(i)) == t.predict(x.row(i)));
  CHECK(std::isnan(f.oob_error));
}

TEST_CASE("forest learns a linear signal") {
  std::mt19937_64 eng(7);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  auto make = [&](int n, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
    x.resize(n, 2);
    y.resize(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = ud(eng);
      x(i, 1) = ud(eng);
      y(i) = 3 * x(i, 0) + 0.1 * nd(eng);
    }
  };
  Eigen::MatrixXd x, xt;
  Eigen::VectorXd y, yt;
  make(500, x, y);
  make(500, xt, yt);
  const Forest f = fit_forest(x, as_span(y), {}, {9, 9});
  double mse = 0.0;
  for (int i = 0; i < 500; ++i) mse += std::pow(f.predict(xt.row(i)) - yt(i), 2) / 500;
  const double var = (yt.array() - yt.mean()).square().sum() / 499;
  CHECK(mse < var / 2);
  CHECK(f.oob_error < var / 2);
  CHECK(f.mtry == 1);
}

TEST_CASE("forest determinism and thread independence") {
  const LongData d = sample_dataset(reference_params(), 200, 4, {1, 9});
  const Eigen::MatrixXd x = d.y.leftCols(3);
  const Eigen::VectorXd y = d.y.col(3);
  ForestConfig cfg;
  cfg.ntree = 40;
  const Forest a = fit_forest(x, as_span(y), cfg, {10, 1});
  const Forest b = fit_forest(x, as_span(y), cfg, {10, 1});
  const Forest s = fit_forest_serial(x, as_span(y), cfg, {10, 1});
  const Forest other = fit_forest(x, as_span(y), cfg, {10, 2});
  bool differs = false;
  for (int i = 0; i < 200; ++i) {
    CHECK(a.predict(x.row(i)) == b.predict(x.row(i)));
    CHECK(a.predict(x.row(i)) == s.predict(x.row(i)));
    differs = differs || a.predict(x.row(i)) != other.predict(x.row(i));
  }
  CHECK(a.oob_error == s.oob_error);
  CHECK(differs);

  Forest reversed = a;
  std::reverse(reversed.trees.begin(), reversed.trees.end());
  for (int i = 0; i < 200; ++i)
    CHECK(reversed.predict(x.row(i)) == doctest::Approx(a.predict(x.row(i))).epsilon(1e-13));
}

TEST_CASE("missforest leaves complete data alone") {
  const LongData d = sample_dataset(reference_params(), 50, 4, {2, 1});
  const auto [out, trace] = missforest_impute(d, {}, {1, 1});
  CHECK(out.y == d.y);
  CHECK(trace.iterations == 0);
  CHECK(trace.reason == StopReason::no_missing);
}

TEST_CASE("missforest recovers a duplicated column") {
  const int n = 50;
  LongData d;
  d.y.resize(n, 3);
  std::mt19937_64 eng(12);
  std::normal_distribution<double> nd;
  for (int i = 0; i < n; ++i) {
    d.y(i, 0) = 0.1 * i;
    d.y(i, 1) = d.y(i, 0);
    d.y(i, 2) = nd(eng);
  }
  d.mask = Mask::Constant(n, 3, true);
  const int target = 23;
  d.mask(target, 1) = false;
  const double truth = d.y(target, 1);
  d.y(target, 1) = -999.0;
  const auto [out, trace] = missforest_impute(d, {}, {3, 3});
  CHECK(std::abs(out.y(target, 1) - truth) < 0.5);
  CHECK(out.complete());
}

TEST_CASE("missforest beats mean imputation on MAR growth data") {
  // averaged over datasets; a single dataset can favor the mean under the
  // cascading MAR cut
  double rf = 0.0, mean_sq = 0.0;
  for (std::uint64_t r = 0; r < 6; ++r) {
    const LongData full = sample_dataset(reference_params(), 300, 4, {4, r});
    const LongData masked = ampute_mar(full, {Mechanism::MAR, 0.30, {}});
    MissForestConfig cfg;
    const auto [out, trace] = missforest_impute(masked, cfg, {5, r});
    double se_rf = 0.0, se_mean = 0.0;
    int cells = 0;
    for (int t = 0; t < 4; ++t) {
      double s = 0.0;
      int k = 0;
      for (Eigen::Index i = 0; i < 300; ++i) {
        if (masked.mask(i, t)) {
          s += masked.y(i, t);
          ++k;
        }
      }
      for (Eigen::Index i = 0; i < 300; ++i) {
        if (masked.mask(i, t)) {
          CHECK(out.y(i, t) == masked.y(i, t));
          continue;
        }
        se_rf += std::pow(out.y(i, t) - full.y(i, t), 2);
        se_mean += std::pow(s / k - full.y(i, t), 2);
        ++cells;
      }
    }
    CHECK(cells == 3 * 90);
    rf += std::sqrt(se_rf / cells);
    mean_sq += std::sqrt(se_mean / cells);
    CHECK(trace.iterations >= 1);
    CHECK(trace.iterations <= cfg.max_iter);
    for (double delta : trace.deltas) {
      CHECK(std::isfinite(delta));
      CHECK(delta >= 0.0);
    }
  }
  CHECK(rf < mean_sq);
}

TEST_CASE("missforest stopping rule returns the iterate before the increase") {
  const LongData full = sample_dataset(reference_params(), 120, 4, {6, 6});
  const LongData masked = ampute_mar(full, {Mechanism::MAR, 0.30, {}});
  MissForestConfig cfg;
  cfg.forest.ntree = 20;
  const auto [out, trace] = missforest_impute(masked, cfg, {7, 7});
  if (trace.reason == StopReason::delta_increased) {
    const auto& d = trace.deltas;
    REQUIRE(d.size() >= 2);
    CHECK(d.back() > d[d.size() - 2]);
    // replaying with max_iter one short of the final sweep gives the returned matrix
    MissForestConfig shorter = cfg;
    shorter.max_iter = trace.iterations - 1;
    const auto [prev, prev_trace] = missforest_impute(masked, shorter, {7, 7});
    CHECK(prev.y == out.y);
  } else {
    CHECK(trace.reason == StopReason::max_iter);
    CHECK(trace.iterations == cfg.max_iter);
  }
}

TEST_CASE("missforest needs two observed values per column") {
  LongData d = sample_dataset(reference_params(), 20, 3, {1, 1});
  for (int i = 1; i < 20; ++i) d.mask(i, 2) = false;
  CHECK_THROWS_AS(missforest_impute(d, {}, {1, 1}), ValidationError);
}
