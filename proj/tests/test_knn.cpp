#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "gcmlab/amputation.hpp"
#include "gcmlab/errors.hpp"
#include "gcmlab/knn.hpp"

using namespace gcmlab;

namespace {

LongData from_rows(const std::vector<std::vector<double>>& rows) {
  LongData d;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto t = static_cast<Eigen::Index>(rows.front().size());
  d.y.resize(n, t);
  d.mask = Mask::Constant(n, t, true);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      const double v = rows[i][j];
      if (std::isnan(v)) {
        d.mask(i, j) = false;
        d.y(i, j) = 0.0;
      } else {
        d.y(i, j) = v;
      }
    }
  }
  return d;
}

constexpr double NA = std::numeric_limits<double>::quiet_NaN();

LongData mar_data(int n, std::uint64_t stream, double rate = 0.30) {
  const LongData full = sample_dataset(reference_params(), n, 4, {31, stream});
  return ampute_mar(full, {Mechanism::MAR, rate, {}});
}

} // namespace

TEST_CASE("partial distance hand values") {
  const std::vector<double> a{0, 0, 0}, b{3, 4, 0}, c{1, 2, 3};
  const bool all[] = {true, true, true};
  const bool first[] = {true, false, false};
  const bool none[] = {false, false, false};
  const std::vector<double> ones{1, 1, 1};
  CHECK(row_distance(a, a, all, all, ones) == 0.0);
  CHECK(row_distance(a, b, all, all, ones) == doctest::Approx(5.0).epsilon(1e-15));
  // one shared coordinate of 3 is scaled up by T/m = 3
  CHECK(row_distance(a, b, all, first, ones) == doctest::Approx(std::sqrt(3.0 * 9.0)).epsilon(1e-15));
  const std::vector<double> halves{2, 2, 2};
  CHECK(row_distance(a, c, all, all, halves) == doctest::Approx(std::sqrt(14.0) / 2).epsilon(1e-15));
  CHECK(row_distance(a, b, all, first, ones) == doctest::Approx(4.242640687119285 * std::sqrt(1.5)).epsilon(1e-12));
  CHECK_THROWS_AS(row_distance(a, b, all, none, ones), IncomparableRows);
  CHECK(row_distance(a, b, all, all, ones) == row_distance(b, a, all, all, ones));
}

TEST_CASE("column scales use the observed range") {
  const LongData d = from_rows({{0, 5}, {2, NA}, {10, 5}});
  const auto s = column_scales(d, Scaling::range);
  CHECK(s[0] == 10.0);
  CHECK(s[1] == 1.0); // constant column falls back to 1
  const auto none = column_scales(d, Scaling::none);
  CHECK(none[0] == 1.0);
}

TEST_CASE("four-row hand example") {
  const LongData d = from_rows({{0, 0}, {1, 1}, {10, 10}, {5, NA}});
  KnnConfig cfg;
  cfg.k = 1;
  cfg.scaling = Scaling::none;
  const KnnResult r = knn_impute(d, cfg);
  CHECK(r.completed.y(3, 1) == 1.0);
  CHECK(r.completed.complete());
  CHECK(r.short_donor_cells == 0);
}

TEST_CASE("k saturating the donor pool gives the column mean") {
  const LongData d = mar_data(60, 1);
  const auto n = static_cast<int>(d.rows());
  KnnConfig cfg;
  cfg.k = n - 1;
  const KnnResult r = knn_impute(d, cfg);
  for (int t = 1; t < 4; ++t) {
    double s = 0.0;
    int k = 0;
    for (int i = 0; i < n; ++i) {
      if (d.mask(i, t)) {
        s += d.y(i, t);
        ++k;
      }
    }
    for (int i = 0; i < n; ++i) {
      if (!d.mask(i, t)) CHECK(r.completed.y(i, t) == doctest::Approx(s / k).epsilon(1e-12));
    }
  }
  CHECK(r.short_donor_cells == 3 * 18);
}

TEST_CASE("distance ties go to the lower row index") {
  const LongData d = from_rows({{1, 7}, {3, 9}, {2, NA}, {0, 4}});
  KnnConfig cfg;
  cfg.k = 1;
  cfg.scaling = Scaling::none;
  CHECK(knn_impute(d, cfg).completed.y(2, 1) == 7.0);
  const LongData dup = from_rows({{5, 2}, {5, 2}, {4, NA}});
  CHECK(knn_impute(dup, cfg).completed.y(2, 1) == 2.0);
}

TEST_CASE("imputation invariants on growth data") {
  const LongData d = mar_data(150, 2);
  KnnConfig one;
  one.k = 1;
  const KnnResult r1 = knn_impute(d, one);
  const KnnResult r5 = knn_impute(d);
  for (int t = 0; t < 4; ++t) {
    double lo = INFINITY, hi = -INFINITY;
    std::vector<double> donors;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      if (d.mask(i, t)) {
        lo = std::min(lo, d.y(i, t));
        hi = std::max(hi, d.y(i, t));
        donors.push_back(d.y(i, t));
      }
    }
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      if (d.mask(i, t)) {
        CHECK(r1.completed.y(i, t) == d.y(i, t));
        CHECK(r5.completed.y(i, t) == d.y(i, t));
        continue;
      }
      // k = 1 copies an observed donor value exactly
      CHECK(std::find(donors.begin(), donors.end(), r1.completed.y(i, t)) != donors.end());
      CHECK(r5.completed.y(i, t) >= lo);
      CHECK(r5.completed.y(i, t) <= hi);
    }
  }
  CHECK(r5.completed.mask.all());
}

TEST_CASE("appending a far row leaves the output unchanged") {
  const LongData d = mar_data(80, 3);
  LongData bigger = d;
  const Eigen::Index n = d.rows();
  bigger.y.conservativeResize(n + 1, Eigen::NoChange);
  bigger.mask.conservativeResize(n + 1, Eigen::NoChange);
  bigger.y.row(n).setConstant(1e6);
  bigger.mask.row(n).setConstant(true);
  KnnConfig cfg;
  cfg.scaling = Scaling::none; // range scaling would change with the new row
  const KnnResult a = knn_impute(d, cfg);
  const KnnResult b = knn_impute(bigger, cfg);
  CHECK(b.completed.y.topRows(n) == a.completed.y);
}

TEST_CASE("parallel and serial imputation agree") {
  const LongData d = mar_data(300, 4);
  for (Weighting w : {Weighting::uniform_mean, Weighting::inverse_distance}) {
    KnnConfig cfg;
    cfg.weighting = w;
    const KnnResult p = knn_impute(d, cfg);
    const KnnResult s = knn_impute_serial(d, cfg);
    CHECK(p.completed.y == s.completed.y);
    CHECK(p.short_donor_cells == s.short_donor_cells);
  }
}

TEST_CASE("inverse distance weighting") {
  // donors at distance 1 and 3 (scaling none, T=2, one shared coordinate -> sqrt(2)*|dx|)
  const LongData d = from_rows({{1, 10}, {3, 40}, {0, NA}});
  KnnConfig cfg;
  cfg.k = 2;
  cfg.scaling = Scaling::none;
  cfg.weighting = Weighting::inverse_distance;
  const double expected = (10.0 / 1 + 40.0 / 3) / (1.0 + 1.0 / 3);
  CHECK(knn_impute(d, cfg).completed.y(2, 1) == doctest::Approx(expected).epsilon(1e-14));
  // a zero-distance donor dominates
  const LongData z = from_rows({{0, 10}, {3, 40}, {0, NA}});
  CHECK(knn_impute(z, cfg).completed.y(2, 1) == 10.0);
}

TEST_CASE("donor shortage and absence") {
  const LongData d = from_rows({{1, 2}, {2, NA}, {3, 4}});
  KnnConfig cfg;
  cfg.k = 5;
  const KnnResult r = knn_impute(d, cfg);
  CHECK(r.short_donor_cells == 1);
  CHECK(r.completed.y(1, 1) == 3.0);

  const LongData empty = from_rows({{1, NA}, {2, NA}, {3, NA}, {NA, 5}});
  // no row shares an observed coordinate with row 3
  CHECK_THROWS_AS(knn_impute(empty, cfg), ValidationError);
  KnnConfig bad;
  bad.k = 0;
  CHECK_THROWS_AS(knn_impute(d, bad), ValidationError);
}

TEST_CASE("name conversions") {
  CHECK(weighting_from_name("inverse_distance") == Weighting::inverse_distance);
  CHECK(scaling_from_name("none") == Scaling::none);
  CHECK_FALSE(weighting_from_name("median").has_value());
  CHECK(weighting_name(Weighting::uniform_mean) == "uniform_mean");
  CHECK(scaling_name(Scaling::range) == "range");
}
