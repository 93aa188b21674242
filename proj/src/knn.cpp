#include "gcmlab/knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "gcmlab/errors.hpp"

namespace gcmlab {

std::optional<Weighting> weighting_from_name(std::string_view name) {
  if (name == "uniform_mean") return Weighting::uniform_mean;
  if (name == "inverse_distance") return Weighting::inverse_distance;
  return std::nullopt;
}

std::optional<Scaling> scaling_from_name(std::string_view name) {
  if (name == "range") return Scaling::range;
  if (name == "none") return Scaling::none;
  return std::nullopt;
}

std::string_view weighting_name(Weighting w) {
  return w == Weighting::uniform_mean ? "uniform_mean" : "inverse_distance";
}

std::string_view scaling_name(Scaling s) { return s == Scaling::range ? "range" : "none"; }

std::vector<double> column_scales(const LongData& data, Scaling scaling) {
  std::vector<double> scales(static_cast<std::size_t>(data.occasions()), 1.0);
  if (scaling == Scaling::none) return scales;
  for (Eigen::Index t = 0; t < data.occasions(); ++t) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      if (!data.mask(i, t)) continue;
      lo = std::min(lo, data.y(i, t));
      hi = std::max(hi, data.y(i, t));
    }
    const double range = hi - lo;
    if (std::isfinite(range) && range > 0.0) scales[t] = range;
  }
  return scales;
}

double row_distance(std::span<const double> a, std::span<const double> b,
                    std::span<const bool> mask_a, std::span<const bool> mask_b,
                    std::span<const double> scales) {
  const std::size_t dims = a.size();
  if (b.size() != dims || mask_a.size() != dims || mask_b.size() != dims || scales.size() != dims)
    throw InvalidDimension("row_distance: length mismatch");
  double sum = 0.0;
  int shared = 0;
  for (std::size_t j = 0; j < dims; ++j) {
    if (!(mask_a[j] && mask_b[j])) continue;
    const double d = (a[j] - b[j]) / scales[j];
    sum += d * d;
    ++shared;
  }
  if (shared == 0) throw IncomparableRows("row_distance: no jointly observed coordinate");
  return std::sqrt(static_cast<double>(dims) / shared * sum);
}

namespace {

struct Candidate {
  double distance;
  Eigen::Index row;
};

class RowImputer {
public:
  RowImputer(const LongData& data, const KnnConfig& cfg)
      : data_(data), cfg_(cfg), scales_(column_scales(data, cfg.scaling)),
        cols_(static_cast<std::size_t>(data.occasions())) {
    if (cfg.k < 1) throw ValidationError("knn_impute: k must be >= 1");
    // row-major copies so each row is a contiguous span
    const Eigen::Index n = data.rows();
    values_.resize(static_cast<std::size_t>(n) * cols_);
    observed_ = std::make_unique<bool[]>(values_.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < cols_; ++t) {
        values_[i * cols_ + t] = data.y(i, static_cast<Eigen::Index>(t));
        observed_[i * cols_ + t] = data.mask(i, static_cast<Eigen::Index>(t));
      }
    }
  }

  /// Writes imputed values for row i into out (row i of an N x T matrix) and
  /// returns the number of cells that used fewer than k donors.
  int impute_row(Eigen::Index i, Eigen::MatrixXd& out) const {
    if (data_.mask.row(i).all()) return 0;
    const Eigen::Index n = data_.rows();
    std::vector<Candidate> all;
    all.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      try {
        all.push_back({row_distance(row(i), row(j), mask(i), mask(j), scales_), j});
      } catch (const IncomparableRows&) {
      }
    }
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
      return a.distance < b.distance || (a.distance == b.distance && a.row < b.row);
    });

    int short_cells = 0;
    std::vector<Candidate> donors;
    for (std::size_t t = 0; t < cols_; ++t) {
      if (observed_[i * cols_ + t]) continue;
      donors.clear();
      for (const auto& c : all) {
        if (!observed_[c.row * cols_ + t]) continue;
        donors.push_back(c);
        if (static_cast<int>(donors.size()) == cfg_.k) break;
      }
      if (donors.empty())
        throw ValidationError("knn_impute: no eligible donor for row " + std::to_string(i + 1) +
                              ", column " + std::to_string(t + 1));
      if (static_cast<int>(donors.size()) < cfg_.k) ++short_cells;
      out(i, static_cast<Eigen::Index>(t)) = aggregate(donors, t);
    }
    return short_cells;
  }

private:
  std::span<const double> row(Eigen::Index i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<const bool> mask(Eigen::Index i) const {
    return {observed_.get() + i * cols_, cols_};
  }

  double aggregate(const std::vector<Candidate>& donors, std::size_t t) const {
    if (cfg_.weighting == Weighting::inverse_distance) {
      // exact matches dominate: average over zero-distance donors only
      const bool exact = donors.front().distance == 0.0;
      double num = 0.0, den = 0.0;
      for (const auto& d : donors) {
        if (exact && d.distance != 0.0) continue;
        const double w = exact ? 1.0 : 1.0 / d.distance;
        num += w * values_[d.row * cols_ + t];
        den += w;
      }
      return num / den;
    }
    double s = 0.0;
    for (const auto& d : donors) s += values_[d.row * cols_ + t];
    return s / static_cast<double>(donors.size());
  }

  const LongData& data_;
  const KnnConfig& cfg_;
  std::vector<double> scales_;
  std::size_t cols_;
  std::vector<double> values_;
  std::unique_ptr<bool[]> observed_;
};

KnnResult finish(const LongData& data, Eigen::MatrixXd imputed, int short_cells) {
  KnnResult result;
  result.completed = data;
  result.completed.y = std::move(imputed);
  result.completed.mask = Mask::Constant(data.rows(), data.occasions(), true);
  result.short_donor_cells = short_cells;
  return result;
}

} // namespace

KnnResult knn_impute(const LongData& data, const KnnConfig& cfg) {
  const RowImputer imputer(data, cfg);
  Eigen::MatrixXd out = data.y;
  const auto n = static_cast<long>(data.rows());
  int short_cells = 0;
  bool failed = false;
  std::string error;
#pragma omp parallel for schedule(dynamic, 8) reduction(+ : short_cells)
  for (long i = 0; i < n; ++i) {
    try {
      short_cells += imputer.impute_row(i, out);
    } catch (const std::exception& e) {
#pragma omp critical(knn_error)
      {
        if (!failed) error = e.what();
        failed = true;
      }
    }
  }
  if (failed) throw ValidationError(error);
  return finish(data, std::move(out), short_cells);
}

KnnResult knn_impute_serial(const LongData& data, const KnnConfig& cfg) {
  const RowImputer imputer(data, cfg);
  Eigen::MatrixXd out = data.y;
  int short_cells = 0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) short_cells += imputer.impute_row(i, out);
  return finish(data, std::move(out), short_cells);
}

} // namespace gcmlab
