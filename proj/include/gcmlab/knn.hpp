#ifndef GCMLAB_KNN_HPP
#define GCMLAB_KNN_HPP

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "gcmlab/datagen.hpp"

namespace gcmlab {

enum class Weighting { uniform_mean, inverse_distance };
enum class Scaling { range, none };

std::optional<Weighting> weighting_from_name(std::string_view name);
std::optional<Scaling> scaling_from_name(std::string_view name);
std::string_view weighting_name(Weighting w);
std::string_view scaling_name(Scaling s);

struct KnnConfig {
  int k = 5;
  Weighting weighting = Weighting::uniform_mean;
  Scaling scaling = Scaling::range;
};

/// Per-column divisor: observed range, or 1 when the range is 0 or scaling
/// is disabled.
std::vector<double> column_scales(const LongData& data, Scaling scaling);

/// sqrt((T / m) * sum_j ((a_j - b_j) / s_j)^2) over the m coordinates
/// observed in both rows. Throws IncomparableRows when m = 0.
double row_distance(std::span<const double> a, std::span<const double> b,
                    std::span<const bool> mask_a, std::span<const bool> mask_b,
                    std::span<const double> scales);

struct KnnResult {
  LongData completed;
  /// Cells imputed from fewer than k donors because fewer were eligible.
  int short_donor_cells = 0;
};

/// Fills each missing cell from the k nearest rows observed in that column.
/// Donor values always come from the original observed data. Rows are
/// processed in parallel; equivalent to knn_impute_serial.
KnnResult knn_impute(const LongData& data, const KnnConfig& cfg = {});
KnnResult knn_impute_serial(const LongData& data, const KnnConfig& cfg = {});

} // namespace gcmlab

#endif // GCMLAB_KNN_HPP
