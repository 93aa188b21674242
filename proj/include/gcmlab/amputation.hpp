#ifndef GCMLAB_AMPUTATION_HPP
#define GCMLAB_AMPUTATION_HPP

#include <optional>
#include <string_view>
#include <vector>

#include "gcmlab/datagen.hpp"

namespace gcmlab {

enum class Mechanism { MAR, MNAR };

std::string_view mechanism_name(Mechanism m);
std::optional<Mechanism> mechanism_from_name(std::string_view name);

/// Which value triggers MAR missingness at occasion t.
enum class MarTrigger {
  previous_occasion, ///< y(i, t-1); cell stays observed when y(i, t-1) is missing
  last_observed,     ///< most recent observed value before t
};

struct MissingSpec {
  Mechanism mechanism = Mechanism::MAR;
  double rate = 0.0;
  /// Zero-based occasions that may go missing. Empty means {1, ..., T-1}.
  /// Occasion 0 is never allowed.
  std::vector<int> affected_occasions;
  MarTrigger mar_trigger = MarTrigger::previous_occasion;
};

/// Number of cells flagged per affected occasion (MAR) or rows flagged (MNAR):
/// ceil(rate * n) up to floating-point noise.
Eigen::Index flagged_count(double rate, Eigen::Index n);

/// MAR: at each affected occasion t the ceil(rate*N) largest trigger values
/// (strict cut at the next order statistic) lose occasion t.
LongData ampute_mar(const LongData& data, const MissingSpec& spec);

/// MNAR: rows whose aux exceeds the empirical (1 - rate) percentile lose every
/// affected occasion.
LongData ampute_mnar(const LongData& data, const MissingSpec& spec);

LongData ampute(const LongData& data, const MissingSpec& spec);

} // namespace gcmlab

#endif // GCMLAB_AMPUTATION_HPP
