#ifndef GCMLAB_FOREST_HPP
#define GCMLAB_FOREST_HPP

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gcmlab/datagen.hpp"
#include "gcmlab/rng.hpp"

namespace gcmlab {

/// CART regression tree with axis-aligned splits `x[var] <= threshold`.
class RegressionTree {
public:
  struct Node {
    int var = -1; ///< -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0; ///< mean training response
    int count = 0;      ///< training rows reaching the node
  };

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& root() const { return nodes_.front(); }
  std::size_t leaf_count() const;

private:
  friend class TreeBuilder;
  std::vector<Node> nodes_;
};

/// Fits a tree on the rows listed in `sample` (duplicates allowed, as in a
/// bootstrap draw). Splits minimize the children's summed squared error over
/// a random subset of `mtry` variables; both children must keep at least
/// `min_node` rows, and nodes smaller than 2 * min_node are leaves. Ties go
/// to the lower variable index, then the lower threshold.
RegressionTree fit_tree(const Eigen::MatrixXd& x, std::span<const double> y,
                        std::span<const int> sample, int mtry, int min_node, Rng& rng);

/// Convenience overload using every row once.
RegressionTree fit_tree(const Eigen::MatrixXd& x, std::span<const double> y, int mtry,
                        int min_node, Rng& rng);

struct ForestConfig {
  int ntree = 100;
  int mtry = 0; ///< 0 selects floor(sqrt(p)), at least 1
  int min_node = 5;
  bool bootstrap = true;
};

int resolve_mtry(const ForestConfig& cfg, int predictors);

struct Forest {
  std::vector<RegressionTree> trees;
  int mtry = 1;
  int ntree = 0;
  double oob_error = 0.0; ///< NaN when no row was ever out of bag

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

/// Trees are fitted in parallel; tree j draws from seed.child(j), so the
/// forest is identical to fit_forest_serial for any thread count.
Forest fit_forest(const Eigen::MatrixXd& x, std::span<const double> y, const ForestConfig& cfg,
                  Seed seed);
Forest fit_forest_serial(const Eigen::MatrixXd& x, std::span<const double> y,
                         const ForestConfig& cfg, Seed seed);

struct MissForestConfig {
  ForestConfig forest;
  int max_iter = 10;
};

enum class StopReason { no_missing, delta_increased, converged, max_iter };
std::string_view stop_reason_name(StopReason r);

struct ImputeTrace {
  std::vector<double> deltas; ///< one relative change per completed sweep
  int iterations = 0;
  StopReason reason = StopReason::no_missing;
};

/// Iterative forest imputation over the outcome columns. aux is carried
/// through untouched and never used as a predictor. The returned mask is
/// all-true.
std::pair<LongData, ImputeTrace> missforest_impute(const LongData& data,
                                                   const MissForestConfig& cfg, Seed seed);

} // namespace gcmlab

#endif // GCMLAB_FOREST_HPP
