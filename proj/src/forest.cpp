#include "gcmlab/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gcmlab/errors.hpp"

namespace gcmlab {

double RegressionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int k = 0;
  while (nodes_[k].var >= 0) {
    const Node& n = nodes_[k];
    k = x(n.var) <= n.threshold ? n.left : n.right;
  }
  return nodes_[k].value;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.var < 0; }));
}

class TreeBuilder {
public:
  TreeBuilder(const Eigen::MatrixXd& x, std::span<const double> y, int mtry, int min_node, Rng& rng)
      : x_(x), y_(y), mtry_(mtry), min_node_(min_node), rng_(rng) {}

  RegressionTree build(std::span<const int> sample) {
    samples_.assign(sample.begin(), sample.end());
    RegressionTree tree;
    struct Pending {
      int node;
      std::size_t begin, end;
    };
    tree.nodes_.emplace_back();
    std::vector<Pending> stack{{0, 0, samples_.size()}};
    while (!stack.empty()) {
      const Pending cur = stack.back();
      stack.pop_back();
      auto& node = tree.nodes_[cur.node];
      node.count = static_cast<int>(cur.end - cur.begin);
      node.value = node_mean(cur.begin, cur.end);

      const auto split = best_split(cur.begin, cur.end, node.value);
      if (split.var < 0) continue;

      const auto mid_it = std::stable_partition(
          samples_.begin() + cur.begin, samples_.begin() + cur.end,
          [&](int r) { return x_(r, split.var) <= split.threshold; });
      const auto mid = static_cast<std::size_t>(mid_it - samples_.begin());

      const int left = static_cast<int>(tree.nodes_.size());
      tree.nodes_.emplace_back();
      tree.nodes_.emplace_back();
      auto& parent = tree.nodes_[cur.node];
      parent.var = split.var;
      parent.threshold = split.threshold;
      parent.left = left;
      parent.right = left + 1;
      stack.push_back({left + 1, mid, cur.end});
      stack.push_back({left, cur.begin, mid});
    }
    return tree;
  }

private:
  struct Split {
    int var = -1;
    double threshold = 0.0;
  };

  double node_mean(std::size_t begin, std::size_t end) const {
    double s = 0.0;
    for (std::size_t k = begin; k < end; ++k) s += y_[samples_[k]];
    return s / static_cast<double>(end - begin);
  }

  Split best_split(std::size_t begin, std::size_t end, double mean) {
    const auto n = static_cast<int>(end - begin);
    Split best;
    if (n < 2 * min_node_) return best;

    double parent_sse = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const double d = y_[samples_[k]] - mean;
      parent_sse += d * d;
    }
    if (parent_sse <= 0.0) return best;

    const int p = static_cast<int>(x_.cols());
    const int m = std::min(mtry_, p);
    candidates_.resize(p);
    std::iota(candidates_.begin(), candidates_.end(), 0);
    for (int j = 0; j < m; ++j) {
      const auto pick = j + static_cast<int>(rng_.index(static_cast<std::size_t>(p - j)));
      std::swap(candidates_[j], candidates_[pick]);
    }
    std::sort(candidates_.begin(), candidates_.begin() + m);

    // Children SSE = parent SSE - gain, where gain = sl^2/nl + sr^2/nr on
    // responses centered at the node mean.
    double total = 0.0;
    for (std::size_t k = begin; k < end; ++k) total += y_[samples_[k]] - mean;

    // Gains within tie_tol of the incumbent count as ties, so rounding in the
    // centered sums cannot promote a later (higher) cut.
    const double tie_tol = 1e-12 * parent_sse;
    double best_gain = 0.0;
    for (int c = 0; c < m; ++c) {
      const int var = candidates_[c];
      pairs_.clear();
      for (std::size_t k = begin; k < end; ++k) {
        const int r = samples_[k];
        pairs_.emplace_back(x_(r, var), y_[r] - mean);
      }
      std::sort(pairs_.begin(), pairs_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double left_sum = 0.0;
      for (int k = 0; k < n - 1; ++k) {
        left_sum += pairs_[k].second;
        const int nl = k + 1;
        const int nr = n - nl;
        if (nl < min_node_) continue;
        if (nr < min_node_) break;
        if (!(pairs_[k].first < pairs_[k + 1].first)) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr;
        if (gain > best_gain + tie_tol) {
          best_gain = gain;
          best.var = var;
          const double lo = pairs_[k].first;
          const double hi = pairs_[k + 1].first;
          double t = lo + 0.5 * (hi - lo);
          if (!(t < hi)) t = lo;
          best.threshold = t;
        }
      }
    }
    if (best.var >= 0 && !(best_gain > tie_tol)) best.var = -1;
    return best;
  }

  const Eigen::MatrixXd& x_;
  std::span<const double> y_;
  int mtry_;
  int min_node_;
  Rng& rng_;
  std::vector<int> samples_;
  std::vector<int> candidates_;
  std::vector<std::pair<double, double>> pairs_;
};

RegressionTree fit_tree(const Eigen::MatrixXd& x, std::span<const double> y,
                        std::span<const int> sample, int mtry, int min_node, Rng& rng) {
  if (x.cols() < 1) throw ValidationError("fit_tree: need at least one predictor");
  if (static_cast<Eigen::Index>(y.size()) != x.rows())
    throw ValidationError("fit_tree: X and y row counts differ");
  if (min_node < 1) throw ValidationError("fit_tree: min_node must be >= 1");
  if (mtry < 1) throw ValidationError("fit_tree: mtry must be >= 1");
  if (sample.size() < static_cast<std::size_t>(min_node) || sample.empty())
    throw ValidationError("fit_tree: fewer rows than min_node");
  return TreeBuilder(x, y, mtry, min_node, rng).build(sample);
}

RegressionTree fit_tree(const Eigen::MatrixXd& x, std::span<const double> y, int mtry,
                        int min_node, Rng& rng) {
  std::vector<int> all(static_cast<std::size_t>(x.rows()));
  std::iota(all.begin(), all.end(), 0);
  return fit_tree(x, y, all, mtry, min_node, rng);
}

int resolve_mtry(const ForestConfig& cfg, int predictors) {
  if (cfg.mtry > 0) return std::min(cfg.mtry, predictors);
  return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(predictors)))));
}

double Forest::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(x);
  return s / static_cast<double>(trees.size());
}

namespace {

void check_forest_inputs(const Eigen::MatrixXd& x, std::span<const double> y,
                         const ForestConfig& cfg) {
  if (cfg.ntree < 1) throw ValidationError("fit_forest: ntree must be >= 1");
  if (static_cast<Eigen::Index>(y.size()) != x.rows())
    throw ValidationError("fit_forest: X and y row counts differ");
  if (x.rows() < cfg.min_node) throw ValidationError("fit_forest: fewer rows than min_node");
}

std::vector<int> draw_sample(Eigen::Index n, bool bootstrap, Rng& rng) {
  std::vector<int> sample(static_cast<std::size_t>(n));
  if (bootstrap) {
    for (auto& s : sample) s = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
  } else {
    std::iota(sample.begin(), sample.end(), 0);
  }
  return sample;
}

RegressionTree grow_one(const Eigen::MatrixXd& x, std::span<const double> y,
                        const ForestConfig& cfg, int mtry, Seed seed, std::vector<int>& sample) {
  Rng rng(seed);
  sample = draw_sample(x.rows(), cfg.bootstrap, rng);
  return fit_tree(x, y, sample, mtry, cfg.min_node, rng);
}

void finish_oob(Forest& forest, const Eigen::MatrixXd& x, std::span<const double> y,
                const std::vector<std::vector<int>>& samples) {
  const Eigen::Index n = x.rows();
  std::vector<double> sum(static_cast<std::size_t>(n), 0.0);
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  std::vector<char> in_bag(static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < forest.trees.size(); ++j) {
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (int r : samples[j]) in_bag[r] = 1;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (in_bag[r]) continue;
      sum[r] += forest.trees[j].predict(x.row(r));
      ++count[r];
    }
  }
  double sse = 0.0;
  int used = 0;
  for (Eigen::Index r = 0; r < n; ++r) {
    if (count[r] == 0) continue;
    const double d = sum[r] / count[r] - y[r];
    sse += d * d;
    ++used;
  }
  forest.oob_error = used > 0 ? sse / used : std::numeric_limits<double>::quiet_NaN();
}

} // namespace

Forest fit_forest(const Eigen::MatrixXd& x, std::span<const double> y, const ForestConfig& cfg,
                  Seed seed) {
  check_forest_inputs(x, y, cfg);
  Forest forest;
  forest.ntree = cfg.ntree;
  forest.mtry = resolve_mtry(cfg, static_cast<int>(x.cols()));
  forest.trees.resize(static_cast<std::size_t>(cfg.ntree));
  std::vector<std::vector<int>> samples(static_cast<std::size_t>(cfg.ntree));

#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < cfg.ntree; ++j) {
    forest.trees[j] = grow_one(x, y, cfg, forest.mtry, seed.child(j), samples[j]);
  }
  finish_oob(forest, x, y, samples);
  return forest;
}

Forest fit_forest_serial(const Eigen::MatrixXd& x, std::span<const double> y,
                         const ForestConfig& cfg, Seed seed) {
  check_forest_inputs(x, y, cfg);
  Forest forest;
  forest.ntree = cfg.ntree;
  forest.mtry = resolve_mtry(cfg, static_cast<int>(x.cols()));
  std::vector<std::vector<int>> samples(static_cast<std::size_t>(cfg.ntree));
  for (int j = 0; j < cfg.ntree; ++j) {
    forest.trees.push_back(grow_one(x, y, cfg, forest.mtry, seed.child(j), samples[j]));
  }
  finish_oob(forest, x, y, samples);
  return forest;
}

std::string_view stop_reason_name(StopReason r) {
  switch (r) {
  case StopReason::no_missing: return "no_missing";
  case StopReason::delta_increased: return "delta_increased";
  case StopReason::converged: return "converged";
  case StopReason::max_iter: return "max_iter";
  }
  return "unknown";
}

std::pair<LongData, ImputeTrace> missforest_impute(const LongData& data,
                                                   const MissForestConfig& cfg, Seed seed) {
  const Eigen::Index n = data.rows();
  const int cols = static_cast<int>(data.occasions());
  if (cols < 2) throw ValidationError("missforest_impute: need at least two columns");
  if (cfg.max_iter < 1) throw ValidationError("missforest_impute: max_iter must be >= 1");

  std::vector<int> missing(cols, 0);
  for (int c = 0; c < cols; ++c) {
    const auto observed = data.mask.col(c).count();
    if (observed < 2)
      throw ValidationError("missforest_impute: column " + std::to_string(c + 1) +
                            " has fewer than two observed values");
    missing[c] = static_cast<int>(n - observed);
  }

  LongData out = data;
  out.mask = Mask::Constant(n, cols, true);
  ImputeTrace trace;
  if (data.complete()) return {std::move(out), trace};

  Eigen::MatrixXd current = data.y;
  for (int c = 0; c < cols; ++c) {
    double s = 0.0;
    int k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (data.mask(i, c)) {
        s += data.y(i, c);
        ++k;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!data.mask(i, c)) current(i, c) = s / k;
    }
  }

  std::vector<int> order;
  for (int c = 0; c < cols; ++c) {
    if (missing[c] > 0) order.push_back(c);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return missing[a] < missing[b]; });

  ForestConfig forest_cfg = cfg.forest;
  Eigen::MatrixXd previous = current;
  double previous_delta = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd result;

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    previous = current;
    for (int c : order) {
      const int obs = static_cast<int>(n) - missing[c];
      Eigen::MatrixXd xs(obs, cols - 1);
      std::vector<double> ys;
      ys.reserve(static_cast<std::size_t>(obs));
      int r = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!data.mask(i, c)) continue;
        int k = 0;
        for (int j = 0; j < cols; ++j) {
          if (j != c) xs(r, k++) = current(i, j);
        }
        ys.push_back(current(i, c));
        ++r;
      }
      const Forest forest =
          fit_forest(xs, ys, forest_cfg, seed.child(static_cast<std::uint64_t>(iter)).child(c));
      Eigen::RowVectorXd row(cols - 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (data.mask(i, c)) continue;
        int k = 0;
        for (int j = 0; j < cols; ++j) {
          if (j != c) row(k++) = current(i, j);
        }
        current(i, c) = forest.predict(row);
      }
    }

    double num = 0.0, den = 0.0;
    for (int c : order) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (data.mask(i, c)) continue;
        const double d = current(i, c) - previous(i, c);
        num += d * d;
        den += current(i, c) * current(i, c);
      }
    }
    const double delta = den > 0.0 ? num / den : 0.0;
    trace.deltas.push_back(delta);
    trace.iterations = iter;

    if (iter > 1 && delta > previous_delta) {
      trace.reason = StopReason::delta_increased;
      result = previous;
      break;
    }
    if (delta == 0.0) {
      trace.reason = StopReason::converged;
      result = current;
      break;
    }
    if (iter == cfg.max_iter) {
      trace.reason = StopReason::max_iter;
      result = current;
    }
    previous_delta = delta;
  }

  // observed cells are copied back from the input verbatim
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < cols; ++c)
      if (!data.mask(i, c)) out.y(i, c) = result(i, c);
  return {std::move(out), trace};
}

} // namespace gcmlab
