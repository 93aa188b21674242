#ifndef GCMLAB_FIML_HPP
#define GCMLAB_FIML_HPP

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gcmlab/datagen.hpp"
#include "gcmlab/gcm_core.hpp"

namespace gcmlab {

using ParamVector = std::array<double, kNumParams>;

/// (beta_L, beta_S, log var_L, log var_S, atanh corr_LS, log var_e)
using Theta = Eigen::Matrix<double, kNumParams, 1>;

Theta to_unconstrained(const GcmParams& p);
GcmParams from_unconstrained(const Theta& theta);

/// Observed-data log-likelihood evaluated through per-pattern sufficient
/// statistics. Rows sharing a missingness pattern are pooled, so cost scales
/// with the number of distinct patterns rather than N.
class ObservedLikelihood {
public:
  explicit ObservedLikelihood(const LongData& data);

  /// -inf when an implied covariance block is not positive definite.
  double value(const GcmParams& p) const;
  double value(const Theta& theta) const { return value(from_unconstrained(theta)); }

  /// Value and gradient with respect to Theta. The gradient is left
  /// untouched when the value is -inf.
  double value_and_gradient(const Theta& theta, Theta& grad) const;

  int rows_used() const { return rows_used_; }
  int empty_rows() const { return empty_rows_; }
  int occasions() const { return occasions_; }
  std::size_t pattern_count() const { return blocks_.size(); }

private:
  struct Block {
    std::vector<int> observed;
    int count = 0;
    Eigen::VectorXd sum;
    Eigen::MatrixXd cross;
  };

  double accumulate(const GcmParams& p, Theta* grad) const;

  std::vector<Block> blocks_;
  int occasions_ = 0;
  int rows_used_ = 0;
  int empty_rows_ = 0;
};

/// Sum over rows of the marginal normal density of each row's observed cells.
/// Rows with nothing observed contribute 0. Returns -inf for non-PD blocks.
double observed_loglik(const GcmParams& p, const LongData& data);

/// Row-by-row evaluation through mvn_logpdf; kept as a reference for tests.
double observed_loglik_rowwise(const GcmParams& p, const LongData& data);

/// Gradient of observed_loglik with respect to Theta.
Theta observed_loglik_gradient(const Theta& theta, const LongData& data);

struct OptimizerConfig {
  int max_iter = 500;
  /// Convergence threshold on |grad loglik| / rows_used.
  double grad_tol = 1e-6;
};

enum class SeStatus { ok, boundary, not_negative_definite, not_computed };

struct FitResult {
  GcmParams estimates;
  ParamVector se{};
  ParamVector ci_low{};
  ParamVector ci_high{};
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  SeStatus se_status = SeStatus::not_computed;
  /// A column is constant or has fewer than two observed values.
  bool degenerate = false;
  int empty_rows = 0;
};

/// Moment-based start: OLS of occasion means on time, OLS of occasion
/// variances on squared time, correlation 0.
GcmParams start_values(const LongData& data);

/// Quasi-Newton maximization of the observed-data likelihood. On complete
/// data this is ordinary ML.
FitResult fit_fiml(const LongData& data, std::optional<GcmParams> init = std::nullopt,
                   const OptimizerConfig& cfg = {});

struct StandardErrors {
  ParamVector se{};
  SeStatus status = SeStatus::not_computed;
};

/// Delta-method standard errors from a central-difference Hessian taken in
/// the unconstrained parameterization. Components at a variance or
/// correlation boundary get NaN.
StandardErrors standard_errors_detailed(const GcmParams& p_hat, const LongData& data);
ParamVector standard_errors(const GcmParams& p_hat, const LongData& data);

/// Two-sided normal quantile, z(0.95) = 1.959964.
double normal_critical_value(double level);
std::pair<double, double> wald_ci(double estimate, double se, double level = 0.95);

} // namespace gcmlab

#endif // GCMLAB_FIML_HPP
