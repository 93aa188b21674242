#ifndef GCMLAB_GCM_CORE_HPP
#define GCMLAB_GCM_CORE_HPP

#include <array>
#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace gcmlab {

inline constexpr int kNumParams = 6;

/// Parameter slots in the order used by every 6-vector in the library
/// (standard errors, confidence bounds, unconstrained vectors).
enum class Param : int {
  intercept_mean = 0,
  slope_mean,
  intercept_var,
  slope_var,
  intercept_slope_corr,
  error_var,
};

/// Short names used in output files.
std::string_view param_name(Param p);
std::optional<Param> param_from_name(std::string_view name);

/// Linear growth-curve parameters. The latent intercept/slope covariance is
/// parameterized by a correlation.
struct GcmParams {
  double intercept_mean = 0.0;
  double slope_mean = 0.0;
  double intercept_var = 0.0;
  double slope_var = 0.0;
  double intercept_slope_corr = 0.0;
  double error_var = 1.0;

  double operator[](Param p) const { return to_array()[static_cast<int>(p)]; }

  std::array<double, kNumParams> to_array() const;
  static GcmParams from_array(const std::array<double, kNumParams>& a);

  double latent_covariance() const;
  Eigen::Matrix2d latent_cov_matrix() const;

  /// Throws ValidationError unless variances are nonnegative, |corr| <= 1
  /// and the error variance is positive (or nonnegative if allowed).
  void validate(bool allow_zero_error_var = false) const;
  bool valid() const;

  bool operator==(const GcmParams&) const = default;
};

/// Population values of the reference simulation design.
GcmParams reference_params();

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  Eigen::Index dim() const { return mean.size(); }
};

/// T x 2 loadings: intercept column of ones, slope column coded 0..T-1.
Eigen::MatrixXd loading_matrix(int occasions);

/// mean = L beta, cov = L Psi L' + var_e I.
Moments implied_moments(const GcmParams& p, int occasions);

/// Restricts moments to the given zero-based, strictly increasing indices.
Moments submoments(const Moments& m, std::span<const int> indices);

/// Cholesky factor of a covariance matrix. Returns nullopt when the matrix is
/// not positive definite or any pivot falls below kMinPivot.
inline constexpr double kMinPivot = 1e-10;
std::optional<Eigen::LLT<Eigen::MatrixXd>> factorize(const Eigen::MatrixXd& cov);

/// Log multivariate-normal density. Throws FactorizationFailure when the
/// covariance is not positive definite.
double mvn_logpdf(const Eigen::VectorXd& x, const Moments& m);

} // namespace gcmlab

#endif // GCMLAB_GCM_CORE_HPP
