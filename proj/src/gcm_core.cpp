#include "gcmlab/gcm_core.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gcmlab/errors.hpp"

namespace gcmlab {

namespace {

constexpr std::array<std::string_view, kNumParams> kParamNames = {
    "beta_L", "beta_S", "var_L", "var_S", "corr_LS", "var_e"};

} // namespace

std::string_view param_name(Param p) {
  return kParamNames[static_cast<std::size_t>(p)];
}

std::optional<Param> param_from_name(std::string_view name) {
  for (int i = 0; i < kNumParams; ++i) {
    if (kParamNames[i] == name) return static_cast<Param>(i);
  }
  return std::nullopt;
}

std::array<double, kNumParams> GcmParams::to_array() const {
  return {intercept_mean, slope_mean, intercept_var,
          slope_var, intercept_slope_corr, error_var};
}

GcmParams GcmParams::from_array(const std::array<double, kNumParams>& a) {
  return {a[0], a[1], a[2], a[3], a[4], a[5]};
}

double GcmParams::latent_covariance() const {
  return intercept_slope_corr * std::sqrt(intercept_var * slope_var);
}

Eigen::Matrix2d GcmParams::latent_cov_matrix() const {
  Eigen::Matrix2d psi;
  const double c = latent_covariance();
  psi << intercept_var, c, c, slope_var;
  return psi;
}

void GcmParams::validate(bool allow_zero_error_var) const {
  for (double v : to_array()) {
    if (!std::isfinite(v)) throw ValidationError("GcmParams: non-finite value");
  }
  if (intercept_var < 0.0 || slope_var < 0.0)
    throw ValidationError("GcmParams: latent variances must be nonnegative");
  if (std::abs(intercept_slope_corr) > 1.0)
    throw ValidationError("GcmParams: |corr_LS| must not exceed 1");
  if (allow_zero_error_var ? error_var < 0.0 : error_var <= 0.0)
    throw ValidationError("GcmParams: error variance must be positive");
}

bool GcmParams::valid() const {
  try {
    validate();
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

GcmParams reference_params() { return {6.0, 2.0, 1.0, 1.0, 0.0, 1.0}; }

Eigen::MatrixXd loading_matrix(int occasions) {
  if (occasions < 2) {
    throw InvalidDimension("loading_matrix: need at least 2 occasions, got " +
                           std::to_string(occasions));
  }
  Eigen::MatrixXd lambda(occasions, 2);
  for (int t = 0; t < occasions; ++t) {
    lambda(t, 0) = 1.0;
    lambda(t, 1) = static_cast<double>(t);
  }
  return lambda;
}

Moments implied_moments(const GcmParams& p, int occasions) {
  const Eigen::MatrixXd lambda = loading_matrix(occasions);
  const Eigen::Vector2d beta(p.intercept_mean, p.slope_mean);
  Moments m;
  m.mean = lambda * beta;
  m.cov = lambda * p.latent_cov_matrix() * lambda.transpose();
  m.cov.diagonal().array() += p.error_var;
  // exact symmetry regardless of product rounding
  m.cov = 0.5 * (m.cov + m.cov.transpose()).eval();
  return m;
}

Moments submoments(const Moments& m, std::span<const int> indices) {
  if (indices.empty()) throw InvalidPattern("submoments: empty index set");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || indices[k] >= m.dim())
      throw InvalidPattern("submoments: index out of range");
    if (k > 0 && indices[k] <= indices[k - 1])
      throw InvalidPattern("submoments: indices must be strictly increasing");
  }
  const auto d = static_cast<Eigen::Index>(indices.size());
  Moments out;
  out.mean.resize(d);
  out.cov.resize(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    out.mean(a) = m.mean(indices[a]);
    for (Eigen::Index b = 0; b < d; ++b) out.cov(a, b) = m.cov(indices[a], indices[b]);
  }
  return out;
}

std::optional<Eigen::LLT<Eigen::MatrixXd>> factorize(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const auto diag = llt.matrixLLT().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag(i) * diag(i) >= kMinPivot)) return std::nullopt;
  }
  return llt;
}

double mvn_logpdf(const Eigen::VectorXd& x, const Moments& m) {
  if (x.size() != m.dim()) throw InvalidDimension("mvn_logpdf: dimension mismatch");
  auto llt = factorize(m.cov);
  if (!llt) throw FactorizationFailure("mvn_logpdf: covariance not positive definite");
  const Eigen::VectorXd z = llt->matrixL().solve(x - m.mean);
  const double log_det = 2.0 * llt->matrixLLT().diagonal().array().log().sum();
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + z.squaredNorm());
}

} // namespace gcmlab
