#include "gcmlab/fiml.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <Eigen/QR>
#include <boost/math/distributions/normal.hpp>

#include "gcmlab/errors.hpp"

namespace gcmlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// Variance estimates below this fraction of the mean occasion variance are
// treated as sitting on the boundary.
constexpr double kBoundaryRelVar = 1e-6;
constexpr double kBoundaryCorr = 1.0 - 1e-6;

} // namespace

Theta to_unconstrained(const GcmParams& p) {
  Theta t;
  t << p.intercept_mean, p.slope_mean, std::log(p.intercept_var), std::log(p.slope_var),
      std::atanh(p.intercept_slope_corr), std::log(p.error_var);
  return t;
}

GcmParams from_unconstrained(const Theta& t) {
  return {t(0), t(1), std::exp(t(2)), std::exp(t(3)), std::tanh(t(4)), std::exp(t(5))};
}

ObservedLikelihood::ObservedLikelihood(const LongData& data)
    : occasions_(static_cast<int>(data.occasions())) {
  // Patterns keyed by their observed-index list; std::map gives a fixed
  // accumulation order independent of row order.
  std::map<std::vector<int>, std::vector<Eigen::Index>> groups;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    std::vector<int> observed;
    for (int t = 0; t < occasions_; ++t) {
      if (data.mask(i, t)) observed.push_back(t);
    }
    if (observed.empty()) {
      ++empty_rows_;
      continue;
    }
    groups[observed].push_back(i);
    ++rows_used_;
  }
  blocks_.reserve(groups.size());
  for (auto& [observed, rows] : groups) {
    Block b;
    const auto d = static_cast<Eigen::Index>(observed.size());
    b.observed = observed;
    b.count = static_cast<int>(rows.size());
    b.sum = Eigen::VectorXd::Zero(d);
    b.cross = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd v(d);
    for (Eigen::Index i : rows) {
      for (Eigen::Index a = 0; a < d; ++a) v(a) = data.y(i, observed[a]);
      b.sum += v;
      b.cross.noalias() += v * v.transpose();
    }
    blocks_.push_back(std::move(b));
  }
}

double ObservedLikelihood::accumulate(const GcmParams& p, Theta* grad) const {
  const Moments full = implied_moments(p, occasions_);
  const Eigen::MatrixXd lambda = loading_matrix(occasions_);
  const double c = p.latent_covariance();
  const double half_c = 0.5 * c;
  const double corr_scale =
      (1.0 - p.intercept_slope_corr * p.intercept_slope_corr) *
      std::sqrt(p.intercept_var * p.slope_var);

  double total = 0.0;
  Theta g = Theta::Zero();
  for (const Block& b : blocks_) {
    const Moments m = submoments(full, b.observed);
    const auto llt = factorize(m.cov);
    if (!llt) return kNegInf;
    const double n = b.count;
    const auto d = m.dim();

    // centered cross product about the model mean
    const Eigen::MatrixXd centered = b.cross - m.mean * b.sum.transpose() -
                                     b.sum * m.mean.transpose() +
                                     n * m.mean * m.mean.transpose();
    const Eigen::MatrixXd inv = llt->solve(Eigen::MatrixXd::Identity(d, d));
    const double log_det = 2.0 * llt->matrixLLT().diagonal().array().log().sum();
    const double quad = (inv.cwiseProduct(centered)).sum();
    total += -0.5 * (n * static_cast<double>(d) * kLog2Pi + n * log_det + quad);

    if (grad == nullptr) continue;
    Eigen::MatrixXd lam(d, 2);
    for (Eigen::Index a = 0; a < d; ++a) lam.row(a) = lambda.row(b.observed[a]);

    const Eigen::VectorXd resid_sum = b.sum - n * m.mean;
    g.head<2>() += lam.transpose() * (inv * resid_sum);

    // d loglik / d Sigma_o
    const Eigen::MatrixXd dsig = 0.5 * (inv * centered * inv - n * inv);
    const Eigen::Matrix2d proj = lam.transpose() * dsig * lam;
    g(2) += p.intercept_var * proj(0, 0) + half_c * (proj(0, 1) + proj(1, 0));
    g(3) += p.slope_var * proj(1, 1) + half_c * (proj(0, 1) + proj(1, 0));
    g(4) += corr_scale * (proj(0, 1) + proj(1, 0));
    g(5) += p.error_var * dsig.trace();
  }
  if (grad != nullptr) *grad = g;
  return total;
}

double ObservedLikelihood::value(const GcmParams& p) const { return accumulate(p, nullptr); }

double ObservedLikelihood::value_and_gradient(const Theta& theta, Theta& grad) const {
  const GcmParams p = from_unconstrained(theta);
  for (double v : p.to_array()) {
    if (!std::isfinite(v)) return kNegInf;
  }
  return accumulate(p, &grad);
}

double observed_loglik(const GcmParams& p, const LongData& data) {
  return ObservedLikelihood(data).value(p);
}

double observed_loglik_rowwise(const GcmParams& p, const LongData& data) {
  const int occasions = static_cast<int>(data.occasions());
  const Moments full = implied_moments(p, occasions);
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    std::vector<int> observed;
    for (int t = 0; t < occasions; ++t) {
      if (data.mask(i, t)) observed.push_back(t);
    }
    if (observed.empty()) continue;
    Eigen::VectorXd x(static_cast<Eigen::Index>(observed.size()));
    for (std::size_t a = 0; a < observed.size(); ++a) x(a) = data.y(i, observed[a]);
    try {
      total += mvn_logpdf(x, submoments(full, observed));
    } catch (const FactorizationFailure&) {
      return kNegInf;
    }
  }
  return total;
}

Theta observed_loglik_gradient(const Theta& theta, const LongData& data) {
  Theta g = Theta::Zero();
  ObservedLikelihood(data).value_and_gradient(theta, g);
  return g;
}

GcmParams start_values(const LongData& data) {
  const Eigen::Index occasions = data.occasions();
  Eigen::VectorXd means(occasions), vars(occasions);
  for (Eigen::Index t = 0; t < occasions; ++t) {
    double s = 0.0, ss = 0.0;
    int k = 0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      if (!data.mask(i, t)) continue;
      s += data.y(i, t);
      ++k;
    }
    const double mean = k > 0 ? s / k : 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      if (data.mask(i, t)) ss += (data.y(i, t) - mean) * (data.y(i, t) - mean);
    }
    means(t) = mean;
    vars(t) = k > 1 ? ss / (k - 1) : 0.0;
  }

  Eigen::MatrixXd design(occasions, 2);
  Eigen::MatrixXd design_sq(occasions, 2);
  for (Eigen::Index t = 0; t < occasions; ++t) {
    design(t, 0) = design_sq(t, 0) = 1.0;
    design(t, 1) = static_cast<double>(t);
    design_sq(t, 1) = static_cast<double>(t * t);
  }
  const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(means);
  const Eigen::Vector2d var_fit = design_sq.colPivHouseholderQr().solve(vars);

  const double floor = std::max(0.05 * vars.mean(), 1e-6);
  GcmParams p;
  p.intercept_mean = beta(0);
  p.slope_mean = beta(1);
  p.slope_var = std::max(var_fit(1), floor);
  p.intercept_var = std::max(0.5 * var_fit(0), floor);
  p.error_var = std::max(0.5 * var_fit(0), floor);
  p.intercept_slope_corr = 0.0;
  return p;
}

namespace {

bool is_degenerate(const LongData& data) {
  for (Eigen::Index t = 0; t < data.occasions(); ++t) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    int k = 0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      if (!data.mask(i, t)) continue;
      lo = std::min(lo, data.y(i, t));
      hi = std::max(hi, data.y(i, t));
      ++k;
    }
    if (k < 2 || lo == hi) return true;
  }
  return false;
}

struct BfgsOutcome {
  Theta theta;
  double value = kNegInf;
  Theta grad;
  int iterations = 0;
  bool converged = false;
};

// Minimizes f = -loglik / n with inverse-BFGS updates and an Armijo
// backtracking line search. Steps into non-PD regions evaluate to +inf and
// are rejected by the line search.
BfgsOutcome maximize(const ObservedLikelihood& lik, Theta theta, const OptimizerConfig& cfg) {
  const double scale = 1.0 / std::max(1, lik.rows_used());
  auto eval = [&](const Theta& th, Theta& g) {
    const double v = lik.value_and_gradient(th, g);
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    g *= -scale;
    return -scale * v;
  };

  BfgsOutcome out;
  Theta g;
  double f = eval(theta, g);
  if (!std::isfinite(f)) {
    out.theta = theta;
    return out;
  }

  using Mat = Eigen::Matrix<double, kNumParams, kNumParams>;
  Mat h_inv = Mat::Identity();
  bool fresh = true;
  int iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    if (g.norm() < cfg.grad_tol) break;

    Theta dir = -h_inv * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      h_inv = Mat::Identity();
      fresh = true;
      dir = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    if (fresh) step = std::min(1.0, 1.0 / dir.norm());

    Theta next, g_next;
    double f_next = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      next = theta + step * dir;
      f_next = eval(next, g_next);
      if (std::isfinite(f_next) && f_next <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (fresh) break;
      h_inv = Mat::Identity();
      fresh = true;
      continue;
    }

    const Theta s = next - theta;
    const Theta y = g_next - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) h_inv = Mat::Identity() * (sy / y.squaredNorm());
      const double rho = 1.0 / sy;
      const Mat left = Mat::Identity() - rho * s * y.transpose();
      h_inv = left * h_inv * left.transpose() + rho * s * s.transpose();
      fresh = false;
    }
    theta = next;
    f = f_next;
    g = g_next;
  }
  out.theta = theta;
  out.value = -f / scale;
  out.grad = g;
  out.iterations = iter;
  out.converged = g.norm() < cfg.grad_tol;
  return out;
}

} // namespace

StandardErrors standard_errors_detailed(const GcmParams& p_hat, const LongData& data) {
  StandardErrors out;
  out.se.fill(kNaN);
  const ObservedLikelihood lik(data);

  double mean_var = 0.0;
  {
    const GcmParams start = start_values(data);
    const Moments m = implied_moments(start, static_cast<int>(data.occasions()));
    mean_var = m.cov.diagonal().mean();
  }
  const double var_floor = kBoundaryRelVar * std::max(mean_var, 1e-300);

  std::vector<int> free;
  bool boundary = false;
  const bool l_bound = p_hat.intercept_var < var_floor;
  const bool s_bound = p_hat.slope_var < var_floor;
  const bool r_bound = std::abs(p_hat.intercept_slope_corr) > kBoundaryCorr;
  const bool e_bound = p_hat.error_var < var_floor;
  free.push_back(0);
  free.push_back(1);
  if (!l_bound) free.push_back(2);
  if (!s_bound) free.push_back(3);
  if (!(r_bound || l_bound || s_bound)) free.push_back(4);
  if (!e_bound) free.push_back(5);
  boundary = free.size() < static_cast<std::size_t>(kNumParams);

  const Theta theta = to_unconstrained(p_hat);
  Eigen::Matrix<double, kNumParams, kNumParams> hess;
  for (int j = 0; j < kNumParams; ++j) {
    const double h = 1e-4 * (1.0 + std::abs(theta(j)));
    Theta up = theta, dn = theta, g_up, g_dn;
    up(j) += h;
    dn(j) -= h;
    const double v_up = lik.value_and_gradient(up, g_up);
    const double v_dn = lik.value_and_gradient(dn, g_dn);
    if (!std::isfinite(v_up) || !std::isfinite(v_dn)) {
      out.status = SeStatus::not_negative_definite;
      return out;
    }
    hess.col(j) = (g_up - g_dn) / (2.0 * h);
  }
  hess = 0.5 * (hess + hess.transpose()).eval();

  const auto k = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd info(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) info(a, b) = -hess(free[a], free[b]);
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) {
    out.status = SeStatus::not_negative_definite;
    return out;
  }
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(k, k));

  const ParamVector jac = {1.0,
                           1.0,
                           p_hat.intercept_var,
                           p_hat.slope_var,
                           1.0 - p_hat.intercept_slope_corr * p_hat.intercept_slope_corr,
                           p_hat.error_var};
  for (Eigen::Index a = 0; a < k; ++a) {
    const int idx = free[a];
    out.se[idx] = std::abs(jac[idx]) * std::sqrt(std::max(cov(a, a), 0.0));
  }
  out.status = boundary ? SeStatus::boundary : SeStatus::ok;
  return out;
}

ParamVector standard_errors(const GcmParams& p_hat, const LongData& data) {
  return standard_errors_detailed(p_hat, data).se;
}

double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must lie in (0, 1)");
  const boost::math::normal_distribution<double> std_normal;
  return boost::math::quantile(std_normal, 0.5 + 0.5 * level);
}

std::pair<double, double> wald_ci(double estimate, double se, double level) {
  if (std::isnan(se)) return {kNaN, kNaN};
  if (se < 0.0) throw ValidationError("wald_ci: se must be nonnegative");
  const double half = normal_critical_value(level) * se;
  return {estimate - half, estimate + half};
}

FitResult fit_fiml(const LongData& data, std::optional<GcmParams> init, const OptimizerConfig& cfg) {
  if (data.rows() < 10) throw ValidationError("fit_fiml: need at least 10 rows");
  const ObservedLikelihood lik(data);
  if (lik.rows_used() == 0) throw ValidationError("fit_fiml: no observed values");

  FitResult result;
  result.degenerate = is_degenerate(data);
  result.empty_rows = lik.empty_rows();

  GcmParams start = init.value_or(start_values(data));
  if (init && !(init->valid() && std::isfinite(lik.value(*init)))) start = start_values(data);

  const BfgsOutcome opt = maximize(lik, to_unconstrained(start), cfg);
  result.estimates = from_unconstrained(opt.theta);
  result.loglik = opt.value;
  result.iterations = opt.iterations;
  result.gradient_norm = std::isfinite(opt.value) ? opt.grad.norm() : kNaN;
  result.converged = opt.converged && std::isfinite(opt.value);

  result.se.fill(kNaN);
  result.ci_low.fill(kNaN);
  result.ci_high.fill(kNaN);
  if (std::isfinite(opt.value)) {
    const StandardErrors se = standard_errors_detailed(result.estimates, data);
    result.se = se.se;
    result.se_status = se.status;
    const ParamVector est = result.estimates.to_array();
    for (int k = 0; k < kNumParams; ++k) {
      std::tie(result.ci_low[k], result.ci_high[k]) = wald_ci(est[k], result.se[k]);
    }
  }
  return result;
}

} // namespace gcmlab
