#include "gcmlab/datagen.hpp"

#include <cmath>

#include "gcmlab/errors.hpp"

namespace gcmlab {

namespace {

constexpr std::uint64_t kAuxStream = 0xa0c5;

struct LatentSample {
  LongData data;
  Eigen::VectorXd slopes;
};

LatentSample sample_with_latents(const GcmParams& p, int n, int occasions, Seed seed) {
  p.validate(/*allow_zero_error_var=*/true);
  if (n < 1) throw ValidationError("sample_dataset: N must be >= 1");
  const Eigen::MatrixXd lambda = loading_matrix(occasions);

  const double sd_l = std::sqrt(p.intercept_var);
  const double sd_s = std::sqrt(p.slope_var);
  const double r = p.intercept_slope_corr;
  const double r_c = std::sqrt(std::max(0.0, 1.0 - r * r));
  const double sd_e = std::sqrt(p.error_var);

  LatentSample out;
  out.data.y.resize(n, occasions);
  out.data.mask = Mask::Constant(n, occasions, true);
  out.data.true_params = p;
  out.slopes.resize(n);

  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double b_l = p.intercept_mean + sd_l * z1;
    const double b_s = p.slope_mean + sd_s * (r * z1 + r_c * z2);
    out.slopes(i) = b_s;
    for (int t = 0; t < occasions; ++t) {
      out.data.y(i, t) = lambda(t, 0) * b_l + lambda(t, 1) * b_s + sd_e * rng.normal();
    }
  }
  return out;
}

} // namespace

LongData sample_dataset(const GcmParams& p, int n, int occasions, Seed seed) {
  return sample_with_latents(p, n, occasions, seed).data;
}

Eigen::VectorXd derive_aux(const Eigen::VectorXd& slopes, double noise_sd, Seed seed) {
  if (!(noise_sd >= 0.0)) throw ValidationError("derive_aux: noise_sd must be >= 0");
  Rng rng(seed);
  Eigen::VectorXd aux(slopes.size());
  for (Eigen::Index i = 0; i < slopes.size(); ++i) aux(i) = slopes(i) + noise_sd * rng.normal();
  return aux;
}

LongData sample_dataset_with_aux(const GcmParams& p, int n, int occasions,
                                 double noise_sd, Seed seed) {
  auto sample = sample_with_latents(p, n, occasions, seed);
  sample.data.aux = derive_aux(sample.slopes, noise_sd, seed.child(kAuxStream));
  return std::move(sample.data);
}

} // namespace gcmlab
