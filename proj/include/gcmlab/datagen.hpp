#ifndef GCMLAB_DATAGEN_HPP
#define GCMLAB_DATAGEN_HPP

#include <optional>

#include <Eigen/Core>

#include "gcmlab/gcm_core.hpp"
#include "gcmlab/rng.hpp"

namespace gcmlab {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// N x T panel. mask(i, t) is true when y(i, t) is observed; values under a
/// false mask are unspecified and must not be read by analysis code. aux is
/// the missingness driver for MNAR designs and is never an analysis input.
struct LongData {
  Eigen::MatrixXd y;
  Mask mask;
  std::optional<Eigen::VectorXd> aux;
  std::optional<GcmParams> true_params;

  Eigen::Index rows() const { return y.rows(); }
  Eigen::Index occasions() const { return y.cols(); }
  Eigen::Index missing_count() const { return mask.size() - mask.count(); }
  bool complete() const { return mask.all(); }
};

/// Complete panel from the population model: b_i = beta + u_i,
/// y_i = L b_i + e_i. Reproducible from (p, n, occasions, seed).
LongData sample_dataset(const GcmParams& p, int n, int occasions, Seed seed);

/// A_i = slope_i + N(0, noise_sd^2).
Eigen::VectorXd derive_aux(const Eigen::VectorXd& slopes, double noise_sd, Seed seed);

/// Same y as sample_dataset(p, n, occasions, seed) plus aux derived from the
/// realized latent slopes, which are then discarded.
LongData sample_dataset_with_aux(const GcmParams& p, int n, int occasions,
                                 double noise_sd, Seed seed);

} // namespace gcmlab

#endif // GCMLAB_DATAGEN_HPP
