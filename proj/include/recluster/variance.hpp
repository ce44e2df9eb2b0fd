#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "recluster/cluster.hpp"
#include "recluster/errors.hpp"
#include "recluster/regression.hpp"

namespace recluster {

/// How the CV1 small-sample factor enters the clustered score sum.
/// `paper` scales each cluster score sum by c before squaring (so c enters
/// squared); `textbook` multiplies the squared sum once, matching the common
/// software convention. Reclustering p-values are identical under both since
/// c is constant across regroupings of a fixed structure.
enum class Cv1Convention { paper, textbook };

struct SandwichEstimate {
  double sigma_hat = 0.0;  // target-coefficient score outer-product sum
  double variance = 0.0;   // xtx_inv_kk * sigma_hat * xtx_inv_kk
  double se = 0.0;
};

/// Naive (heteroskedasticity-robust) score sum: sum of squared unit scores.
inline double sigma_naive(const Eigen::VectorXd& scores) { return scores.squaredNorm(); }

inline double cv1_factor(std::int64_t clusters, std::int64_t n) {
  if (clusters < 2) throw DataError("cluster-robust variance needs at least 2 clusters");
  return static_cast<double>(clusters) * static_cast<double>(n - 1) /
         (static_cast<double>(clusters - 1) * static_cast<double>(n));
}

inline double apply_cv1(double sum_sq, double c, Cv1Convention conv) {
  return conv == Cv1Convention::paper ? c * c * sum_sq : c * sum_sq;
}

/// Cluster-robust score sum at the given level, optionally under a permuted
/// fine-to-gross map.
inline double sigma_cr(const Eigen::VectorXd& scores, const ClusterStructure& s, Level level,
                       const std::vector<std::int32_t>* gross_map = nullptr,
                       Cv1Convention conv = Cv1Convention::paper) {
  std::vector<double> sums = aggregate_scores(scores, s, level, gross_map);
  double sum_sq = 0.0;
  for (double v : sums) sum_sq += v * v;
  const double c = cv1_factor(static_cast<std::int64_t>(sums.size()), s.n);
  return apply_cv1(sum_sq, c, conv);
}

inline SandwichEstimate sandwich_from_sigma(double xtx_inv_kk, double sigma) {
  SandwichEstimate est;
  est.sigma_hat = sigma;
  est.variance = xtx_inv_kk * sigma * xtx_inv_kk;
  est.se = std::sqrt(est.variance);
  return est;
}

inline SandwichEstimate naive_estimate(const RegressionFit& fit) {
  return sandwich_from_sigma(fit.xtx_inv_kk, sigma_naive(fit.scores));
}

inline SandwichEstimate cluster_estimate(const RegressionFit& fit, const ClusterStructure& s,
                                         Level level,
                                         const std::vector<std::int32_t>* gross_map = nullptr,
                                         Cv1Convention conv = Cv1Convention::paper) {
  return sandwich_from_sigma(fit.xtx_inv_kk, sigma_cr(fit.scores, s, level, gross_map, conv));
}

/// The gross-level CRSE of the target coefficient. The gross map enters only
/// through score aggregation: the fit (coefficients, residuals, scores) stays
/// fixed, which is what makes the statistic fine-cluster-exchangeable and
/// gross-cluster-sensitive.
inline double crse_statistic(const RegressionFit& fit, const ClusterStructure& s,
                             const std::vector<std::int32_t>* gross_map = nullptr,
                             Cv1Convention conv = Cv1Convention::paper) {
  return cluster_estimate(fit, s, Level::gross, gross_map, conv).se;
}

}  // namespace recluster
