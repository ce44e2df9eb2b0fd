#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "recluster/cluster.hpp"
#include "recluster/errors.hpp"

namespace recluster {

enum class Level { fine, gross };

/// Outcome, regressors, and the column whose coefficient is under study.
/// `absorb_fine_fe` marks whether fits should partial out one intercept per
/// fine cluster (the within transformation) on top of the listed columns.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;  // n x m, target column included
  std::int32_t target_col = 0;
  bool absorb_fine_fe = true;
  ClusterStructure structure;
};

struct RegressionFit {
  double beta_k = 0.0;          // target coefficient
  Eigen::VectorXd residuals;    // full-model residuals
  std::int32_t k_bar = 0;       // regressor count including absorbed dummies
  double xtx_inv_kk = 0.0;      // target diagonal of (X'X)^-1 after partialling
  Eigen::VectorXd scores;       // HC1-scaled per-unit target scores

  // Pieces reused by resampling refits.
  Eigen::VectorXd x_tilde;      // target regressor after demeaning/partialling
  Eigen::VectorXd fitted;       // y - residuals, original scale
  double hc1 = 0.0;             // n / (n - k_bar)
  bool absorbed_fe = false;
  Eigen::MatrixXd control_basis;  // orthonormal basis of the control block
};

/// Subtracts fine-cluster means in place (the fixed-effect within transform).
inline void demean_within_fine(Eigen::Ref<Eigen::VectorXd> v, const ClusterStructure& s) {
  for (const auto& units : s.fine_units) {
    double mean = 0.0;
    for (std::int32_t i : units) mean += v[i];
    mean /= static_cast<double>(units.size());
    for (std::int32_t i : units) v[i] -= mean;
  }
}

inline Eigen::VectorXd demeaned_within_fine(const Eigen::VectorXd& v, const ClusterStructure& s) {
  Eigen::VectorXd out = v;
  demean_within_fine(out, s);
  return out;
}

inline Eigen::VectorXd compute_scores(const RegressionFit& fit, const Dataset& data);

/// Least squares for the target coefficient with everything else partialled
/// out. Fixed effects are absorbed by within-cluster demeaning rather than
/// dummy columns; the Frisch-Waugh-Lovell identity keeps the target estimate
/// and the residuals equal to the explicit-dummy fit. k_bar still counts the
/// absorbed dummies.
inline RegressionFit ols_fit(const Dataset& data, bool absorb_fine_fe) {
  const ClusterStructure& s = data.structure;
  const auto n = static_cast<std::int32_t>(data.y.size());
  if (n == 0) throw DataError("empty dataset");
  if (data.X.rows() != n) throw DataError("regressor rows inconsistent with outcome length");
  if (s.n != n) throw DataError("cluster structure inconsistent with dataset rows");
  if (data.target_col < 0 || data.target_col >= data.X.cols())
    throw DataError("target column out of range");

  const auto m = static_cast<std::int32_t>(data.X.cols());
  Eigen::VectorXd yw = data.y;
  Eigen::MatrixXd xw = data.X;
  if (absorb_fine_fe) {
    demean_within_fine(yw, s);
    for (std::int32_t j = 0; j < m; ++j) demean_within_fine(xw.col(j), s);
  }

  RegressionFit fit;
  fit.absorbed_fe = absorb_fine_fe;
  fit.k_bar = m + (absorb_fine_fe ? s.f_bar : 0);

  Eigen::VectorXd xt = xw.col(data.target_col);
  Eigen::VectorXd yt = yw;
  if (m > 1) {
    Eigen::MatrixXd controls(n, m - 1);
    std::int32_t c = 0;
    for (std::int32_t j = 0; j < m; ++j)
      if (j != data.target_col) controls.col(c++) = xw.col(j);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(controls);
    qr.setThreshold(1e-10);
    if (qr.rank() < controls.cols())
      throw DataError("rank deficiency among control regressors");
    fit.control_basis =
        qr.householderQ() * Eigen::MatrixXd::Identity(n, controls.cols());
    xt -= fit.control_basis * (fit.control_basis.transpose() * xt);
    yt -= fit.control_basis * (fit.control_basis.transpose() * yt);
  }

  const double sxx = xt.squaredNorm();
  const double scale = std::max(1.0, data.X.col(data.target_col).squaredNorm());
  if (sxx <= 1e-20 * scale)
    throw DataError(absorb_fine_fe
                        ? "target regressor has no within-fine-cluster variation"
                        : "target regressor collinear with other regressors");

  fit.beta_k = xt.dot(yt) / sxx;
  fit.xtx_inv_kk = 1.0 / sxx;
  fit.x_tilde = std::move(xt);
  fit.residuals = yt - fit.beta_k * fit.x_tilde;
  fit.fitted = data.y - fit.residuals;

  if (n <= fit.k_bar)
    throw DataError("HC1 factor undefined: n <= k_bar (" + std::to_string(n) + " <= " +
                    std::to_string(fit.k_bar) + ")");
  fit.hc1 = static_cast<double>(n) / static_cast<double>(n - fit.k_bar);
  fit.scores = compute_scores(fit, data);
  return fit;
}

inline RegressionFit ols_fit(const Dataset& data) { return ols_fit(data, data.absorb_fine_fe); }

/// Per-unit score of the target coefficient, HC1 scaling included.
inline Eigen::VectorXd compute_scores(const RegressionFit& fit, const Dataset& data) {
  const auto n = static_cast<std::int32_t>(data.y.size());
  if (n <= fit.k_bar) throw DataError("HC1 factor undefined: n <= k_bar");
  const double factor = static_cast<double>(n) / static_cast<double>(n - fit.k_bar);
  return factor * fit.x_tilde.cwiseProduct(fit.residuals).eval();
}

/// Checks that `map` regroups fine clusters with the observed composition:
/// every gross label receives exactly as many fine clusters as it had.
inline void check_gross_map(const std::vector<std::int32_t>& map, const ClusterStructure& s) {
  if (static_cast<std::int32_t>(map.size()) != s.f_bar)
    throw DataError("gross map length differs from fine cluster count");
  std::vector<std::int32_t> counts(static_cast<std::size_t>(s.g_bar), 0);
  for (std::int32_t g : map) {
    if (g < 0 || g >= s.g_bar) throw DataError("gross map refers to unknown gross cluster");
    ++counts[static_cast<std::size_t>(g)];
  }
  if (counts != s.n_g)
    throw DataError("gross map is not a composition-preserving regrouping of fine clusters");
}

inline std::vector<double> fine_score_sums(const Eigen::VectorXd& scores,
                                           const ClusterStructure& s) {
  std::vector<double> sums(static_cast<std::size_t>(s.f_bar), 0.0);
  for (std::int32_t i = 0; i < s.n; ++i)
    sums[static_cast<std::size_t>(s.unit_to_fine[static_cast<std::size_t>(i)])] += scores[i];
  return sums;
}

inline std::vector<double> gross_sums_from_fine(const std::vector<double>& fine_sums,
                                                const std::vector<std::int32_t>& fine_to_gross,
                                                std::int32_t g_bar) {
  std::vector<double> sums(static_cast<std::size_t>(g_bar), 0.0);
  for (std::size_t f = 0; f < fine_sums.size(); ++f)
    sums[static_cast<std::size_t>(fine_to_gross[f])] += fine_sums[f];
  return sums;
}

/// Per-cluster score sums at the requested level. A gross-level override map
/// must preserve the observed composition (a permutation-induced regrouping).
inline std::vector<double> aggregate_scores(const Eigen::VectorXd& scores,
                                            const ClusterStructure& s, Level level,
                                            const std::vector<std::int32_t>* gross_map = nullptr) {
  if (scores.size() != s.n) throw DataError("score vector length differs from unit count");
  std::vector<double> fine = fine_score_sums(scores, s);
  if (level == Level::fine) return fine;
  const std::vector<std::int32_t>* map = gross_map ? gross_map : &s.fine_to_gross;
  if (gross_map) check_gross_map(*map, s);
  return gross_sums_from_fine(fine, *map, s.g_bar);
}

}  // namespace recluster
