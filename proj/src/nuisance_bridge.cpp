// Empirical-Bayes ridge regression.
//
// Features are standardized (population sd), the penalty is chosen by K-fold
// cross-validation of ridge on the problem with outcomes scaled to unit sd,
// and the selected penalty becomes the prior precision of the conjugate
// posterior so that the posterior mean reproduces the cross-validated ridge
// fit on the original outcome scale:
//
//   alpha~ | s2 ~ N(ybar, s2 / m)
//   beta~  | s2 ~ N(A^{-1} Z' yc, s2 A^{-1}),  A = Z'Z + lambda_hat I
//   s2        ~ IG((m - 1) / 2, (yc'yc - yc' Z A^{-1} Z' yc) / 2)
//
// Draws are mapped back to the original feature scale.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nuisance_internal.hpp"
#include "ssmean/dataset.hpp"
#include "ssmean/distributions.hpp"
#include "ssmean/error.hpp"

namespace ssmean {
namespace {

struct CvResult {
  std::vector<double> grid;
  std::vector<double> error;
  double best = 0.0;
};

// Ridge path on the unit-sd outcome problem
//   (1 / 2m) || y~ - a - Z b ||^2 + (lambda / 2) || b ||^2,
// refit per fold via one eigendecomposition of the centred training Gram.
CvResult cross_validate(const Eigen::MatrixXd& z, const Eigen::VectorXd& y_scaled,
                        const BridgeOptions& options, RngStream& rng) {
  const Eigen::Index m = z.rows();
  const double ybar = y_scaled.mean();
  const Eigen::VectorXd yc = y_scaled.array() - ybar;
  const double lambda_max =
      (z.transpose() * yc).cwiseAbs().maxCoeff() / static_cast<double>(m);

  CvResult cv;
  const std::size_t grid_size = std::max<std::size_t>(options.grid_size, 2);
  const double top = lambda_max > 0.0 ? lambda_max : 1.0;
  cv.grid.resize(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(grid_size - 1);
    cv.grid[i] = top * std::pow(options.grid_min_ratio, t);
  }
  cv.error.assign(grid_size, 0.0);

  const std::size_t folds =
      std::min<std::size_t>(std::max<std::size_t>(options.cv_folds, 2),
                            static_cast<std::size_t>(m));
  // Balanced random fold labels.
  const auto order = random_permutation(static_cast<std::size_t>(m), rng);
  std::vector<std::size_t> label(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < order.size(); ++i) label[order[i]] = i % folds;

  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, valid;
    for (std::size_t i = 0; i < label.size(); ++i) {
      (label[i] == f ? valid : train).push_back(i);
    }
    const Eigen::MatrixXd zt = select_rows(z, train);
    const Eigen::VectorXd yt = select_rows(y_scaled, train);
    const Eigen::MatrixXd zv = select_rows(z, valid);
    const Eigen::VectorXd yv = select_rows(y_scaled, valid);

    const Eigen::RowVectorXd zbar = zt.colwise().mean();
    const double ybar_t = yt.mean();
    const Eigen::MatrixXd ztc = zt.rowwise() - zbar;
    const Eigen::VectorXd ytc = yt.array() - ybar_t;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ztc.transpose() * ztc);
    const Eigen::VectorXd& d = eig.eigenvalues();
    const Eigen::MatrixXd& v = eig.eigenvectors();
    const Eigen::VectorXd c = v.transpose() * (ztc.transpose() * ytc);
    const Eigen::MatrixXd zv_v = (zv.rowwise() - zbar) * v;
    const double mt = static_cast<double>(train.size());

    for (std::size_t g = 0; g < grid_size; ++g) {
      const Eigen::VectorXd coef =
          c.array() / (d.array().max(0.0) + mt * cv.grid[g]);
      const Eigen::VectorXd resid = (yv.array() - ybar_t).matrix() - zv_v * coef;
      cv.error[g] += resid.squaredNorm();
    }
  }
  for (auto& e : cv.error) e /= static_cast<double>(m);

  const auto best = std::min_element(cv.error.begin(), cv.error.end());
  cv.best = cv.grid[static_cast<std::size_t>(best - cv.error.begin())];
  return cv;
}

}  // namespace

NuisancePtr fit_bridge(const Eigen::MatrixXd& features, const Eigen::VectorXd& outcomes,
                       RngStream& rng, const BridgeOptions& options) {
  const Eigen::Index m = features.rows();
  const auto p = static_cast<std::size_t>(features.cols());
  require(outcomes.size() == m, ErrorKind::kDimensionMismatch,
          "outcomes and features differ in row count");
  require(m >= 5, ErrorKind::kInsufficientData,
          "bridge needs at least 5 rows, got " + std::to_string(m));
  require(p >= 1, ErrorKind::kInvalidParameter, "bridge needs at least one feature");

  const double md = static_cast<double>(m);
  const double ybar = outcomes.mean();
  const Eigen::VectorXd yc = outcomes.array() - ybar;
  const double y_sd = std::sqrt(yc.squaredNorm() / md);
  if (y_sd <= 1e-12 * std::max(1.0, std::abs(ybar))) {
    return std::make_shared<detail::PointMassPosterior>(
        NuisanceMethod::kBridge,
        RegressionDraw{ybar, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p))},
        "constant outcome");
  }

  BridgePosterior::Fit fit;
  fit.standardizer = Standardizer::fit(features);
  require(!fit.standardizer.kept.empty(), ErrorKind::kSingularDesign,
          "bridge needs at least one feature column with nonzero variance");
  fit.outcome_mean = ybar;
  fit.outcome_sd = y_sd;
  fit.rows = static_cast<std::size_t>(m);
  const Eigen::MatrixXd z = fit.standardizer.apply(features);

  // CV runs on outcomes scaled to unit sd. The selected value is reported on
  // the outcome scale (lambda~ = s_y * lambda_scaled), and the prior precision
  // is lambda^ = lambda~ * m / s_y.
  if (options.fixed_lambda_tilde) {
    require(*options.fixed_lambda_tilde > 0.0, ErrorKind::kInvalidParameter,
            "fixed ridge penalty must be positive");
    fit.lambda_tilde = *options.fixed_lambda_tilde;
  } else {
    const CvResult cv = cross_validate(z, outcomes / y_sd, options, rng);
    fit.lambda_grid.reserve(cv.grid.size());
    for (double g : cv.grid) fit.lambda_grid.push_back(g * y_sd);
    fit.cv_error = cv.error;
    fit.lambda_tilde = cv.best * y_sd;
  }
  fit.lambda_hat = fit.lambda_tilde * md / y_sd;

  Eigen::MatrixXd precision = z.transpose() * z;
  precision.diagonal().array() += fit.lambda_hat;
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  require(llt.info() == Eigen::Success, ErrorKind::kSingularDesign,
          "ridge precision matrix is not positive definite");
  const Eigen::VectorXd zty = z.transpose() * yc;
  fit.beta_mean = llt.solve(zty);
  fit.precision_chol = llt.matrixL();

  const double rate2 = yc.squaredNorm() - zty.dot(fit.beta_mean);
  fit.sigma_shape = 0.5 * (md - 1.0);
  fit.sigma_rate = 0.5 * std::max(rate2, std::numeric_limits<double>::min());
  return std::make_shared<BridgePosterior>(std::move(fit));
}

RegressionDraw BridgePosterior::sample(RngStream& rng) const {
  const double sigma2 = draw_inverse_gamma(rng, fit_.sigma_shape, fit_.sigma_rate);
  const double sigma = std::sqrt(sigma2);
  const double alpha = draw_normal(rng, fit_.outcome_mean,
                                   sigma / std::sqrt(static_cast<double>(fit_.rows)));
  const Eigen::Index q = fit_.beta_mean.size();
  Eigen::VectorXd z(q);
  for (Eigen::Index i = 0; i < q; ++i) z(i) = draw_normal(rng);
  // Cov = s2 A^{-1} = s2 L^{-T} L^{-1}; L^{-T} z has covariance A^{-1}.
  fit_.precision_chol.transpose().template triangularView<Eigen::Upper>().solveInPlace(z);
  const Eigen::VectorXd beta = fit_.beta_mean + sigma * z;
  return fit_.standardizer.to_original(alpha, beta);
}

RegressionDraw BridgePosterior::posterior_mean() const {
  return fit_.standardizer.to_original(fit_.outcome_mean, fit_.beta_mean);
}

Eigen::VectorXd BridgePosterior::predict_standardized(
    const Eigen::MatrixXd& features) const {
  Eigen::VectorXd out = fit_.standardizer.apply(features) * fit_.beta_mean;
  out.array() += fit_.outcome_mean;
  return out;
}

nlohmann::json BridgePosterior::metadata() const {
  nlohmann::json meta = {{"method", "bridge"},
                         {"lambda_tilde", fit_.lambda_tilde},
                         {"lambda_hat", fit_.lambda_hat},
                         {"outcome_sd", fit_.outcome_sd},
                         {"dropped_columns", fit_.standardizer.p -
                                                 fit_.standardizer.kept.size()}};
  if (fit_.standardizer.kept.size() < fit_.standardizer.p) {
    meta["warning"] = "zero-variance feature columns dropped (coefficient 0)";
  }
  if (!fit_.lambda_grid.empty()) {
    meta["lambda_grid"] = {{"max", fit_.lambda_grid.front()},
                           {"min", fit_.lambda_grid.back()},
                           {"points", fit_.lambda_grid.size()},
                           {"spacing", "log"}};
  }
  return meta;
}

}  // namespace ssmean
