#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ssmean/dataset.hpp"
#include "ssmean/distributions.hpp"
#include "ssmean/nuisance.hpp"
#include "ssmean/rng.hpp"

namespace ssmean {

// Posterior of theta on one cross-fitting fold: the convolution of a t for
// the imputation bias (labeled residuals) and a t for the imputed mean
// (unlabeled predictions).
struct FoldPosterior {
  TComponent t_bias;
  TComponent t_imputed;
  std::size_t fold_id = 0;

  double center() const { return t_bias.location + t_imputed.location; }
};

// Residuals Y - m(X) on the labeled fold and predictions m(X) on the
// unlabeled fold; both need at least three entries.
FoldPosterior fold_posterior(std::span<const double> residuals,
                             std::span<const double> imputed, std::size_t fold_id = 0);

FoldPosterior fold_posterior(const Eigen::VectorXd& labeled_outcomes,
                             const Eigen::MatrixXd& labeled_features,
                             const Eigen::MatrixXd& unlabeled_features,
                             const RegressionDraw& draw, std::size_t fold_id = 0);

enum class EstimatorKind { kSupervised, kBdmi, kHbdmi, kImputation };

std::string to_string(EstimatorKind kind);
// sup | supervised | bdmi | hbdmi | imp | imputation
EstimatorKind parse_estimator(const std::string& text);

struct EstimatorConfig {
  std::size_t k = 5;
  std::size_t m = 1000;
  double alpha = 0.05;
  NuisanceSpec nuisance;
  // Worker threads for the per-fold pipelines; output does not depend on it.
  unsigned jobs = 1;

  void validate() const;
};

struct FoldDiagnostics {
  std::size_t fold_id = 0;
  std::size_t labeled_size = 0;
  std::size_t unlabeled_size = 0;
  // For BDMI the fold posterior of the single nuisance draw; for h-BDMI the
  // fold posterior evaluated at the nuisance posterior mean.
  FoldPosterior posterior;
  nlohmann::json nuisance;
};

struct EstimationResult {
  EstimatorKind method = EstimatorKind::kSupervised;
  std::string nuisance;
  std::vector<double> draws;
  double point_estimate = 0.0;
  std::pair<double, double> ci{0.0, 0.0};
  double alpha = 0.05;
  std::vector<FoldDiagnostics> folds;
  nlohmann::json nuisance_metadata;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  double elapsed_seconds = 0.0;

  double ci_length() const { return ci.second - ci.first; }
  double draw_mean() const;
  double draw_sd() const;
};

// Equal-tailed interval from the alpha/2 and 1 - alpha/2 sample quantiles.
std::pair<double, double> credible_interval(std::span<const double> draws, double alpha);

// Cross-fitted BDMI: one nuisance draw per fold, M draws from each fold's
// t-convolution posterior, averaged across folds. The point estimate is the
// size-weighted closed form sum_k n_k mu_nk / n + sum_k N_k mu_Nk / N.
EstimationResult bdmi_cf(const Dataset& data, const EstimatorConfig& config, RngStream rng);

// Hierarchical BDMI: a fresh nuisance draw for every posterior sample.
EstimationResult hbdmi_cf(const Dataset& data, const EstimatorConfig& config, RngStream rng);

// theta | L ~ t_{n-1}(Ybar, s_Y^2 / n).
EstimationResult supervised_posterior(const Dataset& data, std::size_t m, double alpha,
                                      RngStream rng);

// theta_j = mean over U of m_j(X) for m_j drawn from the nuisance posterior
// fitted on all of L.
EstimationResult imputation_posterior(const Dataset& data, const NuisanceSpec& nuisance,
                                      std::size_t m, double alpha, RngStream rng);

EstimationResult run_estimator(EstimatorKind kind, const Dataset& data,
                               const EstimatorConfig& config, RngStream rng);

// Plug-in variance decomposition for a fitted regression function.
struct VarianceReport {
  double sigma1_sq = 0.0;         // sample var of Y - m(X) over L
  double sigma2_sq = 0.0;         // sample var of m(X) over U
  double tau_sq = 0.0;            // sigma1_sq / n + sigma2_sq / N
  double supervised_var = 0.0;    // sample var of Y over L, divided by n
  double residual_prediction_cov = 0.0;  // cov(Y - m(X), m(X)) over L
  double efficiency_ratio = 0.0;  // supervised_var / tau_sq

  nlohmann::json to_json() const;
};

VarianceReport variance_report(const Dataset& data, const RegressionDraw& fitted);

double sample_mean(std::span<const double> values);
// Divisor count - 1.
double sample_variance(std::span<const double> values);

}  // namespace ssmean
