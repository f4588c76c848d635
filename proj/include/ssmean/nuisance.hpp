#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ssmean/rng.hpp"

namespace ssmean {

// One sampled regression function x -> intercept + coefficients' x.
struct RegressionDraw {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;

  std::size_t dimension() const { return static_cast<std::size_t>(coefficients.size()); }
  double evaluate(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return intercept + x.dot(coefficients.transpose());
  }
};

// Rowwise intercept + dot product; throws kDimensionMismatch on width mismatch.
Eigen::VectorXd predict(const RegressionDraw& draw, const Eigen::MatrixXd& features);

// `count` draws stored column-wise: draw j is (intercepts[j], coefficients.col(j)).
struct DrawBatch {
  Eigen::VectorXd intercepts;
  Eigen::MatrixXd coefficients;

  std::size_t size() const { return static_cast<std::size_t>(intercepts.size()); }
  RegressionDraw draw(std::size_t j) const;
};

enum class NuisanceMethod { kBols, kBridge, kSpikeSlab, kConstant, kZero };

struct GibbsConfig {
  std::size_t burn_in = 1000;
  std::size_t sweeps = 2000;
  // Slab variance multiplier; defaults to the number of training rows.
  std::optional<double> g;
  double sigma_shape = 0.001;
  double sigma_rate = 0.001;
};

struct BridgeOptions {
  std::size_t cv_folds = 10;
  std::size_t grid_size = 100;
  double grid_min_ratio = 1e-4;
  // Skip cross-validation and use this penalty (outcome-scale convention).
  std::optional<double> fixed_lambda_tilde;
};

// Which posterior to fit, with its tuning knobs.
struct NuisanceSpec {
  NuisanceMethod method = NuisanceMethod::kBols;
  double constant = 0.0;
  GibbsConfig gibbs;
  BridgeOptions bridge;

  // Accepts bols | bridge | spike | spike_slab | zero | constant:<c>.
  static NuisanceSpec parse(const std::string& text);
  std::string label() const;
};

// A posterior over linear regression functions fitted on one training set.
// Immutable after fitting; sample() takes the stream explicitly so one fit
// can be shared across threads.
class NuisancePosterior {
 public:
  virtual ~NuisancePosterior() = default;

  virtual NuisanceMethod method() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual RegressionDraw sample(RngStream& rng) const = 0;
  virtual RegressionDraw posterior_mean() const = 0;
  // True when every draw is the same function.
  virtual bool degenerate() const { return false; }
  virtual nlohmann::json metadata() const;

  virtual DrawBatch sample_batch(std::size_t count, RngStream& rng) const;
};

using NuisancePtr = std::shared_ptr<const NuisancePosterior>;

NuisancePtr fit_bols(const Eigen::MatrixXd& features, const Eigen::VectorXd& outcomes);

NuisancePtr fit_bridge(const Eigen::MatrixXd& features, const Eigen::VectorXd& outcomes,
                       RngStream& rng, const BridgeOptions& options = {});

NuisancePtr fit_spike_slab(const Eigen::MatrixXd& features,
                           const Eigen::VectorXd& outcomes, const GibbsConfig& config,
                           RngStream& rng);

NuisancePtr constant_nuisance(double value, std::size_t p);
NuisancePtr zero_nuisance(std::size_t p);

NuisancePtr fit_nuisance(const NuisanceSpec& spec, const Eigen::MatrixXd& features,
                         const Eigen::VectorXd& outcomes, RngStream& rng);

// Column standardization shared by the ridge and spike-and-slab fits.
// Columns whose spread is numerically zero are dropped (coefficient 0).
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  std::vector<Eigen::Index> kept;
  std::size_t p = 0;

  // Population (1/m) moments, so each kept column of the result has
  // squared norm m.
  static Standardizer fit(const Eigen::MatrixXd& features);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
  // beta_j = b_j / s_j, alpha = a - sum_j b_j mean_j / s_j.
  RegressionDraw to_original(double intercept,
                             const Eigen::Ref<const Eigen::VectorXd>& coefficients) const;
};

// Ridge posterior; exposed so callers can inspect the standardized-scale fit.
class BridgePosterior final : public NuisancePosterior {
 public:
  struct Fit {
    Standardizer standardizer;
    double outcome_mean = 0.0;
    double outcome_sd = 0.0;
    std::size_t rows = 0;
    double lambda_tilde = 0.0;
    double lambda_hat = 0.0;
    std::vector<double> lambda_grid;
    std::vector<double> cv_error;
    Eigen::VectorXd beta_mean;
    Eigen::MatrixXd precision_chol;  // lower Cholesky factor of Z'Z + lambda_hat I
    double sigma_shape = 0.0;
    double sigma_rate = 0.0;
  };

  explicit BridgePosterior(Fit fit) : fit_(std::move(fit)) {}

  NuisanceMethod method() const override { return NuisanceMethod::kBridge; }
  std::size_t dimension() const override { return fit_.standardizer.p; }
  RegressionDraw sample(RngStream& rng) const override;
  RegressionDraw posterior_mean() const override;
  nlohmann::json metadata() const override;

  const Fit& fit() const { return fit_; }
  // Posterior-mean prediction computed entirely on the standardized scale.
  Eigen::VectorXd predict_standardized(const Eigen::MatrixXd& features) const;

 private:
  Fit fit_;
};

std::string to_string(NuisanceMethod method);

}  // namespace ssmean
