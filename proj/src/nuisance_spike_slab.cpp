// Bernoulli-Gaussian spike-and-slab linear regression fitted by Gibbs sampling
// on standardized features and centred outcomes:
//
//   gamma_j ~ Bernoulli(w),  w ~ Beta(1, 1)
//   beta_j | gamma_j = 1, s2 ~ N(0, g s2),  beta_j | gamma_j = 0 = 0
//   s2 ~ IG(a0, b0),  flat prior on the intercept (integrated out).
//
// Each coefficient update integrates beta_j out of the inclusion odds, then
// draws beta_j given the indicator.

#include <algorithm>
#include <cmath>
#include <string>

#include "nuisance_internal.hpp"
#include "ssmean/distributions.hpp"
#include "ssmean/error.hpp"

namespace ssmean {
namespace {

class SpikeSlabPosterior final : public NuisancePosterior {
 public:
  SpikeSlabPosterior(DrawBatch chain, Eigen::VectorXd inclusion, GibbsConfig config,
                     double g)
      : chain_(std::move(chain)),
        inclusion_(std::move(inclusion)),
        config_(config),
        g_(g) {
    mean_.intercept = chain_.intercepts.mean();
    mean_.coefficients = chain_.coefficients.rowwise().mean();
  }

  NuisanceMethod method() const override { return NuisanceMethod::kSpikeSlab; }
  std::size_t dimension() const override {
    return static_cast<std::size_t>(chain_.coefficients.rows());
  }

  RegressionDraw sample(RngStream& rng) const override {
    return chain_.draw(static_cast<std::size_t>(rng.below(chain_.size())));
  }

  RegressionDraw posterior_mean() const override { return mean_; }

  nlohmann::json metadata() const override {
    return {{"method", "spike"},
            {"burn_in", config_.burn_in},
            {"sweeps", config_.sweeps},
            {"g", g_},
            {"inclusion_frequency",
             std::vector<double>(inclusion_.data(), inclusion_.data() + inclusion_.size())}};
  }

  const Eigen::VectorXd& inclusion() const { return inclusion_; }

 private:
  DrawBatch chain_;
  Eigen::VectorXd inclusion_;
  GibbsConfig config_;
  double g_;
  RegressionDraw mean_;
};

}  // namespace

NuisancePtr fit_spike_slab(const Eigen::MatrixXd& features,
                           const Eigen::VectorXd& outcomes, const GibbsConfig& config,
                           RngStream& rng) {
  const Eigen::Index m = features.rows();
  const auto p = static_cast<Eigen::Index>(features.cols());
  require(outcomes.size() == m, ErrorKind::kDimensionMismatch,
          "outcomes and features differ in row count");
  require(m >= 10, ErrorKind::kInsufficientData,
          "spike-and-slab needs at least 10 rows, got " + std::to_string(m));
  require(config.sweeps >= 1, ErrorKind::kInvalidParameter,
          "spike-and-slab needs at least one retained sweep");

  const double md = static_cast<double>(m);
  const double ybar = outcomes.mean();
  const Eigen::VectorXd yc = outcomes.array() - ybar;
  if (yc.squaredNorm() <= 1e-24 * md * std::max(1.0, ybar * ybar)) {
    return std::make_shared<detail::PointMassPosterior>(
        NuisanceMethod::kSpikeSlab, RegressionDraw{ybar, Eigen::VectorXd::Zero(p)},
        "constant outcome");
  }

  const Standardizer standardizer = Standardizer::fit(features);
  const Eigen::MatrixXd z = standardizer.apply(features);
  const Eigen::Index q = z.cols();
  const double g = config.g.value_or(md);
  require(g > 0.0, ErrorKind::kInvalidParameter, "slab scale g must be positive");

  Eigen::VectorXd col_ss(q);
  for (Eigen::Index j = 0; j < q; ++j) col_ss(j) = z.col(j).squaredNorm();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd resid = yc;
  double w = 0.5;
  double sigma2 = yc.squaredNorm() / (md - 1.0);
  std::size_t included = 0;

  DrawBatch chain;
  chain.intercepts.resize(static_cast<Eigen::Index>(config.sweeps));
  chain.coefficients.resize(p, static_cast<Eigen::Index>(config.sweeps));
  Eigen::VectorXd inclusion = Eigen::VectorXd::Zero(p);

  const std::size_t total = config.burn_in + config.sweeps;
  for (std::size_t sweep = 0; sweep < total; ++sweep) {
    const double prior_log_odds = std::log(w) - std::log1p(-w);
    for (Eigen::Index j = 0; j < q; ++j) {
      if (beta(j) != 0.0) resid += z.col(j) * beta(j);
      const double precision = col_ss(j) + 1.0 / g;
      const double proj = z.col(j).dot(resid);
      const double log_odds = prior_log_odds - 0.5 * std::log1p(g * col_ss(j)) +
                              proj * proj / (2.0 * sigma2 * precision);
      const double p_incl = 1.0 / (1.0 + std::exp(-log_odds));
      const bool on = rng.uniform() < p_incl;
      const double slab_draw =
          draw_normal(rng, proj / precision, std::sqrt(sigma2 / precision));
      const double updated = on ? slab_draw : 0.0;
      if ((beta(j) != 0.0) != on) included += on ? 1 : std::size_t(-1);
      beta(j) = updated;
      if (updated != 0.0) resid -= z.col(j) * updated;
    }

    const auto k = static_cast<double>(included);
    w = draw_beta(rng, 1.0 + k, 1.0 + static_cast<double>(q) - k);
    w = std::clamp(w, 1e-12, 1.0 - 1e-12);
    const double shape = config.sigma_shape + 0.5 * (md - 1.0) + 0.5 * k;
    const double rate =
        config.sigma_rate + 0.5 * (resid.squaredNorm() + beta.squaredNorm() / g);
    sigma2 = draw_inverse_gamma(rng, shape, rate);
    const double alpha = draw_normal(rng, ybar, std::sqrt(sigma2 / md));

    if (!std::isfinite(sigma2) || !std::isfinite(alpha) || !beta.allFinite()) {
      fail(ErrorKind::kSamplerFailure,
           "spike-and-slab chain produced a non-finite state at sweep " +
               std::to_string(sweep));
    }
    if (sweep >= config.burn_in) {
      const auto col = static_cast<Eigen::Index>(sweep - config.burn_in);
      const RegressionDraw draw = standardizer.to_original(alpha, beta);
      chain.intercepts(col) = draw.intercept;
      chain.coefficients.col(col) = draw.coefficients;
      for (Eigen::Index c = 0; c < q; ++c) {
        if (beta(c) != 0.0) inclusion(standardizer.kept[static_cast<std::size_t>(c)]) += 1.0;
      }
    }
  }
  inclusion /= static_cast<double>(config.sweeps);
  return std::make_shared<SpikeSlabPosterior>(std::move(chain), std::move(inclusion),
                                              config, g);
}

}  // namespace ssmean
