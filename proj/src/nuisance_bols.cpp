// Flat-prior Bayesian linear regression: pi(alpha, beta | s2) ∝ 1, pi(s2) ∝ 1/s2.
// The marginal posterior of (alpha, beta) is multivariate t with m - p - 1
// degrees of freedom centred at the least-squares fit.

#include <cmath>
#include <string>

#include "nuisance_internal.hpp"
#include "ssmean/distributions.hpp"
#include "ssmean/error.hpp"

namespace ssmean {
namespace {

class MultivariateTPosterior final : public NuisancePosterior {
 public:
  MultivariateTPosterior(Eigen::VectorXd location, Eigen::MatrixXd scale_factor,
                         double df, double residual_variance)
      : location_(std::move(location)),
        scale_factor_(std::move(scale_factor)),
        df_(df),
        residual_variance_(residual_variance) {}

  NuisanceMethod method() const override { return NuisanceMethod::kBols; }
  std::size_t dimension() const override {
    return static_cast<std::size_t>(location_.size() - 1);
  }

  RegressionDraw sample(RngStream& rng) const override {
    const Eigen::Index dim = location_.size();
    Eigen::VectorXd z(dim);
    for (Eigen::Index i = 0; i < dim; ++i) z(i) = draw_normal(rng);
    const double g = draw_gamma(rng, 0.5 * df_, 0.5 * df_);
    const Eigen::VectorXd theta = location_ + (scale_factor_ * z) / std::sqrt(g);
    return {theta(0), theta.tail(dim - 1)};
  }

  RegressionDraw posterior_mean() const override {
    return {location_(0), location_.tail(location_.size() - 1)};
  }

  nlohmann::json metadata() const override {
    return {{"method", "bols"},
            {"df", df_},
            {"residual_variance", residual_variance_},
            {"intercept", location_(0)}};
  }

 private:
  Eigen::VectorXd location_;
  // L with L L' = s^2 (X'X)^{-1} for the intercept-augmented design.
  Eigen::MatrixXd scale_factor_;
  double df_;
  double residual_variance_;
};

}  // namespace

NuisancePtr fit_bols(const Eigen::MatrixXd& features, const Eigen::VectorXd& outcomes) {
  const Eigen::Index m = features.rows();
  const Eigen::Index p = features.cols();
  require(outcomes.size() == m, ErrorKind::kDimensionMismatch,
          "outcomes and features differ in row count");
  const auto too_few = [&](Eigen::Index need) {
    return "bols needs at least p + " + std::to_string(need - p) + " = " +
           std::to_string(need) + " rows, got " + std::to_string(m) +
           "; use the bridge (ridge) nuisance instead";
  };
  // An exact fit with one spare row is accepted as a point mass; any other
  // fit needs df = m - p - 1 >= 2.
  require(m >= p + 2, ErrorKind::kSingularDesign, too_few(p + 2));

  Eigen::MatrixXd design(m, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = features;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  require(qr.rank() == p + 1, ErrorKind::kSingularDesign,
          "bols design is rank deficient (rank " + std::to_string(qr.rank()) +
              " < " + std::to_string(p + 1) +
              "); use the bridge (ridge) nuisance instead");

  Eigen::VectorXd location = qr.solve(outcomes);
  const double rss = (outcomes - design * location).squaredNorm();
  const double df = static_cast<double>(m - p - 1);

  if (rss <= 1e-24 * std::max(1.0, outcomes.squaredNorm())) {
    return std::make_shared<detail::PointMassPosterior>(
        NuisanceMethod::kBols,
        RegressionDraw{location(0), location.tail(p)}, "exact fit (zero residuals)");
  }

  require(m >= p + 3, ErrorKind::kSingularDesign, too_few(p + 3));
  const double s2 = rss / df;
  // (X'X)^{-1} = P R^{-1} R^{-T} P'.
  const Eigen::Index d = p + 1;
  const Eigen::MatrixXd r =
      qr.matrixR().topLeftCorner(d, d).template triangularView<Eigen::Upper>();
  Eigen::MatrixXd r_inv = Eigen::MatrixXd::Identity(d, d);
  r.template triangularView<Eigen::Upper>().solveInPlace(r_inv);
  const Eigen::MatrixXd factor = std::sqrt(s2) * (qr.colsPermutation() * r_inv);

  return std::make_shared<MultivariateTPosterior>(std::move(location), factor, df, s2);
}

}  // namespace ssmean
