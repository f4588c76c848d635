#include "ssmean/estimators.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "ssmean/error.hpp"
#include "ssmean/parallel.hpp"

namespace ssmean {
namespace {

constexpr std::uint64_t kPlanStream = 1;
constexpr std::uint64_t kFoldStreamBase = 1000;
constexpr std::size_t kBatchColumns = 256;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Fold-local copies of the rows a fold pipeline touches.
struct FoldData {
  Eigen::MatrixXd train_x;
  Eigen::VectorXd train_y;
  Eigen::MatrixXd test_x;
  Eigen::VectorXd test_y;
  Eigen::MatrixXd unlabeled_x;
};

FoldData slice_fold(const Dataset& data, const FoldPlan& plan, std::size_t k) {
  return {select_rows(data.labeled_features(), plan.train_sets[k]),
          select_rows(data.labeled_outcomes(), plan.train_sets[k]),
          select_rows(data.labeled_features(), plan.labeled_folds[k]),
          select_rows(data.labeled_outcomes(), plan.labeled_folds[k]),
          select_rows(data.unlabeled_features(), plan.unlabeled_folds[k])};
}

struct FoldOutput {
  FoldDiagnostics diagnostics;
  std::vector<double> draws;
};

template <typename Fn>
auto annotate_fold(std::size_t k, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), "fold " + std::to_string(k + 1) + ": " + e.what());
  }
}

// Shared scaffolding of the cross-fitted estimators: plan the folds, run
// `pipeline` per fold on its own substream, average the per-fold draws.
template <typename Pipeline>
EstimationResult cross_fit(EstimatorKind kind, const Dataset& data,
                           const EstimatorConfig& config, RngStream rng,
                           Pipeline&& pipeline) {
  config.validate();
  const auto start = Clock::now();
  RngStream plan_rng = rng.substream(kPlanStream);
  const FoldPlan plan = make_fold_plan(data.n(), data.big_n(), config.k, plan_rng);

  std::vector<FoldOutput> outputs(config.k);
  parallel_for(config.k, config.jobs, [&](std::size_t k) {
    outputs[k] = annotate_fold(k, [&] {
      const FoldData fold = slice_fold(data, plan, k);
      return pipeline(fold, k, rng.substream(kFoldStreamBase + k));
    });
  });

  EstimationResult result;
  result.method = kind;
  result.nuisance = config.nuisance.label();
  result.alpha = config.alpha;
  result.seed = rng.seed();
  result.stream_id = rng.stream_id();
  result.draws.assign(config.m, 0.0);
  result.nuisance_metadata = nlohmann::json::array();

  double weighted_bias = 0.0;
  double weighted_imputed = 0.0;
  const double inv_k = 1.0 / static_cast<double>(config.k);
  for (auto& out : outputs) {
    for (std::size_t j = 0; j < config.m; ++j) result.draws[j] += out.draws[j] * inv_k;
    const auto& d = out.diagnostics;
    weighted_bias += static_cast<double>(d.labeled_size) * d.posterior.t_bias.location;
    weighted_imputed +=
        static_cast<double>(d.unlabeled_size) * d.posterior.t_imputed.location;
    result.nuisance_metadata.push_back(d.nuisance);
    result.folds.push_back(std::move(out.diagnostics));
  }
  result.point_estimate = weighted_bias / static_cast<double>(data.n()) +
                          weighted_imputed / static_cast<double>(data.big_n());
  result.ci = credible_interval(result.draws, config.alpha);
  result.elapsed_seconds = seconds_since(start);
  return result;
}

FoldDiagnostics make_diagnostics(const FoldData& fold, std::size_t k,
                                 const FoldPosterior& posterior,
                                 const NuisancePosterior& nuisance) {
  FoldDiagnostics d;
  d.fold_id = k;
  d.labeled_size = static_cast<std::size_t>(fold.test_y.size());
  d.unlabeled_size = static_cast<std::size_t>(fold.unlabeled_x.rows());
  d.posterior = posterior;
  d.nuisance = nuisance.metadata();
  return d;
}

std::pair<double, double> mean_and_ss(const double* values, std::size_t count) {
  double mean = 0.0;
  for (std::size_t i = 0; i < count; ++i) mean += values[i];
  mean /= static_cast<double>(count);
  double ss = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double dev = values[i] - mean;
    ss += dev * dev;
  }
  return {mean, ss};
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kSupervised: return "sup";
    case EstimatorKind::kBdmi: return "bdmi";
    case EstimatorKind::kHbdmi: return "hbdmi";
    case EstimatorKind::kImputation: return "imp";
  }
  return "unknown";
}

EstimatorKind parse_estimator(const std::string& text) {
  if (text == "sup" || text == "supervised") return EstimatorKind::kSupervised;
  if (text == "bdmi") return EstimatorKind::kBdmi;
  if (text == "hbdmi") return EstimatorKind::kHbdmi;
  if (text == "imp" || text == "imputation") return EstimatorKind::kImputation;
  fail(ErrorKind::kInvalidParameter,
       "unknown method '" + text + "' (expected sup, bdmi, hbdmi or imp)");
}

void EstimatorConfig::validate() const {
  require(k >= 2, ErrorKind::kInvalidParameter,
          "K must be >= 2, got " + std::to_string(k));
  require(m >= 100, ErrorKind::kInvalidParameter,
          "M must be >= 100, got " + std::to_string(m));
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::kInvalidParameter,
          "alpha must lie in (0, 1)");
}

double sample_mean(std::span<const double> values) {
  require(!values.empty(), ErrorKind::kEmptyInput, "mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  require(values.size() >= 2, ErrorKind::kInsufficientData,
          "variance needs at least two values");
  const auto [mean, ss] = mean_and_ss(values.data(), values.size());
  (void)mean;
  return ss / static_cast<double>(values.size() - 1);
}

double EstimationResult::draw_mean() const { return sample_mean(draws); }

double EstimationResult::draw_sd() const { return std::sqrt(sample_variance(draws)); }

std::pair<double, double> credible_interval(std::span<const double> draws, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::kInvalidParameter,
          "alpha must lie in (0, 1)");
  const double levels[] = {0.5 * alpha, 1.0 - 0.5 * alpha};
  const auto q = sample_quantiles(draws, levels);
  return {q[0], q[1]};
}

FoldPosterior fold_posterior(std::span<const double> residuals,
                             std::span<const double> imputed, std::size_t fold_id) {
  require(residuals.size() >= kMinFoldSize && imputed.size() >= kMinFoldSize,
          ErrorKind::kInsufficientData,
          "fold posterior needs at least 3 labeled and 3 unlabeled rows, got " +
              std::to_string(residuals.size()) + " and " +
              std::to_string(imputed.size()));
  const double n_k = static_cast<double>(residuals.size());
  const double big_n_k = static_cast<double>(imputed.size());
  const auto [bias_mean, bias_ss] = mean_and_ss(residuals.data(), residuals.size());
  const auto [imp_mean, imp_ss] = mean_and_ss(imputed.data(), imputed.size());
  FoldPosterior post;
  post.fold_id = fold_id;
  post.t_bias = {n_k - 1.0, bias_mean, bias_ss / (n_k * (n_k - 1.0))};
  post.t_imputed = {big_n_k - 1.0, imp_mean, imp_ss / (big_n_k * (big_n_k - 1.0))};
  return post;
}

FoldPosterior fold_posterior(const Eigen::VectorXd& labeled_outcomes,
                             const Eigen::MatrixXd& labeled_features,
                             const Eigen::MatrixXd& unlabeled_features,
                             const RegressionDraw& draw, std::size_t fold_id) {
  require(labeled_outcomes.size() == labeled_features.rows(),
          ErrorKind::kDimensionMismatch, "labeled outcomes and features differ in rows");
  const Eigen::VectorXd residuals = labeled_outcomes - predict(draw, labeled_features);
  const Eigen::VectorXd imputed = predict(draw, unlabeled_features);
  return fold_posterior(std::span<const double>(residuals.data(), residuals.size()),
                        std::span<const double>(imputed.data(), imputed.size()),
                        fold_id);
}

EstimationResult bdmi_cf(const Dataset& data, const EstimatorConfig& config,
                         RngStream rng) {
  return cross_fit(
      EstimatorKind::kBdmi, data, config, rng,
      [&](const FoldData& fold, std::size_t k, RngStream fold_rng) {
        RngStream fit_rng = fold_rng.substream(0);
        RngStream draw_rng = fold_rng.substream(1);
        RngStream theta_rng = fold_rng.substream(2);
        const NuisancePtr nuisance =
            fit_nuisance(config.nuisance, fold.train_x, fold.train_y, fit_rng);
        const RegressionDraw draw = nuisance->sample(draw_rng);
        const FoldPosterior post =
            fold_posterior(fold.test_y, fold.test_x, fold.unlabeled_x, draw, k);
        FoldOutput out;
        out.draws =
            sample_convolution(post.t_bias, post.t_imputed, config.m, theta_rng);
        out.diagnostics = make_diagnostics(fold, k, post, *nuisance);
        return out;
      });
}

EstimationResult hbdmi_cf(const Dataset& data, const EstimatorConfig& config,
                          RngStream rng) {
  return cross_fit(
      EstimatorKind::kHbdmi, data, config, rng,
      [&](const FoldData& fold, std::size_t k, RngStream fold_rng) {
        RngStream fit_rng = fold_rng.substream(0);
        RngStream draw_rng = fold_rng.substream(1);
        RngStream theta_rng = fold_rng.substream(2);
        const NuisancePtr nuisance =
            fit_nuisance(config.nuisance, fold.train_x, fold.train_y, fit_rng);
        const DrawBatch batch = nuisance->sample_batch(config.m, draw_rng);

        const auto n_k = static_cast<std::size_t>(fold.test_y.size());
        const auto big_n_k = static_cast<std::size_t>(fold.unlabeled_x.rows());
        FoldOutput out;
        out.draws.resize(config.m);
        for (std::size_t first = 0; first < config.m; first += kBatchColumns) {
          const std::size_t width = std::min(kBatchColumns, config.m - first);
          const auto cols = Eigen::seqN(static_cast<Eigen::Index>(first),
                                        static_cast<Eigen::Index>(width));
          const Eigen::RowVectorXd intercepts = batch.intercepts(cols).transpose();
          Eigen::MatrixXd resid = -(fold.test_x * batch.coefficients(Eigen::all, cols));
          resid.rowwise() -= intercepts;
          resid.colwise() += fold.test_y;
          Eigen::MatrixXd imputed = fold.unlabeled_x * batch.coefficients(Eigen::all, cols);
          imputed.rowwise() += intercepts;
          for (std::size_t j = 0; j < width; ++j) {
            const auto c = static_cast<Eigen::Index>(j);
            const FoldPosterior post = fold_posterior(
                std::span<const double>(resid.col(c).data(), n_k),
                std::span<const double>(imputed.col(c).data(), big_n_k), k);
            const double bias = draw_student_t(theta_rng, post.t_bias);
            out.draws[first + j] = bias + draw_student_t(theta_rng, post.t_imputed);
          }
        }
        const FoldPosterior at_mean = fold_posterior(
            fold.test_y, fold.test_x, fold.unlabeled_x, nuisance->posterior_mean(), k);
        out.diagnostics = make_diagnostics(fold, k, at_mean, *nuisance);
        return out;
      });
}

EstimationResult supervised_posterior(const Dataset& data, std::size_t m, double alpha,
                                      RngStream rng) {
  require(data.n() >= 3, ErrorKind::kInsufficientData,
          "supervised posterior needs n >= 3, got " + std::to_string(data.n()));
  require(m >= 1, ErrorKind::kInvalidParameter, "M must be >= 1");
  const auto start = Clock::now();
  const Eigen::VectorXd& y = data.labeled_outcomes();
  const auto [mean, ss] = mean_and_ss(y.data(), data.n());
  const double n = static_cast<double>(data.n());
  const TComponent posterior{n - 1.0, mean, ss / (n * (n - 1.0))};

  EstimationResult result;
  result.method = EstimatorKind::kSupervised;
  result.alpha = alpha;
  result.seed = rng.seed();
  result.stream_id = rng.stream_id();
  RngStream theta_rng = rng.substream(0);
  result.draws = sample_student_t(posterior, m, theta_rng);
  result.point_estimate = mean;
  result.ci = credible_interval(result.draws, alpha);
  result.nuisance_metadata = {{"df", posterior.df},
                              {"location", posterior.location},
                              {"scale_sq", posterior.scale_sq}};
  result.elapsed_seconds = seconds_since(start);
  return result;
}

EstimationResult imputation_posterior(const Dataset& data, const NuisanceSpec& nuisance,
                                      std::size_t m, double alpha, RngStream rng) {
  require(m >= 1, ErrorKind::kInvalidParameter, "M must be >= 1");
  const auto start = Clock::now();
  RngStream fit_rng = rng.substream(0);
  RngStream draw_rng = rng.substream(1);
  const NuisancePtr posterior = fit_nuisance(nuisance, data.labeled_features(),
                                             data.labeled_outcomes(), fit_rng);
  const DrawBatch batch = posterior->sample_batch(m, draw_rng);
  // Mean of a linear function over U is the function at the column means.
  const Eigen::RowVectorXd u_bar = data.unlabeled_features().colwise().mean();
  const Eigen::RowVectorXd means = u_bar * batch.coefficients;

  EstimationResult result;
  result.method = EstimatorKind::kImputation;
  result.nuisance = nuisance.label();
  result.alpha = alpha;
  result.seed = rng.seed();
  result.stream_id = rng.stream_id();
  result.draws.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    result.draws[j] = batch.intercepts(c) + means(c);
  }
  const RegressionDraw fitted = posterior->posterior_mean();
  result.point_estimate = fitted.intercept + u_bar.dot(fitted.coefficients.transpose());
  result.ci = credible_interval(result.draws, alpha);
  result.nuisance_metadata = posterior->metadata();
  result.elapsed_seconds = seconds_since(start);
  return result;
}

EstimationResult run_estimator(EstimatorKind kind, const Dataset& data,
                               const EstimatorConfig& config, RngStream rng) {
  switch (kind) {
    case EstimatorKind::kSupervised:
      config.validate();
      return supervised_posterior(data, config.m, config.alpha, rng);
    case EstimatorKind::kBdmi: return bdmi_cf(data, config, rng);
    case EstimatorKind::kHbdmi: return hbdmi_cf(data, config, rng);
    case EstimatorKind::kImputation:
      config.validate();
      return imputation_posterior(data, config.nuisance, config.m, config.alpha, rng);
  }
  fail(ErrorKind::kInvalidParameter, "unknown estimator");
}

VarianceReport variance_report(const Dataset& data, const RegressionDraw& fitted) {
  const Eigen::VectorXd fitted_l = predict(fitted, data.labeled_features());
  const Eigen::VectorXd resid = data.labeled_outcomes() - fitted_l;
  const Eigen::VectorXd fitted_u = predict(fitted, data.unlabeled_features());
  const double n = static_cast<double>(data.n());
  const double big_n = static_cast<double>(data.big_n());
  require(data.n() >= 2 && data.big_n() >= 2, ErrorKind::kInsufficientData,
          "variance report needs at least two rows on each side");

  VarianceReport r;
  r.sigma1_sq = mean_and_ss(resid.data(), data.n()).second / (n - 1.0);
  r.sigma2_sq = mean_and_ss(fitted_u.data(), data.big_n()).second / (big_n - 1.0);
  r.tau_sq = r.sigma1_sq / n + r.sigma2_sq / big_n;
  r.supervised_var =
      mean_and_ss(data.labeled_outcomes().data(), data.n()).second / (n - 1.0) / n;
  const double resid_mean = resid.mean();
  const double fitted_mean = fitted_l.mean();
  r.residual_prediction_cov =
      ((resid.array() - resid_mean) * (fitted_l.array() - fitted_mean)).sum() / (n - 1.0);
  r.efficiency_ratio = r.tau_sq > 0.0 ? r.supervised_var / r.tau_sq : 0.0;
  return r;
}

nlohmann::json VarianceReport::to_json() const {
  return {{"sigma1_sq", sigma1_sq},
          {"sigma2_sq", sigma2_sq},
          {"tau_sq", tau_sq},
          {"supervised_var", supervised_var},
          {"residual_prediction_cov", residual_prediction_cov},
          {"efficiency_ratio", efficiency_ratio}};
}

}  // namespace ssmean
