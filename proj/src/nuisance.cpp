#include "ssmean/nuisance.hpp"

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "nuisance_internal.hpp"
#include "ssmean/error.hpp"

namespace ssmean {

Eigen::VectorXd predict(const RegressionDraw& draw, const Eigen::MatrixXd& features) {
  require(static_cast<std::size_t>(features.cols()) == draw.dimension(),
          ErrorKind::kDimensionMismatch,
          "features have " + std::to_string(features.cols()) +
              " columns but the regression draw has " +
              std::to_string(draw.dimension()));
  Eigen::VectorXd out = features * draw.coefficients;
  out.array() += draw.intercept;
  return out;
}

RegressionDraw DrawBatch::draw(std::size_t j) const {
  const auto col = static_cast<Eigen::Index>(j);
  return {intercepts(col), coefficients.col(col)};
}

std::string to_string(NuisanceMethod method) {
  switch (method) {
    case NuisanceMethod::kBols: return "bols";
    case NuisanceMethod::kBridge: return "bridge";
    case NuisanceMethod::kSpikeSlab: return "spike";
    case NuisanceMethod::kConstant: return "constant";
    case NuisanceMethod::kZero: return "zero";
  }
  return "unknown";
}

NuisanceSpec NuisanceSpec::parse(const std::string& text) {
  NuisanceSpec spec;
  if (text == "bols") {
    spec.method = NuisanceMethod::kBols;
  } else if (text == "bridge") {
    spec.method = NuisanceMethod::kBridge;
  } else if (text == "spike" || text == "spike_slab") {
    spec.method = NuisanceMethod::kSpikeSlab;
  } else if (text == "zero") {
    spec.method = NuisanceMethod::kZero;
  } else if (text.rfind("constant:", 0) == 0) {
    const std::string number = text.substr(9);
    char* end = nullptr;
    const double value = std::strtod(number.c_str(), &end);
    require(!number.empty() && end == number.c_str() + number.size() &&
                std::isfinite(value),
            ErrorKind::kInvalidParameter, "bad constant nuisance '" + text + "'");
    spec.method = NuisanceMethod::kConstant;
    spec.constant = value;
  } else {
    fail(ErrorKind::kInvalidParameter,
         "unknown nuisance '" + text +
             "' (expected bols, bridge, spike, zero or constant:<c>)");
  }
  return spec;
}

std::string NuisanceSpec::label() const {
  if (method == NuisanceMethod::kConstant) {
    nlohmann::json value = constant;
    return "constant:" + value.dump();
  }
  return to_string(method);
}

nlohmann::json NuisancePosterior::metadata() const {
  return {{"method", to_string(method())}};
}

DrawBatch NuisancePosterior::sample_batch(std::size_t count, RngStream& rng) const {
  DrawBatch batch;
  const auto cols = static_cast<Eigen::Index>(count);
  batch.intercepts.resize(cols);
  batch.coefficients.resize(static_cast<Eigen::Index>(dimension()), cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const RegressionDraw d = sample(rng);
    batch.intercepts(j) = d.intercept;
    batch.coefficients.col(j) = d.coefficients;
  }
  return batch;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& features) {
  Standardizer s;
  const double m = static_cast<double>(features.rows());
  s.p = static_cast<std::size_t>(features.cols());
  s.mean = features.colwise().mean().transpose();
  s.sd.resize(features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double ss = (features.col(j).array() - s.mean(j)).square().sum();
    s.sd(j) = std::sqrt(ss / m);
    if (s.sd(j) > 1e-12 * std::max(1.0, std::abs(s.mean(j)))) s.kept.push_back(j);
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& features) const {
  Eigen::MatrixXd z(features.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const Eigen::Index j = kept[c];
    z.col(static_cast<Eigen::Index>(c)) =
        (features.col(j).array() - mean(j)) / sd(j);
  }
  return z;
}

RegressionDraw Standardizer::to_original(
    double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefficients) const {
  RegressionDraw out{intercept, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p))};
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const Eigen::Index j = kept[c];
    const double b = coefficients(static_cast<Eigen::Index>(c));
    out.coefficients(j) = b / sd(j);
    out.intercept -= b * mean(j) / sd(j);
  }
  return out;
}

namespace detail {

nlohmann::json PointMassPosterior::metadata() const {
  nlohmann::json meta = {{"method", to_string(method_)}, {"degenerate", true},
                         {"intercept", draw_.intercept}};
  if (!reason_.empty()) meta["reason"] = reason_;
  if (method_ == NuisanceMethod::kSpikeSlab) {
    meta["inclusion_frequency"] = std::vector<double>(draw_.dimension(), 0.0);
  }
  return meta;
}

}  // namespace detail

NuisancePtr constant_nuisance(double value, std::size_t p) {
  return std::make_shared<detail::PointMassPosterior>(
      NuisanceMethod::kConstant,
      RegressionDraw{value, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p))});
}

NuisancePtr zero_nuisance(std::size_t p) {
  return std::make_shared<detail::PointMassPosterior>(
      NuisanceMethod::kZero,
      RegressionDraw{0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p))});
}

NuisancePtr fit_nuisance(const NuisanceSpec& spec, const Eigen::MatrixXd& features,
                         const Eigen::VectorXd& outcomes, RngStream& rng) {
  const auto p = static_cast<std::size_t>(features.cols());
  switch (spec.method) {
    case NuisanceMethod::kBols: return fit_bols(features, outcomes);
    case NuisanceMethod::kBridge: return fit_bridge(features, outcomes, rng, spec.bridge);
    case NuisanceMethod::kSpikeSlab:
      return fit_spike_slab(features, outcomes, spec.gibbs, rng);
    case NuisanceMethod::kConstant: return constant_nuisance(spec.constant, p);
    case NuisanceMethod::kZero: return zero_nuisance(p);
  }
  fail(ErrorKind::kInvalidParameter, "unknown nuisance method");
}

}  // namespace ssmean
