#include "ssmean/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "ssmean/error.hpp"

namespace ssmean {
namespace {

void require_finite(double value, const char* name) {
  require(std::isfinite(value), ErrorKind::kInvalidParameter,
          std::string(name) + " must be finite");
}

void require_positive(double value, const char* name) {
  require(std::isfinite(value) && value > 0.0, ErrorKind::kInvalidParameter,
          std::string(name) + " must be positive and finite, got " +
              std::to_string(value));
}

double standard_normal(RngStream& rng) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * rng.uniform());
}

// Gamma(shape, 1) by inverting the regularized lower incomplete gamma.
double standard_gamma(RngStream& rng, double shape) {
  return boost::math::gamma_p_inv(shape, rng.uniform());
}

}  // namespace

void TComponent::validate() const {
  require_positive(df, "df");
  require_finite(location, "location");
  require(std::isfinite(scale_sq) && scale_sq >= 0.0,
          ErrorKind::kInvalidParameter, "scale_sq must be finite and >= 0");
}

double TComponent::variance() const {
  if (scale_sq == 0.0) return 0.0;
  if (df <= 2.0) return std::numeric_limits<double>::infinity();
  return df / (df - 2.0) * scale_sq;
}

double draw_normal(RngStream& rng, double mean, double sd) {
  return mean + sd * standard_normal(rng);
}

double draw_gamma(RngStream& rng, double shape, double rate) {
  require_positive(shape, "shape");
  require_positive(rate, "rate");
  return standard_gamma(rng, shape) / rate;
}

double draw_inverse_gamma(RngStream& rng, double shape, double rate) {
  require_positive(shape, "shape");
  require_positive(rate, "rate");
  const double g = standard_gamma(rng, shape);
  require(g > 0.0, ErrorKind::kSamplerFailure,
          "inverse-gamma draw underflowed (shape " + std::to_string(shape) + ")");
  return rate / g;
}

double draw_beta(RngStream& rng, double a, double b) {
  require_positive(a, "a");
  require_positive(b, "b");
  const double x = standard_gamma(rng, a);
  const double y = standard_gamma(rng, b);
  if (x + y == 0.0) return a / (a + b);
  return x / (x + y);
}

double draw_student_t(RngStream& rng, const TComponent& comp) {
  const double z = standard_normal(rng);
  const double g = draw_gamma(rng, 0.5 * comp.df, 0.5 * comp.df);
  if (comp.scale_sq == 0.0) return comp.location;
  return comp.location + std::sqrt(comp.scale_sq) * z / std::sqrt(g);
}

std::vector<double> sample_normal(double mean, double variance, std::size_t count,
                                  RngStream& rng) {
  require_finite(mean, "mean");
  require(std::isfinite(variance) && variance >= 0.0,
          ErrorKind::kInvalidParameter, "variance must be finite and >= 0");
  const double sd = std::sqrt(variance);
  std::vector<double> out(count);
  for (auto& x : out) x = draw_normal(rng, mean, sd);
  return out;
}

std::vector<double> sample_gamma(double shape, double rate, std::size_t count,
                                 RngStream& rng) {
  require_positive(shape, "shape");
  require_positive(rate, "rate");
  std::vector<double> out(count);
  for (auto& x : out) x = draw_gamma(rng, shape, rate);
  return out;
}

std::vector<double> sample_inverse_gamma(double shape, double rate,
                                         std::size_t count, RngStream& rng) {
  require_positive(shape, "shape");
  require_positive(rate, "rate");
  std::vector<double> out(count);
  for (auto& x : out) x = draw_inverse_gamma(rng, shape, rate);
  return out;
}

std::vector<double> sample_student_t(const TComponent& comp, std::size_t count,
                                     RngStream& rng) {
  comp.validate();
  require(count >= 1, ErrorKind::kInvalidParameter, "count must be >= 1");
  std::vector<double> out(count);
  for (auto& x : out) x = draw_student_t(rng, comp);
  return out;
}

std::vector<double> sample_convolution(const TComponent& a, const TComponent& b,
                                       std::size_t count, RngStream& rng) {
  a.validate();
  b.validate();
  require(count >= 1, ErrorKind::kInvalidParameter, "count must be >= 1");
  std::vector<double> out(count);
  for (auto& x : out) {
    const double first = draw_student_t(rng, a);
    x = first + draw_student_t(rng, b);
  }
  return out;
}

double sample_quantile(std::span<const double> samples, double q) {
  const double levels[] = {q};
  return sample_quantiles(samples, levels).front();
}

std::vector<double> sample_quantiles(std::span<const double> samples,
                                     std::span<const double> levels) {
  require(!samples.empty(), ErrorKind::kEmptyInput,
          "quantile of an empty sample");
  for (double q : levels) {
    require(q > 0.0 && q < 1.0, ErrorKind::kInvalidParameter,
            "quantile level must lie in (0, 1), got " + std::to_string(q));
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(levels.size());
  const double last = static_cast<double>(sorted.size() - 1);
  for (double q : levels) {
    const double h = last * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    out.push_back(sorted[lo] + frac * (sorted[hi] - sorted[lo]));
  }
  return out;
}

double student_t_pdf(const TComponent& comp, double x) {
  const double scale = std::sqrt(comp.scale_sq);
  const double nu = comp.df;
  const double z = (x - comp.location) / scale;
  const double log_norm = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                          0.5 * std::log(nu * std::numbers::pi) - std::log(scale);
  return std::exp(log_norm - 0.5 * (nu + 1.0) * std::log1p(z * z / nu));
}

double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

}  // namespace ssmean
