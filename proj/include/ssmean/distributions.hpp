#pragma once

#include <span>
#include <vector>

#include "ssmean/rng.hpp"

namespace ssmean {

// Student-t with `df` degrees of freedom, location and squared scale.
// scale_sq == 0 is a point mass at `location`.
struct TComponent {
  double df = 1.0;
  double location = 0.0;
  double scale_sq = 0.0;

  // Throws kInvalidParameter unless df > 0, scale_sq >= 0 and all finite.
  void validate() const;
  double mean() const { return location; }
  // Infinite for df <= 2.
  double variance() const;
  bool operator==(const TComponent&) const = default;
};

// Every sampler below consumes a fixed number of uniforms per draw (inverse
// CDF), so two streams at the same position stay aligned draw for draw.
double draw_normal(RngStream& rng, double mean = 0.0, double sd = 1.0);
double draw_gamma(RngStream& rng, double shape, double rate);
double draw_inverse_gamma(RngStream& rng, double shape, double rate);
double draw_beta(RngStream& rng, double a, double b);
double draw_student_t(RngStream& rng, const TComponent& comp);

// Normal(mean, variance); variance 0 gives `mean`.
std::vector<double> sample_normal(double mean, double variance, std::size_t count,
                                  RngStream& rng);
std::vector<double> sample_gamma(double shape, double rate, std::size_t count,
                                 RngStream& rng);
std::vector<double> sample_inverse_gamma(double shape, double rate,
                                         std::size_t count, RngStream& rng);

// location + sqrt(scale_sq) * Z / sqrt(G / df), G ~ Gamma(df/2, rate df/2).
std::vector<double> sample_student_t(const TComponent& comp, std::size_t count,
                                     RngStream& rng);

// Elementwise sum of independent draws from `a` and `b`.
std::vector<double> sample_convolution(const TComponent& a, const TComponent& b,
                                       std::size_t count, RngStream& rng);

// Type-7 sample quantile: h = (n - 1) q, linear between order statistics.
double sample_quantile(std::span<const double> samples, double q);

// Same, for several levels with one sort.
std::vector<double> sample_quantiles(std::span<const double> samples,
                                     std::span<const double> levels);

double student_t_pdf(const TComponent& comp, double x);
double standard_normal_cdf(double x);

}  // namespace ssmean
