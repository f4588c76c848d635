#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ssmean/dataset.hpp"
#include "ssmean/estimators.hpp"
#include "ssmean/rng.hpp"

namespace ssmean {

enum class DesignKind { kCorrect, kMisspec };

std::string to_string(DesignKind kind);
DesignKind parse_design_kind(const std::string& text);

// One estimator + nuisance pairing, written "sup", "bdmi:bols", "imp:bridge".
struct MethodSpec {
  EstimatorKind kind = EstimatorKind::kSupervised;
  NuisanceSpec nuisance;

  static MethodSpec parse(const std::string& text);
  std::string label() const;
};

// Gaussian-design experiment: X ~ N_p(0, I), Y | x ~ N(m0(x), s0^2) with
// m0(x) = alpha0 + x'beta0 (+ (x'gamma0)^2 when misspecified) and
// s0^2 = Var(m0(X)) / 5. beta0 holds ceil(s/2) ones, floor(s/2) halves and
// p - s zeros.
struct SimDesign {
  DesignKind kind = DesignKind::kCorrect;
  std::size_t n = 500;
  std::size_t big_n = 10000;
  std::size_t p = 50;
  std::size_t s = 7;
  double alpha0 = 5.0;
  std::size_t reps = 200;
  std::size_t k = 5;
  std::vector<MethodSpec> methods;
  std::size_t m = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  // Keep the posterior draws of the first `density_reps` replications.
  std::size_t density_reps = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

// Closed-form quantities of a design.
struct DesignTruth {
  Eigen::VectorXd beta0;
  Eigen::VectorXd gamma0;  // zero for the correct design
  double var_m0 = 0.0;
  double sigma0_sq = 0.0;
  double var_y = 0.0;
  double theta0 = 0.0;
};

DesignTruth design_truth(const SimDesign& design);

Dataset gen_correct(const SimDesign& design, RngStream& rng);
Dataset gen_misspec(const SimDesign& design, RngStream& rng);
Dataset generate_dataset(const SimDesign& design, RngStream& rng);

// Oracle efficiency of the debiased estimator relative to the supervised
// mean, Var(Y) / (sigma1^2 + (n/N) sigma2^2), at a target function m.
struct OracleEfficiency {
  double var_y = 0.0;
  double sigma1_sq = 0.0;  // Var(Y - m(X))
  double sigma2_sq = 0.0;  // Var(m(X))
  double ratio = 0.0;

  // sigma1^2 + (n/N) sigma2^2: the limit of n Var(theta_hat).
  double scaled_variance(const SimDesign& design) const;
};

// ORE: target m0. ORE*: target the best linear predictor m* (equals ORE on
// the correct design).
OracleEfficiency oracle_ore(const SimDesign& design);
OracleEfficiency oracle_ore_star(const SimDesign& design);

// Monte Carlo evaluation of ORE* from `draws` simulated (X, Y) pairs: m* is
// fitted by least squares on the simulated population, then the variances
// are measured directly.
OracleEfficiency oracle_ore_star_mc(const SimDesign& design, std::size_t draws,
                                    RngStream rng);

struct MethodMetrics {
  std::string label;
  double mse = 0.0;
  double re = 0.0;
  double coverage = 0.0;
  double mean_length = 0.0;
  double mean_estimate = 0.0;
  std::vector<double> estimates;
  std::vector<double> lengths;
  std::vector<bool> hits;
  // Posterior draws for the first density_reps replications.
  std::vector<std::vector<double>> kept_draws;
};

struct MetricsTable {
  SimDesign design;
  double theta0 = 0.0;
  double ore = 0.0;
  std::optional<double> ore_star;
  double supervised_mse = 0.0;
  std::vector<double> supervised_estimates;
  std::vector<MethodMetrics> methods;
  double runtime_seconds = 0.0;

  const MethodMetrics& method(const std::string& label) const;

  // Runtime is excluded so identical designs serialize identically.
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Replication r uses substream r of the design seed; results are reduced in
// replication order, so the table does not depend on `jobs`.
MetricsTable run_replications(const SimDesign& design, unsigned jobs = 1);

// Histogram densities of kept posterior draws, one CSV per method with
// columns replication,grid_point,density. Returns the files written.
std::vector<std::filesystem::path> emit_density_data(const MetricsTable& table,
                                                     const std::filesystem::path& dir,
                                                     std::size_t grid_points = 200);

// Histogram density of one draw set on `grid_points` bin centres spanning
// [min, max]; a constant sample puts all mass in the middle bin of a unit
// span around the constant.
std::vector<std::pair<double, double>> histogram_density(std::span<const double> draws,
                                                         std::size_t grid_points);

}  // namespace ssmean
