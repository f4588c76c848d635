#include "ssmean/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <string>

#include "ssmean/distributions.hpp"
#include "ssmean/error.hpp"
#include "ssmean/io.hpp"
#include "ssmean/parallel.hpp"

namespace ssmean {
namespace {

constexpr std::uint64_t kLabeledStream = 0;
constexpr std::uint64_t kUnlabeledStream = 1;
constexpr std::uint64_t kDataStream = 0;
constexpr std::uint64_t kMethodStreamBase = 1;

Eigen::MatrixXd gaussian_matrix(std::size_t rows, std::size_t cols, RngStream& rng) {
  // Filled row by row so row i depends only on the first (i + 1) * cols draws.
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = draw_normal(rng);
  }
  return x;
}

Eigen::VectorXd regression_mean(const DesignTruth& truth, double alpha0,
                                const Eigen::MatrixXd& x) {
  Eigen::VectorXd m0 = x * truth.beta0;
  m0.array() += alpha0;
  if (truth.gamma0.squaredNorm() > 0.0) {
    m0.array() += (x * truth.gamma0).array().square();
  }
  return m0;
}

Dataset generate(const SimDesign& design, const DesignTruth& truth, RngStream& rng) {
  RngStream labeled_rng = rng.substream(kLabeledStream);
  RngStream unlabeled_rng = rng.substream(kUnlabeledStream);
  Eigen::MatrixXd x = gaussian_matrix(design.n, design.p, labeled_rng);
  Eigen::VectorXd y = regression_mean(truth, design.alpha0, x);
  const double noise_sd = std::sqrt(truth.sigma0_sq);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += noise_sd * draw_normal(labeled_rng);
  Eigen::MatrixXd u = gaussian_matrix(design.big_n, design.p, unlabeled_rng);
  return Dataset(std::move(y), std::move(x), std::move(u));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string csv_label(const std::string& label) {
  std::string out = label;
  for (char& c : out) {
    if (c == ':' || c == '/' || c == ' ') c = '_';
  }
  return out;
}

}  // namespace

std::string to_string(DesignKind kind) {
  return kind == DesignKind::kCorrect ? "correct" : "misspec";
}

DesignKind parse_design_kind(const std::string& text) {
  if (text == "correct") return DesignKind::kCorrect;
  if (text == "misspec") return DesignKind::kMisspec;
  fail(ErrorKind::kInvalidDesign,
       "unknown design kind '" + text + "' (expected correct or misspec)");
}

MethodSpec MethodSpec::parse(const std::string& text) {
  MethodSpec spec;
  const auto colon = text.find(':');
  spec.kind = parse_estimator(text.substr(0, colon));
  if (colon != std::string::npos) {
    spec.nuisance = NuisanceSpec::parse(text.substr(colon + 1));
  } else {
    require(spec.kind == EstimatorKind::kSupervised, ErrorKind::kInvalidParameter,
            "method '" + text + "' needs a nuisance, e.g. '" + text + ":bols'");
  }
  return spec;
}

std::string MethodSpec::label() const {
  if (kind == EstimatorKind::kSupervised) return "sup";
  return to_string(kind) + ":" + nuisance.label();
}

void SimDesign::validate() const {
  require(p >= 1, ErrorKind::kInvalidDesign, "design needs p >= 1");
  require(s >= 1 && s <= p, ErrorKind::kInvalidDesign,
          "design needs 1 <= s <= p, got s = " + std::to_string(s));
  require(reps >= 1, ErrorKind::kInvalidDesign, "design needs reps >= 1");
  require(n >= 3 && big_n >= 3, ErrorKind::kInvalidDesign,
          "design needs n >= 3 and N >= 3");
  require(std::isfinite(alpha0), ErrorKind::kInvalidDesign, "alpha0 must be finite");
}

nlohmann::json SimDesign::to_json() const {
  nlohmann::json methods_json = nlohmann::json::array();
  for (const auto& mth : methods) methods_json.push_back(mth.label());
  return {{"kind", to_string(kind)}, {"n", n},         {"N", big_n},
          {"p", p},                  {"s", s},         {"alpha0", alpha0},
          {"reps", reps},            {"k", k},         {"m", m},
          {"alpha", alpha},          {"seed", seed},   {"methods", methods_json},
          {"density_reps", density_reps}};
}

DesignTruth design_truth(const SimDesign& design) {
  design.validate();
  DesignTruth t;
  const auto p = static_cast<Eigen::Index>(design.p);
  const auto ones = static_cast<Eigen::Index>((design.s + 1) / 2);
  const auto halves = static_cast<Eigen::Index>(design.s / 2);
  t.beta0 = Eigen::VectorXd::Zero(p);
  t.beta0.head(ones).setConstant(1.0);
  t.beta0.segment(ones, halves).setConstant(0.5);
  t.gamma0 = Eigen::VectorXd::Zero(p);

  const double b2 = t.beta0.squaredNorm();
  double g4 = 0.0;
  if (design.kind == DesignKind::kMisspec) {
    // E(g'X)^4 = 3 |g|^4 under X ~ N(0, I); sqrt(|b|^2 / (3 |g|^4)) = 3 gives
    // |g|^2 = |b| / (3 sqrt 3).
    const double kappa_sq = std::sqrt(b2) / (3.0 * std::sqrt(3.0));
    t.gamma0 = std::sqrt(kappa_sq) * t.beta0 / std::sqrt(b2);
    g4 = kappa_sq * kappa_sq;
    t.theta0 = design.alpha0 + kappa_sq;
  } else {
    t.theta0 = design.alpha0;
  }
  // Var((g'X)^2) = 2 |g|^4 and the cross term with b'X vanishes.
  t.var_m0 = b2 + 2.0 * g4;
  t.sigma0_sq = t.var_m0 / 5.0;
  t.var_y = t.var_m0 + t.sigma0_sq;
  return t;
}

Dataset gen_correct(const SimDesign& design, RngStream& rng) {
  SimDesign d = design;
  d.kind = DesignKind::kCorrect;
  return generate(d, design_truth(d), rng);
}

Dataset gen_misspec(const SimDesign& design, RngStream& rng) {
  SimDesign d = design;
  d.kind = DesignKind::kMisspec;
  return generate(d, design_truth(d), rng);
}

Dataset generate_dataset(const SimDesign& design, RngStream& rng) {
  return design.kind == DesignKind::kCorrect ? gen_correct(design, rng)
                                             : gen_misspec(design, rng);
}

double OracleEfficiency::scaled_variance(const SimDesign& design) const {
  return sigma1_sq + static_cast<double>(design.n) / static_cast<double>(design.big_n) *
                         sigma2_sq;
}

OracleEfficiency oracle_ore(const SimDesign& design) {
  const DesignTruth t = design_truth(design);
  OracleEfficiency o;
  o.var_y = t.var_y;
  o.sigma1_sq = t.sigma0_sq;
  o.sigma2_sq = t.var_m0;
  o.ratio = o.var_y / o.scaled_variance(design);
  return o;
}

OracleEfficiency oracle_ore_star(const SimDesign& design) {
  const DesignTruth t = design_truth(design);
  // m*(x) = alpha0 + |g|^2 + x'b0: the quadratic term is uncorrelated with X.
  const double g4 = std::pow(t.gamma0.squaredNorm(), 2);
  OracleEfficiency o;
  o.var_y = t.var_y;
  o.sigma1_sq = t.sigma0_sq + 2.0 * g4;
  o.sigma2_sq = t.beta0.squaredNorm();
  o.ratio = o.var_y / o.scaled_variance(design);
  return o;
}

OracleEfficiency oracle_ore_star_mc(const SimDesign& design, std::size_t draws,
                                    RngStream rng) {
  const DesignTruth t = design_truth(design);
  require(draws > design.p + 2, ErrorKind::kInvalidParameter,
          "Monte Carlo oracle needs more draws than parameters");
  const auto p = static_cast<Eigen::Index>(design.p);
  // Accumulate the raw second-moment matrix of w = (1, X, Y).
  Eigen::MatrixXd moments = Eigen::MatrixXd::Zero(p + 2, p + 2);
  constexpr std::size_t kChunk = 20000;
  const double noise_sd = std::sqrt(t.sigma0_sq);
  for (std::size_t done = 0; done < draws; done += kChunk) {
    const std::size_t rows = std::min(kChunk, draws - done);
    Eigen::MatrixXd w(static_cast<Eigen::Index>(rows), p + 2);
    w.col(0).setOnes();
    w.middleCols(1, p) = gaussian_matrix(rows, design.p, rng);
    w.col(p + 1) = regression_mean(t, design.alpha0, w.middleCols(1, p));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      w(i, p + 1) += noise_sd * draw_normal(rng);
    }
    moments.noalias() += w.transpose() * w;
  }
  moments /= static_cast<double>(draws);

  const Eigen::MatrixXd exx = moments.topLeftCorner(p + 1, p + 1);
  const Eigen::VectorXd exy = moments.col(p + 1).head(p + 1);
  const double eyy = moments(p + 1, p + 1);
  const double ey = moments(0, p + 1);
  const Eigen::VectorXd beta_star = exx.ldlt().solve(exy);
  const Eigen::RowVectorXd ex = exx.row(0);

  OracleEfficiency o;
  o.var_y = eyy - ey * ey;
  const double e_fit = ex.dot(beta_star.transpose());
  o.sigma2_sq = beta_star.dot(exx * beta_star) - e_fit * e_fit;
  const double e_res = ey - e_fit;
  const double e_res2 = eyy - 2.0 * beta_star.dot(exy) + beta_star.dot(exx * beta_star);
  o.sigma1_sq = e_res2 - e_res * e_res;
  o.ratio = o.var_y / o.scaled_variance(design);
  return o;
}

const MethodMetrics& MetricsTable::method(const std::string& label) const {
  for (const auto& m : methods) {
    if (m.label == label) return m;
  }
  fail(ErrorKind::kInvalidParameter, "no method '" + label + "' in metrics table");
}

MetricsTable run_replications(const SimDesign& design, unsigned jobs) {
  design.validate();
  require(!design.methods.empty(), ErrorKind::kInvalidDesign,
          "design lists no methods");
  const auto start = std::chrono::steady_clock::now();
  const DesignTruth truth = design_truth(design);

  EstimatorConfig base;
  base.k = design.k;
  base.m = design.m;
  base.alpha = design.alpha;
  base.validate();

  struct RepOutcome {
    double supervised = 0.0;
    std::vector<EstimationResult> results;
  };
  std::vector<RepOutcome> reps(design.reps);
  const RngStream root(design.seed);

  parallel_for(design.reps, jobs, [&](std::size_t r) {
    try {
      RngStream rep_rng = root.substream(r);
      RngStream data_rng = rep_rng.substream(kDataStream);
      const Dataset data = generate(design, truth, data_rng);
      reps[r].supervised = sample_mean(
          std::span<const double>(data.labeled_outcomes().data(), data.n()));
      for (std::size_t i = 0; i < design.methods.size(); ++i) {
        EstimatorConfig config = base;
        config.nuisance = design.methods[i].nuisance;
        EstimationResult res = run_estimator(design.methods[i].kind, data, config,
                                             rep_rng.substream(kMethodStreamBase + i));
        if (r >= design.density_reps) {
          res.draws.clear();
          res.draws.shrink_to_fit();
        }
        reps[r].results.push_back(std::move(res));
      }
    } catch (const Error& e) {
      throw Error(e.kind(), "replication " + std::to_string(r + 1) + ": " + e.what());
    }
  });

  MetricsTable table;
  table.design = design;
  table.theta0 = truth.theta0;
  table.ore = oracle_ore(design).ratio;
  if (design.kind == DesignKind::kMisspec) table.ore_star = oracle_ore_star(design).ratio;

  double sup_se = 0.0;
  for (const auto& rep : reps) {
    table.supervised_estimates.push_back(rep.supervised);
    sup_se += (rep.supervised - truth.theta0) * (rep.supervised - truth.theta0);
  }
  table.supervised_mse = sup_se / static_cast<double>(design.reps);

  for (std::size_t i = 0; i < design.methods.size(); ++i) {
    MethodMetrics mm;
    mm.label = design.methods[i].label();
    double se = 0.0;
    for (std::size_t r = 0; r < design.reps; ++r) {
      const EstimationResult& res = reps[r].results[i];
      const double err = res.point_estimate - truth.theta0;
      se += err * err;
      mm.estimates.push_back(res.point_estimate);
      mm.lengths.push_back(res.ci_length());
      mm.hits.push_back(res.ci.first <= truth.theta0 && truth.theta0 <= res.ci.second);
      if (r < design.density_reps) mm.kept_draws.push_back(res.draws);
    }
    const double reps_d = static_cast<double>(design.reps);
    mm.mse = se / reps_d;
    mm.re = table.supervised_mse / mm.mse;
    mm.coverage = static_cast<double>(std::count(mm.hits.begin(), mm.hits.end(), true)) / reps_d;
    mm.mean_length = mean_of(mm.lengths);
    mm.mean_estimate = mean_of(mm.estimates);
    table.methods.push_back(std::move(mm));
  }
  table.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return table;
}

std::string MetricsTable::to_csv() const {
  std::ostringstream out;
  out << "method,mse,re,covp,len,mean_estimate,reps\n";
  for (const auto& m : methods) {
    out << m.label << ',' << format_double(m.mse) << ',' << format_double(m.re) << ','
        << format_double(m.coverage) << ',' << format_double(m.mean_length) << ','
        << format_double(m.mean_estimate) << ',' << design.reps << '\n';
  }
  return out.str();
}

nlohmann::json MetricsTable::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& m : methods) {
    rows.push_back({{"method", m.label},
                    {"mse", m.mse},
                    {"re", m.re},
                    {"covp", m.coverage},
                    {"len", m.mean_length},
                    {"mean_estimate", m.mean_estimate}});
  }
  nlohmann::json out = {{"schema", 1},
                        {"design", design.to_json()},
                        {"theta0", theta0},
                        {"ore", ore},
                        {"supervised_mse", supervised_mse},
                        {"replications", design.reps},
                        {"rng", std::string(RngStream::kAlgorithm)},
                        {"methods", rows}};
  if (ore_star) out["ore_star"] = *ore_star;
  return out;
}

std::vector<std::pair<double, double>> histogram_density(std::span<const double> draws,
                                                         std::size_t grid_points) {
  require(!draws.empty(), ErrorKind::kEmptyInput, "density of an empty sample");
  require(grid_points >= 2, ErrorKind::kInvalidParameter, "need at least two grid points");
  const auto [lo_it, hi_it] = std::minmax_element(draws.begin(), draws.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(grid_points);
  std::vector<double> counts(grid_points, 0.0);
  for (double x : draws) {
    auto bin = static_cast<std::size_t>((x - lo) / width);
    if (bin >= grid_points) bin = grid_points - 1;
    counts[bin] += 1.0;
  }
  const double scale = 1.0 / (static_cast<double>(draws.size()) * width);
  std::vector<std::pair<double, double>> out(grid_points);
  for (std::size_t b = 0; b < grid_points; ++b) {
    out[b] = {lo + (static_cast<double>(b) + 0.5) * width, counts[b] * scale};
  }
  return out;
}

std::vector<std::filesystem::path> emit_density_data(const MetricsTable& table,
                                                     const std::filesystem::path& dir,
                                                     std::size_t grid_points) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& m : table.methods) {
    std::ostringstream out;
    out << "replication,grid_point,density\n";
    for (std::size_t r = 0; r < m.kept_draws.size(); ++r) {
      for (const auto& [x, density] : histogram_density(m.kept_draws[r], grid_points)) {
        out << (r + 1) << ',' << format_double(x) << ',' << format_double(density) << '\n';
      }
    }
    const auto path = dir / ("density_" + csv_label(m.label) + ".csv");
    write_file_atomic(path, out.str());
    written.push_back(path);
  }
  return written;
}

}  // namespace ssmean
