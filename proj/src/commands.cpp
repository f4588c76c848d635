#include <iomanip>
#include <ostream>

#include "ssmean/cli.hpp"
#include "ssmean/io.hpp"

namespace ssmean {
namespace {

using nlohmann::json;

std::string run_label(EstimatorKind kind, const std::string& nuisance) {
  if (kind == EstimatorKind::kSupervised) return "sup";
  return to_string(kind) + ":" + nuisance;
}

// Each (method, nuisance) pair draws from its own named substream, so adding
// a method to a comparison leaves the others unchanged.
RngStream method_stream(const RunConfig& config, const std::string& label) {
  return RngStream(config.seed).substream(label_hash(label));
}

EstimatorConfig estimator_config(const RunConfig& config, const std::string& nuisance) {
  EstimatorConfig ec;
  ec.k = config.k;
  ec.m = config.m;
  ec.alpha = config.alpha;
  if (!nuisance.empty()) ec.nuisance = config.nuisance_spec(nuisance);
  ec.jobs = config.jobs;
  return ec;
}

EstimationResult run_one(const RunConfig& config, const Dataset& data, EstimatorKind kind,
                         const std::string& nuisance) {
  const EstimatorConfig ec = estimator_config(config, nuisance);
  const std::string label = run_label(kind, ec.nuisance.label());
  return run_estimator(kind, data, ec, method_stream(config, label));
}

json report_header(const RunConfig& config) {
  json out = {{"schema", kReportSchema},
              {"version", std::string(kVersion)},
              {"command", to_string(config.command)},
              {"rng", std::string(RngStream::kAlgorithm)},
              {"seed", config.seed},
              {"K", config.k},
              {"M", config.m},
              {"alpha", config.alpha},
              {"config", config.echo()}};
  return out;
}

json interval_row(const EstimationResult& r, double supervised_length,
                  const std::optional<double>& reference) {
  json row = {{"method", to_string(r.method)},
              {"nuisance", r.method == EstimatorKind::kSupervised ? json(nullptr)
                                                                  : json(r.nuisance)},
              {"point", r.point_estimate},
              {"ci", {r.ci.first, r.ci.second}},
              {"length", r.ci_length()},
              {"rl", supervised_length / r.ci_length()}};
  if (reference) {
    row["deviation_from_reference"] = r.point_estimate - *reference;
    row["covers_reference"] = r.ci.first <= *reference && *reference <= r.ci.second;
  }
  return row;
}

std::filesystem::path with_extension(std::filesystem::path path, const char* ext) {
  path.replace_extension(ext);
  return path;
}

}  // namespace

json cmd_estimate(const RunConfig& config) {
  const Dataset data = load_dataset(config.labeled, config.unlabeled);
  const EstimatorKind kind = parse_estimator(config.methods.front());
  const std::string& nuisance = config.nuisances.front();
  const EstimationResult result = run_one(config, data, kind, nuisance);
  const EstimationResult sup = kind == EstimatorKind::kSupervised
                                   ? result
                                   : run_one(config, data, EstimatorKind::kSupervised, "");

  json report = report_header(config);
  json body = result_json(result);
  for (auto& [key, value] : body.items()) report[key] = value;
  report["data"] = data_summary_json(data);
  report["supervised"] = {{"point", sup.point_estimate},
                          {"ci", {sup.ci.first, sup.ci.second}},
                          {"length", sup.ci_length()}};
  report["rl_vs_supervised"] = sup.ci_length() / result.ci_length();
  if (config.reference) {
    report["reference"] = *config.reference;
    report["deviation_from_reference"] = result.point_estimate - *config.reference;
  }

  json diagnostics = json::object();
  if (kind != EstimatorKind::kSupervised) {
    // Plug-in variance pieces at the nuisance posterior mean fitted on all of L.
    RngStream fit_rng = method_stream(config, "variance:" + result.nuisance);
    const NuisancePtr fitted =
        fit_nuisance(config.nuisance_spec(nuisance), data.labeled_features(),
                     data.labeled_outcomes(), fit_rng);
    diagnostics["variance"] = variance_report(data, fitted->posterior_mean()).to_json();
  }
  report["diagnostics"] = diagnostics;
  return report;
}

json cmd_compare(const RunConfig& config) {
  const Dataset data = load_dataset(config.labeled, config.unlabeled);
  const EstimationResult sup = run_one(config, data, EstimatorKind::kSupervised, "");
  const double sup_length = sup.ci_length();

  json rows = json::array();
  rows.push_back(interval_row(sup, sup_length, config.reference));
  for (const auto& method : config.methods) {
    const EstimatorKind kind = parse_estimator(method);
    if (kind == EstimatorKind::kSupervised) continue;
    for (const auto& nuisance : config.nuisances) {
      rows.push_back(
          interval_row(run_one(config, data, kind, nuisance), sup_length, config.reference));
    }
  }
  json report = report_header(config);
  report["data"] = data_summary_json(data);
  report["rows"] = rows;
  if (config.reference) report["reference"] = *config.reference;
  return report;
}

json cmd_simulate(const RunConfig& config, std::ostream& log) {
  const SimDesign design = config.effective_design();
  const MetricsTable table = run_replications(design, config.jobs);

  json report = table.to_json();
  for (auto& [key, value] : report_header(config).items()) report[key] = value;
  const OracleEfficiency ore = oracle_ore(design);
  const OracleEfficiency ore_star = oracle_ore_star(design);
  report["oracle"] = {{"ore", ore.ratio},
                      {"ore_star", ore_star.ratio},
                      {"sigma1_sq", ore.sigma1_sq},
                      {"sigma2_sq", ore.sigma2_sq},
                      {"sigma1_sq_star", ore_star.sigma1_sq},
                      {"sigma2_sq_star", ore_star.sigma2_sq},
                      {"var_y", ore.var_y}};
  log << "ORE  = " << format_double(ore.ratio) << "\n";
  log << "ORE* = " << format_double(ore_star.ratio) << "\n";
  if (design.kind == DesignKind::kMisspec && config.oracle_draws > 0) {
    const OracleEfficiency mc = oracle_ore_star_mc(
        design, config.oracle_draws, RngStream(config.seed).substream(label_hash("oracle")));
    report["oracle"]["ore_star_mc"] = mc.ratio;
    report["oracle"]["ore_star_mc_draws"] = config.oracle_draws;
    log << "ORE* (Monte Carlo, " << config.oracle_draws
        << " draws) = " << format_double(mc.ratio) << "\n";
  }

  const std::filesystem::path out = config.output_path();
  write_file_atomic(with_extension(out, ".csv"), table.to_csv());
  if (design.density_reps > 0) {
    std::filesystem::path dir = config.density_dir;
    if (dir.empty()) dir = out.parent_path() / (out.stem().string() + "_density");
    json files = json::array();
    for (const auto& path : emit_density_data(table, dir, config.density_grid)) {
      files.push_back(path.filename().string());
    }
    report["density_files"] = files;
  }
  return report;
}

void run_command(const RunConfig& config, std::ostream& log) {
  json report;
  switch (config.command) {
    case Command::kEstimate: report = cmd_estimate(config); break;
    case Command::kCompare: report = cmd_compare(config); break;
    case Command::kSimulate: report = cmd_simulate(config, log); break;
  }
  const std::filesystem::path out = config.output_path();
  write_file_atomic(out, dump_report(report));

  if (config.command == Command::kEstimate) {
    log << report["method"].get<std::string>() << " point "
        << format_double(report["point"].get<double>()) << " ci ["
        << format_double(report["ci"][0].get<double>()) << ", "
        << format_double(report["ci"][1].get<double>()) << "] RL "
        << format_double(report["rl_vs_supervised"].get<double>()) << "\n";
  } else if (config.command == Command::kCompare) {
    log << std::left << std::setw(20) << "method" << std::setw(22) << "point"
        << std::setw(46) << "ci" << "RL\n";
    for (const auto& row : report["rows"]) {
      const std::string label =
          row["nuisance"].is_null()
              ? row["method"].get<std::string>()
              : row["method"].get<std::string>() + ":" + row["nuisance"].get<std::string>();
      const std::string ci = "[" + format_double(row["ci"][0].get<double>()) + ", " +
                             format_double(row["ci"][1].get<double>()) + "]";
      log << std::setw(20) << label << std::setw(22)
          << format_double(row["point"].get<double>()) << std::setw(46) << ci
          << format_double(row["rl"].get<double>()) << "\n";
    }
  } else {
    for (const auto& row : report["methods"]) {
      log << row["method"].get<std::string>() << ": RE "
          << format_double(row["re"].get<double>()) << " CovP "
          << format_double(row["covp"].get<double>()) << " Len "
          << format_double(row["len"].get<double>()) << "\n";
    }
  }
  if (report.contains("data") && report["data"]["unlabeled_not_larger"].get<bool>()) {
    log << "warning: N <= n, the unlabeled pool adds little\n";
  }
  if (config.seed_defaulted) log << "seed " << config.seed << " (default)\n";
  log << "wrote " << out.string() << "\n";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidParameter:
    case ErrorKind::kInvalidDesign:
      return 2;
    case ErrorKind::kValidation:
    case ErrorKind::kParse:
    case ErrorKind::kHeaderMismatch:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kInsufficientData:
    case ErrorKind::kEmptyInput:
    case ErrorKind::kIo:
      return 3;
    case ErrorKind::kSingularDesign:
    case ErrorKind::kSamplerFailure:
      return 4;
  }
  return 4;
}

}  // namespace ssmean
