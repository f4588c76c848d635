#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ssmean/cli.hpp"

namespace {

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> labeled;
  std::optional<std::string> unlabeled;
  std::optional<std::string> method;
  std::optional<std::string> nuisance;
  std::optional<std::size_t> k;
  std::optional<std::size_t> m;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::optional<std::string> out;
};

void add_options(CLI::App& sub, Flags& f) {
  sub.add_option("--config", f.config, "JSON config file");
  sub.add_option("--labeled", f.labeled, "labeled CSV (outcome first)");
  sub.add_option("--unlabeled", f.unlabeled, "unlabeled CSV (features only)");
  sub.add_option("--method", f.method, "sup|bdmi|hbdmi|imp (comma list for compare)");
  sub.add_option("--nuisance", f.nuisance,
                 "bols|bridge|spike|constant:<c>|zero (comma list for compare)");
  sub.add_option("--k", f.k, "cross-fitting folds");
  sub.add_option("--m", f.m, "posterior draws");
  sub.add_option("--alpha", f.alpha, "1 - credible level");
  sub.add_option("--seed", f.seed, "random seed");
  sub.add_option("--jobs", f.jobs, "worker threads");
  sub.add_option("--out", f.out, "output report path");
}

nlohmann::json flags_json(const Flags& f) {
  nlohmann::json j = nlohmann::json::object();
  if (f.labeled) j["labeled"] = *f.labeled;
  if (f.unlabeled) j["unlabeled"] = *f.unlabeled;
  if (f.method) j["method"] = *f.method;
  if (f.nuisance) j["nuisance"] = *f.nuisance;
  if (f.k) j["k"] = *f.k;
  if (f.m) j["m"] = *f.m;
  if (f.alpha) j["alpha"] = *f.alpha;
  if (f.seed) j["seed"] = *f.seed;
  if (f.jobs) j["jobs"] = *f.jobs;
  if (f.out) j["out"] = *f.out;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised mean estimation with cross-fitted Bayesian debiasing"};
  app.set_version_flag("--version", std::string(ssmean::kVersion));
  app.require_subcommand(1);
  Flags flags;
  auto* simulate = app.add_subcommand("simulate", "run a simulation design");
  auto* estimate = app.add_subcommand("estimate", "estimate the mean with one method");
  auto* compare = app.add_subcommand("compare", "supervised vs semi-supervised intervals");
  for (auto* sub : {simulate, estimate, compare}) add_options(*sub, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ssmean::Command command = ssmean::Command::kEstimate;
  if (simulate->parsed()) command = ssmean::Command::kSimulate;
  if (compare->parsed()) command = ssmean::Command::kCompare;

  try {
    std::optional<std::filesystem::path> path;
    if (flags.config) path = *flags.config;
    const ssmean::RunConfig config = ssmean::load_config(command, path, flags_json(flags));
    ssmean::run_command(config, std::cout);
  } catch (const ssmean::Error& e) {
    std::cerr << "error (" << ssmean::to_string(e.kind()) << "): " << e.what() << "\n";
    return ssmean::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
