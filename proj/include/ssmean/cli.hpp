#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssmean/error.hpp"
#include "ssmean/nuisance.hpp"
#include "ssmean/simulation.hpp"

namespace ssmean {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr int kReportSchema = 1;
inline constexpr std::uint64_t kDefaultSeed = 20240601;

enum class Command { kSimulate, kEstimate, kCompare };

std::string to_string(Command command);
Command parse_command(const std::string& text);

struct RunConfig {
  Command command = Command::kEstimate;
  // estimate takes exactly one method and one nuisance; compare crosses the
  // lists; simulate uses design_methods when given, else the cross product.
  std::vector<std::string> methods{"bdmi"};
  std::vector<std::string> nuisances{"bols"};
  std::size_t k = 5;
  std::size_t m = 1000;
  double alpha = 0.05;
  std::uint64_t seed = kDefaultSeed;
  bool seed_defaulted = true;
  std::string labeled;
  std::string unlabeled;
  std::string out;
  unsigned jobs = 1;
  GibbsConfig gibbs;
  // Optional external benchmark value (e.g. a full-data estimate); reports
  // then carry each method's deviation from it.
  std::optional<double> reference;

  // simulate only
  SimDesign design;
  std::vector<std::string> design_methods;
  std::size_t density_grid = 200;
  std::string density_dir;
  std::size_t oracle_draws = 1000000;

  void validate() const;
  NuisanceSpec nuisance_spec(const std::string& text) const;
  SimDesign effective_design() const;
  std::filesystem::path output_path() const;

  // Every setting that affects results, with defaults filled in. Feeding it
  // back through parse_config reproduces the run; `out` and `jobs` are left
  // out because they do not change the numbers.
  nlohmann::json echo() const;
};

// `file` is the parsed config file (or an empty object); `flags` holds
// command-line values under the same keys and wins over the file. Unknown
// keys are kConfig errors; out-of-range values are kInvalidParameter.
RunConfig parse_config(Command command, const nlohmann::json& file,
                       const nlohmann::json& flags);

RunConfig load_config(Command command, const std::optional<std::filesystem::path>& path,
                      const nlohmann::json& flags);

nlohmann::json t_component_json(const TComponent& t);
// Point, interval and diagnostics of one run; timings are left out.
nlohmann::json result_json(const EstimationResult& result);
nlohmann::json data_summary_json(const Dataset& data);

// Serialized with a trailing newline; keys in sorted order.
std::string dump_report(const nlohmann::json& report);

nlohmann::json cmd_estimate(const RunConfig& config);
nlohmann::json cmd_compare(const RunConfig& config);
nlohmann::json cmd_simulate(const RunConfig& config, std::ostream& log);

// Runs the command, writes its files and prints a summary to `log`.
void run_command(const RunConfig& config, std::ostream& log);

// 2 config, 3 data, 4 numerical.
int exit_code(ErrorKind kind);

}  // namespace ssmean
