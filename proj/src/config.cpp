#include <algorithm>
#include <cmath>
#include <set>

#include "ssmean/cli.hpp"
#include "ssmean/io.hpp"

namespace ssmean {
namespace {

using nlohmann::json;

const std::set<std::string> kTopKeys = {
    "command", "method",  "nuisance", "k",      "m",            "alpha",
    "seed",    "labeled", "unlabeled", "out",   "jobs",         "gibbs",
    "design",  "oracle_draws", "density_grid", "density_dir", "reference"};
const std::set<std::string> kGibbsKeys = {"burn_in", "sweeps", "g"};
const std::set<std::string> kDesignKeys = {"kind", "n",    "N",            "p",      "s",
                                           "alpha0", "reps", "density_reps", "methods"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  require(obj.is_object(), ErrorKind::kConfig, where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      std::string known;
      for (const auto& k : allowed) known += (known.empty() ? "" : ", ") + k;
      fail(ErrorKind::kConfig,
           "unknown key '" + key + "' in " + where + " (known keys: " + known + ")");
    }
  }
}

std::uint64_t get_unsigned(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (v.is_number_integer()) {
    fail(ErrorKind::kInvalidParameter, "'" + key + "' must be non-negative");
  }
  fail(ErrorKind::kConfig, "'" + key + "' must be an integer");
}

double get_double(const json& v, const std::string& key) {
  require(v.is_number(), ErrorKind::kConfig, "'" + key + "' must be a number");
  return v.get<double>();
}

std::string get_string(const json& v, const std::string& key) {
  require(v.is_string(), ErrorKind::kConfig, "'" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<std::string> get_string_list(const json& v, const std::string& key) {
  std::vector<std::string> out;
  if (v.is_string()) {
    // "bdmi,hbdmi" is accepted as a list.
    const std::string text = v.get<std::string>();
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      const std::string item = text.substr(start, comma - start);
      require(!item.empty(), ErrorKind::kConfig, "empty entry in '" + key + "'");
      out.push_back(item);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }
  require(v.is_array() && !v.empty(), ErrorKind::kConfig,
          "'" + key + "' must be a string or a non-empty list of strings");
  for (const auto& item : v) out.push_back(get_string(item, key));
  return out;
}

json list_json(const std::vector<std::string>& items, bool single) {
  if (single && items.size() == 1) return items.front();
  return items;
}

}  // namespace

std::string to_string(Command command) {
  switch (command) {
    case Command::kSimulate: return "simulate";
    case Command::kEstimate: return "estimate";
    case Command::kCompare: return "compare";
  }
  return "estimate";
}

Command parse_command(const std::string& text) {
  if (text == "simulate") return Command::kSimulate;
  if (text == "estimate") return Command::kEstimate;
  if (text == "compare") return Command::kCompare;
  fail(ErrorKind::kConfig,
       "unknown command '" + text + "' (expected simulate, estimate or compare)");
}

NuisanceSpec RunConfig::nuisance_spec(const std::string& text) const {
  NuisanceSpec spec = NuisanceSpec::parse(text);
  spec.gibbs = gibbs;
  return spec;
}

SimDesign RunConfig::effective_design() const {
  SimDesign d = design;
  d.k = k;
  d.m = m;
  d.alpha = alpha;
  d.seed = seed;
  d.methods.clear();
  if (!design_methods.empty()) {
    for (const auto& text : design_methods) {
      MethodSpec spec = MethodSpec::parse(text);
      spec.nuisance.gibbs = gibbs;
      d.methods.push_back(spec);
    }
  } else {
    for (const auto& method : methods) {
      const EstimatorKind kind = parse_estimator(method);
      if (kind == EstimatorKind::kSupervised) continue;
      for (const auto& nuisance : nuisances) {
        d.methods.push_back({kind, nuisance_spec(nuisance)});
      }
    }
  }
  return d;
}

std::filesystem::path RunConfig::output_path() const {
  if (!out.empty()) return out;
  switch (command) {
    case Command::kSimulate: return "simulation.json";
    case Command::kEstimate: return "estimate_report.json";
    case Command::kCompare: return "compare_report.json";
  }
  return "report.json";
}

void RunConfig::validate() const {
  EstimatorConfig{k, m, alpha, {}, jobs}.validate();
  require(jobs >= 1, ErrorKind::kInvalidParameter, "jobs must be at least 1");
  require(!methods.empty() && !nuisances.empty(), ErrorKind::kConfig,
          "at least one method and one nuisance are required");
  for (const auto& method : methods) parse_estimator(method);
  for (const auto& nuisance : nuisances) NuisanceSpec::parse(nuisance);
  require(gibbs.sweeps >= 1, ErrorKind::kInvalidParameter, "gibbs.sweeps must be >= 1");
  if (gibbs.g) {
    require(std::isfinite(*gibbs.g) && *gibbs.g > 0.0, ErrorKind::kInvalidParameter,
            "gibbs.g must be positive");
  }
  if (command == Command::kEstimate) {
    require(methods.size() == 1 && nuisances.size() == 1, ErrorKind::kConfig,
            "estimate takes exactly one method and one nuisance; use compare for several");
  }
  if (command == Command::kSimulate) {
    const SimDesign d = effective_design();
    d.validate();
    require(!d.methods.empty(), ErrorKind::kConfig,
            "simulate needs at least one semi-supervised method");
    require(density_grid >= 2, ErrorKind::kInvalidParameter, "density_grid must be >= 2");
  } else {
    require(!labeled.empty() && !unlabeled.empty(), ErrorKind::kConfig,
            to_string(command) + " needs --labeled and --unlabeled CSV files");
  }
}

json RunConfig::echo() const {
  json g = {{"burn_in", gibbs.burn_in}, {"sweeps", gibbs.sweeps}};
  if (gibbs.g) g["g"] = *gibbs.g;
  json out = {{"command", to_string(command)},
              {"method", list_json(methods, command == Command::kEstimate)},
              {"nuisance", list_json(nuisances, command == Command::kEstimate)},
              {"k", k},
              {"m", m},
              {"alpha", alpha},
              {"seed", seed},
              {"gibbs", g}};
  if (command == Command::kSimulate) {
    json d = {{"kind", to_string(design.kind)},
              {"n", design.n},
              {"N", design.big_n},
              {"p", design.p},
              {"s", design.s},
              {"alpha0", design.alpha0},
              {"reps", design.reps},
              {"density_reps", design.density_reps}};
    if (!design_methods.empty()) d["methods"] = design_methods;
    out["design"] = d;
    out["oracle_draws"] = oracle_draws;
    out["density_grid"] = density_grid;
    if (!density_dir.empty()) out["density_dir"] = density_dir;
  } else {
    if (reference) out["reference"] = *reference;
    out["labeled"] = labeled;
    out["unlabeled"] = unlabeled;
  }
  return out;
}

RunConfig parse_config(Command command, const json& file, const json& flags) {
  json merged = file.is_null() ? json::object() : file;
  reject_unknown(merged, kTopKeys, "config file");
  reject_unknown(flags, kTopKeys, "flags");
  merged.merge_patch(flags);
  if (merged.contains("gibbs")) reject_unknown(merged["gibbs"], kGibbsKeys, "gibbs");
  if (merged.contains("design")) reject_unknown(merged["design"], kDesignKeys, "design");

  RunConfig c;
  c.command = command;
  if (merged.contains("command")) {
    const Command declared = parse_command(get_string(merged["command"], "command"));
    require(declared == command, ErrorKind::kConfig,
            "config is for '" + to_string(declared) + "' but the command is '" +
                to_string(command) + "'");
  }
  if (command == Command::kCompare) c.methods = {"sup", "bdmi"};
  if (merged.contains("method")) c.methods = get_string_list(merged["method"], "method");
  if (merged.contains("nuisance")) {
    c.nuisances = get_string_list(merged["nuisance"], "nuisance");
  }
  if (merged.contains("k")) c.k = get_unsigned(merged["k"], "k");
  if (merged.contains("m")) c.m = get_unsigned(merged["m"], "m");
  if (merged.contains("alpha")) c.alpha = get_double(merged["alpha"], "alpha");
  if (merged.contains("seed")) {
    c.seed = get_unsigned(merged["seed"], "seed");
    c.seed_defaulted = false;
  }
  if (merged.contains("labeled")) c.labeled = get_string(merged["labeled"], "labeled");
  if (merged.contains("unlabeled")) {
    c.unlabeled = get_string(merged["unlabeled"], "unlabeled");
  }
  if (merged.contains("out")) c.out = get_string(merged["out"], "out");
  if (merged.contains("jobs")) {
    c.jobs = static_cast<unsigned>(get_unsigned(merged["jobs"], "jobs"));
  }
  if (merged.contains("oracle_draws")) {
    c.oracle_draws = get_unsigned(merged["oracle_draws"], "oracle_draws");
  }
  if (merged.contains("density_grid")) {
    c.density_grid = get_unsigned(merged["density_grid"], "density_grid");
  }
  if (merged.contains("density_dir")) {
    c.density_dir = get_string(merged["density_dir"], "density_dir");
  }
  if (merged.contains("reference")) {
    c.reference = get_double(merged["reference"], "reference");
  }
  if (merged.contains("gibbs")) {
    const json& g = merged["gibbs"];
    if (g.contains("burn_in")) c.gibbs.burn_in = get_unsigned(g["burn_in"], "gibbs.burn_in");
    if (g.contains("sweeps")) c.gibbs.sweeps = get_unsigned(g["sweeps"], "gibbs.sweeps");
    if (g.contains("g")) c.gibbs.g = get_double(g["g"], "gibbs.g");
  }
  if (merged.contains("design")) {
    const json& d = merged["design"];
    if (d.contains("kind")) c.design.kind = parse_design_kind(get_string(d["kind"], "kind"));
    if (d.contains("n")) c.design.n = get_unsigned(d["n"], "design.n");
    if (d.contains("N")) c.design.big_n = get_unsigned(d["N"], "design.N");
    if (d.contains("p")) c.design.p = get_unsigned(d["p"], "design.p");
    if (d.contains("s")) c.design.s = get_unsigned(d["s"], "design.s");
    if (d.contains("alpha0")) c.design.alpha0 = get_double(d["alpha0"], "design.alpha0");
    if (d.contains("reps")) c.design.reps = get_unsigned(d["reps"], "design.reps");
    if (d.contains("density_reps")) {
      c.design.density_reps = get_unsigned(d["density_reps"], "design.density_reps");
    }
    if (d.contains("methods")) {
      c.design_methods = get_string_list(d["methods"], "design.methods");
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(Command command, const std::optional<std::filesystem::path>& path,
                      const json& flags) {
  json file = json::object();
  if (path) {
    std::string text;
    try {
      text = read_file(*path);
    } catch (const Error& e) {
      fail(ErrorKind::kConfig, e.what());
    }
    try {
      file = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::kConfig, path->string() + ": " + e.what());
    }
  }
  return parse_config(command, file, flags);
}

}  // namespace ssmean
