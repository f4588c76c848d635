#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "ssmean/cli.hpp"
#include "ssmean/error.hpp"
#include "ssmean/io.hpp"
#include "ssmean/simulation.hpp"

using namespace ssmean;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Error error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an ssmean::Error");
  return Error(ErrorKind::kIo, "");
}

bool contains(const std::string& text, const std::string& part) {
  return text.find(part) != std::string::npos;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ssmean_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::string slurp(const fs::path& path) { return read_file(path); }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SSMEAN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Writes a simulated labeled/unlabeled pair as CSV files in `dir`.
void write_simulated(const fs::path& dir, std::size_t n, std::size_t big_n, std::uint64_t seed) {
  SimDesign d;
  d.n = n;
  d.big_n = big_n;
  d.p = 5;
  d.s = 3;
  RngStream rng(seed);
  const Dataset data = gen_correct(d, rng);
  std::ostringstream l, u;
  l << "y,x1,x2,x3,x4,x5\n";
  u << "x1,x2,x3,x4,x5\n";
  for (Eigen::Index i = 0; i < data.labeled_features().rows(); ++i) {
    l << format_double(data.labeled_outcomes()(i));
    for (Eigen::Index j = 0; j < 5; ++j) l << ',' << format_double(data.labeled_features()(i, j));
    l << '\n';
  }
  for (Eigen::Index i = 0; i < data.unlabeled_features().rows(); ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) {
      u << (j ? "," : "") << format_double(data.unlabeled_features()(i, j));
    }
    u << '\n';
  }
  write(dir / "labeled.csv", l.str());
  write(dir / "unlabeled.csv", u.str());
}

}  // namespace

TEST_CASE("format_double round trips") {
  for (double v : {0.1, -2.5e-300, 1.0 / 3.0, 123456789.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("labeled csv example") {
  const LabeledData d = parse_labeled_csv("y,x1,x2\n1.0,0.5,2\n3.0,1.5,0\n");
  CHECK(d.outcomes.size() == 2);
  CHECK(d.outcomes(1) == 3.0);
  CHECK(d.features.rows() == 2);
  CHECK(d.features.cols() == 2);
  CHECK(d.features(0, 1) == 2.0);
  CHECK(d.feature_names == std::vector<std::string>{"x1", "x2"});
}

TEST_CASE("crlf and blank trailing lines") {
  const LabeledData d = parse_labeled_csv("y,x1\r\n1,2\r\n3,4\r\n\r\n");
  CHECK(d.outcomes.size() == 2);
  CHECK(d.features(1, 0) == 4.0);
  const UnlabeledData u = parse_unlabeled_csv("\xEF\xBB\xBFx1,x2\n1,2\n");
  CHECK(u.feature_names[0] == "x1");
}

TEST_CASE("malformed csv") {
  const Error ragged = error_of([] { parse_labeled_csv("y,x1\n1,2\n3\n"); });
  CHECK(ragged.kind() == ErrorKind::kParse);
  CHECK(contains(ragged.what(), "line 3"));
  const Error word = error_of([] { parse_labeled_csv("y,x1\n1,abc\n"); });
  CHECK(word.kind() == ErrorKind::kParse);
  CHECK(contains(word.what(), "line 2"));
  const Error nan = error_of([] { parse_labeled_csv("y,x1\n1,2\n3,NaN\n"); });
  CHECK(nan.kind() == ErrorKind::kValidation);
  CHECK(contains(nan.what(), "line 3"));
  CHECK(error_of([] { parse_labeled_csv(""); }).kind() == ErrorKind::kParse);
}

TEST_CASE("feature name mismatch lists each column") {
  const Error e = error_of([] { check_feature_names({"a", "b", "c"}, {"a", "x", "y"}); });
  CHECK(e.kind() == ErrorKind::kHeaderMismatch);
  CHECK(contains(e.what(), "'b'"));
  CHECK(contains(e.what(), "'x'"));
  CHECK(contains(e.what(), "'c'"));
  CHECK(contains(e.what(), "'y'"));
  CHECK(error_of([] { check_feature_names({"a"}, {"a", "b"}); }).kind() ==
        ErrorKind::kHeaderMismatch);
}

TEST_CASE("load_dataset") {
  const fs::path dir = scratch("load");
  write(dir / "l.csv", "y,a\n1,0\n2,1\n3,2\n");
  write(dir / "u.csv", "a\n5\n6\n");
  const Dataset d = load_dataset(dir / "l.csv", dir / "u.csv");
  CHECK(d.n() == 3);
  CHECK(d.big_n() == 2);
  const Error missing = error_of([&] { load_dataset(dir / "nope.csv", dir / "u.csv"); });
  CHECK(missing.kind() == ErrorKind::kIo);
  CHECK(contains(missing.what(), "nope.csv"));
  write(dir / "u2.csv", "b\n5\n");
  CHECK(error_of([&] { load_dataset(dir / "l.csv", dir / "u2.csv"); }).kind() ==
        ErrorKind::kHeaderMismatch);
  fs::remove_all(dir);
}

TEST_CASE("atomic writes leave no temporary file") {
  const fs::path dir = scratch("atomic");
  write_file_atomic(dir / "sub" / "out.json", "{}\n");
  CHECK(slurp(dir / "sub" / "out.json") == "{}\n");
  int entries = 0;
  for (const auto& e : fs::directory_iterator(dir / "sub")) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
  fs::remove_all(dir);
}

TEST_CASE("config defaults and overrides") {
  const RunConfig base = parse_config(Command::kEstimate, json::object(),
                                      {{"labeled", "l.csv"}, {"unlabeled", "u.csv"}});
  CHECK(base.k == 5);
  CHECK(base.m == 1000);
  CHECK(base.alpha == 0.05);
  CHECK(base.seed_defaulted);

  const RunConfig over = parse_config(Command::kEstimate,
                                      {{"k", 5}, {"labeled", "l.csv"}, {"unlabeled", "u.csv"}},
                                      {{"k", 10}});
  CHECK(over.k == 10);

  const Error alpha = error_of([] {
    parse_config(Command::kEstimate, {{"alpha", 1.5}, {"labeled", "l"}, {"unlabeled", "u"}},
                 json::object());
  });
  CHECK(alpha.kind() == ErrorKind::kInvalidParameter);

  const Error unknown = error_of([] {
    parse_config(Command::kEstimate, {{"folds", 3}, {"labeled", "l"}, {"unlabeled", "u"}},
                 json::object());
  });
  CHECK(unknown.kind() == ErrorKind::kConfig);
  CHECK(contains(unknown.what(), "folds"));

  CHECK(error_of([] {
          parse_config(Command::kEstimate, {{"k", "five"}}, json::object());
        }).kind() == ErrorKind::kConfig);
  CHECK(error_of([] {
          parse_config(Command::kEstimate, {{"command", "simulate"}}, json::object());
        }).kind() == ErrorKind::kConfig);
}

TEST_CASE("config echo reproduces itself") {
  const RunConfig c = parse_config(
      Command::kCompare,
      {{"method", "sup,bdmi,hbdmi"}, {"nuisance", json::array({"bols", "bridge"})},
       {"labeled", "l.csv"}, {"unlabeled", "u.csv"}, {"seed", 9}, {"m", 500}},
      json::object());
  const RunConfig again = parse_config(Command::kCompare, c.echo(), json::object());
  CHECK(again.echo() == c.echo());
  CHECK(again.methods.size() == 3);
  CHECK_FALSE(again.seed_defaulted);
}

TEST_CASE("simulate config") {
  const RunConfig c = parse_config(
      Command::kSimulate,
      {{"design", {{"kind", "misspec"}, {"p", 10}, {"s", 3}, {"reps", 5},
                   {"methods", "sup,bdmi:bols"}}}},
      json::object());
  const SimDesign d = c.effective_design();
  CHECK(d.kind == DesignKind::kMisspec);
  CHECK(d.p == 10);
  CHECK(d.methods.size() == 2);
  CHECK(error_of([] {
          parse_config(Command::kSimulate, {{"design", {{"s", 0}}}}, json::object());
        }).kind() == ErrorKind::kInvalidDesign);
}

TEST_CASE("exit codes") {
  CHECK(exit_code(ErrorKind::kConfig) == 2);
  CHECK(exit_code(ErrorKind::kInvalidParameter) == 2);
  CHECK(exit_code(ErrorKind::kInvalidDesign) == 2);
  CHECK(exit_code(ErrorKind::kParse) == 3);
  CHECK(exit_code(ErrorKind::kValidation) == 3);
  CHECK(exit_code(ErrorKind::kHeaderMismatch) == 3);
  CHECK(exit_code(ErrorKind::kIo) == 3);
  CHECK(exit_code(ErrorKind::kSingularDesign) == 4);
  CHECK(exit_code(ErrorKind::kSamplerFailure) == 4);
}

TEST_CASE("supervised estimate on a tiny file") {
  const fs::path dir = scratch("sup");
  write(dir / "l.csv", "y,a\n1,0\n2,1\n3,0.5\n");
  write(dir / "u.csv", "a\n5\n6\n7\n");
  const std::string base = "estimate --labeled " + (dir / "l.csv").string() + " --unlabeled " +
                           (dir / "u.csv").string();
  REQUIRE(run_cli(base + " --method sup --out " + (dir / "r.json").string()) == 0);
  const json r = json::parse(slurp(dir / "r.json"));
  CHECK(r["point"] == 2.0);
  CHECK(r["method"] == "sup");
  CHECK(r["command"] == "estimate");
  fs::remove_all(dir);
}

TEST_CASE("cli estimate, reruns and echo") {
  const fs::path dir = scratch("est");
  write_simulated(dir, 200, 4000, 3);
  const std::string data = " --labeled " + (dir / "labeled.csv").string() + " --unlabeled " +
                           (dir / "unlabeled.csv").string();
  REQUIRE(run_cli("estimate" + data + " --nuisance constant:5 --seed 4 --out " +
                  (dir / "c.json").string()) == 0);
  const json c = json::parse(slurp(dir / "c.json"));
  CHECK(c["point"].get<double>() ==
        doctest::Approx(c["supervised"]["point"].get<double>()).epsilon(1e-12));

  REQUIRE(run_cli("estimate" + data + " --seed 4 --out " + (dir / "a.json").string()) == 0);
  REQUIRE(run_cli("estimate" + data + " --seed 4 --out " + (dir / "b.json").string()) == 0);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  const json a = json::parse(slurp(dir / "a.json"));
  CHECK(a["rl_vs_supervised"].get<double>() > 1.0);
  CHECK(a["seed"] == 4);

  write(dir / "echo.json", a["config"].dump());
  REQUIRE(run_cli("estimate --config " + (dir / "echo.json").string() + " --out " +
                  (dir / "e.json").string()) == 0);
  CHECK(slurp(dir / "e.json") == slurp(dir / "a.json"));
  for (const auto& e : fs::directory_iterator(dir)) {
    CHECK(e.path().extension() != ".tmp");
  }
  fs::remove_all(dir);
}

TEST_CASE("cli exit codes") {
  const fs::path dir = scratch("codes");
  write_simulated(dir, 60, 200, 5);
  const std::string data = " --labeled " + (dir / "labeled.csv").string() + " --unlabeled " +
                           (dir / "unlabeled.csv").string() + " --out " +
                           (dir / "r.json").string();
  CHECK(run_cli("estimate" + data + " --alpha 1.5") == 2);
  CHECK(run_cli("estimate --labeled " + (dir / "missing.csv").string() + " --unlabeled " +
                (dir / "unlabeled.csv").string()) == 3);
  CHECK(run_cli("estimate" + data + " --method nonsense") == 2);
  write(dir / "bad.json", "{\"k\": ");
  CHECK(run_cli("estimate --config " + (dir / "bad.json").string() + data) == 2);
  write(dir / "narrow.csv", "y,x1\n1,2\n2,3\n3,1\n4,4\n");
  CHECK(run_cli("estimate --labeled " + (dir / "narrow.csv").string() + " --unlabeled " +
                (dir / "unlabeled.csv").string()) == 3);
  CHECK_FALSE(fs::exists(dir / "r.json"));
  fs::remove_all(dir);
}

TEST_CASE("cli compare and simulate are reproducible") {
  const fs::path dir = scratch("cmp");
  write_simulated(dir, 150, 1500, 6);
  const std::string data = " --labeled " + (dir / "labeled.csv").string() + " --unlabeled " +
                           (dir / "unlabeled.csv").string();
  REQUIRE(run_cli("compare" + data + " --method sup,bdmi,imp --nuisance bols,bridge --m 300 "
                  "--out " + (dir / "a.json").string()) == 0);
  REQUIRE(run_cli("compare" + data + " --method sup,bdmi,imp --nuisance bols,bridge --m 300 "
                  "--jobs 4 --out " + (dir / "b.json").string()) == 0);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  const json a = json::parse(slurp(dir / "a.json"));
  CHECK(a["rows"].size() == 5);
  CHECK(a["rows"][0]["method"] == "sup");

  write(dir / "sim.json",
        R"({"design": {"n": 60, "N": 300, "p": 4, "s": 2, "reps": 3, "density_reps": 1,
            "methods": "sup,bdmi:bols"}, "m": 200, "oracle_draws": 10000})");
  const std::string sim = "simulate --config " + (dir / "sim.json").string() + " --out " +
                          (dir / "s.json").string();
  REQUIRE(run_cli(sim) == 0);
  const std::string first = slurp(dir / "s.json");
  const std::string first_density = slurp(dir / "s_density" / "density_bdmi_bols.csv");
  REQUIRE(run_cli(sim + " --jobs 2") == 0);
  CHECK(slurp(dir / "s.json") == first);
  CHECK(slurp(dir / "s_density" / "density_bdmi_bols.csv") == first_density);
  CHECK(fs::exists(dir / "s.csv"));
  const json s = json::parse(first);
  CHECK(s["oracle"]["ore"].get<double>() > 1.0);
  CHECK(s["density_files"].size() == 2);
  fs::remove_all(dir);
}

TEST_CASE("shipped configs parse") {
  int count = 0;
  for (const auto& e : fs::directory_iterator(SSMEAN_CONFIG_DIR)) {
    const std::string name = e.path().stem().string();
    const Command cmd = name.starts_with("estimate")  ? Command::kEstimate
                        : name.starts_with("compare") ? Command::kCompare
                                                      : Command::kSimulate;
    CAPTURE(name);
    CHECK_NOTHROW(load_config(cmd, e.path(), json::object()));
    ++count;
  }
  CHECK(count >= 5);
}
