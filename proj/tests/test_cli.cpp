#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ruinex/cli.hpp"

using namespace ruinex;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs{RUINEX_CONFIG_DIR};

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "ruinex_cli_test";
  fs::create_directories(d);
  return d;
}

fs::path write_config(const std::string& name, const json& j) {
  const fs::path p = temp_dir() / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ruinex");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST(Config, EveryShippedConfigRoundTrips) {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    const cli::ExperimentConfig c = cli::load_config(entry.path().string());
    const cli::ExperimentConfig back = cli::config_from_json(cli::to_json(c));
    EXPECT_TRUE(back == c) << entry.path();
    EXPECT_EQ(cli::to_json(back).dump(), cli::to_json(c).dump());
    ++n;
  }
  EXPECT_GE(n, 12u);
}

TEST(Config, HorizonAndEstimatorVariants) {
  cli::ExperimentConfig c;
  c.subcommand = "simulate";
  c.seed = 99;
  c.path.horizon = TruncatedUltimate{1e-10, 5000, 20};
  c.path.u0_grid = {1.0, 2.5};
  c.estimator.estimator = Estimator::hill;
  c.estimator.top_fraction = 0.02;
  c.params = {{"samples", 10}};
  const auto back = cli::config_from_json(cli::to_json(c));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(std::get<TruncatedUltimate>(back.path.horizon).n_max, 5000u);
  EXPECT_EQ(back.estimator.estimator, Estimator::hill);
}

TEST(Config, RejectsWrongSchemaVersion) {
  EXPECT_THROW(cli::config_from_json(json{{"schema_version", 2}}), ConfigError);
  EXPECT_THROW(cli::config_from_json(json::array()), ConfigError);
}

TEST(ExitCodes, EmptyLawListIsUsageError) {
  const auto p = write_config("empty_laws.json", {{"schema_version", 1}, {"subcommand", "laws"}, {"params", {{"laws", json::array()}}}});
  EXPECT_EQ(run_cli({"laws", "--config", p.string()}).code, 2);
}

TEST(ExitCodes, UnknownLawIdIsUsageError) {
  json j = read_json(kConfigs / "laws_basic.json");
  j["params"]["laws"] = {"affine", "no-such-law"};
  const auto p = write_config("bad_law.json", j);
  EXPECT_EQ(run_cli({"laws", "--config", p.string()}).code, 2);
}

TEST(ExitCodes, MissingConfigAndUnknownSubcommand) {
  EXPECT_EQ(run_cli({"esssup", "--config", (temp_dir() / "nope.json").string()}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"esssup"}).code, 2);
}

TEST(ExitCodes, ConfigForAnotherSubcommand) {
  EXPECT_EQ(run_cli({"h", "--config", (kConfigs / "esssup_switching.json").string()}).code, 2);
}

TEST(ExitCodes, ValidateRejectsNegativeA) {
  json j = read_json(kConfigs / "validate.json");
  j["spec"]["a"] = {{"kind", "normal"}, {"mu", 0.0}, {"sigma", 1.0}};
  const auto p = write_config("bad_spec.json", j);
  const CliRun r = run_cli({"validate", "--config", p.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("rejected"), std::string::npos);
  EXPECT_EQ(run_cli({"validate", "--config", (kConfigs / "validate.json").string()}).code, 0);
}

TEST(ExitCodes, RefusalIsTwo) {
  json j = read_json(kConfigs / "validate.json");
  j["subcommand"] = "simulate";
  j["spec"]["a"] = {{"kind", "lognormal"}, {"mu", 0.5}, {"sigma", 0.5}};
  j["path"] = {{"n_paths", 100}, {"u0_grid", {1.0}}};
  const auto p = write_config("refuse.json", j);
  const CliRun r = run_cli({"simulate", "--config", p.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("refused"), std::string::npos);
}

TEST(Artifacts, EsssupTableAndProvenance) {
  const fs::path js = temp_dir() / "esssup.json", csv = temp_dir() / "esssup.csv";
  const CliRun r = run_cli({"esssup", "--config", (kConfigs / "esssup_switching.json").string(), "--out-json", js.string(),
                         "--out-csv", csv.string(), "--seed", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("unbounded"), std::string::npos);
  const json doc = read_json(js);
  EXPECT_EQ(doc.at("schema_version"), 1);
  EXPECT_EQ(doc.at("seed"), 5);
  EXPECT_FALSE(doc.at("spec_digest").get<std::string>().empty());
  EXPECT_EQ(doc.at("config").at("subcommand"), "esssup");
  std::ifstream in(csv);
  std::string first, header, line;
  std::getline(in, first);
  std::getline(in, header);
  EXPECT_EQ(first.rfind("# seed=5 spec_digest=", 0), 0u);
  EXPECT_EQ(header, "k,y_bar");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], "0,0");
  EXPECT_EQ(rows[4], "4,4");
  EXPECT_EQ(rows[5], "5,inf");
}

TEST(Artifacts, SameSeedSameResult) {
  json j = read_json(kConfigs / "simulate.json");
  j["path"]["n_paths"] = 2000;
  const auto p = write_config("sim.json", j);
  const fs::path a = temp_dir() / "a.json", b = temp_dir() / "b.json";
  ASSERT_NE(run_cli({"simulate", "--config", p.string(), "--out-json", a.string()}).code, 2);
  ASSERT_NE(run_cli({"simulate", "--config", p.string(), "--out-json", b.string(), "--workers", "3"}).code, 2);
  EXPECT_EQ(read_json(a).at("result"), read_json(b).at("result"));
}

TEST(Subcommands, HValuesOnGrid) {
  const fs::path js = temp_dir() / "h.json";
  const CliRun r = run_cli({"h", "--config", (kConfigs / "h_discontinuous.json").string(), "--out-json", js.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(read_json(js).at("result").is_object());
}

TEST(Subcommands, LawsBasicPasses) {
  const CliRun r = run_cli({"laws", "--config", (kConfigs / "laws_basic.json").string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
}
