#include "fcaw/io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace fcaw;
namespace fs = std::filesystem;
using io::json;

namespace {

struct Result {
  int status = -1;
  std::string err;
};

fs::path root() {
  static const fs::path p = [] {
    fs::path d = fs::temp_directory_path() / ("fcaw_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return p;
}

Result run(const std::string& args) {
  const fs::path err = root() / "stderr.txt";
  const std::string cmd = std::string(FCAW_CLI_PATH) + " " + args + " > /dev/null 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  Result r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = io::read_text(err);
  return r;
}

fs::path scenario() {
  const fs::path p = root() / "scenario.json";
  if (!fs::exists(p)) {
    io::write_text(p, R"({"d":5,"r":2,"T":90,"epsilon":0.001,"seed":4,
      "truth":{"nu":15,"c":[0.5,0.4],"b":[[0.8,0.85]],"a":[[0.45,0.4]]}})");
  }
  return p;
}

std::string pipeline(const std::string& dir, const std::string& extra = "") {
  const fs::path out = root() / dir;
  const std::string o = " --out " + out.string() + extra;
  EXPECT_EQ(run("simulate --scenario " + scenario().string() + o).status, 0);
  EXPECT_EQ(run("factor --series " + (out / "series").string() + " --rank 2" + o).status, 0);
  EXPECT_EQ(run("fit-caw --factor-series " + (out / "factor_series").string() + " --restarts 3 --seed 9" + o).status, 0);
  const auto r = run("evaluate --series " + (out / "series").string() +
                     " --rank 2 --k-min 80 --k-max 85 --horizon 1,2 --restarts 2 --seed 9" + o);
  EXPECT_EQ(r.status, 0) << r.err;
  return out.string();
}

// every file under dir except run manifests, which carry timings
std::map<std::string, std::string> numeric_outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.size() > 9 && name.substr(name.size() - 9) == ".run.json") continue;
    out[fs::relative(e.path(), dir).generic_string()] = io::read_text(e.path());
  }
  return out;
}

}  // namespace

TEST(Cli, PipelineProducesErrorTable) {
  const fs::path out = pipeline("pipe");
  const std::string table = io::read_text(out / "error_table.csv");
  EXPECT_EQ(table.rfind("model,horizon,num_params,fn,sn,fn_inverse,sn_inverse,windows,inverse_excluded\n", 0), 0u);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 1 + 3 * 2);
  EXPECT_NE(table.find("CAW(1,1),2,7,"), std::string::npos);

  const json manifest = json::parse(io::read_text(out / "evaluate.run.json"));
  EXPECT_EQ(manifest.at("seed").get<int>(), 9);
  EXPECT_EQ(manifest.at("inputs").at("series").at("hash").get<std::string>(), io::hash_path(out / "series"));
  EXPECT_TRUE(manifest.at("timings_seconds").contains("total"));
  EXPECT_FALSE(manifest.at("version").get<std::string>().empty());
  for (const char* cmd : {"simulate", "factor", "fit-caw"}) EXPECT_TRUE(fs::exists(out / (std::string(cmd) + ".run.json")));

  const json fit = json::parse(io::read_text(out / "caw_fit.json"));
  EXPECT_EQ(fit.at("model").get<std::string>(), "caw");
}

TEST(Cli, RerunIsByteIdentical) {
  const auto a = numeric_outputs(pipeline("rerun_a"));
  const auto b = numeric_outputs(pipeline("rerun_b", " --threads 2"));
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a.size(), b.size());
  for (const auto& [name, text] : a) {
    ASSERT_TRUE(b.count(name)) << name;
    EXPECT_EQ(text, b.at(name)) << name;
  }
}

TEST(Cli, EvaluateRejectsShortHistoryBeforeWork) {
  const fs::path series = root() / "short_series";
  EXPECT_EQ(run("simulate --scenario " + scenario().string() + " --out " + (root() / "short").string()).status, 0);
  fs::rename(root() / "short" / "series", series);
  const fs::path out = root() / "short_eval";
  // T = 90, k_max + h = 89 + 2
  const auto r = run("evaluate --series " + series.string() + " --rank 2 --k-min 80 --k-max 89 --horizon 1,2 --seed 1" +
                     " --out " + out.string());
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
  const json line = json::parse(r.err);
  EXPECT_EQ(line.at("status").get<std::string>(), "error");
  EXPECT_EQ(line.at("code").get<std::string>(), "InsufficientHistory");
  EXPECT_EQ(line.at("command").get<std::string>(), "evaluate");
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, FlagsOverrideConfigFile) {
  const fs::path out = pipeline("cfg");
  const fs::path cfg = root() / "settings.ini";
  io::write_text(cfg, "seed = 3\n\n[factor]\nrank = 2\n");
  ASSERT_EQ(run("--config " + cfg.string() + " factor --series " + (out / "series").string() + " --out " +
                (root() / "cfg_a").string()).status, 0);
  EXPECT_EQ(io::read_series(root() / "cfg_a" / "factor_series").dim(), 2);
  const json m = json::parse(io::read_text(root() / "cfg_a" / "factor.run.json"));
  EXPECT_EQ(m.at("seed").get<int>(), 3);
  EXPECT_TRUE(m.at("inputs").contains("config"));

  ASSERT_EQ(run("--config " + cfg.string() + " factor --series " + (out / "series").string() + " --rank 1 --seed 8" +
                " --out " + (root() / "cfg_b").string()).status, 0);
  EXPECT_EQ(io::read_series(root() / "cfg_b" / "factor_series").dim(), 1);
  EXPECT_EQ(json::parse(io::read_text(root() / "cfg_b" / "factor.run.json")).at("seed").get<int>(), 8);

  io::write_text(cfg, "[factor]\nrnak = 2\n");
  const auto bad = run("--config " + cfg.string() + " factor --series " + (out / "series").string());
  EXPECT_NE(bad.status, 0);
  EXPECT_EQ(json::parse(bad.err).at("code").get<std::string>(), "UsageError");
}

TEST(Cli, ErrorsAreSingleStructuredLines) {
  for (const std::string args : {"", "factor --series /nonexistent --rank 2", "fit-caw --factor-series /nonexistent",
                                 "simulate --scenario /nonexistent --seed 1", "factor --rank x --series y"}) {
    const auto r = run(args + " --out " + (root() / "errs").string());
    EXPECT_NE(r.status, 0) << args;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << args;
    EXPECT_NO_THROW(json::parse(r.err)) << args;
  }
}

TEST(Cli, StochasticCommandsNeedSeed) {
  const fs::path out = pipeline("seedless");
  const auto r = run("fit-caw --factor-series " + (out / "factor_series").string() + " --out " + out.string());
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(json::parse(r.err).at("code").get<std::string>(), "InvalidArgument");
}

TEST(Cli, TicksToRealizedCovariances) {
  const fs::path sim = root() / "ticks";
  ASSERT_EQ(run("simulate --scenario " + scenario().string() + " --tick-days 2 --out " + sim.string()).status, 0);
  ASSERT_EQ(run("clean --ticks " + (sim / "ticks").string() + " --out " + sim.string()).status, 0);
  ASSERT_EQ(run("rcov --panels " + (sim / "panels").string() + " --out " + sim.string()).status, 0);
  const auto rc = io::read_series(sim / "rcov");
  EXPECT_EQ(rc.size(), 2u);
  EXPECT_EQ(rc.dim(), 5);
  for (const auto& d : rc.days) EXPECT_GE(min_eigenvalue(d.values), -1e-15);

  ASSERT_EQ(run("factor --series " + (sim / "series").string() + " --rank 2 --out " + sim.string()).status, 0);
  ASSERT_EQ(run("fit-var --factor-series " + (sim / "factor_series").string() + " --out " + sim.string()).status, 0);
  ASSERT_EQ(run("forecast --fit " + (sim / "var_fit.json").string() + " --factor-series " +
                (sim / "factor_series").string() + " --factor-fit " + (sim / "factor_fit.json").string() +
                " --horizon 3 --out " + sim.string()).status, 0);
  EXPECT_EQ(io::read_series(sim / "forecast_asset").size(), 3u);
}
