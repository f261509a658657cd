// fcaw: command-line driver for the factor-CAW covariance forecasting pipeline.
//
//   fcaw simulate --scenario s.json --out run
//   fcaw factor   --series run/series --rank 2 --out run
//   fcaw fit-caw  --factor-series run/factor_series --seed 1 --out run
//   fcaw evaluate --series run/series --rank 2 --k-min 80 --k-max 98 --seed 1 --out run

#include "fcaw/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <regex>

namespace {

using namespace fcaw;
namespace fs = std::filesystem;
using io::json;

constexpr const char* kVersion = "0.1.0";

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out = "out";
};

// Collects inputs, parameters and stage timings for the run manifest.
class Run {
 public:
  Run(std::string command, const Globals& g) : command_(std::move(command)), g_(g), start_(clock::now()) {
    if (!g_.config.empty()) input("config", g_.config);
  }

  fs::path out() const { return g_.out; }

  void input(const std::string& name, const fs::path& path) {
    require(fs::exists(path), ErrorCode::kIo, name + " path " + path.string() + " does not exist");
    inputs_[name] = {{"path", path.string()}, {"hash", io::hash_path(path)}};
  }

  void param(const std::string& key, json value) { params_[key] = std::move(value); }

  void output(const fs::path& path) { outputs_.push_back(path.lexically_relative(g_.out).generic_string()); }

  template <typename Fn>
  auto stage(const std::string& name, Fn&& fn) {
    const auto t0 = clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      timings_[name] = seconds_since(t0);
    } else {
      auto result = fn();
      timings_[name] = seconds_since(t0);
      return result;
    }
  }

  std::uint64_t require_seed() const {
    require(g_.seed.has_value(), ErrorCode::kInvalidArgument, command_ + " is stochastic and needs --seed");
    return *g_.seed;
  }

  void finish() {
    timings_["total"] = seconds_since(start_);
    json manifest = {{"command", command_},
                     {"tool", "fcaw"},
                     {"version", kVersion},
                     {"versions",
                      {{"fcaw", kVersion},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                     "." + std::to_string(EIGEN_MINOR_VERSION)},
                       {"cli11", CLI11_VERSION},
                       {"compiler", __VERSION__}}},
                     {"seed", g_.seed ? json(*g_.seed) : json(nullptr)},
                     {"threads", g_.threads},
                     {"config", g_.config.empty() ? json(nullptr) : json(g_.config)},
                     {"inputs", inputs_},
                     {"parameters", params_},
                     {"outputs", outputs_},
                     {"timings_seconds", timings_}};
    io::write_text(fs::path(g_.out) / (command_ + ".run.json"), manifest.dump(2) + "\n");
  }

 private:
  using clock = std::chrono::steady_clock;
  static double seconds_since(clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  }

  std::string command_;
  const Globals& g_;
  clock::time_point start_;
  json inputs_ = json::object();
  json params_ = json::object();
  json outputs_ = json::array();
  json timings_ = json::object();
};

void write_file(Run& run, const fs::path& path, const std::string& text) {
  io::write_text(path, text);
  run.output(path);
}

void write_series_dir(Run& run, const fs::path& dir, const CovMatrixSeries& s) {
  fs::remove_all(dir);
  io::write_series(dir, s);
  run.output(dir);
}

json read_json(const fs::path& path) {
  try {
    return json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, path.string() + ": " + e.what());
  }
}

double parse_clock(const std::string& text, const char* what) {
  auto v = parse_timestamp(text);
  require(v.has_value(), ErrorCode::kInvalidArgument, std::string("cannot parse ") + what + " '" + text + "'");
  return *v;
}

// "caw(1,1)" or "var(1)"
struct ModelSpec {
  bool caw = true;
  CawOrder order;
  int var_order = 1;
};

ModelSpec parse_model(const std::string& text) {
  static const std::regex caw(R"(\s*caw\s*\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*)", std::regex::icase);
  static const std::regex var(R"(\s*var\s*\(\s*(\d+)\s*\)\s*)", std::regex::icase);
  std::smatch m;
  ModelSpec s;
  if (std::regex_match(text, m, caw)) {
    s.order = {std::stoi(m[1]), std::stoi(m[2])};
    validate_order(s.order);
    return s;
  }
  if (std::regex_match(text, m, var)) {
    s.caw = false;
    s.var_order = std::stoi(m[1]);
    require(s.var_order >= 1, ErrorCode::kInvalidArgument, "VAR order must be >= 1");
    return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "model '" + text + "' is not caw(p,q) or var(n)");
}

std::string day_label_yyyymmdd(std::size_t t) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{year{2000} / January / 3} + days{static_cast<int>(t)}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d%02u%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

CawFitOptions caw_options(Eigen::Index r, int restarts, const Globals& g, std::uint64_t seed) {
  CawFitOptions opt;
  opt.restarts = restarts > 0 ? restarts : default_restarts(r);
  opt.seed = seed;
  opt.threads = g.threads;
  return opt;
}

// --- clean ----------------------------------------------------------------------

struct CleanArgs {
  std::string ticks;
  std::string open = "09:30:00";
  std::string close = "16:00:00";
  int trim_minutes = 30;
  int outlier_k = 50;
  int interval = 300;
  bool no_backfill = false;
};

void cmd_clean(const CleanArgs& a, const Globals& g) {
  Run run("clean", g);
  run.input("ticks", a.ticks);
  SessionConfig cfg;
  cfg.open_seconds = parse_clock(a.open, "session open");
  cfg.close_seconds = parse_clock(a.close, "session close");
  cfg.trim_minutes = a.trim_minutes;
  cfg.outlier_window_k = a.outlier_k;
  cfg.interval_seconds = a.interval;
  cfg.opening_backfill = !a.no_backfill;
  require(cfg.retained_close() > cfg.retained_open(), ErrorCode::kInvalidArgument, "trim leaves an empty session");
  run.param("session", {{"open", cfg.open_seconds},
                        {"close", cfg.close_seconds},
                        {"trim_minutes", cfg.trim_minutes},
                        {"outlier_window_k", cfg.outlier_window_k},
                        {"interval_seconds", cfg.interval_seconds},
                        {"opening_backfill", cfg.opening_backfill}});

  const auto dir = io::scan_tick_dir(a.ticks);
  const std::size_t n_assets = dir.assets.size();
  const std::size_t n_cells = dir.days.size() * n_assets;
  std::vector<ParsedTicks> parsed(n_cells);
  std::vector<TickSeries> cleaned(n_cells);
  run.stage("clean", [&] {
    parallel_for(n_cells, g.threads, [&](std::size_t cell) {
      const auto& day = dir.days[cell / n_assets];
      const auto& asset = dir.assets[cell % n_assets];
      const fs::path file = fs::path(a.ticks) / (asset + "_" + day + ".csv");
      require(fs::exists(file), ErrorCode::kGridMismatch, "missing tick file " + file.filename().string());
      parsed[cell] = io::read_tick_file(file);
      cleaned[cell] = clean_ticks(parsed[cell].series, cfg);
    });
  });

  const fs::path out = run.out();
  fs::remove_all(out / "cleaned");
  fs::remove_all(out / "panels");
  json report = json::array();
  run.stage("panels", [&] {
    for (std::size_t di = 0; di < dir.days.size(); ++di) {
      std::vector<TickSeries> day(cleaned.begin() + static_cast<std::ptrdiff_t>(di * n_assets),
                                  cleaned.begin() + static_cast<std::ptrdiff_t>((di + 1) * n_assets));
      for (std::size_t ai = 0; ai < n_assets; ++ai) {
        const std::size_t cell = di * n_assets + ai;
        io::write_tick_file(out / "cleaned", cleaned[cell]);
        report.push_back({{"asset", dir.assets[ai]},
                          {"day", dir.days[di]},
                          {"parsed", parsed[cell].series.ticks.size()},
                          {"parse_failures", parsed[cell].failures},
                          {"kept", cleaned[cell].ticks.size()}});
      }
      io::write_return_panel(out / "panels" / (dir.days[di] + ".csv"), build_day_panel(day, cfg), dir.assets);
    }
  });
  run.output(out / "cleaned");
  run.output(out / "panels");
  write_file(run, out / "clean_report.json", report.dump(2) + "\n");
  run.finish();
}

// --- rcov -----------------------------------------------------------------------

struct RcovArgs {
  std::string panels;
  double threshold = 0.05;
  bool psd_repair = false;
};

ReturnPanel read_panel(const fs::path& file, std::vector<std::string>& assets) {
  const std::string text = io::read_text(file);
  const auto nl = text.find('\n');
  require(nl != std::string::npos, ErrorCode::kIo, file.string() + ": missing header");
  auto header = io::split_csv_line(text.substr(0, nl));
  if (assets.empty()) assets = header;
  require(header == assets, ErrorCode::kGridMismatch, file.string() + ": asset columns differ from first panel");
  ReturnPanel p;
  p.day_id = file.stem().string();
  p.returns = io::parse_matrix_csv(text.substr(nl + 1), file.string());
  require(p.returns.cols() == static_cast<Eigen::Index>(assets.size()), ErrorCode::kGridMismatch,
          file.string() + ": column count differs from header");
  return p;
}

void cmd_rcov(const RcovArgs& a, const Globals& g) {
  Run run("rcov", g);
  run.input("panels", a.panels);
  run.param("threshold_fraction", a.threshold);
  run.param("psd_repair", a.psd_repair);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.panels)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  require(!files.empty(), ErrorCode::kIo, "no return panels in " + a.panels);

  CovMatrixSeries series;
  std::vector<ReturnPanel> panels;
  for (const auto& f : files) panels.push_back(read_panel(f, series.assets));
  series.days.resize(panels.size());
  run.stage("realized", [&] {
    parallel_for(panels.size(), g.threads, [&](std::size_t t) {
      series.days[t] = realized_cov_regularized(panels[t], {a.threshold, a.psd_repair});
    });
  });
  validate_series(series);
  write_series_dir(run, run.out() / "rcov", series);
  write_file(run, run.out() / "rcov_descriptive.csv", io::descriptive_csv(series));
  write_file(run, run.out() / "rcov_tidy.csv", io::tidy_series_csv(series));
  run.finish();
}

// --- factor ---------------------------------------------------------------------

struct FactorArgs {
  std::string series;
  int rank = 0;
};

void cmd_factor(const FactorArgs& a, const Globals& g) {
  Run run("factor", g);
  run.input("series", a.series);
  const CovMatrixSeries series = io::read_series(a.series);
  require(a.rank >= 1, ErrorCode::kBadRank, "--rank is required and must be >= 1");
  run.param("rank", a.rank);
  const FactorModelFit fit = run.stage("fit", [&] { return fit_factor_model(series, a.rank); });

  std::vector<std::string> labels;
  for (const auto& d : series.days) labels.push_back(d.day_id);
  const auto fseries = io::make_series(fit.factor_series, io::factor_names(fit.rank()), labels);
  write_file(run, run.out() / "factor_fit.json", io::factor_fit_json(fit, series.assets).dump(2) + "\n");
  write_series_dir(run, run.out() / "factor_series", fseries);
  write_file(run, run.out() / "scree.csv", io::scree_csv(fit.eigenvalues));
  write_file(run, run.out() / "factor_tidy.csv", io::tidy_series_csv(fseries));
  run.finish();
}

// --- fit-caw --------------------------------------------------------------------

struct FitCawArgs {
  std::string factor_series;
  int p = 1;
  int q = 1;
  int restarts = 0;
};

void cmd_fit_caw(const FitCawArgs& a, const Globals& g) {
  Run run("fit-caw", g);
  run.input("factor_series", a.factor_series);
  const std::uint64_t seed = run.require_seed();
  const CawOrder order{a.p, a.q};
  validate_order(order);
  const auto obs = io::read_series(a.factor_series).matrices();
  require(!obs.empty(), ErrorCode::kInsufficientHistory, "empty factor series");
  const auto opt = caw_options(obs.front().rows(), a.restarts, g, seed);
  run.param("order", {{"p", a.p}, {"q", a.q}});
  run.param("restarts", opt.restarts);
  const CawFit f = run.stage("fit", [&] { return fit(obs, order, opt); });
  write_file(run, run.out() / "caw_fit.json", io::caw_fit_json(f).dump(2) + "\n");
  run.finish();
}

// --- fit-var --------------------------------------------------------------------

struct FitVarArgs {
  std::string factor_series;
  int order = 1;
  int max_order = 5;
};

void cmd_fit_var(const FitVarArgs& a, const Globals& g) {
  Run run("fit-var", g);
  run.input("factor_series", a.factor_series);
  const Matrix y = vech_series(io::read_series(a.factor_series).matrices());
  run.param("order", a.order);
  run.param("max_order", a.max_order);
  if (a.max_order >= 1) {
    const auto crit = run.stage("criteria", [&] { return order_criteria(y, a.max_order); });
    write_file(run, run.out() / "var_criteria.csv", io::criteria_csv(crit));
  }
  const VarFit f = run.stage("fit", [&] { return fit_var(y, a.order); });
  write_file(run, run.out() / "var_fit.json", io::var_fit_json(f).dump(2) + "\n");
  write_file(run, run.out() / "var_residuals.csv", io::residuals_csv(f.residuals));
  std::string sparsity = "lag,m,value\n";
  const std::vector<double> ms{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  for (std::size_t i = 0; i < f.coefficients.size(); ++i) {
    const auto vals = sparsity_measure(f.coefficients[i], ms);
    for (std::size_t k = 0; k < ms.size(); ++k) {
      sparsity += std::to_string(i + 1) + "," + io::fmt(ms[k]) + "," + io::fmt(vals[k]) + "\n";
    }
  }
  write_file(run, run.out() / "var_sparsity.csv", sparsity);
  run.finish();
}

// --- forecast -------------------------------------------------------------------

struct ForecastArgs {
  std::string fit;
  std::string factor_series;
  std::string factor_fit;
  int horizon = 1;
};

void cmd_forecast(const ForecastArgs& a, const Globals& g) {
  Run run("forecast", g);
  run.input("fit", a.fit);
  run.input("factor_series", a.factor_series);
  if (!a.factor_fit.empty()) run.input("factor_fit", a.factor_fit);
  require(a.horizon >= 1, ErrorCode::kInvalidArgument, "--horizon must be >= 1");
  run.param("horizon", a.horizon);
  const json j = read_json(a.fit);
  const auto fseries = io::read_series(a.factor_series);
  const auto obs = fseries.matrices();

  MatrixSeries fc;
  std::string psd = "horizon,psd\n";
  const std::string model = j.value("model", std::string{});
  if (model == "caw") {
    const CawParams p = io::caw_params_from_json(j.at("natural"));
    fc = run.stage("forecast", [&] { return forecast(p, obs, a.horizon); });
    for (int h = 1; h <= a.horizon; ++h) psd += std::to_string(h) + ",true\n";
  } else if (model == "var") {
    const VarFit f = io::var_fit_from_json(j);
    const auto vf = run.stage("forecast", [&] { return var_forecast(f, vech_series(obs), a.horizon); });
    for (int h = 1; h <= a.horizon; ++h) {
      fc.push_back(vf[static_cast<std::size_t>(h - 1)].matrix);
      psd += std::to_string(h) + "," + (vf[static_cast<std::size_t>(h - 1)].psd ? "true" : "false") + "\n";
    }
  } else {
    throw Error(ErrorCode::kIo, a.fit + ": unknown model kind '" + model + "'");
  }
  run.param("model", model);

  std::vector<std::string> labels;
  for (int h = 1; h <= a.horizon; ++h) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "H%03d", h);
    labels.emplace_back(buf);
  }
  write_series_dir(run, run.out() / "forecast_factor", io::make_series(fc, fseries.assets, labels));
  write_file(run, run.out() / "forecast_psd.csv", psd);
  if (!a.factor_fit.empty()) {
    const json fj = read_json(a.factor_fit);
    const FactorModelFit ff = io::factor_fit_from_json(fj);
    MatrixSeries asset;
    for (const auto& m : fc) asset.push_back(to_asset_space(m, ff));
    write_series_dir(run, run.out() / "forecast_asset",
                     io::make_series(asset, fj.at("assets").get<std::vector<std::string>>(), labels));
  }
  run.finish();
}

// --- evaluate -------------------------------------------------------------------

struct EvaluateArgs {
  std::string series;
  int rank = 0;
  int k_min = 0;
  int k_max = 0;
  std::vector<int> horizons{1};
  std::vector<std::string> models{"caw(0,1)", "caw(1,1)", "var(1)"};
  int restarts = 0;
  bool no_inverse = false;
  double inverse_tol = 1e-10;
};

void cmd_evaluate(const EvaluateArgs& a, const Globals& g) {
  Run run("evaluate", g);
  run.input("series", a.series);
  const CovMatrixSeries series = io::read_series(a.series);
  require(a.rank >= 1 && a.rank <= series.dim(), ErrorCode::kBadRank, "--rank must lie in [1, d]");

  RollingSpec spec;
  require(a.k_min >= 0 && a.k_max >= 0, ErrorCode::kInvalidArgument, "window bounds must be non-negative");
  spec.k_min = static_cast<std::size_t>(a.k_min);
  spec.k_max = static_cast<std::size_t>(a.k_max);
  spec.horizons = a.horizons;
  spec.factor_rank = a.rank;
  spec.threads = g.threads;
  spec.inverse_errors = !a.no_inverse;
  spec.inverse_rel_tol = a.inverse_tol;

  std::vector<ModelSpec> models;
  for (const auto& m : a.models) models.push_back(parse_model(m));
  const bool stochastic = std::any_of(models.begin(), models.end(), [](const ModelSpec& m) { return m.caw; });
  spec.seed = stochastic ? run.require_seed() : g.seed.value_or(0);
  // placeholder models so the window/horizon check runs before any fitting
  spec.models.resize(models.size());
  validate_rolling(spec, series.size());

  const auto caw_opt = caw_options(a.rank, a.restarts, g, spec.seed);
  spec.models.clear();
  for (const auto& m : models) {
    spec.models.push_back(m.caw ? caw_rolling_model(m.order, caw_opt) : var_rolling_model(m.var_order));
  }
  run.param("rank", a.rank);
  run.param("k_min", a.k_min);
  run.param("k_max", a.k_max);
  run.param("horizons", a.horizons);
  run.param("models", a.models);
  run.param("restarts", caw_opt.restarts);
  run.param("inverse_errors", spec.inverse_errors);

  const RollingReport rep = run.stage("rolling", [&] { return rolling_compare(series.matrices(), spec); });
  std::string all;
  for (const auto& table : rep.tables) {
    const std::string csv = io::error_table_csv(table);
    write_file(run, run.out() / ("error_table_h" + std::to_string(table.horizon) + ".csv"), csv);
    all += all.empty() ? csv : csv.substr(csv.find('\n') + 1);
  }
  write_file(run, run.out() / "error_table.csv", all);
  write_file(run, run.out() / "windows.jsonl", io::window_jsonl(rep.windows));
  run.finish();
}

// --- simulate -------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  int tick_days = 0;
  double tick_scale = 1e-4;
  double tick_noise = 0.0;
  double trade_prob = 0.2;
};

void cmd_simulate(const SimulateArgs& a, const Globals& g) {
  Run run("simulate", g);
  run.input("scenario", a.scenario);
  json scenario = read_json(a.scenario);
  if (g.seed) scenario["seed"] = *g.seed;
  require(scenario.contains("seed"), ErrorCode::kInvalidArgument, "simulation needs a seed (scenario or --seed)");
  const SimConfig cfg = io::sim_config_from_json(scenario);
  run.param("scenario", io::sim_config_json(cfg));
  if (a.tick_days > 0) {
    require(a.tick_days <= cfg.T, ErrorCode::kInvalidArgument, "--tick-days exceeds the simulated horizon");
    require(cfg.d <= 5, ErrorCode::kInvalidArgument, "tick simulation supports d <= 5");
    require(a.tick_scale > 0.0, ErrorCode::kInvalidArgument, "--tick-scale must be positive");
  }

  const SimulatedPanel panel = run.stage("panel", [&] { return simulate_panel(cfg); });
  const fs::path out = run.out();
  write_series_dir(run, out / "series", panel.series);
  std::vector<std::string> labels;
  for (const auto& d : panel.series.days) labels.push_back(d.day_id);
  write_series_dir(run, out / "truth_factor_series",
                   io::make_series(panel.factor_series, io::factor_names(cfg.r), labels));
  json truth = {{"scenario", io::sim_config_json(cfg)},
                {"loadings", io::matrix_json(panel.loadings)},
                {"sigma0", io::matrix_json(panel.sigma0)}};
  write_file(run, out / "truth.json", truth.dump(2) + "\n");

  if (a.tick_days > 0) {
    TickSimConfig tc;
    tc.d = cfg.d;
    for (int t = 0; t < a.tick_days; ++t) tc.daily_covs.push_back(a.tick_scale * panel.clean_series[static_cast<std::size_t>(t)]);
    tc.noise_sd = a.tick_noise;
    tc.trade_prob = a.trade_prob;
    tc.seed = cfg.seed;
    run.param("ticks", {{"days", a.tick_days}, {"scale", a.tick_scale}, {"noise_sd", a.tick_noise},
                        {"trade_prob", a.trade_prob}});
    const auto days = run.stage("ticks", [&] { return simulate_ticks(tc); });
    fs::remove_all(out / "ticks");
    for (std::size_t t = 0; t < days.size(); ++t) {
      for (auto s : days[t]) {
        s.day_id = day_label_yyyymmdd(t);
        io::write_tick_file(out / "ticks", s);
      }
    }
    run.output(out / "ticks");
  }
  run.finish();
}

void emit_error(const std::string& command, const std::string& code, const std::string& message) {
  json line = {{"status", "error"}, {"command", command}, {"code", code}, {"message", message}};
  std::cerr << line.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factor-CAW realized covariance forecasting", "fcaw"};
  app.set_version_flag("--version", std::string("fcaw ") + kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals g;
  app.set_config("--config", "", "Key-value config file; one [section] per subcommand");
  app.add_option("--seed", g.seed, "Top-level seed for every random stream");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  CleanArgs clean;
  auto* c_clean = app.add_subcommand("clean", "Clean tick files and build intraday return panels");
  c_clean->add_option("--ticks", clean.ticks, "Directory of {ASSET}_{YYYYMMDD}.csv files")->required();
  c_clean->add_option("--open", clean.open, "Session open (HH:MM:SS)")->capture_default_str();
  c_clean->add_option("--close", clean.close, "Session close (HH:MM:SS)")->capture_default_str();
  c_clean->add_option("--trim-minutes", clean.trim_minutes)->capture_default_str();
  c_clean->add_option("--outlier-k", clean.outlier_k, "Outlier neighborhood size")->capture_default_str();
  c_clean->add_option("--interval", clean.interval, "Grid interval in seconds")->capture_default_str();
  c_clean->add_flag("--no-backfill", clean.no_backfill, "Do not carry the first price back to the grid start");

  RcovArgs rcov;
  auto* c_rcov = app.add_subcommand("rcov", "Daily realized covariance matrices from return panels");
  c_rcov->add_option("--panels", rcov.panels, "Directory of return panels")->required();
  c_rcov->add_option("--threshold", rcov.threshold, "Off-diagonal threshold fraction")->capture_default_str();
  c_rcov->add_flag("--psd-repair", rcov.psd_repair, "Clip negative eigenvalues after thresholding");

  FactorArgs factor;
  auto* c_factor = app.add_subcommand("factor", "Fit the matrix factor model");
  c_factor->add_option("--series", factor.series, "Matrix-series directory")->required();
  c_factor->add_option("--rank", factor.rank, "Number of factors r")->required();

  FitCawArgs caw;
  auto* c_caw = app.add_subcommand("fit-caw", "Fit a diagonal CAW(p,q) model to the factor series");
  c_caw->add_option("--factor-series", caw.factor_series)->required();
  c_caw->add_option("--p", caw.p)->capture_default_str();
  c_caw->add_option("--q", caw.q)->capture_default_str();
  c_caw->add_option("--restarts", caw.restarts, "Random restarts (0 = 160 for r <= 3, else 60)")->capture_default_str();

  FitVarArgs var;
  auto* c_var = app.add_subcommand("fit-var", "Fit the VAR benchmark on the vech factor series");
  c_var->add_option("--factor-series", var.factor_series)->required();
  c_var->add_option("--order", var.order)->capture_default_str();
  c_var->add_option("--max-order", var.max_order, "Largest order in the criteria table (0 = skip)")->capture_default_str();

  ForecastArgs fc;
  auto* c_fc = app.add_subcommand("forecast", "Multi-step forecasts from a fitted model");
  c_fc->add_option("--fit", fc.fit, "caw_fit.json or var_fit.json")->required();
  c_fc->add_option("--factor-series", fc.factor_series)->required();
  c_fc->add_option("--factor-fit", fc.factor_fit, "factor_fit.json to map forecasts to asset space");
  c_fc->add_option("--horizon", fc.horizon)->capture_default_str();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Rolling out-of-sample comparison");
  c_ev->add_option("--series", ev.series, "Asset-space matrix-series directory")->required();
  c_ev->add_option("--rank", ev.rank)->required();
  c_ev->add_option("--k-min", ev.k_min, "First training length")->required();
  c_ev->add_option("--k-max", ev.k_max, "Last training length")->required();
  c_ev->add_option("--horizon", ev.horizons, "Forecast horizons")->delimiter(',')->capture_default_str();
  c_ev->add_option("--model", ev.models, "caw(p,q) or var(n); repeatable")->capture_default_str();
  c_ev->add_option("--restarts", ev.restarts, "CAW restarts per window (0 = default)")->capture_default_str();
  c_ev->add_flag("--no-inverse", ev.no_inverse, "Skip inverse-matrix errors");
  c_ev->add_option("--inverse-tol", ev.inverse_tol, "Relative eigenvalue floor for inverses")->capture_default_str();

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Simulate a factor-CAW panel from a scenario file");
  c_sim->add_option("--scenario", sim.scenario, "Scenario JSON")->required();
  c_sim->add_option("--tick-days", sim.tick_days, "Also simulate tick files for this many days (d <= 5)")
      ->capture_default_str();
  c_sim->add_option("--tick-scale", sim.tick_scale, "Multiplier from simulated matrices to daily covariance")
      ->capture_default_str();
  c_sim->add_option("--tick-noise", sim.tick_noise, "Log-price noise standard deviation")->capture_default_str();
  c_sim->add_option("--trade-prob", sim.trade_prob, "Per-second trade probability")->capture_default_str();

  std::string command = "fcaw";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    return app.exit(CLI::CallForHelp());
  } catch (const CLI::CallForAllHelp&) {
    return app.exit(CLI::CallForAllHelp());
  } catch (const CLI::CallForVersion&) {
    std::cout << app.get_version_ptr()->get_description() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    if (!app.get_subcommands().empty()) command = app.get_subcommands().front()->get_name();
    emit_error(command, "UsageError", e.what());
    return 2;
  }

  command = app.get_subcommands().front()->get_name();
  if (auto* cfg = app.get_config_ptr(); cfg && cfg->count() > 0) g.config = cfg->as<std::string>();
  try {
    if (command == "clean") cmd_clean(clean, g);
    else if (command == "rcov") cmd_rcov(rcov, g);
    else if (command == "factor") cmd_factor(factor, g);
    else if (command == "fit-caw") cmd_fit_caw(caw, g);
    else if (command == "fit-var") cmd_fit_var(var, g);
    else if (command == "forecast") cmd_forecast(fc, g);
    else if (command == "evaluate") cmd_evaluate(ev, g);
    else if (command == "simulate") cmd_simulate(sim, g);
  } catch (const Error& e) {
    std::string msg = e.what();
    const std::string prefix = std::string(to_string(e.code())) + ": ";
    if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
    emit_error(command, std::string(to_string(e.code())), msg);
    return 1;
  } catch (const std::exception& e) {
    emit_error(command, "InternalError", e.what());
    return 1;
  }
  return 0;
}
