#pragma once

// File formats: tick CSVs, return panels, the per-day matrix-series directory
// with its manifest, model fits as JSON and tidy CSV tables.

#include "fcaw/caw.hpp"
#include "fcaw/core.hpp"
#include "fcaw/evaluation.hpp"
#include "fcaw/factor.hpp"
#include "fcaw/market_data.hpp"
#include "fcaw/rcov.hpp"
#include "fcaw/simulation.hpp"
#include "fcaw/var.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fcaw::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kSeriesManifest = "manifest.json";
inline constexpr const char* kSeriesFormat = "fcaw-matrix-series";

/// Shortest representation that round-trips exactly.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed for " + path.string());
}

/// 64-bit FNV-1a of a byte string.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Hash of a file, or of every regular file below a directory (sorted by
/// relative path, names included).
inline std::string hash_path(const fs::path& path) {
  if (fs::is_regular_file(path)) return hex64(fnv1a64(read_text(path)));
  require(fs::is_directory(path), ErrorCode::kIo, "no such path " + path.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(path)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string acc;
  for (const auto& f : files) {
    acc += fs::relative(f, path).generic_string();
    acc += '\0';
    acc += hex64(fnv1a64(read_text(f)));
  }
  return hex64(fnv1a64(acc));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// --- matrices ---------------------------------------------------------------

inline std::string matrix_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += fmt(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline Matrix parse_matrix_csv(const std::string& text, const std::string& origin = "matrix") {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    for (const auto& field : split_csv_line(line)) {
      auto v = detail::parse_double(field);
      require(v.has_value(), ErrorCode::kIo, origin + ": non-numeric field '" + field + "'");
      row.push_back(*v);
    }
    require(rows.empty() || row.size() == rows.front().size(), ErrorCode::kIo, origin + ": ragged rows");
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorCode::kIo, origin + ": empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

inline void write_matrix_csv(const fs::path& path, const Matrix& m) { write_text(path, matrix_csv(m)); }
inline Matrix read_matrix_csv(const fs::path& path) { return parse_matrix_csv(read_text(path), path.string()); }

inline json matrix_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(data.size()) == rows * cols, ErrorCode::kIo, "matrix JSON size mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[static_cast<std::size_t>(i * cols + j2)];
  }
  return m;
}

inline json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

// --- matrix series directory --------------------------------------------------

/// One CSV per day ({day_id}.csv) plus manifest.json with the asset registry
/// and day order.
inline void write_series(const fs::path& dir, const CovMatrixSeries& series) {
  validate_series(series);
  fs::create_directories(dir);
  json days = json::array();
  for (const auto& day : series.days) {
    const std::string file = day.day_id + ".csv";
    write_matrix_csv(dir / file, day.values);
    days.push_back({{"day_id", day.day_id}, {"file", file}});
  }
  json manifest = {{"format", kSeriesFormat},
                   {"version", 1},
                   {"dimension", series.dim()},
                   {"assets", series.assets},
                   {"days", days}};
  write_text(dir / kSeriesManifest, manifest.dump(2) + "\n");
}

inline CovMatrixSeries read_series(const fs::path& dir) {
  const json manifest = json::parse(read_text(dir / kSeriesManifest));
  require(manifest.value("format", std::string{}) == kSeriesFormat, ErrorCode::kIo,
          (dir / kSeriesManifest).string() + " is not a matrix-series manifest");
  CovMatrixSeries series;
  series.assets = manifest.at("assets").get<std::vector<std::string>>();
  for (const auto& day : manifest.at("days")) {
    series.days.push_back({day.at("day_id").get<std::string>(), read_matrix_csv(dir / day.at("file").get<std::string>())});
  }
  validate_series(series);
  return series;
}

inline CovMatrixSeries make_series(const MatrixSeries& mats, std::vector<std::string> assets,
                                   std::vector<std::string> labels) {
  require(labels.size() == mats.size(), ErrorCode::kInvalidArgument, "label count mismatch");
  CovMatrixSeries s;
  s.assets = std::move(assets);
  for (std::size_t t = 0; t < mats.size(); ++t) s.days.push_back({labels[t], mats[t]});
  return s;
}

inline std::vector<std::string> factor_names(Eigen::Index r) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < r; ++j) out.push_back("F" + std::to_string(j + 1));
  return out;
}

// --- ticks and return panels ------------------------------------------------

struct TickFileName {
  std::string asset;
  std::string day;
};

/// "{ASSET}_{YYYYMMDD}.csv"; the asset part may itself contain underscores.
inline std::optional<TickFileName> parse_tick_file_name(const fs::path& path) {
  if (path.extension() != ".csv") return std::nullopt;
  const std::string stem = path.stem().string();
  const auto us = stem.rfind('_');
  if (us == std::string::npos || us == 0) return std::nullopt;
  std::string day = stem.substr(us + 1);
  if (day.size() != 8 || !std::all_of(day.begin(), day.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return std::nullopt;
  }
  return TickFileName{stem.substr(0, us), day};
}

inline std::vector<RawTickRow> parse_tick_csv(const std::string& text) {
  std::vector<RawTickRow> rows;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (header) {
      header = false;
      if (line.find("timestamp") != std::string::npos) continue;
    }
    auto fields = split_csv_line(line);
    rows.push_back({fields[0], fields.size() > 1 ? fields[1] : std::string{}});
  }
  return rows;
}

inline ParsedTicks read_tick_file(const fs::path& path) {
  auto name = parse_tick_file_name(path);
  require(name.has_value(), ErrorCode::kIo, path.string() + " is not named {ASSET}_{YYYYMMDD}.csv");
  return parse_ticks(parse_tick_csv(read_text(path)), name->day, name->asset);
}

inline void write_tick_file(const fs::path& dir, const TickSeries& s) {
  std::string text = "timestamp,price\n";
  for (const auto& t : s.ticks) text += format_timestamp(t.timestamp) + "," + fmt(t.price) + "\n";
  write_text(dir / (s.asset_id + "_" + s.day_id + ".csv"), text);
}

struct TickDirectory {
  std::vector<std::string> assets;  // sorted registry
  std::vector<std::string> days;    // sorted
  std::vector<fs::path> files;
};

inline TickDirectory scan_tick_dir(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCode::kIo, "tick directory " + dir.string() + " does not exist");
  TickDirectory out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto name = parse_tick_file_name(e.path());
    if (!name) continue;
    out.files.push_back(e.path());
    out.assets.push_back(name->asset);
    out.days.push_back(name->day);
  }
  auto uniq = [](std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(out.assets);
  uniq(out.days);
  std::sort(out.files.begin(), out.files.end());
  require(!out.files.empty(), ErrorCode::kIo, "no {ASSET}_{YYYYMMDD}.csv files in " + dir.string());
  return out;
}

inline void write_return_panel(const fs::path& path, const ReturnPanel& panel, const std::vector<std::string>& assets) {
  std::string text;
  for (std::size_t i = 0; i < assets.size(); ++i) text += (i ? "," : "") + assets[i];
  text += '\n';
  text += matrix_csv(panel.returns);
  write_text(path, text);
}

// --- model fits -------------------------------------------------------------

inline json factor_fit_json(const FactorModelFit& fit, const std::vector<std::string>& assets) {
  return {{"r", fit.rank()},
          {"d", fit.dim()},
          {"assets", assets},
          {"loadings", matrix_json(fit.loadings)},
          {"sigma0", matrix_json(fit.sigma0)},
          {"mean_cov", matrix_json(fit.mean_cov)},
          {"eigenvalues", vector_json(fit.eigenvalues)},
          {"suggested_r", suggest_rank(fit.eigenvalues)}};
}

inline FactorModelFit factor_fit_from_json(const json& j) {
  FactorModelFit fit;
  fit.loadings = matrix_from_json(j.at("loadings"));
  fit.sigma0 = matrix_from_json(j.at("sigma0"));
  fit.mean_cov = matrix_from_json(j.at("mean_cov"));
  fit.eigenvalues = vector_from_json(j.at("eigenvalues"));
  return fit;
}

inline json caw_params_json(const CawParams& p) {
  json b = json::array(), a = json::array();
  for (const auto& v : p.b) b.push_back(vector_json(v));
  for (const auto& v : p.a) a.push_back(vector_json(v));
  return {{"nu", p.nu}, {"c", vector_json(p.c)}, {"b", b}, {"a", a}};
}

inline CawParams caw_params_from_json(const json& j) {
  CawParams p;
  p.nu = j.at("nu").get<double>();
  p.c = vector_from_json(j.at("c"));
  for (const auto& v : j.at("b")) p.b.push_back(vector_from_json(v));
  for (const auto& v : j.at("a")) p.a.push_back(vector_from_json(v));
  validate_params(p);
  return p;
}

inline json caw_fit_json(const CawFit& fit) {
  json restarts = json::array();
  for (const auto& run : fit.restarts) {
    restarts.push_back({{"index", run.index},
                        {"loglik", std::isfinite(run.loglik) ? json(run.loglik) : json(nullptr)},
                        {"iterations", run.iterations},
                        {"evaluations", run.evaluations},
                        {"status", run.status},
                        {"converged", run.converged}});
  }
  return {{"model", "caw"},
          {"order", {{"p", fit.order.p}, {"q", fit.order.q}}},
          {"r", fit.params.rank()},
          {"num_params", count_params(fit.order, static_cast<int>(fit.params.rank()))},
          {"natural", caw_params_json(fit.params)},
          {"transformed", vector_json(to_unconstrained(fit.params))},
          {"loglik", fit.loglik},
          {"converged", fit.converged},
          {"restarts_run", fit.restarts_run},
          {"best_restart", fit.best_restart},
          {"persistence", vector_json(fit.params.persistence())},
          {"restarts", restarts}};
}

inline json var_fit_json(const VarFit& fit) {
  json coeffs = json::array();
  for (const auto& c : fit.coefficients) coeffs.push_back(matrix_json(c));
  const auto st = stationarity_check(fit);
  return {{"model", "var"},
          {"order", fit.order},
          {"K", fit.dim()},
          {"num_params", fit.num_params()},
          {"intercept", vector_json(fit.intercept)},
          {"coefficients", coeffs},
          {"residual_cov", matrix_json(fit.residual_cov)},
          {"residual_cov_ml", matrix_json(fit.residual_cov_ml)},
          {"effective_rows", fit.effective_rows},
          {"spectral_radius", st.spectral_radius},
          {"stationary", st.stationary}};
}

inline VarFit var_fit_from_json(const json& j) {
  VarFit fit;
  fit.order = j.at("order").get<int>();
  fit.intercept = vector_from_json(j.at("intercept"));
  for (const auto& c : j.at("coefficients")) fit.coefficients.push_back(matrix_from_json(c));
  fit.residual_cov = matrix_from_json(j.at("residual_cov"));
  fit.residual_cov_ml = matrix_from_json(j.at("residual_cov_ml"));
  require(static_cast<int>(fit.coefficients.size()) == fit.order, ErrorCode::kIo, "VAR JSON order mismatch");
  return fit;
}

// --- tables -------------------------------------------------------------------

inline std::string criteria_csv(const OrderCriteria& c) {
  std::string out = "order,AIC,HQ,SC,FPE\n";
  for (const auto& row : c.rows) {
    out += std::to_string(row.order) + "," + fmt(row.aic) + "," + fmt(row.hq) + "," + fmt(row.sc) + "," +
           fmt(row.fpe) + "\n";
  }
  return out;
}

inline std::string opt_fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("NA"); }

/// Columns follow the published comparison layout: parameters, FN, SN, and
/// the same two norms for the inverses.
inline std::string error_table_csv(const ErrorTable& table) {
  std::string out = "model,horizon,num_params,fn,sn,fn_inverse,sn_inverse,windows,inverse_excluded\n";
  for (const auto& row : table.rows) {
    out += row.model + "," + std::to_string(table.horizon) + "," + std::to_string(row.num_params) + "," +
           fmt(row.fn) + "," + fmt(row.sn) + "," + opt_fmt(row.fn_inverse) + "," + opt_fmt(row.sn_inverse) + "," +
           std::to_string(row.windows) + "," + std::to_string(row.inverse_excluded) + "\n";
  }
  return out;
}

inline std::string window_jsonl(const std::vector<WindowRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    json j = {{"k", rec.k},
              {"horizon", rec.horizon},
              {"model", rec.model},
              {"fn", rec.fn},
              {"sn", rec.sn},
              {"fn_inverse", rec.fn_inverse ? json(*rec.fn_inverse) : json(nullptr)},
              {"sn_inverse", rec.sn_inverse ? json(*rec.sn_inverse) : json(nullptr)}};
    out += j.dump() + "\n";
  }
  return out;
}

inline std::string scree_csv(const Vector& eigenvalues) {
  std::string out = "index,eigenvalue\n";
  for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) out += std::to_string(j + 1) + "," + fmt(eigenvalues(j)) + "\n";
  return out;
}

/// Long format: one row per (day, i, j) with i <= j.
inline std::string tidy_series_csv(const CovMatrixSeries& s) {
  std::string out = "day_id,row,col,value\n";
  for (const auto& day : s.days) {
    for (Eigen::Index i = 0; i < day.values.rows(); ++i) {
      for (Eigen::Index j = i; j < day.values.cols(); ++j) {
        out += day.day_id + "," + s.assets[static_cast<std::size_t>(i)] + "," + s.assets[static_cast<std::size_t>(j)] +
               "," + fmt(day.values(i, j)) + "\n";
      }
    }
  }
  return out;
}

inline std::string residuals_csv(const Matrix& residuals) {
  std::string out = "t,component,residual\n";
  for (Eigen::Index t = 0; t < residuals.rows(); ++t) {
    for (Eigen::Index k = 0; k < residuals.cols(); ++k) {
      out += std::to_string(t + 1) + "," + std::to_string(k + 1) + "," + fmt(residuals(t, k)) + "\n";
    }
  }
  return out;
}

/// Descriptive statistics of every variance and covariance entry over days.
inline std::string descriptive_csv(const CovMatrixSeries& s) {
  std::string out = "row,col,mean,max,min,sd,skewness,kurtosis\n";
  const Eigen::Index d = s.dim();
  std::vector<double> x(s.size());
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      for (std::size_t t = 0; t < s.size(); ++t) x[t] = s.days[t].values(i, j);
      const auto st = descriptive_stats(x);
      out += s.assets[static_cast<std::size_t>(i)] + "," + s.assets[static_cast<std::size_t>(j)] + "," + fmt(st.mean) +
             "," + fmt(st.max) + "," + fmt(st.min) + "," + opt_fmt(st.sd) + "," + opt_fmt(st.skewness) + "," +
             opt_fmt(st.kurtosis) + "\n";
    }
  }
  return out;
}

// --- scenarios ----------------------------------------------------------------

/// Scenario JSON:
/// {"d":10,"r":2,"T":300,"truth":{"nu":10,"c":[..],"b":[[..]],"a":[[..]]},
///  "epsilon":0.001,"sigma0_scale":0.1,"burn_in":500,"seed":1}
inline SimConfig sim_config_from_json(const json& j) {
  SimConfig cfg;
  cfg.d = j.at("d").get<Eigen::Index>();
  cfg.r = j.at("r").get<Eigen::Index>();
  cfg.T = j.at("T").get<Eigen::Index>();
  cfg.truth = caw_params_from_json(j.at("truth"));
  cfg.epsilon = j.value("epsilon", 0.0);
  cfg.sigma0_scale = j.value("sigma0_scale", 0.1);
  cfg.burn_in = j.value("burn_in", 500);
  cfg.seed = j.value("seed", std::uint64_t{0});
  validate_config(cfg);
  return cfg;
}

inline json sim_config_json(const SimConfig& cfg) {
  return {{"d", cfg.d},
          {"r", cfg.r},
          {"T", cfg.T},
          {"truth", caw_params_json(cfg.truth)},
          {"epsilon", cfg.epsilon},
          {"sigma0_scale", cfg.sigma0_scale},
          {"burn_in", cfg.burn_in},
          {"seed", cfg.seed}};
}

}  // namespace fcaw::io
