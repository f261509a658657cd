#include "fcaw/io.hpp"

#include <gtest/gtest.h>

#include <random>

#include <unistd.h>

using namespace fcaw;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("fcaw_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(MatrixCsv, ExactRoundtrip) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(3, 4);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng) * 1e-7;
  EXPECT_EQ(io::parse_matrix_csv(io::matrix_csv(m)), m);
  EXPECT_EQ(io::matrix_from_json(io::matrix_json(m)), m);
  EXPECT_THROW(io::parse_matrix_csv("1,2\n3\n"), Error);
  EXPECT_THROW(io::parse_matrix_csv("1,x\n"), Error);
}

TEST(Series, DirectoryRoundtrip) {
  auto dir = scratch("series");
  CovMatrixSeries s{{"AAA", "BBB"},
                    {{"20240102", Matrix::Identity(2, 2)}, {"20240103", Matrix::Constant(2, 2, 0.3) + Matrix::Identity(2, 2)}}};
  io::write_series(dir, s);
  auto back = io::read_series(dir);
  EXPECT_EQ(back.assets, s.assets);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.days[1].day_id, "20240103");
  EXPECT_EQ(back.days[1].values, s.days[1].values);
  const auto h1 = io::hash_path(dir);
  io::write_series(dir, s);
  EXPECT_EQ(io::hash_path(dir), h1);
  fs::remove_all(dir);
}

TEST(TickFiles, NameParsingAndRoundtrip) {
  auto n = io::parse_tick_file_name("BRK_B_20240102.csv");
  ASSERT_TRUE(n);
  EXPECT_EQ(n->asset, "BRK_B");
  EXPECT_EQ(n->day, "20240102");
  EXPECT_FALSE(io::parse_tick_file_name("AAA-20240102.csv"));
  EXPECT_FALSE(io::parse_tick_file_name("AAA_2024.csv"));

  auto dir = scratch("ticks");
  TickSeries s{"AAA", "20240102", {{34200.0, 10.0}, {34200.5, 10.25}, {36000.0, 9.75}}};
  io::write_tick_file(dir, s);
  auto p = io::read_tick_file(dir / "AAA_20240102.csv");
  EXPECT_EQ(p.failures, 0u);
  ASSERT_EQ(p.series.ticks.size(), 3u);
  EXPECT_DOUBLE_EQ(p.series.ticks[1].timestamp, 34200.5);
  EXPECT_DOUBLE_EQ(p.series.ticks[2].price, 9.75);
  auto scan = io::scan_tick_dir(dir);
  EXPECT_EQ(scan.assets, std::vector<std::string>{"AAA"});
  fs::remove_all(dir);
}

TEST(Json, CawAndVarRoundtrip) {
  CawParams p;
  p.nu = 7.5;
  p.c = Eigen::Vector2d(0.3, 0.4);
  p.b = {Eigen::Vector2d(0.8, 0.7)};
  p.a = {Eigen::Vector2d(0.4, 0.5), Eigen::Vector2d(0.1, 0.2)};
  auto back = io::caw_params_from_json(io::json::parse(io::caw_params_json(p).dump()));
  EXPECT_EQ(back.pack(), p.pack());
  EXPECT_EQ(back.order(), (CawOrder{1, 2}));

  VarFit f;
  f.order = 1;
  f.intercept = Eigen::Vector3d(1, 2, 3);
  f.coefficients = {Matrix::Identity(3, 3) * 0.3};
  f.residual_cov = f.residual_cov_ml = Matrix::Identity(3, 3);
  auto j = io::var_fit_json(f);
  EXPECT_NEAR(j.at("spectral_radius").get<double>(), 0.3, 1e-15);
  EXPECT_EQ(j.at("num_params").get<int>(), 12);
  auto fb = io::var_fit_from_json(io::json::parse(j.dump()));
  EXPECT_EQ(fb.coefficients[0], f.coefficients[0]);
}

TEST(Json, ScenarioRoundtrip) {
  SimConfig cfg;
  cfg.d = 6;
  cfg.r = 2;
  cfg.T = 100;
  cfg.truth.nu = 9.0;
  cfg.truth.c = Eigen::Vector2d(0.5, 0.4);
  cfg.truth.a = {Eigen::Vector2d(0.5, 0.4)};
  cfg.epsilon = 0.01;
  cfg.seed = 77;
  auto back = io::sim_config_from_json(io::sim_config_json(cfg));
  EXPECT_EQ(back.d, 6);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.truth.pack(), cfg.truth.pack());
  auto bad = io::sim_config_json(cfg);
  bad["r"] = 3;
  EXPECT_THROW(io::sim_config_from_json(bad), Error);
}

TEST(Tables, ErrorTableMissingInverse) {
  ErrorTable t;
  t.horizon = 2;
  t.rows.push_back({"CAW(1,1)", 7, 1.5, 1.0, std::nullopt, std::nullopt, 10, 10});
  auto csv = io::error_table_csv(t);
  EXPECT_EQ(csv, "model,horizon,num_params,fn,sn,fn_inverse,sn_inverse,windows,inverse_excluded\n"
                 "CAW(1,1),2,7,1.5,1,NA,NA,10,10\n");
}
