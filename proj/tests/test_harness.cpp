#include "lfnode/config.hpp"
#include "lfnode/csv.hpp"
#include "lfnode/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace lfnode;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lfnode_test_harness";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<std::pair<double, double>> dyadic(const std::function<double(double)>& err, int levels = 5) {
  std::vector<std::pair<double, double>> pts;
  for (int k = 0; k < levels; ++k) {
    const double h = 1.0 / (16 << k);
    pts.emplace_back(h, err(h));
  }
  return pts;
}

ExperimentConfig zero_mismatch_config() {
  ExperimentConfig c = linear_model_config();
  c.path_constant = {0.0};
  c.y_rule = YRule::match;
  return c;
}

}  // namespace

TEST_CASE("fit_rate") {
  CHECK(std::abs(*fit_rate(dyadic([](double h) { return h * h; })) - 2.0) <= 1e-12);
  CHECK(std::abs(*fit_rate(dyadic([](double h) { return 3 * h; })) - 1.0) <= 1e-12);
  const auto wobbly = fit_rate(dyadic([](double h) { return h * h * (1 + 0.2 * std::sin(1 / h)); }));
  REQUIRE(wobbly);
  CHECK(*wobbly >= 1.7);
  CHECK(*wobbly <= 2.3);
  CHECK_FALSE(fit_rate(dyadic([](double h) { return h; }, 2)));
  CHECK_FALSE(fit_rate({{0.1, 1.0}, {0.05, 0.0}, {0.025, 0.5}}));
  CHECK_FALSE(fit_rate({{0.1, 1.0}, {0.05, -1.0}, {0.025, 0.5}}));
}

TEST_CASE("config parsing") {
  const ExperimentConfig def = parse_config("{}");
  CHECK(def.field == FieldKind::tanh);
  CHECK(def.d == 2);
  CHECK(def.weight_dim() == 8);
  CHECK(def.levels == std::vector<std::size_t>{16, 32, 64, 128, 256, 512});
  CHECK(def.refine == 64);
  CHECK(def.data_x == std::vector<double>{1.0, -0.5});
  CHECK(def.data_y == std::vector<double>{0.3});

  const ExperimentConfig lin = parse_config(R"({"field": "linear", "levels": [8, 16]})");
  CHECK(lin.weight_dim() == 1);
  CHECK(lin.path == PathMode::constant);
  CHECK(lin.levels == std::vector<std::size_t>{8, 16});

  const ExperimentConfig sampled = parse_config(R"({"n_pairs": 4, "y_rule": "zero", "probe": "e1"})");
  CHECK(build_instance(sampled).loss.size() == 4);
  CHECK(sampled.probe == Probe::e1);

  const ExperimentConfig round = parse_config(to_json(sampled));
  CHECK(to_json(round) == to_json(sampled));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"lyers": [8]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"levels": [2, 8]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"field": "relu"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"d": "two"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"d": 3})"), ConfigError);  // readout_c still has 2 entries
  CHECK_THROWS_AS(parse_config(R"({"refine": 0})"), ConfigError);
  CHECK_THROWS_AS(load_config(scratch("does_not_exist.json").string()), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"levels": []})"), ArgumentError);
}

TEST_CASE("convergence on the linear model") {
  ExperimentConfig c = linear_model_config();
  c.levels = {16, 32, 64, 128};
  const auto rec = run_convergence(c);
  REQUIRE(rec.levels.size() == 4);
  REQUIRE(rec.slope_modified);
  CHECK(*rec.slope_modified >= 1.8);
  CHECK(*rec.slope_modified <= 2.2);
  CHECK(rec.levels.back().err_vanilla >= 0.5 * rec.levels.front().err_vanilla);
  for (const auto& lv : rec.levels) {
    CHECK(lv.err_vanilla >= 0.0);
    CHECK(lv.h * static_cast<double>(lv.layers) == 1.0);
  }
}

TEST_CASE("a single level reports no slopes but keeps the errors") {
  ExperimentConfig c;
  c.levels = {32};
  const auto rec = run_convergence(c);
  CHECK_FALSE(rec.slope_vanilla);
  CHECK_FALSE(rec.slope_modified);
  CHECK_FALSE(rec.slope_euler);
  REQUIRE(rec.levels.size() == 1);
  CHECK(rec.levels[0].err_modified > 0.0);
  const std::string csv = rec.table().render();
  CHECK(csv.rfind("# lfnode-csv converge v1\nL,h,err_vanilla,err_modified,err_euler\n32,", 0) == 0);
}

TEST_CASE("oscillation on the linear model") {
  const auto rec = run_oscillation(linear_model_config(), 32);
  REQUIRE(rec.rows.size() == 32);
  CHECK(rec.alternation_fraction >= 0.8);
  const double e2 = std::exp(2.0);
  double modified_dev = 0.0;
  for (const auto& r : rec.rows) {
    CHECK(std::abs(r.truth - e2) <= 1e-9);
    modified_dev = std::max(modified_dev, std::abs(r.modified - e2));
  }
  CHECK(modified_dev <= 40.0 / (32.0 * 32.0));  // O(h^2) band around e^2
  CHECK(rec.vanilla_amplitude > 10 * modified_dev);
}

TEST_CASE("oscillation with zero mismatch is identically zero") {
  const auto rec = run_oscillation(zero_mismatch_config(), 16);
  for (const auto& r : rec.rows) {
    CHECK(r.vanilla == 0.0);
    CHECK(r.modified == 0.0);
    CHECK(r.truth == 0.0);
  }
  CHECK(rec.alternation_fraction == 0.0);
}

TEST_CASE("vanilla oscillation does not diminish on the tanh instance") {
  const ExperimentConfig c;
  const auto coarse = run_oscillation(c, 64);
  const auto fine = run_oscillation(c, 256);
  CHECK(fine.vanilla_amplitude >= 0.5 * coarse.vanilla_amplitude);
  CHECK(coarse.alternation_fraction >= 0.8);
  CHECK(fine.alternation_fraction >= 0.8);
  CHECK(fine.modified_amplitude < 0.1 * fine.vanilla_amplitude);
}

TEST_CASE("alternation fraction counts interior sign flips") {
  CHECK(alternation_fraction({9, 1, -1, 1, -1, 9}) == 1.0);
  CHECK(alternation_fraction({1, 1, 1, 1, 1, 1}) == 0.0);
  CHECK(alternation_fraction({0, 1, -1, -1, 1, 0}) == doctest::Approx(2.0 / 3.0));
  CHECK(alternation_fraction({1, -1, 1}) == 0.0);
}

TEST_CASE("gradcheck passes on seeded instances and catches a corrupted recursion") {
  const ExperimentConfig c;
  const auto ok = run_gradcheck(c, 16);
  CHECK(ok.passed);
  CHECK(ok.failure.empty());
  CHECK(ok.rel_recursion_tape <= 1e-12);
  CHECK(ok.rel_tape_fd <= 1e-4);

  const auto lin = run_gradcheck(linear_model_config(), 4);
  CHECK(lin.passed);

  const auto bad = run_gradcheck(c, 16, BackpropHook::halved_step);
  CHECK_FALSE(bad.passed);
  CHECK(bad.failure.find("recursion vs tape") != std::string::npos);
  CHECK(bad.failure.find("l=") != std::string::npos);
  CHECK(bad.failure.find("k=") != std::string::npos);

  const auto zero = run_gradcheck(zero_mismatch_config(), 8);
  CHECK_FALSE(zero.passed);
  CHECK(zero.failure.find("zero-mismatch") != std::string::npos);
  CHECK_THROWS_AS(run_gradcheck(c, 3), ArgumentError);
}

TEST_CASE("training") {
  for (auto mode : {TrainMode::vanilla, TrainMode::modified}) {
    const auto zero = run_train(zero_mismatch_config(), 8, 5, 0.1, mode);
    CHECK(zero.losses.size() == 6);
    for (double l : zero.losses) CHECK(l == 0.0);

    const auto lin = run_train(linear_model_config(), 16, 30, 0.01, mode);
    CHECK_FALSE(lin.diverged);
    for (std::size_t s = 1; s < lin.losses.size(); ++s) CHECK(lin.losses[s] < lin.losses[s - 1]);
  }
  const auto a = run_train(linear_model_config(), 8, 3, 0.01, TrainMode::vanilla).table();
  const auto b = run_train(linear_model_config(), 8, 3, 0.01, TrainMode::modified).table();
  CHECK(a.columns == b.columns);
  CHECK(a.schema == b.schema);

  const auto blowup = run_train(linear_model_config(), 8, 200, 1e4, TrainMode::vanilla);
  CHECK(blowup.diverged);
  CHECK_THROWS_AS(run_train(linear_model_config(), 8, 0, 0.1, TrainMode::vanilla), ArgumentError);
}

TEST_CASE("plot scripts") {
  ExperimentConfig c = linear_model_config();
  c.levels = {8, 16, 32};
  const fs::path conv = scratch("converge.csv");
  run_convergence(c).table().write(conv.string());
  const fs::path script = scratch("converge.gp");
  emit_plot(conv.string(), PlotKind::converge, script.string());
  const std::string text = slurp(script);
  CHECK(text.find("set logscale xy") != std::string::npos);
  CHECK(text.find("'vanilla'") != std::string::npos);
  CHECK(text.find("'modified'") != std::string::npos);
  CHECK(text.find("'euler'") != std::string::npos);

  const fs::path osc = scratch("oscillate.csv");
  run_oscillation(c, 16).table().write(osc.string());
  emit_plot(osc.string(), PlotKind::oscillate, scratch("oscillate.gp").string());
  CHECK(slurp(scratch("oscillate.gp")).find("dE/dtheta") != std::string::npos);

  try {
    emit_plot(osc.string(), PlotKind::converge, scratch("wrong.gp").string());
    FAIL("schema mismatch was not reported");
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("'L'") != std::string::npos);
  }
}

TEST_CASE("csv tables") {
  CHECK(csv::format(0.1) == "0.10000000000000001");
  CHECK(csv::format(2.0) == "2");
  csv::Table t{"train", 1, {"step", "loss"}, {}};
  t.add_row({"0", csv::format(1.5)});
  CHECK_THROWS_AS(t.add_row({"1"}), ArgumentError);
  CHECK(t.render() == "# lfnode-csv train v1\nstep,loss\n0,1.5\n");
  const fs::path p = scratch("train.csv");
  t.write(p.string());
  const auto header = csv::read_header(p.string());
  CHECK(header.schema == "train");
  CHECK(header.version == 1);
  CHECK(header.columns == std::vector<std::string>{"step", "loss"});
}

TEST_CASE("convergence records are deterministic") {
  ExperimentConfig c;
  c.levels = {16, 32, 64};
  c.refine = 16;
  const std::string a = run_convergence(c, Execution::parallel).table().render();
  const std::string b = run_convergence(c, Execution::serial).table().render();
  CHECK(a == b);
  c.path_seed = 43;
  CHECK(run_convergence(c).table().render() != a);
}
