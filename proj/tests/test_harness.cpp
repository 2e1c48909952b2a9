#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dhs/decay.hpp"
#include "dhs/harness.hpp"
#include "dhs/parallel.hpp"

using namespace dhs;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dhs_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

// Every criterion on tiny ranges.
RunConfig small_config(const fs::path& dir) {
  RunConfig c;
  c.output_dir = dir.string();
  c.heat_t_count = 5;
  c.heat_n_count = 5;
  c.parts_k_max = 2;
  c.decay_x_max = 16.0;
  c.uniform_x_max = 4.0;
  c.uniform_k_max = 1;
  c.sweep_p = {0.5, 1.0};
  c.radii = {1.0, 4.0};
  c.atoms = 3;
  c.path_profiles = {Profile::exp, Profile::logsign};
  c.path_sequences = 2;
  c.path_support = 8;
  c.bessel_n_max = 4;
  c.derivative_k_max = 3;
  return c;
}

const nlohmann::json* find_criterion(const nlohmann::json& verdict, int id) {
  for (const auto& c : verdict.at("criteria"))
    if (c.at("id").get<int>() == id) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("run config round trip") {
  RunConfig c;
  c.seed = 99;
  c.sweep_p = {0.4};
  c.profile = Profile::logsign;
  c.sampling = ZSampling::integer;
  c.time.per_decade = 30;
  c.criteria = {1, 7};
  const auto text = run_config_to_json(c);
  const auto back = run_config_from_json(text);
  CHECK(run_config_to_json(back) == text);
  CHECK(back.seed == 99);
  CHECK(back.profile == Profile::logsign);
  CHECK(back.time.per_decade == 30);
}

TEST_CASE("partial configs keep defaults and bad configs are rejected") {
  const auto c = run_config_from_json(R"({"seed": 5, "time": {"u_min": -30}})");
  CHECK(c.seed == 5);
  CHECK(c.time.u_min == -30.0);
  CHECK(c.time.per_decade == TimeSampling{}.per_decade);
  CHECK(c.atoms == 50);
  CHECK_THROWS_AS(run_config_from_json(R"({"sead": 5})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"time": {"span": 1}})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"seed": "five"})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"seed": 5)"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"profile": "cosine"})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"t_grid": "1:10"})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"budgets": [1, 2]})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"criteria": [9]})"), ConfigError);
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("verdict combination") {
  ItemResult pass{"a", Verdict::pass, "", {}}, fail{"b", Verdict::fail, "", {}}, flag{"c", Verdict::flagged, "", {}};
  CHECK(combine_verdicts({}) == Verdict::pass);
  CHECK(combine_verdicts({pass, pass}) == Verdict::pass);
  CHECK(combine_verdicts({pass, flag}) == Verdict::flagged);
  CHECK(combine_verdicts({flag, fail}) == Verdict::fail);
}

TEST_CASE("fast criteria pass at full size") {
  RunConfig c;
  for (int id : {1, 2, 7}) {
    std::ostringstream csv;
    const auto r = run_criterion(id, c, csv);
    CHECK_MESSAGE(r.verdict == Verdict::pass, "criterion ", id);
    CHECK(r.csv == "criterion" + std::to_string(id) + ".csv");
    CHECK(!r.items.empty());
    CHECK(csv.str().find('\n') != std::string::npos);
  }
  CHECK_THROWS_AS([] {
    std::ostringstream csv;
    run_criterion(8, RunConfig{}, csv);
  }(), std::invalid_argument);
}

TEST_CASE("tight tolerances fail") {
  RunConfig c;
  c.bessel_tol = 1e-18;
  std::ostringstream csv;
  const auto r = run_criterion(7, c, csv);
  CHECK(r.verdict == Verdict::fail);
  c.budgets[0] = 0.0;
  CHECK(run_criterion(1, c, csv).verdict == Verdict::fail);
}

TEST_CASE("one CSV and one verdict entry per criterion, deterministic across thread counts") {
  const auto a = scratch("a"), b = scratch("b");
  auto cfg = small_config(a);
  cfg.threads = 1;
  const auto first = verify_all(cfg);
  REQUIRE(first.criteria.size() == 8);

  const auto verdict = nlohmann::json::parse(slurp(a / "verdict.json"));
  REQUIRE(verdict.at("criteria").size() == 8);
  for (int id = 1; id <= 8; ++id) {
    const auto* c = find_criterion(verdict, id);
    REQUIRE(c != nullptr);
    const auto csv = c->at("csv").get<std::string>();
    CHECK(csv == "criterion" + std::to_string(id) + ".csv");
    CHECK(fs::exists(a / csv));
    const auto v = c->at("verdict").get<std::string>();
    CHECK((v == "pass" || v == "fail" || v == "flagged"));
    CHECK(c->at("measured").is_object());
  }
  CHECK(verdict.at("exit_code").get<int>() == first.exit_code());

  auto second_cfg = cfg;
  second_cfg.output_dir = b.string();
  second_cfg.reference_dir = a.string();
  second_cfg.threads = 2;
  const auto second = verify_all(second_cfg);
  for (int id = 1; id <= 7; ++id) {
    const auto name = "criterion" + std::to_string(id) + ".csv";
    CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name);
  }
  const auto& det = second.criteria.back();
  REQUIRE(det.id == 8);
  CHECK(det.items.front().label == "byte determinism");
  CHECK(det.items.front().verdict == Verdict::pass);
  CHECK(slurp(a / "criterion8.csv").find("criterion5.csv") != std::string::npos);

  // A changed reference file is detected.
  {
    std::ofstream out(a / "criterion1.csv", std::ios::app);
    out << "tampered\n";
  }
  auto third = second_cfg;
  third.output_dir = scratch("c").string();
  third.criteria = {1, 8};
  const auto r3 = verify_all(third);
  CHECK(r3.criteria.back().items.front().verdict == Verdict::fail);
  CHECK(r3.exit_code() != 0);
  set_thread_count(0);
}

TEST_CASE("coarse maximal grid raises a refinement warning") {
  auto cfg = small_config(scratch("warn"));
  cfg.sweep_p = {1.0};
  cfg.radii = {1.0};
  cfg.atoms = 2;
  std::ostringstream csv;
  CHECK(run_criterion(5, cfg, csv).warnings.empty());
  cfg.t_grid = "1:10:10";
  const auto r = run_criterion(5, cfg, csv);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings.front().find("refinement") != std::string::npos);
  CHECK(r.measured.at("point_mass_maximal_at_0") < 1.0);
}

TEST_CASE("export plots") {
  const auto run = scratch("plots_run"), out = scratch("plots_out");
  auto cfg = small_config(run);
  cfg.decay_x_max = 64.0;
  cfg.criteria = {3};
  verify_all(cfg);
  const auto files = export_plots(run.string(), out.string());
  const auto verdict = nlohmann::json::parse(slurp(run / "verdict.json"));
  const auto& items = find_criterion(verdict, 3)->at("items");
  REQUIRE(files.size() == items.size());

  for (std::size_t i = 0; i < files.size(); ++i) {
    std::istringstream in(slurp(files[i]));
    std::string line;
    std::getline(in, line);
    CHECK(line == "x,value,fit");
    std::vector<double> xs, values, fits;
    while (std::getline(in, line)) {
      double x, v, f;
      char c1, c2;
      std::istringstream row(line);
      row >> x >> c1 >> v >> c2 >> f;
      xs.push_back(x);
      values.push_back(v);
      fits.push_back(f);
    }
    REQUIRE(xs.size() >= 2);
    const double slope = items[i].at("measured").at("slope").get<double>();
    CHECK(std::abs(fit_log_log(xs, fits).slope - slope) < 1e-9);
    if (items[i].at("label") == "eq31") {
      for (std::size_t j = 1; j < values.size(); ++j) CHECK(values[j] < values[j - 1]);
      CHECK(xs.front() == 8.0);
    }
  }
  CHECK(fs::path(files.front()).filename() == "eq31.csv");

  // Empty range: header only.
  const auto empty_run = scratch("plots_empty");
  cfg.output_dir = empty_run.string();
  cfg.decay_x_min = 64.0;
  cfg.decay_x_max = 8.0;
  const auto r = verify_all(cfg);
  CHECK(r.criteria.front().verdict == Verdict::fail);
  for (const auto& f : export_plots(empty_run.string(), (empty_run / "plots").string()))
    CHECK(slurp(f) == "x,value,fit\n");

  CHECK_THROWS_AS(export_plots((run / "missing").string(), out.string()), std::runtime_error);
  const auto nothing = scratch("plots_nothing");
  fs::create_directories(nothing);
  CHECK_THROWS_AS(export_plots(nothing.string(), out.string()), std::runtime_error);
}
