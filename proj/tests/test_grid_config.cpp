#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "floodda/common.hpp"
#include "floodda/config.hpp"
#include "floodda/grid.hpp"
#include "support/tiny_case.hpp"

using namespace floodda;
namespace fs = std::filesystem;

namespace {

// Unique scratch directory per test run, removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("floodda_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::string file(const std::string& name, const std::string& content) {
    const fs::path p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
};

}  // namespace

TEST_CASE("toml subset parses scalars, arrays and table groups") {
  TempDir tmp;
  const std::string path = tmp.file("a.toml",
                                    "# leading comment\n"
                                    "title = \"flood # not a comment\"\n"
                                    "count = 42\n"
                                    "ratio = 0.5   # trailing comment\n"
                                    "flag = true\n"
                                    "xs = [1.0, 2.5, 3.0]\n"
                                    "cells = [[1, 2], [3, 4]]\n"
                                    "empty = []\n"
                                    "\n"
                                    "[sec]\n"
                                    "val = 7.5\n"
                                    "name = \"x\"\n"
                                    "\n"
                                    "[[grp]]\n"
                                    "a = 1\n"
                                    "[[grp]]\n"
                                    "a = 2\n");
  const TomlDoc doc = parse_toml(path);
  const TomlTable& t = doc.root;
  CHECK(t.get_string("title") == "flood # not a comment");
  CHECK(t.get_int("count") == 42);
  CHECK(t.get_number("ratio") == 0.5);
  CHECK(t.get_bool_or("flag", false));
  CHECK(t.get_bool_or("absent", true));
  CHECK(t.get_number_array("xs") == std::vector<double>{1.0, 2.5, 3.0});
  CHECK(t.get_number_array("empty").empty());
  const auto cells = t.get_cell_list("cells");
  REQUIRE(cells.size() == 2);
  CHECK(cells[0] == std::pair<int, int>{1, 2});
  CHECK(cells[1] == std::pair<int, int>{3, 4});
  CHECK(t.get_number("sec.val") == 7.5);
  CHECK(t.get_string("sec.name") == "x");
  CHECK(t.get_number_or("sec.absent", -1.0) == -1.0);

  REQUIRE(doc.tables("grp").size() == 2);
  CHECK(doc.tables("grp")[0].get_int("a") == 1);
  CHECK(doc.tables("grp")[1].get_int("a") == 2);
  CHECK(doc.tables("nothing").empty());
}

TEST_CASE("toml errors carry the file location") {
  TempDir tmp;
  CHECK_THROWS_AS(parse_toml((tmp.path / "missing.toml").string()),
                  ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_toml(tmp.file("dup.toml", "a = 1\na = 2\n")),
      doctest::Contains("duplicate key 'a'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_toml(tmp.file("noeq.toml", "x = 1\njust text\n")),
                       doctest::Contains(":2"), ConfigError);
  CHECK_THROWS_AS(parse_toml(tmp.file("str.toml", "s = \"open\n")),
                  ConfigError);
  CHECK_THROWS_AS(parse_toml(tmp.file("trail.toml", "x = 1 2\n")),
                  ConfigError);
  CHECK_THROWS_AS(parse_toml(tmp.file("arr.toml", "x = [1 2]\n")),
                  ConfigError);
  CHECK_THROWS_AS(parse_toml(tmp.file("tbl.toml", "[ ]\n")), ConfigError);
  CHECK_THROWS_AS(parse_toml(tmp.file("bad.toml", "x = zebra\n")),
                  ConfigError);
}

TEST_CASE("toml accessors reject the wrong shapes") {
  TempDir tmp;
  const TomlDoc doc = parse_toml(tmp.file("t.toml",
                                          "s = \"text\"\n"
                                          "n = 1.5\n"
                                          "xs = [1.0, \"two\"]\n"
                                          "three = [1.0, 2.0, 3.0]\n"));
  const TomlTable& t = doc.root;
  CHECK_THROWS_WITH_AS(t.get_number("s"), doctest::Contains("'s'"),
                       ConfigError);
  CHECK_THROWS_AS(t.get_string("n"), ConfigError);
  CHECK_THROWS_AS(t.get_int("n"), ConfigError);
  CHECK_THROWS_AS(t.get_number_array("xs"), ConfigError);
  CHECK_THROWS_AS(t.get_pair("three"), ConfigError);
  CHECK_THROWS_WITH_AS(t.get_number("absent"),
                       doctest::Contains("missing required key"), ConfigError);
}

TEST_CASE("dem grids survive a write/load round trip") {
  TempDir tmp;
  Grid g;
  g.n_rows = 3;
  g.n_cols = 4;
  g.cell_size = 25.0;
  g.bed_elevation = {0.1, 0.2, 0.3, 0.4, 1.1, 1.2, 1.3, 1.4,
                     2.123456789012345, 2.2, 2.3, 2.4};
  g.friction_zone.assign(12, 0);
  const std::string path = (tmp.path / "g.asc").string();
  write_dem_grid(g, path);
  const Grid r = load_dem_grid(path);
  CHECK(r.n_rows == 3);
  CHECK(r.n_cols == 4);
  CHECK(r.cell_size == 25.0);
  CHECK(r.bed_elevation == g.bed_elevation);

  SUBCASE("malformed files are rejected") {
    CHECK_THROWS_AS(load_dem_grid((tmp.path / "nope.asc").string()),
                    ConfigError);
    CHECK_THROWS_AS(load_dem_grid(tmp.file("short.asc", "2 2 10\n1 2 3\n")),
                    ConfigError);
    CHECK_THROWS_AS(load_dem_grid(tmp.file("hdr.asc", "2\n")), ConfigError);
  }
}

TEST_CASE("grid validation rejects broken structures") {
  Grid g;
  g.n_rows = 2;
  g.n_cols = 2;
  g.cell_size = 10.0;
  g.bed_elevation = {0, 0, 0, 0};
  g.friction_zone = {0, 0, 0, 0};
  g.inflow_cells = {0};
  g.validate();

  Grid bad = g;
  bad.bed_elevation.pop_back();
  CHECK_THROWS_AS(bad.validate(), ContractError);

  bad = g;
  bad.friction_zone[2] = 5;
  CHECK_THROWS_AS(bad.validate(), ContractError);

  bad = g;
  bad.inflow_cells.clear();
  CHECK_THROWS_AS(bad.validate(), ContractError);

  bad = g;
  bad.outlet_cells = {99};
  CHECK_THROWS_AS(bad.validate(), ContractError);

  bad = g;
  bad.cell_size = 0.0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("hydrographs interpolate linearly and clamp at the ends") {
  TempDir tmp;
  const std::string path = tmp.file(
      "q.csv", "time_s,discharge_m3s\n0,10\n100,30\n300,30\n400,0\n");
  const Hydrograph h = load_hydrograph_csv(path);
  h.validate();
  CHECK(h.interpolate(-50.0) == 10.0);
  CHECK(h.interpolate(0.0) == 10.0);
  CHECK(h.interpolate(50.0) == doctest::Approx(20.0));
  CHECK(h.interpolate(200.0) == 30.0);
  CHECK(h.interpolate(350.0) == doctest::Approx(15.0));
  CHECK(h.interpolate(1000.0) == 0.0);

  SUBCASE("validation rejects bad series") {
    Hydrograph bad;
    bad.times_s = {0.0, 0.0};
    bad.discharges_m3s = {1.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), ContractError);
    bad.times_s = {0.0, 10.0};
    bad.discharges_m3s = {1.0, -1.0};
    CHECK_THROWS_AS(bad.validate(), ContractError);
    bad.times_s.clear();
    bad.discharges_m3s.clear();
    CHECK_THROWS_AS(bad.validate(), ContractError);
  }

  SUBCASE("malformed csv is rejected") {
    CHECK_THROWS_AS(load_hydrograph_csv(tmp.file("h1.csv", "nope\n")),
                    ConfigError);
    CHECK_THROWS_AS(
        load_hydrograph_csv(tmp.file(
            "h2.csv", "time_s,discharge_m3s\n0,1\nfive,2\n")),
        ConfigError);
  }
}

TEST_CASE("experiment config loads the miniature case end to end") {
  TempDir tmp;
  const std::string path = testsupport::write_tiny_case(tmp.path);
  const ExperimentConfig cfg = load_experiment_config(path);

  CHECK(cfg.seed == 7);
  CHECK(cfg.t_end_s == 14400.0);
  CHECK(cfg.ensemble_size == 6);
  CHECK(cfg.prior.mean.friction == std::vector<double>{25.0, 15.0});
  // The scalar correction spread expands to one entry per subdomain.
  CHECK(cfg.prior.correction_std == std::vector<double>{0.03, 0.03});
  CHECK(cfg.prior.mean.depth_corrections == std::vector<double>{0.0, 0.0});
  CHECK(cfg.wsr_times_s == std::vector<double>{10800.0});

  const Grid grid = cfg.build_grid();
  CHECK(grid.n_rows == 6);
  CHECK(grid.n_cols == 10);
  CHECK(grid.n_zones == 2);
  // Zones paint in file order: the channel band overwrites the plain.
  CHECK(grid.friction_zone[static_cast<std::size_t>(grid.index(0, 0))] == 1);
  CHECK(grid.friction_zone[static_cast<std::size_t>(grid.index(2, 4))] == 0);
  CHECK(grid.friction_zone[static_cast<std::size_t>(grid.index(3, 9))] == 0);
  CHECK(grid.inflow_cells ==
        std::vector<int>{grid.index(2, 0), grid.index(3, 0)});

  const auto subs = cfg.build_subdomains(grid);
  REQUIRE(subs.size() == 2);
  CHECK(subs[0].id == "upper");
  CHECK(subs[0].cells.size() == 12);
  CHECK(subs[1].cells.size() == 12);

  const auto gauges = cfg.gauge_cells(grid);
  REQUIRE(gauges.size() == 2);
  CHECK(gauges.at("g_up") == grid.index(2, 2));
  CHECK(gauges.at("g_down") == grid.index(3, 7));

  // 60 cells minus the 20 channel cells of the excluded zone.
  CHECK(cfg.eval_cells(grid).size() == 40);
}

TEST_CASE("experiment config rejects out-of-range pieces") {
  TempDir tmp;
  const std::string path = testsupport::write_tiny_case(tmp.path);

  SUBCASE("gauge outside the grid") {
    ExperimentConfig cfg = load_experiment_config(path);
    cfg.gauges[0].row = 99;
    const Grid grid = cfg.build_grid();
    CHECK_THROWS_WITH_AS(cfg.gauge_cells(grid), doctest::Contains("gauge"),
                         ConfigError);
  }

  SUBCASE("zone id beyond the friction table") {
    ExperimentConfig cfg = load_experiment_config(path);
    cfg.zones[0].zone = 9;
    CHECK_THROWS_AS(cfg.build_grid(), ConfigError);
  }

  SUBCASE("subdomain rectangle outside the grid") {
    ExperimentConfig cfg = load_experiment_config(path);
    cfg.subdomains[0].col1 = 40;
    const Grid grid = cfg.build_grid();
    CHECK_THROWS_AS(cfg.build_subdomains(grid), ConfigError);
  }

  SUBCASE("observation times past the horizon") {
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    const auto pos = text.find("wsr_times_s = [10800.0]");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("wsr_times_s = [10800.0]").size(),
                 "wsr_times_s = [99999.0]");
    std::ofstream out(path);
    out << text;
    out.close();
    CHECK_THROWS_WITH_AS(load_experiment_config(path),
                         doctest::Contains("wsr_times_s"), ConfigError);
  }
}
