#ifndef FLOODDA_TESTS_TINY_CASE_HPP
#define FLOODDA_TESTS_TINY_CASE_HPP

// Miniature twin experiment shared by the harness and CLI tests: a 6x10
// sloping plane with a two-row channel band, four hours of event, three
// assimilation cycles, six members. Small enough that a full pipeline runs
// in well under a second.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>

namespace testsupport {

struct TinyCaseSpec {
  bool observations = true;    // false drops every gauge and ratio time
  double gauge_noise_std = 0.02;
  double wsr_noise_std = 0.25;
  unsigned long long seed = 7;
};

inline std::string write_tiny_case(const std::filesystem::path& dir,
                                   const TinyCaseSpec& spec = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  {
    // Channel rows 2-3 slope toward the outlet; the plains sit on berms of
    // different heights so the two flanks wet at different stages.
    static const double berm[6] = {0.9, 0.25, 0.0, 0.0, 0.5, 1.0};
    std::ofstream dem(dir / "dem.asc");
    dem << "6 10 50\n" << std::setprecision(12);
    for (int r = 0; r < 6; ++r) {
      for (int c = 0; c < 10; ++c)
        dem << (c ? " " : "") << 0.5 + 0.025 * (9 - c) + berm[r];
      dem << "\n";
    }
  }
  {
    std::ofstream hyd(dir / "hydrograph.csv");
    hyd << "time_s,discharge_m3s\n"
        << "0,2\n3600,30\n7200,25\n14400,5\n";
  }

  std::ofstream toml(dir / "tiny.toml");
  toml << std::setprecision(12);
  toml << "[experiment]\nseed = " << spec.seed << "\n\n";
  toml << "[domain]\ndem = \"dem.asc\"\n\n";
  toml << "[inflow]\nhydrograph = \"hydrograph.csv\"\n"
          "cells = [[2, 0], [3, 0]]\n\n";
  toml << "[outlet]\ncells = [[2, 9], [3, 9]]\n\n";
  toml << "[time]\nt_end_s = 14400.0\nspinup_s = 3600.0\ncycle_s = 3600.0\n\n";
  toml << "[model]\nmax_dt_s = 30.0\ncfl = 0.5\nwet_threshold_m = 0.01\n\n";
  toml << "[[zone]]\nid = 1\nrows = [0, 5]\ncols = [0, 9]\n\n";
  toml << "[[zone]]\nid = 0\nrows = [2, 3]\ncols = [0, 9]\n\n";
  toml << "[[gauge]]\nid = \"g_up\"\nrow = 2\ncol = 2\n\n";
  toml << "[[gauge]]\nid = \"g_down\"\nrow = 3\ncol = 7\n\n";
  toml << "[[subdomain]]\nid = \"upper\"\nrows = [0, 1]\ncols = [2, 7]\n\n";
  toml << "[[subdomain]]\nid = \"lower\"\nrows = [4, 5]\ncols = [2, 7]\n\n";
  toml << "[prior]\n"
          "friction_mean = [25.0, 15.0]\n"
          "friction_std = [5.0, 4.0]\n"
          "friction_bounds = [5.0, 80.0]\n"
          "multiplier_mean = 1.0\n"
          "multiplier_std = 0.1\n"
          "multiplier_bounds = [0.3, 3.0]\n"
          "correction_std = 0.03\n"
          "correction_bounds = [-0.3, 0.3]\n\n";
  toml << "[truth]\nfriction = [30.0, 18.0]\nmultiplier = 0.9\n\n";
  toml << "[ensemble]\nsize = 6\ninflation = 1.0\n\n";
  toml << "[observations]\n"
          "gauge_noise_std = " << spec.gauge_noise_std << "\n"
          "gauge_interval_s = " << (spec.observations ? 1800.0 : 1.0e9)
       << "\n"
          "wsr_noise_std = " << spec.wsr_noise_std << "\n"
          "wsr_times_s = " << (spec.observations ? "[10800.0]" : "[]")
       << "\n\n";
  toml << "[evaluation]\n"
          "report_interval_s = 1800.0\n"
          "contingency_times_s = [10800.0, 14400.0]\n"
          "exclude_zone = 0\n";
  toml.close();
  return (dir / "tiny.toml").string();
}

}  // namespace testsupport

#endif  // FLOODDA_TESTS_TINY_CASE_HPP
