#include "floodda/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "floodda/common.hpp"

namespace floodda {

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ContractError("rmse series lengths differ");
  if (a.empty()) throw ContractError("rmse of empty series");
  std::vector<double> sq(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq[i] = d * d;
  }
  return std::sqrt(stable_mean(sq));
}

std::optional<double> ContingencyResult::csi() const {
  const long denom = hits + misses + false_alarms;
  if (denom == 0) return std::nullopt;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(denom);
}

ContingencyResult contingency(std::span<const std::uint8_t> reference_mask,
                              std::span<const std::uint8_t> model_mask,
                              std::span<const int> eval_cells) {
  if (reference_mask.size() != model_mask.size())
    throw ContractError("contingency mask sizes differ");
  ContingencyResult r;
  r.map.resize(reference_mask.size());
  for (std::size_t i = 0; i < reference_mask.size(); ++i) {
    const bool ref = reference_mask[i] != 0;
    const bool mod = model_mask[i] != 0;
    r.map[i] = ref ? (mod ? kHit : kMiss) : (mod ? kFalseAlarm
                                                 : kCorrectNegative);
  }
  for (int cell : eval_cells) {
    if (cell < 0 || static_cast<std::size_t>(cell) >= r.map.size())
      throw ContractError("evaluation cell out of range");
    switch (r.map[static_cast<std::size_t>(cell)]) {
      case kHit: ++r.hits; break;
      case kMiss: ++r.misses; break;
      case kFalseAlarm: ++r.false_alarms; break;
      default: ++r.correct_negatives; break;
    }
  }
  return r;
}

std::string format_csi(const std::optional<double>& csi) {
  if (!csi) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *csi);
  return buf;
}

void write_pgm(const std::string& path, int n_rows, int n_cols,
               std::span<const std::uint8_t> values, int maxval) {
  if (n_rows <= 0 || n_cols <= 0 ||
      values.size() != static_cast<std::size_t>(n_rows) *
                           static_cast<std::size_t>(n_cols))
    throw ContractError("pgm dimensions do not match the value count");
  if (maxval < 1 || maxval > 255)
    throw ContractError("pgm maxval must be in [1, 255]");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write pgm file: " + path);
  out << "P2\n" << n_cols << ' ' << n_rows << '\n' << maxval << '\n';
  for (int r = 0; r < n_rows; ++r) {
    for (int c = 0; c < n_cols; ++c) {
      if (c) out << ' ';
      out << static_cast<int>(values[static_cast<std::size_t>(r) *
                                         static_cast<std::size_t>(n_cols) +
                                     static_cast<std::size_t>(c)]);
    }
    out << '\n';
  }
}

PgmImage read_pgm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pgm file: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P2") throw ConfigError(path + ": not a P2 pgm file");
  PgmImage img;
  in >> img.n_cols >> img.n_rows >> img.maxval;
  if (!in || img.n_cols <= 0 || img.n_rows <= 0)
    throw ConfigError(path + ": bad pgm header");
  img.values.reserve(static_cast<std::size_t>(img.n_cols) *
                     static_cast<std::size_t>(img.n_rows));
  int v = 0;
  while (in >> v) {
    if (v < 0 || v > img.maxval)
      throw ConfigError(path + ": pixel outside [0, maxval]");
    img.values.push_back(static_cast<std::uint8_t>(v));
  }
  if (img.values.size() != static_cast<std::size_t>(img.n_cols) *
                               static_cast<std::size_t>(img.n_rows))
    throw ConfigError(path + ": pixel count does not match header");
  return img;
}

}  // namespace floodda
