#ifndef FLOODDA_METRICS_HPP
#define FLOODDA_METRICS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace floodda {

/// Root-mean-square difference of two aligned series. Throws ContractError
/// when empty or of different lengths.
double rmse(std::span<const double> a, std::span<const double> b);

/// Cell classification against a reference wet mask:
///   0 correct negative, 1 hit, 2 miss, 3 false alarm.
enum : std::uint8_t {
  kCorrectNegative = 0,
  kHit = 1,
  kMiss = 2,
  kFalseAlarm = 3,
};

/// Wet/dry agreement of a model mask against a reference mask. The map
/// classifies every cell; the counts cover only the evaluation cells.
struct ContingencyResult {
  long hits = 0;
  long misses = 0;
  long false_alarms = 0;
  long correct_negatives = 0;
  std::vector<std::uint8_t> map;

  /// Critical success index in percent, 100 * hits / (hits + misses +
  /// false alarms); empty when that denominator is zero.
  std::optional<double> csi() const;
};

ContingencyResult contingency(std::span<const std::uint8_t> reference_mask,
                              std::span<const std::uint8_t> model_mask,
                              std::span<const int> eval_cells);

/// "NA" or the value with two decimals, the table convention for scores.
std::string format_csi(const std::optional<double>& csi);

/// Plain ASCII (P2) greymap, used for wet masks and contingency maps.
struct PgmImage {
  int n_rows = 0;
  int n_cols = 0;
  int maxval = 0;
  std::vector<std::uint8_t> values;
};

void write_pgm(const std::string& path, int n_rows, int n_cols,
               std::span<const std::uint8_t> values, int maxval);
PgmImage read_pgm(const std::string& path);

}  // namespace floodda

#endif  // FLOODDA_METRICS_HPP
