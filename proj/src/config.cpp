#include "floodda/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "floodda/common.hpp"

namespace floodda {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Removes a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

class ValueParser {
 public:
  ValueParser(const std::string& text, const std::string& where)
      : text_(text), where_(where) {}

  TomlValue parse() {
    TomlValue v = parse_value();
    skip_ws();
    if (pos_ != text_.size())
      throw ConfigError(where_ + ": trailing characters after value");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  TomlValue parse_value() {
    skip_ws();
    if (pos_ >= text_.size()) throw ConfigError(where_ + ": missing value");
    const char c = text_[pos_];
    if (c == '"') return parse_string();
    if (c == '[') return parse_array();
    return parse_scalar();
  }

  TomlValue parse_string() {
    TomlValue v;
    v.kind = TomlValue::Kind::kString;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      v.str += text_[pos_++];
    }
    if (pos_ >= text_.size())
      throw ConfigError(where_ + ": unterminated string");
    ++pos_;  // closing quote
    return v;
  }

  TomlValue parse_array() {
    TomlValue v;
    v.kind = TomlValue::Kind::kArray;
    ++pos_;  // '['
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return v;
    }
    while (true) {
      v.array.push_back(parse_value());
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (pos_ < text_.size() && text_[pos_] == ']') {
        ++pos_;
        return v;
      }
      throw ConfigError(where_ + ": expected ',' or ']' in array");
    }
  }

  TomlValue parse_scalar() {
    std::size_t end = pos_;
    while (end < text_.size() && text_[end] != ',' && text_[end] != ']')
      ++end;
    const std::string token = trim(text_.substr(pos_, end - pos_));
    pos_ = end;
    TomlValue v;
    if (token == "true" || token == "false") {
      v.kind = TomlValue::Kind::kBool;
      v.boolean = token == "true";
      return v;
    }
    try {
      std::size_t used = 0;
      v.num = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ConfigError(where_ + ": cannot parse value '" + token + "'");
    }
    v.kind = TomlValue::Kind::kNumber;
    return v;
  }

  const std::string& text_;
  const std::string where_;
  std::size_t pos_ = 0;
};

const char* kind_name(TomlValue::Kind k) {
  switch (k) {
    case TomlValue::Kind::kString: return "string";
    case TomlValue::Kind::kNumber: return "number";
    case TomlValue::Kind::kBool: return "bool";
    case TomlValue::Kind::kArray: return "array";
  }
  return "?";
}

}  // namespace

void TomlTable::set(const std::string& key, TomlValue value) {
  if (values_.count(key))
    throw ConfigError(context_ + ": duplicate key '" + key + "'");
  values_[key] = std::move(value);
}

bool TomlTable::has(const std::string& key) const {
  return values_.count(key) != 0;
}

const TomlValue& TomlTable::require(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError(context_ + ": missing required key '" + key + "'");
  return it->second;
}

std::string TomlTable::get_string(const std::string& key) const {
  const TomlValue& v = require(key);
  if (v.kind != TomlValue::Kind::kString)
    throw ConfigError(context_ + ": '" + key + "' must be a string, got " +
                      kind_name(v.kind));
  return v.str;
}

double TomlTable::get_number(const std::string& key) const {
  const TomlValue& v = require(key);
  if (v.kind != TomlValue::Kind::kNumber)
    throw ConfigError(context_ + ": '" + key + "' must be a number, got " +
                      kind_name(v.kind));
  return v.num;
}

double TomlTable::get_number_or(const std::string& key,
                                double fallback) const {
  return has(key) ? get_number(key) : fallback;
}

long TomlTable::get_int(const std::string& key) const {
  const double v = get_number(key);
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9)
    throw ConfigError(context_ + ": '" + key + "' must be an integer");
  return static_cast<long>(r);
}

bool TomlTable::get_bool_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const TomlValue& v = require(key);
  if (v.kind != TomlValue::Kind::kBool)
    throw ConfigError(context_ + ": '" + key + "' must be a boolean");
  return v.boolean;
}

std::vector<double> TomlTable::get_number_array(const std::string& key) const {
  const TomlValue& v = require(key);
  if (v.kind != TomlValue::Kind::kArray)
    throw ConfigError(context_ + ": '" + key + "' must be an array");
  std::vector<double> out;
  out.reserve(v.array.size());
  for (const TomlValue& e : v.array) {
    if (e.kind != TomlValue::Kind::kNumber)
      throw ConfigError(context_ + ": '" + key + "' must hold numbers only");
    out.push_back(e.num);
  }
  return out;
}

std::pair<double, double> TomlTable::get_pair(const std::string& key) const {
  const std::vector<double> v = get_number_array(key);
  if (v.size() != 2)
    throw ConfigError(context_ + ": '" + key + "' must be [lo, hi]");
  return {v[0], v[1]};
}

std::vector<std::pair<int, int>> TomlTable::get_cell_list(
    const std::string& key) const {
  const TomlValue& v = require(key);
  if (v.kind != TomlValue::Kind::kArray)
    throw ConfigError(context_ + ": '" + key + "' must be an array");
  std::vector<std::pair<int, int>> out;
  for (const TomlValue& e : v.array) {
    if (e.kind != TomlValue::Kind::kArray || e.array.size() != 2 ||
        e.array[0].kind != TomlValue::Kind::kNumber ||
        e.array[1].kind != TomlValue::Kind::kNumber)
      throw ConfigError(context_ + ": '" + key +
                        "' must hold [row, col] pairs");
    out.emplace_back(static_cast<int>(std::llround(e.array[0].num)),
                     static_cast<int>(std::llround(e.array[1].num)));
  }
  return out;
}

const std::vector<TomlTable>& TomlDoc::tables(const std::string& name) const {
  static const std::vector<TomlTable> kEmpty;
  auto it = arrays.find(name);
  return it == arrays.end() ? kEmpty : it->second;
}

TomlDoc parse_toml(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);

  TomlDoc doc;
  doc.root = TomlTable(path);
  std::string prefix;           // current [table] path with trailing dot
  TomlTable* array_elem = nullptr;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = path + ":" + std::to_string(line_no);
    std::string s = trim(strip_comment(line));
    if (s.empty()) continue;

    if (s.size() >= 4 && s.rfind("[[", 0) == 0 && s.substr(s.size() - 2) == "]]") {
      const std::string name = trim(s.substr(2, s.size() - 4));
      if (name.empty()) throw ConfigError(where + ": empty table name");
      doc.arrays[name].emplace_back(where + " [[" + name + "]]");
      array_elem = &doc.arrays[name].back();
      prefix.clear();
      continue;
    }
    if (s.front() == '[' && s.back() == ']') {
      const std::string name = trim(s.substr(1, s.size() - 2));
      if (name.empty()) throw ConfigError(where + ": empty table name");
      prefix = name + ".";
      array_elem = nullptr;
      continue;
    }

    const std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    const std::string value_text = trim(s.substr(eq + 1));
    TomlValue value = ValueParser(value_text, where).parse();
    if (array_elem)
      array_elem->set(key, std::move(value));
    else
      doc.root.set(prefix + key, std::move(value));
  }
  return doc;
}

namespace {

RectSpec rect_from(const TomlTable& t) {
  RectSpec r;
  if (t.has("id")) r.id = t.get_string("id");
  const auto rows = t.get_pair("rows");
  const auto cols = t.get_pair("cols");
  r.row0 = static_cast<int>(rows.first);
  r.row1 = static_cast<int>(rows.second);
  r.col0 = static_cast<int>(cols.first);
  r.col1 = static_cast<int>(cols.second);
  return r;
}

int resolve_cell(const Grid& grid, int row, int col, const char* what) {
  if (row < 0 || row >= grid.n_rows || col < 0 || col >= grid.n_cols)
    throw ConfigError(std::string(what) + " cell (" + std::to_string(row) +
                      "," + std::to_string(col) + ") outside the grid");
  return grid.index(row, col);
}

}  // namespace

Grid ExperimentConfig::build_grid() const {
  Grid grid = load_dem_grid(dem_path);
  grid.n_zones = static_cast<int>(prior.mean.friction.size());
  grid.friction_zone.assign(static_cast<std::size_t>(grid.size()), 0);
  for (const ZoneRect& z : zones) {
    if (z.zone < 0 || z.zone >= grid.n_zones)
      throw ConfigError("zone id " + std::to_string(z.zone) +
                        " outside [0, " + std::to_string(grid.n_zones) + ")");
    for (int r = z.row0; r <= z.row1; ++r)
      for (int c = z.col0; c <= z.col1; ++c)
        grid.friction_zone[static_cast<std::size_t>(
            resolve_cell(grid, r, c, "zone"))] = z.zone;
  }
  for (const auto& [r, c] : inflow_cells)
    grid.inflow_cells.push_back(resolve_cell(grid, r, c, "inflow"));
  for (const auto& [r, c] : outlet_cells)
    grid.outlet_cells.push_back(resolve_cell(grid, r, c, "outlet"));
  grid.validate();
  return grid;
}

std::vector<Subdomain> ExperimentConfig::build_subdomains(
    const Grid& grid) const {
  std::vector<Subdomain> out;
  out.reserve(subdomains.size());
  for (const RectSpec& r : subdomains) {
    Subdomain s;
    s.id = r.id;
    for (int row = r.row0; row <= r.row1; ++row)
      for (int col = r.col0; col <= r.col1; ++col)
        s.cells.push_back(resolve_cell(grid, row, col, "subdomain"));
    if (s.cells.empty())
      throw ConfigError("subdomain '" + s.id + "' has no cells");
    out.push_back(std::move(s));
  }
  return out;
}

std::map<std::string, int> ExperimentConfig::gauge_cells(
    const Grid& grid) const {
  std::map<std::string, int> out;
  for (const GaugeSpec& g : gauges) {
    if (out.count(g.id))
      throw ConfigError("duplicate gauge id '" + g.id + "'");
    out[g.id] = resolve_cell(grid, g.row, g.col, "gauge");
  }
  return out;
}

std::vector<int> ExperimentConfig::eval_cells(const Grid& grid) const {
  std::vector<int> out;
  for (int i = 0; i < grid.size(); ++i)
    if (grid.friction_zone[static_cast<std::size_t>(i)] != exclude_zone)
      out.push_back(i);
  return out;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const TomlDoc doc = parse_toml(path);
  const TomlTable& t = doc.root;
  const std::filesystem::path base =
      std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  ExperimentConfig cfg;
  cfg.dem_path = resolve(t.get_string("domain.dem"));
  cfg.hydrograph_path = resolve(t.get_string("inflow.hydrograph"));

  const double seed = t.get_number_or("experiment.seed", 1.0);
  if (!(seed >= 0.0 && seed == std::floor(seed)))
    throw ConfigError("experiment.seed must be a non-negative integer");
  cfg.seed = static_cast<std::uint64_t>(seed);

  cfg.t_end_s = t.get_number("time.t_end_s");
  cfg.spinup_s = t.get_number("time.spinup_s");
  cfg.cycle_s = t.get_number("time.cycle_s");
  if (!(cfg.t_end_s > cfg.spinup_s && cfg.spinup_s >= 0.0))
    throw ConfigError("time: need t_end_s > spinup_s >= 0");
  if (!(cfg.cycle_s > 0.0)) throw ConfigError("time: cycle_s must be > 0");
  const double horizon = cfg.t_end_s - cfg.spinup_s;
  const double n_cycles = horizon / cfg.cycle_s;
  if (std::abs(n_cycles - std::round(n_cycles)) > 1e-9)
    throw ConfigError("time: (t_end_s - spinup_s) must be a whole number of "
                      "cycles");

  cfg.step_options.max_dt = t.get_number_or("model.max_dt_s", 60.0);
  cfg.step_options.cfl = t.get_number_or("model.cfl", 0.5);
  cfg.wet_threshold_m = t.get_number_or("model.wet_threshold_m", 0.01);

  cfg.inflow_cells = t.get_cell_list("inflow.cells");
  cfg.outlet_cells = t.get_cell_list("outlet.cells");

  for (const TomlTable& zt : doc.tables("zone")) {
    ZoneRect z;
    z.zone = static_cast<int>(zt.get_int("id"));
    const auto rows = zt.get_pair("rows");
    const auto cols = zt.get_pair("cols");
    z.row0 = static_cast<int>(rows.first);
    z.row1 = static_cast<int>(rows.second);
    z.col0 = static_cast<int>(cols.first);
    z.col1 = static_cast<int>(cols.second);
    cfg.zones.push_back(z);
  }
  for (const TomlTable& gt : doc.tables("gauge")) {
    GaugeSpec g;
    g.id = gt.get_string("id");
    g.row = static_cast<int>(gt.get_int("row"));
    g.col = static_cast<int>(gt.get_int("col"));
    cfg.gauges.push_back(g);
  }
  for (const TomlTable& st : doc.tables("subdomain")) {
    RectSpec r = rect_from(st);
    if (r.id.empty())
      throw ConfigError("every [[subdomain]] needs an id");
    cfg.subdomains.push_back(r);
  }
  if (cfg.gauges.empty()) throw ConfigError("at least one [[gauge]] required");

  cfg.prior.mean.friction = t.get_number_array("prior.friction_mean");
  cfg.prior.friction_std = t.get_number_array("prior.friction_std");
  if (cfg.prior.mean.friction.empty() ||
      cfg.prior.friction_std.size() != cfg.prior.mean.friction.size())
    throw ConfigError("prior: friction_mean and friction_std must be "
                      "non-empty and the same length");
  const auto fb = t.get_pair("prior.friction_bounds");
  cfg.prior.bounds.friction_lo = fb.first;
  cfg.prior.bounds.friction_hi = fb.second;
  cfg.prior.mean.inflow_multiplier = t.get_number("prior.multiplier_mean");
  cfg.prior.multiplier_std = t.get_number("prior.multiplier_std");
  const auto mb = t.get_pair("prior.multiplier_bounds");
  cfg.prior.bounds.multiplier_lo = mb.first;
  cfg.prior.bounds.multiplier_hi = mb.second;
  const double corr_std = t.get_number("prior.correction_std");
  if (!(corr_std >= 0.0))
    throw ConfigError("prior: correction_std must be >= 0");
  const auto cb = t.get_pair("prior.correction_bounds");
  cfg.prior.bounds.correction_lo = cb.first;
  cfg.prior.bounds.correction_hi = cb.second;
  cfg.prior.mean.depth_corrections.assign(cfg.subdomains.size(), 0.0);
  cfg.prior.correction_std.assign(cfg.subdomains.size(), corr_std);

  cfg.truth_friction = t.get_number_array("truth.friction");
  if (cfg.truth_friction.size() != cfg.prior.mean.friction.size())
    throw ConfigError("truth.friction length must match prior.friction_mean");
  cfg.truth_multiplier = t.get_number("truth.multiplier");

  cfg.ensemble_size = static_cast<int>(t.get_int("ensemble.size"));
  if (cfg.ensemble_size < 2)
    throw ConfigError("ensemble.size must be at least 2");
  cfg.inflation = t.get_number_or("ensemble.inflation", 1.0);
  if (!(cfg.inflation >= 1.0))
    throw ConfigError("ensemble.inflation must be >= 1");

  cfg.gauge_noise_std = t.get_number("observations.gauge_noise_std");
  cfg.gauge_interval_s = t.get_number("observations.gauge_interval_s");
  if (!(cfg.gauge_noise_std >= 0.0) || !(cfg.gauge_interval_s > 0.0))
    throw ConfigError("observations: gauge noise must be >= 0 and the "
                      "interval > 0");
  cfg.wsr_noise_std = t.get_number_or("observations.wsr_noise_std", 0.25);
  if (!(cfg.wsr_noise_std >= 0.0))
    throw ConfigError("observations.wsr_noise_std must be >= 0");
  if (t.has("observations.wsr_times_s"))
    cfg.wsr_times_s = t.get_number_array("observations.wsr_times_s");

  cfg.report_interval_s = t.get_number("evaluation.report_interval_s");
  if (!(cfg.report_interval_s > 0.0))
    throw ConfigError("evaluation.report_interval_s must be > 0");
  cfg.contingency_times_s =
      t.get_number_array("evaluation.contingency_times_s");
  cfg.exclude_zone =
      static_cast<int>(t.get_number_or("evaluation.exclude_zone", -1));

  for (double ts : cfg.wsr_times_s)
    if (!(ts > cfg.spinup_s && ts <= cfg.t_end_s))
      throw ConfigError("observations.wsr_times_s must lie in "
                        "(spinup_s, t_end_s]");
  for (double ts : cfg.contingency_times_s)
    if (!(ts > cfg.spinup_s && ts <= cfg.t_end_s))
      throw ConfigError("evaluation.contingency_times_s must lie in "
                        "(spinup_s, t_end_s]");
  return cfg;
}

}  // namespace floodda
