#include "elai/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <unordered_map>

#include "elai/errors.hpp"
#include "elai/rng.hpp"

namespace elai {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, delim)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) cells.push_back("");
  return cells;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream file(path);
  if (!file) fail(ErrorCode::IoFailure, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(file, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

/// Shortest decimal representation that parses back to the same double.
void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

bool contains_ci(const std::vector<std::string>& set, const std::string& value) {
  const std::string needle = lower(value);
  return std::any_of(set.begin(), set.end(),
                     [&](const std::string& s) { return lower(s) == needle; });
}

}  // namespace

void validate(const FeatureSchema& schema) {
  if (schema.feature_names.empty()) {
    fail(ErrorCode::BadConfig, "schema has no feature columns");
  }
  std::set<std::string> seen;
  for (const auto& name : schema.feature_names) {
    if (!seen.insert(name).second) {
      fail(ErrorCode::BadConfig, "duplicate feature column '" + name + "'");
    }
  }
  if (seen.count(schema.label_column) != 0) {
    fail(ErrorCode::BadConfig,
         "label column '" + schema.label_column + "' is also a feature");
  }
}

void validate(const Dataset& ds) {
  if (ds.n() < 1 || ds.d() < 1) {
    fail(ErrorCode::EmptyFile, "dataset must have at least one row and one feature");
  }
  if (ds.y.size() != ds.n()) {
    fail(ErrorCode::LengthMismatch, "label vector length != row count");
  }
  for (int v : ds.y) {
    if (v != 0 && v != 1) fail(ErrorCode::UnknownLabel, "labels must be 0 or 1");
  }
  for (double v : ds.x.data()) {
    if (!std::isfinite(v)) fail(ErrorCode::NonNumericCell, "non-finite feature value");
  }
  if (ds.categories && ds.categories->size() != ds.n()) {
    fail(ErrorCode::LengthMismatch, "category vector length != row count");
  }
}

void validate(const SyntheticSpec& spec) {
  if (spec.n_normal < 1) fail(ErrorCode::BadConfig, "n_normal must be >= 1");
  if (spec.n_attack < 1) fail(ErrorCode::BadConfig, "n_attack must be >= 1");
  if (spec.d < 1) fail(ErrorCode::BadConfig, "d must be >= 1");
  if (spec.n_categories < 1) fail(ErrorCode::BadConfig, "n_categories must be >= 1");
  if (!(spec.separation >= 0.0)) fail(ErrorCode::BadConfig, "separation must be >= 0");
  if (!(spec.noise_std > 0.0)) fail(ErrorCode::BadConfig, "noise_std must be > 0");
}

FeatureSchema infer_schema(const std::string& path, const std::string& label_column,
                           const std::optional<std::string>& category_column,
                           char delimiter) {
  const auto lines = read_lines(path);
  if (lines.empty()) fail(ErrorCode::EmptyFile, path + " has no header row");
  const auto header = split_line(lines[0], delimiter);

  FeatureSchema schema;
  schema.label_column = label_column;
  schema.delimiter = delimiter;
  bool saw_label = false;
  for (const auto& name : header) {
    if (name == label_column) {
      saw_label = true;
      continue;
    }
    if (category_column && name == *category_column) {
      schema.category_column = name;
      continue;
    }
    schema.feature_names.push_back(name);
  }
  if (!saw_label) {
    fail(ErrorCode::MissingColumn, "label column '" + label_column + "' not in header");
  }
  validate(schema);
  return schema;
}

Dataset load_csv(const std::string& path, const FeatureSchema& schema,
                 const LabelMapping& labels) {
  validate(schema);
  const auto lines = read_lines(path);
  if (lines.empty()) fail(ErrorCode::EmptyFile, path + " has no header row");

  const auto header = split_line(lines[0], schema.delimiter);
  std::unordered_map<std::string, std::size_t> column_of;
  for (std::size_t i = 0; i < header.size(); ++i) column_of.emplace(header[i], i);

  auto locate = [&](const std::string& name) {
    auto it = column_of.find(name);
    if (it == column_of.end()) {
      fail(ErrorCode::MissingColumn, "column '" + name + "' not in header");
    }
    return it->second;
  };

  std::vector<std::size_t> feature_cols;
  feature_cols.reserve(schema.feature_names.size());
  for (const auto& name : schema.feature_names) feature_cols.push_back(locate(name));
  const std::size_t label_col = locate(schema.label_column);
  std::optional<std::size_t> category_col;
  if (schema.category_column) category_col = locate(*schema.category_column);

  const std::size_t n = lines.size() - 1;
  if (n == 0) fail(ErrorCode::EmptyFile, path + " has no data rows");
  const std::size_t d = schema.feature_names.size();

  Dataset ds;
  ds.schema = schema;
  ds.x = Matrix(n, d);
  ds.y.resize(n);
  if (category_col) ds.categories.emplace(n);

  for (std::size_t r = 0; r < n; ++r) {
    const auto cells = split_line(lines[r + 1], schema.delimiter);
    if (cells.size() < header.size()) {
      fail(ErrorCode::NonNumericCell, "row " + std::to_string(r + 1) + " has " +
                                          std::to_string(cells.size()) + " cells, expected " +
                                          std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      const std::string& cell = cells[feature_cols[j]];
      double value = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() ||
          !std::isfinite(value)) {
        fail(ErrorCode::NonNumericCell, "row " + std::to_string(r + 1) + ", column '" +
                                            schema.feature_names[j] + "': '" + cell + "'");
      }
      ds.x(r, j) = value;
    }
    const std::string& label_cell = cells[label_col];
    if (contains_ci(labels.positive, label_cell)) {
      ds.y[r] = 1;
    } else if (contains_ci(labels.negative, label_cell)) {
      ds.y[r] = 0;
    } else {
      fail(ErrorCode::UnknownLabel,
           "row " + std::to_string(r + 1) + ": label '" + label_cell + "'");
    }
    if (category_col) (*ds.categories)[r] = cells[*category_col];
  }
  validate(ds);
  return ds;
}

std::string dataset_to_csv(const Dataset& ds) {
  std::string out;
  const char delim = ds.schema.delimiter;
  for (std::size_t j = 0; j < ds.d(); ++j) {
    out += ds.schema.feature_names[j];
    out += delim;
  }
  out += ds.schema.label_column;
  if (ds.categories) {
    out += delim;
    out += ds.schema.category_column.value_or("category");
  }
  out += '\n';

  for (std::size_t r = 0; r < ds.n(); ++r) {
    for (std::size_t j = 0; j < ds.d(); ++j) {
      append_double(out, ds.x(r, j));
      out += delim;
    }
    out += ds.y[r] == 1 ? '1' : '0';
    if (ds.categories) {
      out += delim;
      out += (*ds.categories)[r];
    }
    out += '\n';
  }
  return out;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) fail(ErrorCode::IoFailure, "cannot write " + path);
  const std::string text = dataset_to_csv(ds);
  file.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!file) fail(ErrorCode::IoFailure, "short write to " + path);
}

NormStats fit_normalize(const Dataset& ds) {
  validate(ds);
  if (ds.n() < 2) fail(ErrorCode::TooFewRows, "normalization needs n >= 2");
  const std::size_t n = ds.n();
  const std::size_t d = ds.d();
  NormStats stats;
  stats.mean.assign(d, 0.0);
  stats.std_dev.assign(d, 0.0);
  stats.constant.assign(d, false);
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += ds.x(i, j);
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double delta = ds.x(i, j) - mean;
      sq += delta * delta;
    }
    stats.mean[j] = mean;
    stats.std_dev[j] = std::sqrt(sq / static_cast<double>(n));
    stats.constant[j] = stats.std_dev[j] == 0.0;
  }
  return stats;
}

Dataset apply_normalize(const Dataset& ds, const NormStats& stats) {
  if (stats.d() != ds.d()) {
    fail(ErrorCode::DimensionMismatch, "stats dimension " + std::to_string(stats.d()) +
                                           " != dataset dimension " + std::to_string(ds.d()));
  }
  Dataset out = ds;
  for (std::size_t j = 0; j < ds.d(); ++j) {
    if (stats.constant[j]) {
      for (std::size_t i = 0; i < ds.n(); ++i) out.x(i, j) = 0.0;
    } else {
      for (std::size_t i = 0; i < ds.n(); ++i) {
        out.x(i, j) = (ds.x(i, j) - stats.mean[j]) / stats.std_dev[j];
      }
    }
  }
  return out;
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.schema = ds.schema;
  out.x = Matrix(rows.size(), ds.d());
  out.y.resize(rows.size());
  if (ds.categories) out.categories.emplace(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t src = rows[i];
    for (std::size_t j = 0; j < ds.d(); ++j) out.x(i, j) = ds.x(src, j);
    out.y[i] = ds.y[src];
    if (ds.categories) (*out.categories)[i] = (*ds.categories)[src];
  }
  return out;
}

std::size_t rounded_count(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
}

}  // namespace

SplitResult split(const Dataset& ds, double train_frac, double val_frac,
                  std::uint64_t seed, bool stratified) {
  validate(ds);
  if (!(train_frac > 0.0) || !(val_frac >= 0.0) || !(train_frac + val_frac < 1.0)) {
    fail(ErrorCode::BadFractions, "need 0 < train, 0 <= val, train + val < 1");
  }

  std::vector<std::size_t> train_rows, val_rows, test_rows;
  Rng rng(seed);

  auto assign = [&](std::vector<std::size_t>& pool) {
    shuffle(pool, rng);
    const std::size_t n_train = std::min(rounded_count(train_frac, pool.size()), pool.size());
    const std::size_t n_val =
        std::min(rounded_count(val_frac, pool.size()), pool.size() - n_train);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (i < n_train) {
        train_rows.push_back(pool[i]);
      } else if (i < n_train + n_val) {
        val_rows.push_back(pool[i]);
      } else {
        test_rows.push_back(pool[i]);
      }
    }
  };

  if (stratified) {
    std::vector<std::size_t> zeros, ones;
    for (std::size_t i = 0; i < ds.n(); ++i) (ds.y[i] == 1 ? ones : zeros).push_back(i);
    if (zeros.empty() || ones.empty()) {
      fail(ErrorCode::ClassAbsent, "stratified split needs both classes present");
    }
    assign(zeros);
    assign(ones);
  } else {
    std::vector<std::size_t> all(ds.n());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    assign(all);
  }

  std::sort(train_rows.begin(), train_rows.end());
  std::sort(val_rows.begin(), val_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {take_rows(ds, train_rows), take_rows(ds, val_rows), take_rows(ds, test_rows)};
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng(seed);

  // Seeded random unit direction for the attack-class mean offset.
  std::vector<double> direction(spec.d);
  double norm_sq = 0.0;
  for (double& v : direction) {
    v = rng.normal();
    norm_sq += v * v;
  }
  const double norm = std::sqrt(norm_sq);
  for (double& v : direction) v = norm > 0.0 ? v / norm : 0.0;

  const std::size_t n = spec.n_normal + spec.n_attack;
  Dataset ds;
  ds.x = Matrix(n, spec.d);
  ds.y.resize(n);
  ds.categories.emplace(n);

  ds.schema.label_column = "label";
  ds.schema.category_column = "category";
  for (std::size_t j = 0; j < spec.d; ++j) {
    ds.schema.feature_names.push_back("f" + std::to_string(j));
  }

  for (std::size_t i = 0; i < spec.n_normal; ++i) {
    for (std::size_t j = 0; j < spec.d; ++j) ds.x(i, j) = spec.noise_std * rng.normal();
    ds.y[i] = 0;
    (*ds.categories)[i] = "normal";
  }
  for (std::size_t a = 0; a < spec.n_attack; ++a) {
    const std::size_t i = spec.n_normal + a;
    for (std::size_t j = 0; j < spec.d; ++j) {
      ds.x(i, j) = spec.separation * direction[j] + spec.noise_std * rng.normal();
    }
    ds.y[i] = 1;
    (*ds.categories)[i] = "cat" + std::to_string(a % spec.n_categories);
  }
  validate(ds);
  return ds;
}

std::pair<Dataset, Dataset> holdout_category(const Dataset& ds, const std::string& category) {
  validate(ds);
  if (!ds.categories) fail(ErrorCode::NoCategories, "dataset has no category column");

  std::vector<std::size_t> kept, held;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.y[i] == 1 && (*ds.categories)[i] == category) {
      held.push_back(i);
    } else {
      kept.push_back(i);
    }
  }
  if (held.empty()) {
    fail(ErrorCode::UnknownCategory, "no attack rows with category '" + category + "'");
  }
  return {take_rows(ds, kept), take_rows(ds, held)};
}

}  // namespace elai
