#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "elai/linalg.hpp"

namespace elai {

/// Column layout of a labeled flow-record CSV.
struct FeatureSchema {
  std::vector<std::string> feature_names;
  std::string label_column = "label";
  std::optional<std::string> category_column;
  char delimiter = ',';
};

/// feature_names non-empty and pairwise distinct; label_column not a feature.
void validate(const FeatureSchema& schema);

/// Case-insensitive label vocabularies. Cells outside both sets are rejected
/// with UnknownLabel; vocabularies differ per dataset family, so both sides
/// are configurable.
struct LabelMapping {
  std::vector<std::string> positive = {"1", "attack", "malicious"};
  std::vector<std::string> negative = {"0", "normal", "benign"};
};

struct Dataset {
  Matrix x;            // n rows, d feature columns
  std::vector<int> y;  // 1 = attack, 0 = normal
  std::optional<std::vector<std::string>> categories;  // per-sample attack category
  FeatureSchema schema;

  std::size_t n() const { return x.rows(); }
  std::size_t d() const { return x.cols(); }
};

/// y entries in {0,1}; X finite; n >= 1, d >= 1; categories length n when present.
void validate(const Dataset& ds);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std_dev;   // population standard deviation
  std::vector<bool> constant;    // std_dev == 0
  std::size_t d() const { return mean.size(); }
};

struct SyntheticSpec {
  std::size_t n_normal = 100;
  std::size_t n_attack = 100;
  std::size_t d = 6;
  double separation = 6.0;  // distance between class means
  double noise_std = 1.0;
  std::size_t n_categories = 1;
};

void validate(const SyntheticSpec& spec);

/// Reads the schema-named columns of a header+rows CSV. Extra columns are
/// ignored; rows keep file order.
Dataset load_csv(const std::string& path, const FeatureSchema& schema,
                 const LabelMapping& labels = {});

/// Header from the file's first row: every column except label/category
/// becomes a feature, in header order.
FeatureSchema infer_schema(const std::string& path, const std::string& label_column,
                           const std::optional<std::string>& category_column,
                           char delimiter = ',');

/// Writes features (shortest round-trip decimals), label, and category column
/// when present. load_csv(save_csv(ds)) reproduces X bit for bit.
void save_csv(const Dataset& ds, const std::string& path);
std::string dataset_to_csv(const Dataset& ds);

NormStats fit_normalize(const Dataset& ds);

/// x' = (x - mean) / std per column; constant columns (std 0) map to 0.
Dataset apply_normalize(const Dataset& ds, const NormStats& stats);

struct SplitResult {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Seeded row partition; stratified mode splits each class separately and
/// preserves the class ratio within one sample per part.
SplitResult split(const Dataset& ds, double train_frac, double val_frac,
                  std::uint64_t seed, bool stratified);

/// Normal rows cluster at the origin, attack rows at `separation` along a
/// seeded random unit direction, both with isotropic Gaussian noise. Attack
/// rows get round-robin categories "cat0".."cat{n_categories-1}"; normal rows
/// get "normal".
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// (everything except attack rows of `category`, exactly those attack rows).
std::pair<Dataset, Dataset> holdout_category(const Dataset& ds, const std::string& category);

}  // namespace elai
