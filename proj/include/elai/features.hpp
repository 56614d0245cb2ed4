#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "elai/dataset.hpp"
#include "elai/linalg.hpp"

namespace elai {

enum class ProjectionMode { pca, fisher };

/// Learned linear transform z = x W.
struct Projection {
  Matrix w;  // d x k
  ProjectionMode mode = ProjectionMode::pca;
  /// pca: variance fraction per component; fisher: generalized eigenvalues.
  std::vector<double> explained;
  /// pca: raw covariance eigenvalues (equal to projected column variances on
  /// the fitting data); fisher: same as explained.
  std::vector<double> eigenvalues;
  /// fisher only: (within-class, between-class) scatter matrices.
  std::optional<std::pair<Matrix, Matrix>> scatter;

  std::size_t input_dim() const { return w.rows(); }
  std::size_t output_dim() const { return w.cols(); }
};

/// Top-k eigenvectors of the (population) covariance, descending eigenvalue
/// order. Centering is applied internally; the stored W acts on raw rows.
Projection fit_pca(const Matrix& x, std::size_t k);

/// Maximizes between-class over within-class scatter: solves the generalized
/// eigenproblem S_B w = lambda S_W w after regularizing S_W by
/// (1e-6 * trace(S_W) / d) * I. Binary labels limit k to 1.
Projection fit_fisher(const Matrix& x, const std::vector<int>& y, std::size_t k);

Matrix apply_projection(const Matrix& x, const Projection& p);

/// Label entropy in bits, with 0 log 0 = 0.
double entropy(const std::vector<int>& labels);

/// Reduction of label entropy after equal-frequency discretization of the
/// feature into at most `bins` cells (tied values collapse cells). Clamped to
/// [0, H(Y)].
double information_gain(std::span<const double> feature, const std::vector<int>& labels,
                        std::size_t bins);

struct RankedFeature {
  std::size_t index;
  std::string name;
  double ig_bits;
};

struct FeatureRanking {
  std::vector<RankedFeature> entries;  // descending ig_bits, ties by index
  double label_entropy_bits = 0.0;
  std::size_t bins = 0;
};

FeatureRanking rank_features(const Dataset& ds, std::size_t bins);

/// "index,name,ig_bits" rows, ranking order.
std::string ranking_to_csv(const FeatureRanking& ranking);

}  // namespace elai
