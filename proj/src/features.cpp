#include "elai/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include "elai/errors.hpp"

namespace elai {

namespace {

std::vector<double> column_means(const Matrix& x) {
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) sum += x(i, j);
    mean[j] = sum / static_cast<double>(x.rows());
  }
  return mean;
}

/// Population covariance of the rows of x.
Matrix covariance(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const auto mean = column_means(x);
  Matrix cov(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double da = x(i, a) - mean[a];
      for (std::size_t b = a; b < d; ++b) {
        cov(a, b) += da * (x(i, b) - mean[b]);
      }
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) /= static_cast<double>(n);
      cov(b, a) = cov(a, b);
    }
  }
  return cov;
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

Projection fit_pca(const Matrix& x, std::size_t k) {
  const std::size_t d = x.cols();
  if (x.rows() < 1 || d < 1) fail(ErrorCode::EmptyFile, "fit_pca: empty matrix");
  if (k < 1 || k > d) {
    fail(ErrorCode::BadK, "fit_pca: k=" + std::to_string(k) + " outside [1, " +
                              std::to_string(d) + "]");
  }

  const Matrix cov = covariance(x);
  const EighResult eig = jacobi_eigh(cov);

  double total = 0.0;
  for (double v : eig.eigenvalues) total += v;

  Projection p;
  p.mode = ProjectionMode::pca;
  p.w = Matrix(d, k);
  p.eigenvalues.resize(k);
  p.explained.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t r = 0; r < d; ++r) p.w(r, c) = eig.eigenvectors(r, c);
    p.eigenvalues[c] = eig.eigenvalues[c];
    p.explained[c] = total > 0.0 ? eig.eigenvalues[c] / total : 0.0;
  }
  return p;
}

Projection fit_fisher(const Matrix& x, const std::vector<int>& y, std::size_t k) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (y.size() != n) fail(ErrorCode::LengthMismatch, "fit_fisher: labels vs rows");

  std::vector<std::size_t> class_count(2, 0);
  for (int label : y) {
    if (label != 0 && label != 1) fail(ErrorCode::UnknownLabel, "labels must be 0 or 1");
    ++class_count[static_cast<std::size_t>(label)];
  }
  if (class_count[0] == 0 || class_count[1] == 0) {
    fail(ErrorCode::SingleClass, "fit_fisher needs both classes present");
  }
  const std::size_t max_k = 1;  // classes - 1 for binary labels
  if (k < 1 || k > max_k || k > d) {
    fail(ErrorCode::BadK, "fit_fisher: k=" + std::to_string(k) +
                              " exceeds classes-1=" + std::to_string(max_k));
  }

  // Class means and the grand mean.
  std::vector<std::vector<double>> mu(2, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    auto& m = mu[static_cast<std::size_t>(y[i])];
    for (std::size_t j = 0; j < d; ++j) m[j] += x(i, j);
  }
  for (int c = 0; c < 2; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      mu[c][j] /= static_cast<double>(class_count[c]);
    }
  }
  std::vector<double> grand(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    grand[j] = (mu[0][j] * static_cast<double>(class_count[0]) +
                mu[1][j] * static_cast<double>(class_count[1])) /
               static_cast<double>(n);
  }

  Matrix s_w(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = mu[static_cast<std::size_t>(y[i])];
    for (std::size_t a = 0; a < d; ++a) {
      const double da = x(i, a) - m[a];
      for (std::size_t b = a; b < d; ++b) {
        s_w(a, b) += da * (x(i, b) - m[b]);
      }
    }
  }
  Matrix s_b(d, d);
  for (int c = 0; c < 2; ++c) {
    const double w = static_cast<double>(class_count[c]);
    for (std::size_t a = 0; a < d; ++a) {
      const double da = mu[c][a] - grand[a];
      for (std::size_t b = a; b < d; ++b) {
        s_b(a, b) += w * da * (mu[c][b] - grand[b]);
      }
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      s_w(b, a) = s_w(a, b);
      s_b(b, a) = s_b(a, b);
    }
  }

  double trace = 0.0;
  for (std::size_t j = 0; j < d; ++j) trace += s_w(j, j);
  const double eps = 1e-6 * trace / static_cast<double>(d);
  Matrix s_w_reg = s_w;
  for (std::size_t j = 0; j < d; ++j) s_w_reg(j, j) += eps;

  // S_B w = lambda S_W w via Cholesky: C = L^-1 S_B L^-T is symmetric, its
  // eigenvectors v map back through w = L^-T v.
  const auto l = cholesky(s_w_reg);
  if (!l) fail(ErrorCode::SingularScatter, "within-class scatter not invertible");

  Matrix c = solve_lower(*l, transpose(solve_lower(*l, s_b)));
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      const double avg = 0.5 * (c(a, b) + c(b, a));
      c(a, b) = avg;
      c(b, a) = avg;
    }
  }
  const EighResult eig = jacobi_eigh(c);

  Projection p;
  p.mode = ProjectionMode::fisher;
  p.w = Matrix(d, k);
  p.explained.resize(k);
  p.eigenvalues.resize(k);
  for (std::size_t col = 0; col < k; ++col) {
    std::vector<double> v(d);
    for (std::size_t r = 0; r < d; ++r) v[r] = eig.eigenvectors(r, col);
    const auto w = solve_lower_transposed(*l, v);
    // Same sign convention as the eigensolver, reapplied after the back-map.
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      if (std::abs(w[r]) > best) {
        best = std::abs(w[r]);
        arg = r;
      }
    }
    const double flip = w[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < d; ++r) p.w(r, col) = flip * w[r];
    p.explained[col] = eig.eigenvalues[col];
    p.eigenvalues[col] = eig.eigenvalues[col];
  }
  p.scatter = std::make_pair(std::move(s_w), std::move(s_b));
  return p;
}

Matrix apply_projection(const Matrix& x, const Projection& p) {
  if (x.cols() != p.input_dim()) {
    fail(ErrorCode::DimensionMismatch, "apply_projection: " + std::to_string(x.cols()) +
                                           " columns vs W with " +
                                           std::to_string(p.input_dim()) + " rows");
  }
  return matmul(x, p.w);
}

double entropy(const std::vector<int>& labels) {
  if (labels.empty()) fail(ErrorCode::LengthMismatch, "entropy of empty labels");
  std::size_t ones = 0;
  for (int v : labels) ones += v == 1 ? 1 : 0;
  const double n = static_cast<double>(labels.size());
  double h = 0.0;
  for (double count : {static_cast<double>(ones), n - static_cast<double>(ones)}) {
    if (count > 0.0) {
      const double p = count / n;
      h -= p * std::log2(p);
    }
  }
  return h;
}

double information_gain(std::span<const double> feature, const std::vector<int>& labels,
                        std::size_t bins) {
  if (feature.size() != labels.size()) {
    fail(ErrorCode::LengthMismatch, "feature length " + std::to_string(feature.size()) +
                                        " vs labels " + std::to_string(labels.size()));
  }
  if (bins < 2) fail(ErrorCode::BadConfig, "bins must be >= 2");
  const std::size_t n = feature.size();
  const double h_y = entropy(labels);

  // Equal-frequency cut points are order statistics; equal values share a
  // cell, so the gain is invariant under strictly monotone transforms.
  std::vector<double> sorted(feature.begin(), feature.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (std::size_t b = 1; b < bins; ++b) {
    const std::size_t cut = b * n / bins;
    if (cut == 0 || cut >= n) continue;
    const double edge = sorted[cut];
    if (edges.empty() || edge > edges.back()) edges.push_back(edge);
  }

  auto cell_of = [&](double v) {
    std::size_t cell = 0;
    for (double e : edges) {
      if (v >= e) ++cell;
    }
    return cell;
  };

  const std::size_t n_cells = edges.size() + 1;
  std::vector<std::size_t> cell_total(n_cells, 0), cell_ones(n_cells, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = cell_of(feature[i]);
    ++cell_total[c];
    cell_ones[c] += labels[i] == 1 ? 1 : 0;
  }

  double conditional = 0.0;
  for (std::size_t c = 0; c < n_cells; ++c) {
    if (cell_total[c] == 0) continue;
    const double total = static_cast<double>(cell_total[c]);
    const double p_cell = total / static_cast<double>(n);
    double h = 0.0;
    for (double count : {static_cast<double>(cell_ones[c]),
                         total - static_cast<double>(cell_ones[c])}) {
      if (count > 0.0) {
        const double p = count / total;
        h -= p * std::log2(p);
      }
    }
    conditional += p_cell * h;
  }
  return std::clamp(h_y - conditional, 0.0, h_y);
}

FeatureRanking rank_features(const Dataset& ds, std::size_t bins) {
  validate(ds);
  FeatureRanking ranking;
  ranking.bins = bins;
  ranking.label_entropy_bits = entropy(ds.y);

  std::vector<double> column(ds.n());
  for (std::size_t j = 0; j < ds.d(); ++j) {
    for (std::size_t i = 0; i < ds.n(); ++i) column[i] = ds.x(i, j);
    const std::string name = j < ds.schema.feature_names.size()
                                 ? ds.schema.feature_names[j]
                                 : "f" + std::to_string(j);
    ranking.entries.push_back({j, name, information_gain(column, ds.y, bins)});
  }
  std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                   [](const RankedFeature& a, const RankedFeature& b) {
                     if (a.ig_bits != b.ig_bits) return a.ig_bits > b.ig_bits;
                     return a.index < b.index;
                   });
  return ranking;
}

std::string ranking_to_csv(const FeatureRanking& ranking) {
  std::string out = "index,name,ig_bits\n";
  for (const auto& e : ranking.entries) {
    out += std::to_string(e.index);
    out += ',';
    out += e.name;
    out += ',';
    append_double(out, e.ig_bits);
    out += '\n';
  }
  return out;
}

}  // namespace elai
