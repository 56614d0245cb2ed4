#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "elai/linalg.hpp"
#include "elai/model.hpp"

namespace elai {

/// Scalar score of an input vector; for the classifier this is the class-1
/// probability. Attributions are defined against any scorer so tests can
/// substitute closed-form stubs.
using Scorer = std::function<double(std::span<const double>)>;

Scorer model_scorer(const ElaiModel& model);

/// Coalition value function: features in the coalition take the sample's
/// values, all others take the reference (interventional baseline).
struct ValueFunctionSpec {
  std::vector<double> reference;  // default: zero vector, the normalized-data mean
};

ValueFunctionSpec zero_reference(std::size_t k);

double coalition_value(const Scorer& f, std::span<const double> x,
                       std::span<const std::size_t> subset, const ValueFunctionSpec& spec);

enum class AttributionMethod { exact, sampled };

struct Attribution {
  std::vector<double> phi;
  double base = 0.0;  // value of the empty coalition
  AttributionMethod method = AttributionMethod::exact;
  std::size_t permutations = 0;  // sampled only
  std::uint64_t seed = 0;        // sampled only
};

/// 2^k coalition evaluations; hard cap so one explanation stays at desk
/// latency.
inline constexpr std::size_t kExactShapCap = 15;

/// Exact Shapley values: phi_i = sum over coalitions S not containing i of
/// |S|!(k-|S|-1)!/k! * [f(S u {i}) - f(S)]. Satisfies efficiency:
/// base + sum(phi) = f(full set).
Attribution shap_exact(const Scorer& f, std::span<const double> x,
                       const ValueFunctionSpec& spec);
Attribution shap_exact(const ElaiModel& model, std::span<const double> x,
                       const ValueFunctionSpec& spec);

/// Monte-Carlo permutation estimate of the same quantity: each feature
/// averages its marginal contribution over m independently drawn insertion
/// orders. Unbiased; deterministic for a given seed.
Attribution shap_sampled(const Scorer& f, std::span<const double> x,
                         const ValueFunctionSpec& spec, std::size_t permutations,
                         std::uint64_t seed);
Attribution shap_sampled(const ElaiModel& model, std::span<const double> x,
                         const ValueFunctionSpec& spec, std::size_t permutations,
                         std::uint64_t seed);

struct AttentionMap {
  std::vector<double> alpha;    // per-step weights, sum to 1
  std::size_t argmax_step = 0;  // ties resolve to the lowest index
};

AttentionMap attention_map(const ForwardTrace& trace);

struct FidelityReport {
  double lfs = 0.0;  // mean squared gap between scorer and additive surrogate
  std::size_t n = 0;
};

/// Surrogate g(x) = base + sum(phi); LFS = mean (f(x_i) - g(x_i))^2. Exact
/// attributions force g = f pointwise, so their LFS vanishes.
FidelityReport local_fidelity(const Scorer& f, const Matrix& samples,
                              const std::vector<Attribution>& attributions);

struct RankedAttribution {
  std::size_t index;
  std::string name;
  double phi;
};

/// Descending |phi|, ties by index, truncated to `top`.
std::vector<RankedAttribution> rank_attributions(const Attribution& attr,
                                                 const std::vector<std::string>& names,
                                                 std::size_t top);

std::string attribution_to_csv(const Attribution& attr,
                               const std::vector<std::string>& names);
std::string attention_to_csv(const AttentionMap& map);

}  // namespace elai
