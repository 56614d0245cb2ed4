#include "elai/explain.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <numeric>

#include "elai/errors.hpp"
#include "elai/rng.hpp"

namespace elai {

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void check_reference(std::span<const double> x, const ValueFunctionSpec& spec) {
  if (spec.reference.size() != x.size()) {
    fail(ErrorCode::DimensionMismatch, "reference length " +
                                           std::to_string(spec.reference.size()) +
                                           " != input length " + std::to_string(x.size()));
  }
}

}  // namespace

Scorer model_scorer(const ElaiModel& model) {
  return [&model](std::span<const double> z) { return forward(model, z).y_hat; };
}

ValueFunctionSpec zero_reference(std::size_t k) {
  return ValueFunctionSpec{std::vector<double>(k, 0.0)};
}

double coalition_value(const Scorer& f, std::span<const double> x,
                       std::span<const std::size_t> subset, const ValueFunctionSpec& spec) {
  check_reference(x, spec);
  std::vector<double> composite = spec.reference;
  for (std::size_t idx : subset) {
    if (idx >= x.size()) {
      fail(ErrorCode::BadIndex, "feature index " + std::to_string(idx) + " out of range");
    }
    composite[idx] = x[idx];
  }
  return f(composite);
}

Attribution shap_exact(const Scorer& f, std::span<const double> x,
                       const ValueFunctionSpec& spec) {
  check_reference(x, spec);
  const std::size_t k = x.size();
  if (k > kExactShapCap) {
    fail(ErrorCode::TooManyFeatures, std::to_string(k) + " features exceeds the exact cap of " +
                                         std::to_string(kExactShapCap) +
                                         "; use the sampled method");
  }

  // One scorer call per coalition mask.
  const std::size_t n_masks = std::size_t{1} << k;
  std::vector<double> value(n_masks);
  std::vector<double> composite(k);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    for (std::size_t i = 0; i < k; ++i) {
      composite[i] = (mask >> i) & 1u ? x[i] : spec.reference[i];
    }
    value[mask] = f(composite);
  }

  // weight(s) = s! (k-s-1)! / k!, exact in double for k <= 15.
  std::vector<double> factorial(k + 1, 1.0);
  for (std::size_t i = 1; i <= k; ++i) {
    factorial[i] = factorial[i - 1] * static_cast<double>(i);
  }
  std::vector<double> weight(k);
  for (std::size_t s = 0; s < k; ++s) {
    weight[s] = factorial[s] * factorial[k - s - 1] / factorial[k];
  }

  Attribution attr;
  attr.method = AttributionMethod::exact;
  attr.base = value[0];
  attr.phi.assign(k, 0.0);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    const std::size_t size = static_cast<std::size_t>(std::popcount(mask));
    for (std::size_t i = 0; i < k; ++i) {
      if ((mask >> i) & 1u) continue;
      attr.phi[i] += weight[size] * (value[mask | (std::size_t{1} << i)] - value[mask]);
    }
  }
  return attr;
}

Attribution shap_exact(const ElaiModel& model, std::span<const double> x,
                       const ValueFunctionSpec& spec) {
  return shap_exact(model_scorer(model), x, spec);
}

Attribution shap_sampled(const Scorer& f, std::span<const double> x,
                         const ValueFunctionSpec& spec, std::size_t permutations,
                         std::uint64_t seed) {
  check_reference(x, spec);
  if (permutations < 1) fail(ErrorCode::BadConfig, "permutations must be >= 1");
  const std::size_t k = x.size();

  Attribution attr;
  attr.method = AttributionMethod::sampled;
  attr.permutations = permutations;
  attr.seed = seed;
  attr.base = f(spec.reference);
  attr.phi.assign(k, 0.0);

  // Each feature draws its own permutations: the coalition is the set of
  // features preceding it in a fresh random order. Independent draws keep the
  // per-coordinate Monte-Carlo error visible to the fidelity score (a shared
  // walk would telescope the sum exactly and hide it).
  Rng rng(seed);
  std::vector<std::size_t> order(k);
  std::vector<double> composite(k);
  for (std::size_t i = 0; i < k; ++i) {
    double acc = 0.0;
    for (std::size_t draw = 0; draw < permutations; ++draw) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      shuffle(order, rng);
      std::copy(spec.reference.begin(), spec.reference.end(), composite.begin());
      for (std::size_t idx : order) {
        if (idx == i) break;
        composite[idx] = x[idx];
      }
      const double without = f(composite);
      composite[i] = x[i];
      const double with = f(composite);
      acc += with - without;
    }
    attr.phi[i] = acc / static_cast<double>(permutations);
  }
  return attr;
}

Attribution shap_sampled(const ElaiModel& model, std::span<const double> x,
                         const ValueFunctionSpec& spec, std::size_t permutations,
                         std::uint64_t seed) {
  return shap_sampled(model_scorer(model), x, spec, permutations, seed);
}

AttentionMap attention_map(const ForwardTrace& trace) {
  if (trace.alpha.empty()) fail(ErrorCode::TraceMismatch, "trace has no attention weights");
  AttentionMap map;
  map.alpha = trace.alpha;
  map.argmax_step = 0;
  for (std::size_t t = 1; t < map.alpha.size(); ++t) {
    if (map.alpha[t] > map.alpha[map.argmax_step]) map.argmax_step = t;
  }
  return map;
}

FidelityReport local_fidelity(const Scorer& f, const Matrix& samples,
                              const std::vector<Attribution>& attributions) {
  if (samples.rows() != attributions.size()) {
    fail(ErrorCode::LengthMismatch, std::to_string(samples.rows()) + " samples vs " +
                                        std::to_string(attributions.size()) + " attributions");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const auto& attr = attributions[i];
    double surrogate = attr.base;
    for (double phi : attr.phi) surrogate += phi;
    const double gap = f(samples.row(i)) - surrogate;
    total += gap * gap;
  }
  return {total / static_cast<double>(samples.rows()), samples.rows()};
}

std::vector<RankedAttribution> rank_attributions(const Attribution& attr,
                                                 const std::vector<std::string>& names,
                                                 std::size_t top) {
  if (names.size() != attr.phi.size()) {
    fail(ErrorCode::LengthMismatch, std::to_string(names.size()) + " names vs " +
                                        std::to_string(attr.phi.size()) + " attributions");
  }
  std::vector<RankedAttribution> out;
  out.reserve(attr.phi.size());
  for (std::size_t i = 0; i < attr.phi.size(); ++i) {
    out.push_back({i, names[i], attr.phi[i]});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedAttribution& a, const RankedAttribution& b) {
                     const double ma = std::abs(a.phi);
                     const double mb = std::abs(b.phi);
                     if (ma != mb) return ma > mb;
                     return a.index < b.index;
                   });
  if (out.size() > top) out.resize(top);
  return out;
}

std::string attribution_to_csv(const Attribution& attr,
                               const std::vector<std::string>& names) {
  if (names.size() != attr.phi.size()) {
    fail(ErrorCode::LengthMismatch, "names vs attribution length");
  }
  std::string out = "feature,phi\n";
  for (std::size_t i = 0; i < attr.phi.size(); ++i) {
    out += names[i];
    out += ',';
    append_double(out, attr.phi[i]);
    out += '\n';
  }
  return out;
}

std::string attention_to_csv(const AttentionMap& map) {
  std::string out = "step,alpha\n";
  for (std::size_t t = 0; t < map.alpha.size(); ++t) {
    out += std::to_string(t);
    out += ',';
    append_double(out, map.alpha[t]);
    out += '\n';
  }
  return out;
}

}  // namespace elai
