#pragma once

// A linear stand-in for generator + attribute classifier with known
// attribute-to-layer coupling. Scores are exact linear functionals of the
// latent, so leakage into a layer group is zero exactly when the edit leaves
// that group untouched.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "latentedit/latent.hpp"
#include "latentedit/npy.hpp"
#include "latentedit/optimizer.hpp"

namespace latentedit {

using AttributeScores = std::map<std::string, double>;

struct Attribute {
  std::string name;
  std::vector<double> coupling;  // 18x512, unit Frobenius norm
};

class ToyGenerator {
 public:
  ToyGenerator() = default;

  /// hair on layers 4-7, gender on 0-3, makeup on 8-17; Rademacher entries
  /// normalized to unit Frobenius norm.
  static ToyGenerator canonical(std::uint64_t seed);

  /// Gaussian couplings on the given supports, normalized to unit norm.
  static ToyGenerator random(std::uint64_t seed,
                             const std::vector<std::pair<std::string, LayerMask>>& supports);

  /// Validates shape, finiteness, non-zero norm and unique names, then
  /// normalizes every coupling.
  static ToyGenerator from_couplings(std::vector<Attribute> attributes);

  /// Couplings stacked as (num_attributes, 18, 512), attribute order kept.
  npy::LatentArchive to_archive() const;
  static ToyGenerator from_archive(const npy::LatentArchive& archive,
                                   const std::vector<std::string>& names);

  static const std::vector<std::string>& canonical_names();

  const std::vector<Attribute>& attributes() const { return attributes_; }
  const Attribute& attribute(std::string_view name) const;

  /// Layers where the coupling of `name` has a non-zero entry.
  LayerMask support(std::string_view name) const;

 private:
  std::vector<Attribute> attributes_;
};

/// s_a(w) = sum over layers and channels of A_a[i,c] * w[i,c].
AttributeScores attribute_scores(const ToyGenerator& generator, const LatentCode& w,
                                 Execution exec = Execution::kParallel);

/// Per attribute, s_a(apply_edit(w, d, cfg)) - s_a(w).
AttributeScores leakage_report(const ToyGenerator& generator, const LatentCode& w,
                               const EditDirection& d, const EditConfig& cfg);

/// Synthetic stress test for attribute leakage: reaching the target score is
/// rewarded, and a bias term additionally rewards moving the non-target
/// (locked-layer) attributes along with it, mimicking a training set where
/// the target attribute co-occurs with them.
///
///   loss(d) = (<A_t, s d> - shift)^2 + bias_weight * (<B, s d> - bias_ratio * shift)^2
///
/// with s = alpha * edit_factor from `edit` and B a unit-norm mix of the
/// gender and makeup couplings.
struct LeakageBenchmark {
  std::uint64_t seed = 0;
  ToyGenerator generator;
  std::string target_attribute = "hair";
  double target_shift = 1.0;
  double bias_weight = 4.0;
  double bias_ratio = 1.0;
  std::vector<double> bias_direction;  // B
  LatentCode base = LatentCode::zeros();
  EditConfig edit;

  Objective objective() const;

  /// Minimum-norm minimizer of the loss over unconstrained directions.
  EditDirection unconstrained_minimizer() const;

  /// Attribute names other than the target.
  std::vector<std::string> non_target_attributes() const;
};

/// Deterministic per seed. Throws kConstructionFailed if no retry yields a
/// benchmark whose unconstrained minimizer puts mass in locked layers.
LeakageBenchmark make_benchmark(std::uint64_t seed);

}  // namespace latentedit
