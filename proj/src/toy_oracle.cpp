#include "latentedit/toy_oracle.hpp"

#include <cmath>
#include <set>

#include "latentedit/kernels.hpp"
#include "latentedit/random.hpp"

namespace latentedit {

namespace {

constexpr std::size_t kMaxBenchmarkAttempts = 8;
constexpr std::uint64_t kAttemptStride = 0x9E3779B97F4A7C15ULL;

double dot(std::span<const double> a, std::span<const double> b,
           Execution exec = Execution::kParallel) {
  return kernels::sum_layers(kernels::layer_dots(a, b, exec));
}

void normalize(std::vector<double>& v, const std::string& name) {
  const double norm = std::sqrt(kernels::sum_layers(kernels::serial::layer_square_sums(v)));
  if (!(norm > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "attribute '" + name + "' has an all-zero coupling");
  }
  for (double& x : v) x /= norm;
}

}  // namespace

// ---------------------------------------------------------------------------
// ToyGenerator

const std::vector<std::string>& ToyGenerator::canonical_names() {
  static const std::vector<std::string> names = {"hair", "gender", "makeup"};
  return names;
}

ToyGenerator ToyGenerator::canonical(std::uint64_t seed) {
  const std::vector<std::pair<std::string, LayerMask>> supports = {
      {"hair", LayerMask::parse("4-7")},
      {"gender", LayerMask::parse("0-3")},
      {"makeup", LayerMask::parse("8-17")},
  };
  Rng rng(seed);
  std::vector<Attribute> attributes;
  for (const auto& [name, mask] : supports) {
    Attribute a{name, std::vector<double>(kEntries, 0.0)};
    for (std::size_t i : mask.active_layers()) {
      for (std::size_t c = 0; c < kChannels; ++c) a.coupling[i * kChannels + c] = rng.sign();
    }
    attributes.push_back(std::move(a));
  }
  return from_couplings(std::move(attributes));
}

ToyGenerator ToyGenerator::random(std::uint64_t seed,
                                  const std::vector<std::pair<std::string, LayerMask>>& supports) {
  Rng rng(seed);
  std::vector<Attribute> attributes;
  for (const auto& [name, mask] : supports) {
    Attribute a{name, std::vector<double>(kEntries, 0.0)};
    for (std::size_t i : mask.active_layers()) {
      for (std::size_t c = 0; c < kChannels; ++c) a.coupling[i * kChannels + c] = rng.normal();
    }
    attributes.push_back(std::move(a));
  }
  return from_couplings(std::move(attributes));
}

ToyGenerator ToyGenerator::from_couplings(std::vector<Attribute> attributes) {
  if (attributes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "toy generator needs at least one attribute");
  }
  std::set<std::string> seen;
  for (auto& a : attributes) {
    if (a.name.empty() || !seen.insert(a.name).second) {
      throw Error(ErrorCode::kInvalidArgument, "attribute names must be unique and non-empty");
    }
    if (a.coupling.size() != kEntries) {
      throw Error(ErrorCode::kShapeMismatch, "coupling for '" + a.name + "' is not 18x512");
    }
    require_finite(a.coupling, "coupling");
    normalize(a.coupling, a.name);
  }
  ToyGenerator g;
  g.attributes_ = std::move(attributes);
  return g;
}

npy::LatentArchive ToyGenerator::to_archive() const {
  npy::LatentArchive archive;
  for (const auto& a : attributes_) archive.codes.push_back(LatentCode::from_values(a.coupling));
  return archive;
}

ToyGenerator ToyGenerator::from_archive(const npy::LatentArchive& archive,
                                        const std::vector<std::string>& names) {
  if (archive.codes.size() != names.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "coupling archive holds " + std::to_string(archive.codes.size()) +
                    " matrices for " + std::to_string(names.size()) + " attribute names");
  }
  std::vector<Attribute> attributes;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto v = archive.codes[k].values();
    attributes.push_back({names[k], std::vector<double>(v.begin(), v.end())});
  }
  return from_couplings(std::move(attributes));
}

const Attribute& ToyGenerator::attribute(std::string_view name) const {
  for (const auto& a : attributes_)
    if (a.name == name) return a;
  throw Error(ErrorCode::kInvalidArgument, "unknown attribute '" + std::string(name) + "'");
}

LayerMask ToyGenerator::support(std::string_view name) const {
  const auto& coupling = attribute(name).coupling;
  std::vector<std::size_t> layers;
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    for (std::size_t c = 0; c < kChannels; ++c) {
      if (coupling[i * kChannels + c] != 0.0) {
        layers.push_back(i);
        break;
      }
    }
  }
  return LayerMask::from_active(layers);
}

// ---------------------------------------------------------------------------
// Scores

AttributeScores attribute_scores(const ToyGenerator& generator, const LatentCode& w,
                                 Execution exec) {
  if (generator.attributes().empty()) {
    throw Error(ErrorCode::kInvalidArgument, "toy generator has no attributes");
  }
  AttributeScores scores;
  for (const auto& a : generator.attributes()) scores[a.name] = dot(a.coupling, w.values(), exec);
  return scores;
}

AttributeScores leakage_report(const ToyGenerator& generator, const LatentCode& w,
                               const EditDirection& d, const EditConfig& cfg) {
  const LatentCode edited = apply_edit(w, d, cfg);
  const AttributeScores before = attribute_scores(generator, w);
  AttributeScores delta = attribute_scores(generator, edited);
  for (auto& [name, value] : delta) value -= before.at(name);
  return delta;
}

// ---------------------------------------------------------------------------
// Leakage benchmark

Objective LeakageBenchmark::objective() const {
  const std::vector<double>& target = generator.attribute(target_attribute).coupling;
  const double s = edit.scale();
  // The objective owns copies so it stays valid independent of *this.
  return Objective{
      [target, bias = bias_direction, s, shift = target_shift, kappa = bias_weight,
       beta = bias_ratio](const EditDirection& d) {
        const double r_target = s * dot(target, d.values()) - shift;
        const double r_bias = s * dot(bias, d.values()) - beta * shift;
        std::vector<double> grad(kEntries);
        const double g_target = 2.0 * s * r_target;
        const double g_bias = 2.0 * kappa * s * r_bias;
        for (std::size_t i = 0; i < kEntries; ++i) grad[i] = g_target * target[i] + g_bias * bias[i];
        return Evaluation{r_target * r_target + kappa * r_bias * r_bias,
                          EditDirection::from_values(std::move(grad))};
      },
      "leakage benchmark (seed " + std::to_string(seed) + ", target " + target_attribute + ")"};
}

EditDirection LeakageBenchmark::unconstrained_minimizer() const {
  // The loss is a sum of two squared linear residuals, so its minimizers form
  // an affine set; the min-norm one lies in span{u1, u2} and solves the 2x2
  // Gram system G c = y.
  const std::vector<double>& target = generator.attribute(target_attribute).coupling;
  const double s = edit.scale();
  const double root_kappa = std::sqrt(bias_weight);
  std::vector<double> u1(kEntries), u2(kEntries);
  for (std::size_t i = 0; i < kEntries; ++i) {
    u1[i] = s * target[i];
    u2[i] = root_kappa * s * bias_direction[i];
  }
  const double g11 = dot(u1, u1), g12 = dot(u1, u2), g22 = dot(u2, u2);
  const double y1 = target_shift, y2 = root_kappa * bias_ratio * target_shift;
  const double det = g11 * g22 - g12 * g12;
  if (!(std::abs(det) > 1e-12 * g11 * g22)) {
    throw Error(ErrorCode::kConstructionFailed, "target and bias couplings are collinear");
  }
  const double c1 = (g22 * y1 - g12 * y2) / det;
  const double c2 = (g11 * y2 - g12 * y1) / det;
  std::vector<double> d(kEntries);
  for (std::size_t i = 0; i < kEntries; ++i) d[i] = c1 * u1[i] + c2 * u2[i];
  return EditDirection::from_values(std::move(d));
}

std::vector<std::string> LeakageBenchmark::non_target_attributes() const {
  std::vector<std::string> out;
  for (const auto& a : generator.attributes())
    if (a.name != target_attribute) out.push_back(a.name);
  return out;
}

LeakageBenchmark make_benchmark(std::uint64_t seed) {
  for (std::size_t attempt = 0; attempt < kMaxBenchmarkAttempts; ++attempt) {
    const std::uint64_t derived = seed + attempt * kAttemptStride;
    Rng rng(derived ^ 0x5eedULL);

    LeakageBenchmark b;
    b.seed = seed;
    b.generator = ToyGenerator::canonical(derived);
    const double gender_weight = rng.uniform(0.5, 1.5);
    const double makeup_weight = rng.uniform(0.5, 1.5);
    const auto& gender = b.generator.attribute("gender").coupling;
    const auto& makeup = b.generator.attribute("makeup").coupling;
    b.bias_direction.resize(kEntries);
    for (std::size_t i = 0; i < kEntries; ++i) {
      b.bias_direction[i] = gender_weight * gender[i] + makeup_weight * makeup[i];
    }
    normalize(b.bias_direction, "bias");

    std::vector<double> w(kEntries);
    for (double& x : w) x = rng.normal();
    b.base = LatentCode::from_values(std::move(w));

    // Construction invariant: the unconstrained optimum must leak, otherwise
    // the benchmark does not exercise the failure mode it exists for.
    EditDirection optimum = EditDirection::zeros();
    try {
      optimum = b.unconstrained_minimizer();
    } catch (const Error&) {
      continue;
    }
    const LayerMask target_layers = b.generator.support(b.target_attribute);
    const LayerValues mass = kernels::layer_abs_sums(optimum.values());
    double locked_mass = 0.0, total_mass = 0.0;
    for (std::size_t i = 0; i < kNumLayers; ++i) {
      total_mass += mass[i];
      if (target_layers.is_locked(i)) locked_mass += mass[i];
    }
    if (locked_mass > 1e-9 * total_mass) return b;
  }
  throw Error(ErrorCode::kConstructionFailed,
              "no leaking benchmark found for seed " + std::to_string(seed) + " after " +
                  std::to_string(kMaxBenchmarkAttempts) + " attempts");
}

}  // namespace latentedit
