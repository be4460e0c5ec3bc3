// Acceptance run: one PASS/FAIL line per primary criterion. Exits non-zero
// if any criterion fails. Thresholds below are fixed; do not tune them to
// make a run pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "latentedit/cli.hpp"
#include "latentedit/latent.hpp"
#include "latentedit/npy.hpp"
#include "latentedit/optimizer.hpp"
#include "latentedit/random.hpp"
#include "latentedit/regularizers.hpp"
#include "latentedit/toy_oracle.hpp"

namespace le = latentedit;

namespace {

constexpr int kLockedPairs = 1000;
constexpr double kLockedBudgetS = 5.0;
constexpr std::uint64_t kBenchmarkSeeds = 10;
constexpr double kOrderingBudgetS = 30.0;
constexpr double kTargetFraction = 0.9;
constexpr double kLeakageBudgetS = 10.0;
constexpr double kDenseLeakFloor = 1e-6;
constexpr int kProxPairs = 1000;
constexpr double kProxGridStep = 1e-4;
constexpr double kProxTol = 1e-3;
constexpr int kGradPoints = 20;
constexpr std::size_t kGradCoords = 256;
constexpr double kGradStep = 1e-5;
constexpr double kGradRelTol = 1e-5;
constexpr int kNpyArchives = 100;
constexpr int kEditPairs = 200;
constexpr double kEditRelTol = 1e-12;

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& body, double budget_s = 0.0) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("unexpected exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  char timing[96];
  if (budget_s > 0.0) {
    std::snprintf(timing, sizeof timing, "%.2f s, budget %.0f s", secs, budget_s);
    if (secs >= budget_s) {
      o.pass = false;
      o.detail += " [over time budget]";
    }
  } else {
    std::snprintf(timing, sizeof timing, "%.2f s", secs);
  }
  if (!o.pass) ++failures;
  std::printf("%s  %-32s %s (%s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), timing);
  std::fflush(stdout);
}

std::vector<double> grid(le::Rng& rng, double scale) {
  std::vector<double> v(le::kEntries);
  for (double& x : v) x = rng.uniform() < 0.05 ? -0.0 : scale * rng.normal();
  return v;
}

double grid_prox(double x, double lambda) {
  const double lo = std::min(x, 0.0) - 1.0, hi = std::max(x, 0.0) + 1.0;
  double best_y = 0.0, best_f = 0.5 * x * x;
  const auto n = static_cast<long>((hi - lo) / kProxGridStep);
  for (long k = 0; k <= n; ++k) {
    const double y = lo + static_cast<double>(k) * kProxGridStep;
    const double f = 0.5 * (y - x) * (y - x) + lambda * std::abs(y);
    if (f < best_f) {
      best_f = f;
      best_y = y;
    }
  }
  return best_y;
}

std::vector<le::cli::ComparisonRun> benchmark_runs() {
  std::vector<le::cli::ComparisonRun> runs;
  for (std::uint64_t seed = 0; seed < kBenchmarkSeeds; ++seed) {
    le::cli::CompareOptions opts;
    opts.seed = seed;
    runs.push_back(le::cli::run_comparison(opts));
  }
  return runs;
}

Outcome locked_layer_exactness() {
  le::Rng rng(1001);
  std::size_t violations = 0;
  for (int t = 0; t < kLockedPairs; ++t) {
    const auto w = le::LatentCode::from_values(grid(rng, 10.0));
    const auto d = le::EditDirection::from_values(grid(rng, 10.0));
    // Alternate the default mask with random ones.
    le::LayerMask mask = le::LayerMask::ultra_strict();
    if (t % 2 == 1) {
      std::vector<std::size_t> active;
      for (std::size_t i = 0; i < le::kNumLayers; ++i)
        if (rng.uniform() < 0.3) active.push_back(i);
      mask = le::LayerMask::from_active(active);
    }
    le::EditConfig cfg;
    cfg.strategy = le::HardMaskStrategy{mask};
    const auto out = le::apply_edit(w, d, cfg);
    for (std::size_t i : mask.locked_layers())
      if (!le::rows_bitwise_equal(out.row(i), w.row(i))) ++violations;
  }
  return {violations == 0, std::to_string(kLockedPairs) + " pairs, " + std::to_string(violations) +
                               " locked rows differ bitwise"};
}

Outcome sparsity_ordering() {
  int ok = 0;
  std::string failed;
  for (const auto& run : benchmark_runs()) {
    const auto& r = run.report;
    const auto* hard = r.row("hard_mask");
    const auto* l1 = r.row("l1_prox");
    const auto* l2 = r.row("l2_penalty");
    const bool pass = hard->metrics.l1_mean_abs < l1->metrics.l1_mean_abs &&
                      l1->metrics.l1_mean_abs < l2->metrics.l1_mean_abs &&
                      hard->metrics.l2_euclidean < l2->metrics.l2_euclidean;
    if (pass) {
      ++ok;
    } else {
      failed += " seed " + std::to_string(run.benchmark.seed);
    }
  }
  return {ok == static_cast<int>(kBenchmarkSeeds),
          std::to_string(ok) + "/" + std::to_string(kBenchmarkSeeds) +
              " seeds with l1 hard<prox<l2 and l2 hard<l2" + (failed.empty() ? "" : ";" + failed)};
}

Outcome zero_leakage() {
  int ok = 0;
  double worst_fraction = 1e300;
  for (const auto& run : benchmark_runs()) {
    const auto& deltas = *run.report.row("hard_mask")->metrics.leakage;
    const double fraction = deltas.at("hair") / run.benchmark.target_shift;
    worst_fraction = std::min(worst_fraction, fraction);
    if (deltas.at("gender") == 0.0 && deltas.at("makeup") == 0.0 && fraction >= kTargetFraction) ++ok;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%d/%llu seeds with gender=makeup=0.0 exactly, min hair delta %.4f of target", ok,
                static_cast<unsigned long long>(kBenchmarkSeeds), worst_fraction);
  return {ok == static_cast<int>(kBenchmarkSeeds), buf};
}

Outcome dense_leakage() {
  int ok = 0;
  double smallest = 1e300;
  for (const auto& run : benchmark_runs()) {
    const auto& deltas = *run.report.row("l2_penalty")->metrics.leakage;
    bool all = true;
    for (const auto& name : run.benchmark.non_target_attributes()) {
      smallest = std::min(smallest, std::abs(deltas.at(name)));
      all = all && std::abs(deltas.at(name)) > kDenseLeakFloor;
    }
    if (all) ++ok;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d/%llu seeds, smallest |non-target delta| %.3g", ok,
                static_cast<unsigned long long>(kBenchmarkSeeds), smallest);
  return {ok == static_cast<int>(kBenchmarkSeeds), buf};
}

Outcome prox_oracle() {
  le::Rng rng(1005);
  double worst = 0.0;
  for (int t = 0; t < kProxPairs; ++t) {
    const double x = rng.uniform(-3.0, 3.0), lambda = rng.uniform(0.0, 2.0);
    worst = std::max(worst, std::abs(le::soft_threshold(x, lambda) - grid_prox(x, lambda)));
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d pairs, max |prox - grid argmin| %.2e (tol %.0e)", kProxPairs,
                worst, kProxTol);
  return {worst <= kProxTol, buf};
}

Outcome gradient_checks() {
  le::Rng rng(1006);
  double worst = 0.0;
  for (int p = 0; p < kGradPoints; ++p) {
    const auto bench = le::make_benchmark(static_cast<std::uint64_t>(p) % kBenchmarkSeeds);
    const auto obj = bench.objective();
    const auto d = le::EditDirection::from_values(grid(rng, 0.5));
    const auto coords = le::sample_coordinates(kGradCoords, 7000 + p);
    const auto fd = le::finite_difference_gradient(obj, d, kGradStep, coords);
    const auto g = obj.evaluate(d).gradient;
    for (std::size_t j : coords) {
      const double a = g.values()[j], n = fd.values()[j];
      const double denom = std::max(std::abs(a), std::abs(n));
      if (denom > 0.0) worst = std::max(worst, std::abs(a - n) / denom);
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d points x %zu coords, max relative error %.2e (tol %.0e)",
                kGradPoints, kGradCoords, worst, kGradRelTol);
  return {worst <= kGradRelTol, buf};
}

std::vector<std::uint8_t> npy_bytes(const std::string& dict, std::size_t payload) {
  std::string h = dict;
  h.append((64 - (10 + h.size() + 1) % 64) % 64, ' ');
  h.push_back('\n');
  std::vector<std::uint8_t> out = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0,
                                   static_cast<std::uint8_t>(h.size() & 0xff),
                                   static_cast<std::uint8_t>(h.size() >> 8)};
  out.insert(out.end(), h.begin(), h.end());
  out.resize(out.size() + payload, 0);
  return out;
}

Outcome npy_round_trip() {
  le::Rng rng(1007);
  int equal = 0;
  for (int t = 0; t < kNpyArchives; ++t) {
    std::size_t n = t == 0 ? 1 : t == 1 ? 64 : 1 + rng.index(12);
    le::npy::LatentArchive a;
    for (std::size_t k = 0; k < n; ++k)
      a.codes.push_back(le::LatentCode::from_values(grid(rng, std::pow(10.0, rng.uniform(-6, 6)))));
    if (le::npy::read_npy(le::npy::write_npy(a)).codes == a.codes) ++equal;
  }

  const auto good = le::npy::write_npy({{le::LatentCode::zeros()}, le::npy::DType::kFloat64});
  const std::size_t one = le::kEntries * 8;
  std::vector<std::vector<std::uint8_t>> malformed = {
      {},
      {'n', 'o', 't', ' ', 'n', 'p', 'y'},
      std::vector<std::uint8_t>(good.begin(), good.begin() + 10),
      std::vector<std::uint8_t>(good.begin(), good.end() - 1),
      npy_bytes("{'descr': '<i4', 'fortran_order': False, 'shape': (1, 18, 512), }", one),
      npy_bytes("{'descr': '>f8', 'fortran_order': False, 'shape': (1, 18, 512), }", one),
      npy_bytes("{'descr': '<f8', 'fortran_order': True, 'shape': (1, 18, 512), }", one),
      npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 18, 510), }", one),
      npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (4, 18, 512), }", one),
      npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (99999999999, 18, 512), }", 0),
      npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 18, 512)", one),
      npy_bytes("garbage", one),
  };
  for (int t = 0; t < 500; ++t) {
    auto b = good;
    b.resize(10 + rng.index(b.size() - 10));
    for (int f = 0; f < 3; ++f) b[rng.index(std::min<std::size_t>(b.size(), 128))] ^= 1u << rng.index(8);
    malformed.push_back(std::move(b));
  }
  std::size_t structured = 0, accepted = 0;
  for (const auto& bytes : malformed) {
    try {
      le::npy::read_npy(bytes);
      ++accepted;
    } catch (const le::Error&) {
      ++structured;
    }
  }
  // Every fuzzed sample is also truncated, so none of them is a valid file.
  const bool pass = equal == kNpyArchives && accepted == 0;
  return {pass, std::to_string(equal) + "/" + std::to_string(kNpyArchives) +
                    " archives equal after round trip; " + std::to_string(structured) + "/" +
                    std::to_string(malformed.size()) + " malformed inputs rejected with Error"};
}

Outcome edit_rule() {
  le::Rng rng(1008);
  le::EditConfig cfg;  // alpha 0.1, edit factor 3.0, dense
  double worst = 0.0;
  bool identity = true;
  for (int t = 0; t < kEditPairs; ++t) {
    const auto w = le::LatentCode::from_values(grid(rng, 5.0));
    const auto d = le::EditDirection::from_values(grid(rng, 5.0));
    const auto out = le::apply_edit(w, d, cfg);
    for (std::size_t k = 0; k < le::kEntries; ++k) {
      const double wk = w.values()[k], dk = d.values()[k];
      const double scale = std::abs(wk) + 0.3 * std::abs(dk);
      if (scale > 0.0) worst = std::max(worst, std::abs(out.values()[k] - (wk + 0.3 * dk)) / scale);
    }
    for (const le::EditStrategy& s :
         {le::EditStrategy{le::DenseStrategy{}}, le::EditStrategy{le::L1ProxStrategy{0.1}},
          le::EditStrategy{le::HardMaskStrategy{}}}) {
      const auto same = le::apply_edit(w, d, le::EditConfig{0.1, 0.0, s});
      identity = identity && std::memcmp(same.values().data(), w.values().data(),
                                         le::kEntries * sizeof(double)) == 0;
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d pairs, max relative error %.2e (tol %.0e); e_F=0 identity %s",
                kEditPairs, worst, kEditRelTol, identity ? "exact" : "BROKEN");
  return {worst <= kEditRelTol && identity, buf};
}

}  // namespace

int main() {
  report("locked-layer exactness", locked_layer_exactness, kLockedBudgetS);
  report("sparsity ordering", sparsity_ordering, kOrderingBudgetS);
  report("zero non-target leakage", zero_leakage, kLeakageBudgetS);
  report("dense-baseline leakage", dense_leakage);
  report("proximal-operator oracle", prox_oracle);
  report("gradient checks", gradient_checks);
  report("npy round trip", npy_round_trip);
  report("edit-rule conformance", edit_rule);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
