#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <variant>

#include "latentedit/latent.hpp"
#include "latentedit/mapper.hpp"
#include "latentedit/metrics.hpp"
#include "latentedit/npy.hpp"
#include "latentedit/toy_oracle.hpp"

namespace latentedit::cli {

// Stable exit-code contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitAssertionFailed = 3;

struct GenFixturesOptions {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  std::size_t count = 8;
};

struct EditOptions {
  std::filesystem::path latents;
  std::filesystem::path mapper;
  std::filesystem::path out;
  std::optional<std::filesystem::path> metrics_json;
  std::optional<std::filesystem::path> samples_csv;
  std::optional<std::filesystem::path> generator;
  EditConfig config;
  npy::DType dtype = npy::DType::kFloat64;
};

struct CompareOptions {
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out_dir;
  double mu = 0.01;
  double lambda = 0.01;
  double step = 0.05;
  std::size_t iterations = 500;
  LayerMask mask = LayerMask::ultra_strict();
  double init_scale = 0.0;
};

/// A fully parsed and validated command line.
struct RunConfig {
  std::variant<GenFixturesOptions, EditOptions, CompareOptions> command;
};

/// Thrown for malformed command lines; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Returns nullopt when --help was requested (help text already written).
std::optional<RunConfig> parse_args(int argc, const char* const argv[], std::ostream& out);

int execute(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_args + execute with all errors mapped onto exit codes.
int run(int argc, const char* const argv[], std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------
// Commands, callable without going through argv.

int cmd_gen_fixtures(const GenFixturesOptions& options, std::ostream& out, std::ostream& err);
int cmd_edit(const EditOptions& options, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareOptions& options, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------
// Fixture generation

inline constexpr const char* kLatentsFile = "latents.npy";
inline constexpr const char* kMapperFile = "mapper.lfmap";
inline constexpr const char* kGeneratorFile = "generator.npy";

/// Seeded standard-normal latent codes.
npy::LatentArchive make_latent_fixture(std::uint64_t seed, std::size_t count);

/// Three groups (layers 0-3, 4-7, 8-17), each 512 -> 16 (leaky-relu) -> 512.
MapperModel make_toy_mapper(std::uint64_t seed);

/// Writes latents.npy, mapper.lfmap and generator.npy under out_dir.
void write_fixtures(std::uint64_t seed, const std::filesystem::path& out_dir, std::size_t count);

// ---------------------------------------------------------------------------
// Strategy comparison on the leakage benchmark

struct ComparisonRun {
  LeakageBenchmark benchmark;
  std::map<std::string, StrategyOutcome> outcomes;
  ComparisonReport report;
};

ComparisonRun run_comparison(const CompareOptions& options);

}  // namespace latentedit::cli
