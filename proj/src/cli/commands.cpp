#include <fstream>
#include <iomanip>

#include <CLI11.hpp>

#include "latentedit/cli.hpp"
#include "latentedit/report_io.hpp"

namespace latentedit::cli {

namespace {

EditStrategy parse_edit_strategy(const std::string& name, double lambda, const std::string& mask) {
  if (name == "dense") return DenseStrategy{};
  if (name == "l1-prox") return L1ProxStrategy{lambda};
  if (name == "hard-mask") return HardMaskStrategy{LayerMask::parse(mask)};
  throw UsageError("unknown strategy '" + name + "'");
}

npy::DType parse_dtype(const std::string& name) {
  if (name == "f64") return npy::DType::kFloat64;
  if (name == "f32") return npy::DType::kFloat32;
  throw UsageError("unknown dtype '" + name + "' (expected f32 or f64)");
}

void require_parent_dir(const std::filesystem::path& file) {
  const auto parent = file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");
  if (!std::filesystem::is_directory(parent)) {
    throw Error(ErrorCode::kIo, "output directory '" + parent.string() + "' does not exist");
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

template <typename Writer>
void write_stream(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  writer(out);
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

nlohmann::json config_json(const EditConfig& cfg) {
  nlohmann::json j = {{"alpha", cfg.alpha},
                      {"edit_factor", cfg.edit_factor},
                      {"strategy", strategy_name(cfg.strategy)}};
  if (const auto* prox = std::get_if<L1ProxStrategy>(&cfg.strategy)) j["lambda"] = prox->lambda;
  if (const auto* hard = std::get_if<HardMaskStrategy>(&cfg.strategy)) {
    j["active_layers"] = hard->mask.to_string();
  }
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Argument parsing

std::optional<RunConfig> parse_args(int argc, const char* const argv[], std::ostream& out) {
  CLI::App app{"Disentangled latent-code editing with layer-wise sparsity constraints"};
  app.name("latentedit");
  app.require_subcommand(1);

  GenFixturesOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-fixtures", "Write deterministic latent, mapper and generator fixtures");
  gen_cmd->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--count", gen.count, "Number of latent codes")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  EditOptions edit;
  std::string edit_strategy = "dense";
  std::string edit_mask = "4-7";
  std::string edit_dtype = "f64";
  double edit_lambda = 0.01;
  std::string metrics_path, samples_path, generator_path;
  auto* edit_cmd = app.add_subcommand("edit", "Apply mapper-predicted edits to a latent archive");
  edit_cmd->add_option("--latents", edit.latents, "Input latent archive (.npy)")->required();
  edit_cmd->add_option("--mapper", edit.mapper, "Mapper weight file (LFMAP1)")->required();
  edit_cmd->add_option("--out", edit.out, "Edited latent archive (.npy)")->required();
  edit_cmd->add_option("--metrics", metrics_path, "Per-code metrics JSON");
  edit_cmd->add_option("--samples-csv", samples_path, "Per-code metrics CSV indexed by sample");
  edit_cmd->add_option("--generator", generator_path,
                       "Toy generator couplings (.npy, hair/gender/makeup) for leakage scoring");
  edit_cmd->add_option("--alpha", edit.config.alpha, "Scaling constant")->capture_default_str();
  edit_cmd->add_option("--edit-factor", edit.config.edit_factor, "Editing strength")
      ->capture_default_str();
  edit_cmd->add_option("--strategy", edit_strategy, "dense | l1-prox | hard-mask")
      ->capture_default_str()
      ->check(CLI::IsMember({"dense", "l1-prox", "hard-mask"}));
  edit_cmd->add_option("--lambda", edit_lambda, "Soft threshold for l1-prox")->capture_default_str();
  edit_cmd->add_option("--mask", edit_mask, "Active layers for hard-mask, e.g. 4-7")
      ->capture_default_str();
  edit_cmd->add_option("--dtype", edit_dtype, "Output element type: f64 | f32")
      ->capture_default_str()
      ->check(CLI::IsMember({"f32", "f64"}));

  CompareOptions cmp;
  std::string cmp_mask = "4-7";
  std::string cmp_out;
  auto* cmp_cmd = app.add_subcommand("compare",
                                     "Optimize the leakage benchmark under all three strategies");
  cmp_cmd->add_option("--seed", cmp.seed, "Benchmark seed")->capture_default_str();
  cmp_cmd->add_option("--out", cmp_out, "Directory for report.json and CSV traces");
  cmp_cmd->add_option("--mu", cmp.mu, "L2 penalty weight")->capture_default_str();
  cmp_cmd->add_option("--lambda", cmp.lambda, "L1 proximal weight")->capture_default_str();
  cmp_cmd->add_option("--step", cmp.step, "Gradient step size")->capture_default_str();
  cmp_cmd->add_option("--iters", cmp.iterations, "Iterations per strategy")->capture_default_str();
  cmp_cmd->add_option("--mask", cmp_mask, "Active layers for hard-mask")->capture_default_str();
  cmp_cmd->add_option("--init-scale", cmp.init_scale,
                      "Std-dev of the seeded random initial direction (0 = zero init)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  RunConfig config;
  try {
    if (*gen_cmd) {
      config.command = gen;
    } else if (*edit_cmd) {
      edit.config.strategy = parse_edit_strategy(edit_strategy, edit_lambda, edit_mask);
      edit.dtype = parse_dtype(edit_dtype);
      if (!metrics_path.empty()) edit.metrics_json = metrics_path;
      if (!samples_path.empty()) edit.samples_csv = samples_path;
      if (!generator_path.empty()) edit.generator = generator_path;
      edit.config.validate();
      config.command = edit;
    } else {
      cmp.mask = LayerMask::parse(cmp_mask);
      if (!cmp_out.empty()) cmp.out_dir = cmp_out;
      config.command = cmp;
    }
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return config;
}

int execute(const RunConfig& config, std::ostream& out, std::ostream& err) {
  struct Visitor {
    std::ostream& out;
    std::ostream& err;
    int operator()(const GenFixturesOptions& o) const { return cmd_gen_fixtures(o, out, err); }
    int operator()(const EditOptions& o) const { return cmd_edit(o, out, err); }
    int operator()(const CompareOptions& o) const { return cmd_compare(o, out, err); }
  };
  return std::visit(Visitor{out, err}, config.command);
}

int run(int argc, const char* const argv[], std::ostream& out, std::ostream& err) {
  try {
    const auto config = parse_args(argc, argv, out);
    if (!config) return kExitOk;
    return execute(*config, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

// ---------------------------------------------------------------------------
// gen-fixtures

int cmd_gen_fixtures(const GenFixturesOptions& options, std::ostream& out, std::ostream& err) {
  try {
    write_fixtures(options.seed, options.out_dir, options.count);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  out << "wrote " << (options.out_dir / kLatentsFile).string() << " (" << options.count
      << ", 18, 512), " << (options.out_dir / kMapperFile).string() << ", "
      << (options.out_dir / kGeneratorFile).string() << " (seed " << options.seed << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// edit

int cmd_edit(const EditOptions& options, std::ostream& out, std::ostream& err) {
  npy::LatentArchive input;
  MapperModel mapper = MapperModel::create({});
  std::optional<ToyGenerator> generator;
  try {
    options.config.validate();
    input = npy::read_npy(npy::read_file(options.latents));
    mapper = load_mapper(npy::read_file(options.mapper));
    if (options.generator) {
      generator = ToyGenerator::from_archive(npy::read_npy(npy::read_file(*options.generator)),
                                             ToyGenerator::canonical_names());
    }
    require_parent_dir(options.out);
    if (options.metrics_json) require_parent_dir(*options.metrics_json);
    if (options.samples_csv) require_parent_dir(*options.samples_csv);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  std::vector<EditDirection> raw;
  std::vector<LatentCode> edited;
  try {
    raw = mapper_forward_batch(mapper, input.codes);
    edited = apply_edit_batch(input.codes, raw, options.config);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  std::vector<EditDirection> effective;
  effective.reserve(raw.size());
  for (const auto& d : raw) effective.push_back(transform_direction(d, options.config.strategy));
  std::vector<EditMetrics> metrics = compute_metrics_batch(effective);
  if (generator) {
    for (std::size_t n = 0; n < raw.size(); ++n) {
      metrics[n].leakage = leakage_report(*generator, input.codes[n], raw[n], options.config);
    }
  }

  bool locked_ok = true;
  if (const auto* hard = std::get_if<HardMaskStrategy>(&options.config.strategy)) {
    std::size_t violations = 0;
    for (std::size_t n = 0; n < edited.size(); ++n) {
      for (std::size_t i : hard->mask.locked_layers()) {
        if (!rows_bitwise_equal(edited[n].row(i), input.codes[n].row(i))) ++violations;
      }
    }
    locked_ok = violations == 0;
    out << "locked-layer check: " << (locked_ok ? "PASS" : "FAIL") << " ("
        << edited.size() << " codes, active layers " << hard->mask.to_string()
        << ", locked rows compared bitwise, " << violations << " violations)\n";
  }

  try {
    npy::write_file(options.out, npy::write_npy({edited, options.dtype}, options.dtype));
    if (options.metrics_json) {
      nlohmann::json j;
      j["config"] = config_json(options.config);
      j["conventions"] = {{"l1_mean_abs", "mean |d'| over 18x512 entries of the effective direction"},
                          {"l2_euclidean", "Euclidean norm of the effective direction"},
                          {"index", "sample (position in the input archive)"}};
      nlohmann::json codes = nlohmann::json::array();
      for (std::size_t n = 0; n < metrics.size(); ++n) {
        nlohmann::json row = to_json(metrics[n]);
        row["sample"] = n;
        codes.push_back(std::move(row));
      }
      j["codes"] = std::move(codes);
      if (std::holds_alternative<HardMaskStrategy>(options.config.strategy)) {
        j["locked_layer_check"] = locked_ok ? "pass" : "fail";
      }
      write_text(*options.metrics_json, j.dump(2) + "\n");
    }
    if (options.samples_csv) {
      write_stream(*options.samples_csv,
                   [&](std::ostream& s) { write_sample_metrics_csv(s, metrics); });
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  double mean_l1 = 0.0, mean_l2 = 0.0;
  for (const auto& m : metrics) {
    mean_l1 += m.l1_mean_abs;
    mean_l2 += m.l2_euclidean;
  }
  const double count = static_cast<double>(std::max<std::size_t>(metrics.size(), 1));
  out << "edited " << edited.size() << " codes with " << strategy_name(options.config.strategy)
      << " (alpha " << options.config.alpha << ", edit factor " << options.config.edit_factor
      << "): mean l1 " << mean_l1 / count << ", mean l2 " << mean_l2 / count << "\n";
  return locked_ok ? kExitOk : kExitAssertionFailed;
}

// ---------------------------------------------------------------------------
// compare

ComparisonRun run_comparison(const CompareOptions& options) {
  ComparisonRun run{make_benchmark(options.seed), {}, {}};
  const Objective objective = run.benchmark.objective();

  const std::vector<RegularizerStrategy> strategies = {
      L2PenaltyStrategy{options.mu},
      L1ProxStrategy{options.lambda},
      HardMaskStrategy{options.mask},
  };
  for (const auto& strategy : strategies) {
    OptimizerConfig cfg;
    cfg.step_size = options.step;
    cfg.iterations = options.iterations;
    cfg.strategy = strategy;
    cfg.seed = options.seed;
    cfg.init_scale = options.init_scale;
    auto result = optimize_direction(objective, cfg, initial_direction(cfg));
    run.outcomes.emplace(strategy_name(strategy),
                         StrategyOutcome{std::move(result.direction), std::move(result.trace)});
  }

  ComparisonOptions compare;
  compare.leakage = LeakageContext{&run.benchmark.generator, &run.benchmark.base,
                                   run.benchmark.edit, run.benchmark.target_attribute};
  compare.reference = ReferenceValues{};
  run.report = compare_strategies(run.outcomes, compare);
  return run;
}

int cmd_compare(const CompareOptions& options, std::ostream& out, std::ostream& err) {
  ComparisonRun run{};
  try {
    if (options.out_dir) {
      std::error_code ec;
      std::filesystem::create_directories(*options.out_dir, ec);
      if (ec) {
        throw Error(ErrorCode::kIo,
                    "cannot create '" + options.out_dir->string() + "': " + ec.message());
      }
    }
    run = run_comparison(options);
    if (options.out_dir) {
      const auto& dir = *options.out_dir;
      write_text(dir / "report.json", to_json(run.report).dump(2) + "\n");
      write_stream(dir / "per_layer.csv",
                   [&](std::ostream& s) { write_per_layer_csv(s, run.report); });
      for (const auto& [name, outcome] : run.outcomes) {
        write_stream(dir / ("trace_" + name + ".csv"),
                     [&](std::ostream& s) { write_trace_csv(s, outcome.trace); });
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  const auto& report = run.report;
  const auto names = run.benchmark.generator.attributes();
  out << "leakage benchmark seed " << options.seed << ", target '"
      << run.benchmark.target_attribute << "' shift " << run.benchmark.target_shift << "\n";
  out << std::left << std::setw(12) << "strategy" << std::right << std::setw(14) << "l1_mean_abs"
      << std::setw(14) << "l2_euclidean";
  for (const auto& a : names) out << std::setw(12) << ("d_" + a.name);
  out << "\n";
  for (const auto& row : report.rows) {
    out << std::left << std::setw(12) << row.strategy << std::right << std::setprecision(6)
        << std::setw(14) << row.metrics.l1_mean_abs << std::setw(14) << row.metrics.l2_euclidean;
    for (const auto& a : names) out << std::setw(12) << row.metrics.leakage->at(a.name);
    out << "\n";
  }
  if (report.reference) {
    out << "reference (full pipeline, display only): baseline l1 " << report.reference->baseline_l1
        << " l2 " << report.reference->baseline_l2 << " | improved l1 "
        << report.reference->improved_l1 << " l2 " << report.reference->improved_l2 << "\n";
  }
  for (const auto& c : report.checks) {
    out << "check " << c.name << ": " << to_string(c.status) << " (" << c.detail << ")\n";
  }

  if (report.degenerate) {
    err << "warning: degenerate comparison, all strategies tie (nothing was optimized)\n";
    return kExitOk;
  }
  if (!report.all_checks_hold()) {
    for (const auto& name : report.failed_checks()) err << "assertion failed: " << name << "\n";
    return kExitAssertionFailed;
  }
  return kExitOk;
}

}  // namespace latentedit::cli
