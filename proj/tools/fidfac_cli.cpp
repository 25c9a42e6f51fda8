// Command-line front end: simulate, evaluate, diagnose, ingest, fixture.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fidfac/bf_engine.hpp"
#include "fidfac/config.hpp"
#include "fidfac/csv_io.hpp"
#include "fidfac/fixture.hpp"
#include "fidfac/gf_alternative.hpp"
#include "fidfac/gf_specific.hpp"
#include "fidfac/gff_engine.hpp"
#include "fidfac/harness.hpp"
#include "fidfac/lr_engine.hpp"

namespace {

using namespace fidfac;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidDegreesOfFreedom:
      return kExitConfig;
    default:
      return kExitData;
  }
}

MeasurementPanel single_panel(const std::string& path, bool log_transform) {
  const auto panels = group_panels(read_element_csv(path, log_transform));
  if (panels.size() != 1)
    throw Error(ErrorCode::SchemaError, "'" + path + "' must hold exactly one source, found " +
                                            std::to_string(panels.size()));
  return panels.front();
}

int cmd_simulate(int design, const std::string& config_path, const std::string& scale_name,
                 const std::string& output_dir, int threads, bool quiet) {
  DesignConfig cfg = load_config(config_path, design, parse_scale(scale_name));
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  if (threads > 0) cfg.threads = threads;
  cfg.validate();
  const long total = cfg.total_trials();
  const RunSummary s = run_design(cfg, [&](const TrialResult& r) {
    if (quiet) return;
    std::cerr << "trial " << r.trial_id + 1 << "/" << total << " " << to_string(r.truth);
    for (const auto* o : {&r.gff, &r.bf_p, &r.bf_d, &r.lr})
      std::cerr << ' ' << (o->value ? format_double(*o->value) : o->failure);
    std::cerr << '\n';
  });
  std::cout << "results: " << s.results_path << "\nmanifest: " << s.manifest_path << "\ntrials run: " << s.trials_run
            << " (resumed " << s.trials_resumed << ")\n";
  for (const auto& [method, n] : s.failures) std::cout << "failures[" << method << "]: " << n << '\n';
  return kExitOk;
}

int cmd_evaluate(const std::vector<std::string>& files, const std::string& method, const std::string& config_path,
                 const std::string& scale_name, bool log_transform, std::uint64_t seed) {
  if (files.size() != 3)
    throw Error(ErrorCode::ConfigError, "--case takes three files: specific, unknown, alternative");
  if (method != "gff" && method != "bf" && method != "lr" && method != "all")
    throw Error(ErrorCode::ConfigError, "--method must be gff, bf, lr or all");
  const DesignConfig cfg = load_config(config_path, 1, parse_scale(scale_name));
  CaseBundle bundle;
  bundle.specific = single_panel(files[0], log_transform);
  bundle.unknown = single_panel(files[1], log_transform);
  bundle.alternative = to_dataset(group_panels(read_element_csv(files[2], log_transform)));
  bundle.validate();

  ordered_json out;
  bool failed = false;
  const auto guarded = [&](const char* key, auto&& body) {
    try {
      out[key] = ordered_json::parse(body());
    } catch (const Error& e) {
      out[key] = {{"failure", to_string(e.code())}, {"message", e.what()}};
      failed = true;
    }
  };
  if (method == "gff" || method == "all") {
    guarded("gff", [&] {
      ChainConfig cs = cfg.chain_s, ca = cfg.chain_a;
      cs.seed = derive_engine_seed(seed, "chain_s");
      ca.seed = derive_engine_seed(seed, "chain_a");
      const auto chain_s = sample_gf_specific(bundle.specific, cs);
      const auto chain_a = sample_gf_alternative(bundle.alternative, ca);
      Rng rng(derive_engine_seed(seed, "gff"));
      return to_json(compute_gff(chain_s.draws, chain_a.draws, bundle.unknown, cfg.gff, rng), cfg.gff);
    });
  }
  if (method == "bf" || method == "all") {
    for (const auto& [key, knobs] : {std::pair{"bf_p", cfg.prior_p}, std::pair{"bf_d", cfg.prior_d}}) {
      guarded(key, [&] {
        const PriorSpec prior = prior_from_knobs(knobs, estimate_alt_params(bundle.alternative),
                                                 std::string(key) == "bf_p" ? "prosecution" : "defense");
        BfConfig bc = cfg.bf;
        bc.seed = derive_engine_seed(seed, key);
        return to_json(compute_bf(bundle, prior, bc), prior, bc);
      });
    }
  }
  if (method == "lr" || method == "all") {
    const LrResult lr = compute_lr(bundle, cfg.em);
    out["lr"] = ordered_json::parse(to_json(lr));
    failed = failed || !lr.ok;
  }
  std::cout << out.dump(2) << '\n';
  return failed ? kExitData : kExitOk;
}

int cmd_diagnose(const std::string& results_path, const std::string& kind, const std::string& out_dir,
                 std::uint64_t seed, int resamples) {
  const PlotKind k = parse_plot_kind(kind);
  const auto results = read_results_csv(results_path);
  PlotOptions opts;
  opts.seed = seed;
  opts.auc_resamples = resamples;
  const std::string dir =
      out_dir.empty() ? std::filesystem::path(results_path).parent_path().string() : out_dir;
  for (const auto& path : emit_plot_data(results, k, dir.empty() ? "." : dir, opts)) std::cout << path << '\n';
  return kExitOk;
}

int cmd_ingest(const std::string& csv, bool log_transform, const std::string& out_path) {
  const ElementTable table = read_element_csv(csv, log_transform);
  const auto panels = group_panels(table);
  for (const auto& panel : panels) panel.validate();
  std::cerr << "sources: " << panels.size() << ", rows: " << table.rows() << ", elements: " << table.elements.size()
            << '\n';
  const Vec spread = unit_norm_spread(table.values);
  for (std::size_t j = 0; j < table.elements.size(); ++j)
    std::cerr << "  " << table.elements[j] << " unit-norm sd " << format_double(spread(static_cast<Eigen::Index>(j)))
              << '\n';
  if (out_path.empty())
    write_element_csv(std::cout, table);
  else
    write_element_csv(out_path, table);
  return kExitOk;
}

int cmd_fixture(const std::string& out_dir, std::uint64_t seed) {
  std::filesystem::create_directories(out_dir);
  const FixtureTables t = make_fixture_tables(seed);
  const auto training = (std::filesystem::path(out_dir) / "training.csv").string();
  const auto calibration = (std::filesystem::path(out_dir) / "calibration.csv").string();
  write_element_csv(training, t.training);
  write_element_csv(calibration, t.calibration);
  std::cout << training << '\n' << calibration << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fiducial, Bayesian and likelihood-ratio evidence evaluation for trace elements"};
  app.require_subcommand(1);

  int design = 1;
  std::string config_path, scale = "desk", output_dir;
  int threads = 0;
  bool quiet = false;
  auto* sim = app.add_subcommand("simulate", "Run a simulation design");
  sim->add_option("--design", design, "Design 1, 2 or 3")->required()->check(CLI::Range(1, 3));
  sim->add_option("--config", config_path, "JSON file overriding the preset");
  sim->add_option("--scale", scale, "paper or desk")->check(CLI::IsMember({"paper", "desk"}));
  sim->add_option("--output", output_dir, "Output directory (overrides the config)");
  sim->add_option("--threads", threads, "Worker threads (overrides the config)");
  sim->add_flag("--quiet", quiet, "No per-trial progress");

  std::vector<std::string> case_files;
  std::string method = "all";
  bool eval_log = false;
  std::uint64_t eval_seed = 1;
  auto* eval = app.add_subcommand("evaluate", "Evaluate one case: specific, unknown and alternative panel CSVs");
  eval->add_option("--case", case_files, "specific.csv unknown.csv alternative.csv")->required()->expected(3);
  eval->add_option("--method", method, "gff, bf, lr or all");
  eval->add_option("--config", config_path, "JSON engine settings");
  eval->add_option("--scale", scale, "paper or desk engine defaults")->check(CLI::IsMember({"paper", "desk"}));
  eval->add_flag("--log-transform", eval_log, "Inputs are raw concentrations");
  eval->add_option("--seed", eval_seed, "Seed for the Monte Carlo engines");

  std::string results_path, kind, diag_out;
  std::uint64_t diag_seed = 1;
  int resamples = 1000;
  auto* diag = app.add_subcommand("diagnose", "Emit plot data from a results table");
  diag->add_option("--results", results_path, "results.csv")->required();
  diag->add_option("--kind", kind, "boxplot, auc, calibration or ece")->required();
  diag->add_option("--out", diag_out, "Output directory (default: next to the results)");
  diag->add_option("--seed", diag_seed, "Bootstrap seed");
  diag->add_option("--resamples", resamples, "AUC bootstrap resamples")->check(CLI::PositiveNumber);

  std::string csv, ingest_out;
  bool ingest_log = false;
  auto* ing = app.add_subcommand("ingest", "Validate an element CSV and write it on the log scale");
  ing->add_option("--csv", csv, "Input element CSV")->required();
  ing->add_flag("--log-transform", ingest_log, "Take logs of raw concentrations");
  ing->add_option("--out", ingest_out, "Output CSV (default: stdout)");

  std::string fixture_out = "fixture";
  std::uint64_t fixture_seed = 20190417;
  auto* fix = app.add_subcommand("fixture", "Write the synthetic training and calibration tables");
  fix->add_option("--out", fixture_out, "Output directory");
  fix->add_option("--seed", fixture_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(design, config_path, scale, output_dir, threads, quiet);
    if (*eval) return cmd_evaluate(case_files, method, config_path, scale, eval_log, eval_seed);
    if (*diag) return cmd_diagnose(results_path, kind, diag_out, diag_seed, resamples);
    if (*ing) return cmd_ingest(csv, ingest_log, ingest_out);
    if (*fix) return cmd_fixture(fixture_out, fixture_seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
