#include "fidfac/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "fidfac/gf_alternative.hpp"
#include "fidfac/fixture.hpp"
#include "fidfac/gf_specific.hpp"

namespace fidfac {

namespace fs = std::filesystem;

std::uint64_t derive_trial_seed(std::uint64_t master_seed, long trial_id) {
  constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
  return splitmix64(master_seed + golden * (static_cast<std::uint64_t>(trial_id) + 1));
}

std::uint64_t derive_engine_seed(std::uint64_t trial_seed, std::string_view engine) {
  return splitmix64(trial_seed ^ fnv1a64(engine));
}

// --- design preparation ----------------------------------------------------

namespace {

int column_of(const ElementTable& table, const std::string& name, const char* which) {
  const auto it = std::find(table.elements.begin(), table.elements.end(), name);
  if (it == table.elements.end())
    throw Error(ErrorCode::SchemaError, std::string(which) + " table has no element column '" + name + "'");
  return static_cast<int>(it - table.elements.begin());
}

MeasurementPanel head_rows(const MeasurementPanel& panel, Eigen::Index start, Eigen::Index count) {
  if (panel.count() < start + count)
    throw Error(ErrorCode::InsufficientReplication, "source '" + panel.source_id + "' has " +
                                                        std::to_string(panel.count()) + " rows, need " +
                                                        std::to_string(start + count));
  MeasurementPanel out;
  out.source_id = panel.source_id;
  out.rows = panel.rows.middleRows(start, count);
  return out;
}

ElementTable load_table(const std::string& path, bool log_transform) { return read_element_csv(path, log_transform); }

}  // namespace

PreparedDesign prepare_design(const DesignConfig& config) {
  if (config.data.training_csv.empty() != config.data.calibration_csv.empty())
    throw Error(ErrorCode::ConfigError, "give both data.training_csv and data.calibration_csv, or neither");
  if (config.data.training_csv.empty()) {
    const FixtureTables tables = make_fixture_tables(config.data.fixture_seed);
    return prepare_design(config, tables.training, tables.calibration);
  }
  return prepare_design(config, load_table(config.data.training_csv, config.data.log_transform),
                        load_table(config.data.calibration_csv, config.data.log_transform));
}

PreparedDesign prepare_design(const DesignConfig& config, const ElementTable& training,
                              const ElementTable& calibration) {
  const std::vector<std::string> candidates = config.data.elements.empty() ? training.elements : config.data.elements;
  std::vector<int> cand_cols;
  for (const auto& name : candidates) cand_cols.push_back(column_of(training, name, "training"));
  if (static_cast<int>(cand_cols.size()) < config.data.p)
    throw Error(ErrorCode::SchemaError, "fewer candidate elements than p");

  Mat screen(training.rows(), static_cast<Eigen::Index>(cand_cols.size()));
  for (std::size_t j = 0; j < cand_cols.size(); ++j)
    screen.col(static_cast<Eigen::Index>(j)) = training.values.col(cand_cols[j]);
  const std::vector<int> picked = preprocess_select_elements(screen, config.data.p);

  PreparedDesign out;
  std::vector<int> train_cols, cal_cols;
  for (int k : picked) {
    const std::string& name = candidates[static_cast<std::size_t>(k)];
    out.elements.push_back(name);
    train_cols.push_back(cand_cols[static_cast<std::size_t>(k)]);
    cal_cols.push_back(column_of(calibration, name, "calibration"));
  }

  const AlternativeDataset train = select_columns(to_dataset(group_panels(training)), train_cols);
  std::vector<MeasurementPanel> cal;
  for (const auto& panel : group_panels(calibration)) cal.push_back(select_columns(panel, cal_cols));
  for (const auto& panel : cal) out.cal_ids.push_back(panel.source_id);

  if (config.design == 3) {
    out.training = train;
    for (const auto& panel : cal) {
      out.cal_specific.push_back(head_rows(panel, 0, config.m));
      out.cal_unknown.push_back(head_rows(panel, config.m, config.m_u));
    }
    if (out.cal_ids.size() < 2)
      throw Error(ErrorCode::InsufficientData, "design 3 needs at least two calibration sources");
    return out;
  }

  const AltEstimates est = estimate_alt_params(train);
  out.truth.mu = est.mu;
  out.truth.b = chol_with_jitter(est.bbt);
  out.truth.c = chol_with_jitter(est.cct);
  out.truth.tau = 5.0;
  for (const auto& panel : cal) {
    const SpecificEstimates se = estimate_specific_params(head_rows(panel, 0, config.data.specific_seed_rows));
    out.specifics.push_back(SpecificParams{se.mu, chol_with_jitter(se.aat)});
  }
  if (out.cal_ids.empty()) throw Error(ErrorCode::InsufficientData, "no calibration sources");
  return out;
}

// --- trials ----------------------------------------------------------------

Hypothesis trial_truth(const DesignConfig& config, long trial_id) {
  return trial_id < config.n_hp_trials ? Hypothesis::Prosecution : Hypothesis::Defense;
}

void round_to_quantum(Mat& values, double quantum) {
  if (quantum > 0.0) values = (values.array() / quantum).round() * quantum;
}

CaseBundle build_trial_case(const DesignConfig& config, const PreparedDesign& design, long trial_id,
                            std::uint64_t trial_seed) {
  Rng rng(trial_seed);
  const Hypothesis truth = trial_truth(config, trial_id);
  const std::size_t n_cal = design.n_calibration();
  CaseBundle bundle;
  bundle.truth = truth;

  if (config.design == 3) {
    std::uniform_int_distribution<std::size_t> pick(0, n_cal - 1);
    std::size_t k = static_cast<std::size_t>(trial_id) % n_cal;
    std::size_t l = k;
    if (truth == Hypothesis::Defense) {
      k = pick(rng);
      std::uniform_int_distribution<std::size_t> other(0, n_cal - 2);
      l = other(rng);
      if (l >= k) ++l;
    }
    bundle.alternative = design.training;
    bundle.specific = design.cal_specific[k];
    bundle.unknown = design.cal_unknown[l];
  } else {
    std::size_t k = static_cast<std::size_t>(trial_id) % n_cal;
    if (truth == Hypothesis::Defense) k = std::uniform_int_distribution<std::size_t>(0, n_cal - 1)(rng);
    bundle.alternative = generate_alternative(design.truth, config.n, config.m_i, rng);
    bundle.specific = generate_specific(design.specifics[k], config.m, rng);
    bundle.specific.source_id = design.cal_ids[k];
    if (truth == Hypothesis::Prosecution) {
      bundle.unknown = generate_specific(design.specifics[k], config.m_u, rng);
      bundle.unknown.source_id = design.cal_ids[k];
    } else {
      bundle.unknown = generate_alternative_source(design.truth, config.m_u, rng, "population");
    }
  }
  if (config.data.quantum > 0.0) {
    for (auto& panel : bundle.alternative.sources) round_to_quantum(panel.rows, config.data.quantum);
    round_to_quantum(bundle.specific.rows, config.data.quantum);
    round_to_quantum(bundle.unknown.rows, config.data.quantum);
  }
  return bundle;
}

namespace {

template <typename F>
EngineOutcome run_engine(bool enabled, F&& body) {
  EngineOutcome out;
  if (!enabled) {
    out.failure = "disabled";
    return out;
  }
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const double v = body();
    if (std::isfinite(v))
      out.value = v;
    else
      out.failure = "NonFinite";
  } catch (const Error& e) {
    out.failure = to_string(e.code());
  } catch (const std::exception&) {
    out.failure = "InternalError";
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

EngineOutcome failed_outcome(bool enabled, const std::string& code) {
  EngineOutcome out;
  out.failure = enabled ? code : "disabled";
  return out;
}

}  // namespace

TrialResult evaluate_case(const DesignConfig& config, const CaseBundle& bundle, std::uint64_t seed) {
  TrialResult r;
  r.seed = seed;
  r.truth = bundle.truth.value_or(Hypothesis::Prosecution);
  r.specific_source = bundle.specific.source_id;
  r.unknown_source = bundle.unknown.source_id;

  r.gff = run_engine(config.run_gff, [&] {
    ChainConfig cs = config.chain_s;
    cs.seed = derive_engine_seed(seed, "chain_s");
    ChainConfig ca = config.chain_a;
    ca.seed = derive_engine_seed(seed, "chain_a");
    const GfSpecificChain chain_s = sample_gf_specific(bundle.specific, cs);
    const GfAlternativeChain chain_a = sample_gf_alternative(bundle.alternative, ca);
    Rng rng(derive_engine_seed(seed, "gff"));
    return compute_gff(chain_s.draws, chain_a.draws, bundle.unknown, config.gff, rng).log10_gff;
  });

  const auto bf_with = [&](const PriorKnobs& knobs, const char* label, const char* stream) {
    return run_engine(config.run_bf, [&] {
      const PriorSpec prior = prior_from_knobs(knobs, estimate_alt_params(bundle.alternative), label);
      BfConfig bc = config.bf;
      bc.seed = derive_engine_seed(seed, stream);
      return compute_bf(bundle, prior, bc).log10_bf;
    });
  };
  r.bf_p = bf_with(config.prior_p, "prosecution", "bf_p");
  r.bf_d = bf_with(config.prior_d, "defense", "bf_d");

  std::string lr_failure;
  r.lr = run_engine(config.run_lr, [&] {
    const LrResult lr = compute_lr(bundle, config.em);
    if (!lr.ok) {
      lr_failure = lr.failure;
      return std::numeric_limits<double>::quiet_NaN();
    }
    return lr.log10_lr;
  });
  if (!lr_failure.empty()) r.lr.failure = lr_failure;
  return r;
}

TrialResult run_trial(const DesignConfig& config, const PreparedDesign& design, long trial_id) {
  const std::uint64_t seed = derive_trial_seed(config.master_seed, trial_id);
  TrialResult r;
  try {
    const CaseBundle bundle = build_trial_case(config, design, trial_id, seed);
    r = evaluate_case(config, bundle, seed);
  } catch (const Error& e) {
    r.seed = seed;
    r.gff = failed_outcome(config.run_gff, to_string(e.code()));
    r.bf_p = failed_outcome(config.run_bf, to_string(e.code()));
    r.bf_d = failed_outcome(config.run_bf, to_string(e.code()));
    r.lr = failed_outcome(config.run_lr, to_string(e.code()));
  }
  r.trial_id = trial_id;
  r.truth = trial_truth(config, trial_id);
  return r;
}

// --- persistence -----------------------------------------------------------

namespace {

std::string value_field(const EngineOutcome& o) { return o.value ? format_double(*o.value) : std::string(); }

std::string timing_row(const TrialResult& r) {
  std::ostringstream s;
  s << r.trial_id << ',' << r.gff.seconds << ',' << r.bf_p.seconds << ',' << r.bf_d.seconds << ','
    << r.lr.seconds;
  return s.str();
}

EngineOutcome parse_outcome(const std::string& value, const std::string& failure, const std::string& where) {
  EngineOutcome o;
  o.failure = failure;
  if (!value.empty()) {
    double v = 0.0;
    if (!parse_double(value, v)) throw Error(ErrorCode::SchemaError, where + ": bad value '" + value + "'");
    o.value = v;
  } else if (failure.empty()) {
    throw Error(ErrorCode::SchemaError, where + ": neither a value nor a failure code");
  }
  return o;
}

/// Drops a trailing partial line left by an interrupted run.
void trim_partial_line(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  if (content.empty() || content.back() == '\n') return;
  const auto cut = content.find_last_of('\n');
  content.resize(cut == std::string::npos ? 0 : cut + 1);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

nlohmann::ordered_json resumable_config(const DesignConfig& config) {
  nlohmann::ordered_json j = to_json(config);
  j.erase("first_trial");
  j.erase("last_trial");
  j.erase("threads");
  j.erase("output_dir");
  return j;
}

}  // namespace

std::string format_result_row(const TrialResult& r) {
  std::string s = std::to_string(r.trial_id) + ',' + to_string(r.truth) + ',' + std::to_string(r.seed) + ',' +
                  r.specific_source + ',' + r.unknown_source;
  for (const EngineOutcome* o : {&r.gff, &r.bf_p, &r.bf_d, &r.lr}) s += ',' + value_field(*o) + ',' + o->failure;
  return s;
}

std::vector<TrialResult> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot open results file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader)
    throw Error(ErrorCode::SchemaError, "'" + path + "' does not start with the results header");
  std::vector<TrialResult> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto f = split_csv_line(line);
    if (f.size() != 13) throw Error(ErrorCode::SchemaError, where + ": expected 13 fields");
    TrialResult r;
    try {
      r.trial_id = std::stol(f[0]);
      r.seed = std::stoull(f[2]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::SchemaError, where + ": bad trial id or seed");
    }
    if (f[1] == "Hp")
      r.truth = Hypothesis::Prosecution;
    else if (f[1] == "Hd")
      r.truth = Hypothesis::Defense;
    else
      throw Error(ErrorCode::SchemaError, where + ": truth must be Hp or Hd");
    r.specific_source = f[3];
    r.unknown_source = f[4];
    r.gff = parse_outcome(f[5], f[6], where);
    r.bf_p = parse_outcome(f[7], f[8], where);
    r.bf_d = parse_outcome(f[9], f[10], where);
    r.lr = parse_outcome(f[11], f[12], where);
    out.push_back(std::move(r));
  }
  return out;
}

void write_results_csv(const std::string& path, const std::vector<TrialResult>& results) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::SchemaError, "cannot write '" + path + "'");
  out << kResultsHeader << '\n';
  for (const auto& r : results) out << format_result_row(r) << '\n';
}

RunSummary run_design(const DesignConfig& config, const TrialCallback& on_trial) {
  config.validate();
  return run_design(config, prepare_design(config), on_trial);
}

RunSummary run_design(const DesignConfig& config, const PreparedDesign& design, const TrialCallback& on_trial) {
  config.validate();
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  RunSummary summary;
  summary.results_path = (dir / "results.csv").string();
  summary.manifest_path = (dir / "manifest.json").string();
  const std::string timings_path = (dir / "timings.csv").string();
  const std::string run_config_path = (dir / "run_config.json").string();

  const std::string config_text = resumable_config(config).dump(2) + "\n";
  std::set<long> done;
  if (fs::exists(summary.results_path)) {
    std::ifstream prev(run_config_path);
    const std::string prev_text((std::istreambuf_iterator<char>(prev)), std::istreambuf_iterator<char>());
    if (prev_text != config_text)
      throw Error(ErrorCode::ConfigError, "output directory holds results from a different configuration");
    trim_partial_line(summary.results_path);
    for (const auto& r : read_results_csv(summary.results_path)) done.insert(r.trial_id);
  } else {
    std::ofstream(run_config_path, std::ios::binary | std::ios::trunc) << config_text;
    std::ofstream(summary.results_path, std::ios::binary | std::ios::trunc) << kResultsHeader << '\n';
    std::ofstream(timings_path, std::ios::binary | std::ios::trunc) << kTimingsHeader << '\n';
  }

  const long total = config.total_trials();
  const long first = std::min(config.first_trial, total);
  const long last = config.last_trial < 0 ? total : std::min(config.last_trial, total);
  std::vector<long> todo;
  for (long t = first; t < last; ++t) {
    if (done.contains(t))
      ++summary.trials_resumed;
    else
      todo.push_back(t);
  }

  std::ofstream results(summary.results_path, std::ios::binary | std::ios::app);
  std::ofstream timings(timings_path, std::ios::binary | std::ios::app);
  std::vector<std::optional<TrialResult>> slots(todo.size());
  std::size_t next_write = 0;
  std::mutex sink;
  const auto deliver = [&](std::size_t i, TrialResult r) {
    std::lock_guard<std::mutex> lock(sink);
    slots[i] = std::move(r);
    while (next_write < slots.size() && slots[next_write]) {
      const TrialResult& w = *slots[next_write];
      results << format_result_row(w) << '\n' << std::flush;
      timings << timing_row(w) << '\n' << std::flush;
      if (on_trial) on_trial(w);
      slots[next_write].reset();
      ++next_write;
    }
  };

  std::atomic<std::size_t> cursor{0};
  const auto worker = [&] {
    for (std::size_t i = cursor++; i < todo.size(); i = cursor++) deliver(i, run_trial(config, design, todo[i]));
  };
  const int n_threads = std::max(1, std::min<int>(config.threads, static_cast<int>(todo.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  results.close();
  timings.close();
  summary.trials_run = static_cast<long>(todo.size());

  std::vector<TrialResult> all = read_results_csv(summary.results_path);
  const bool sorted = std::is_sorted(all.begin(), all.end(),
                                     [](const TrialResult& a, const TrialResult& b) { return a.trial_id < b.trial_id; });
  if (!sorted) {
    std::sort(all.begin(), all.end(),
              [](const TrialResult& a, const TrialResult& b) { return a.trial_id < b.trial_id; });
    write_results_csv(summary.results_path, all);
  }

  nlohmann::ordered_json manifest;
  manifest["code_version"] = kCodeVersion;
  manifest["config"] = resumable_config(config);
  manifest["selected_elements"] = design.elements;
  manifest["calibration_sources"] = design.n_calibration();
  std::map<std::string, long> failures;
  nlohmann::ordered_json trials = nlohmann::ordered_json::array();
  for (const auto& r : all) {
    trials.push_back({{"trial_id", r.trial_id}, {"truth", to_string(r.truth)}, {"seed", r.seed}});
    const EngineOutcome* outs[] = {&r.gff, &r.bf_p, &r.bf_d, &r.lr};
    for (std::size_t k = 0; k < 4; ++k)
      if (!outs[k]->value && outs[k]->failure != "disabled") ++failures[method_names()[k]];
  }
  manifest["trials_recorded"] = all.size();
  manifest["failures"] = failures;
  manifest["trials"] = trials;
  std::ofstream(summary.manifest_path, std::ios::binary | std::ios::trunc) << manifest.dump(2) << '\n';
  summary.failures = failures;
  return summary;
}

// --- diagnostics emission --------------------------------------------------

std::map<std::string, ScoreBatch> build_batches(const std::vector<TrialResult>& results) {
  const auto outcomes = [](const TrialResult& r) {
    return std::array<const EngineOutcome*, 4>{&r.gff, &r.bf_p, &r.bf_d, &r.lr};
  };
  std::array<bool, 4> active{};
  for (const auto& r : results) {
    const auto o = outcomes(r);
    for (std::size_t k = 0; k < 4; ++k) active[k] = active[k] || o[k]->failure != "disabled";
  }
  std::map<std::string, ScoreBatch> batches;
  for (std::size_t k = 0; k < 4; ++k)
    if (active[k]) batches[method_names()[k]].method = method_names()[k];
  for (const auto& r : results) {
    const auto o = outcomes(r);
    bool usable = true;
    for (std::size_t k = 0; k < 4; ++k) usable = usable && (!active[k] || o[k]->value.has_value());
    if (!usable) continue;
    for (std::size_t k = 0; k < 4; ++k) {
      if (!active[k]) continue;
      ScoreBatch& b = batches[method_names()[k]];
      (r.truth == Hypothesis::Prosecution ? b.hp : b.hd).push_back(*o[k]->value);
    }
  }
  return batches;
}

PlotKind parse_plot_kind(const std::string& name) {
  if (name == "boxplot") return PlotKind::Boxplot;
  if (name == "auc") return PlotKind::Auc;
  if (name == "calibration") return PlotKind::Calibration;
  if (name == "ece") return PlotKind::Ece;
  throw Error(ErrorCode::ConfigError, "unknown diagnostic kind '" + name + "'");
}

namespace {

std::string f(double v) { return format_double(v); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::SchemaError, "cannot write '" + path.string() + "'");
  return out;
}

void boxplot_row(std::ostream& out, const std::string& method, const char* truth, const std::vector<double>& x) {
  const double q25 = quantile(x, 0.25), q50 = quantile(x, 0.5), q75 = quantile(x, 0.75);
  const double fence_lo = q25 - 1.5 * (q75 - q25), fence_hi = q75 + 1.5 * (q75 - q25);
  double w_lo = q25, w_hi = q75;
  long outliers = 0;
  for (double v : x) {
    if (v < fence_lo || v > fence_hi) {
      ++outliers;
      continue;
    }
    w_lo = std::min(w_lo, v);
    w_hi = std::max(w_hi, v);
  }
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  out << method << ',' << truth << ',' << x.size() << ',' << f(*mn) << ',' << f(q25) << ',' << f(q50) << ','
      << f(q75) << ',' << f(*mx) << ',' << f(w_lo) << ',' << f(w_hi) << ',' << outliers << '\n';
}

}  // namespace

std::vector<std::string> emit_plot_data(const std::vector<TrialResult>& results, PlotKind kind,
                                        const std::string& out_dir, const PlotOptions& options) {
  const auto batches = build_batches(results);
  bool any = false;
  for (const auto& [name, b] : batches) any = any || !(b.hp.empty() && b.hd.empty());
  if (results.empty() || !any) throw Error(ErrorCode::EmptyResults, "no usable trial results");
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  std::vector<std::string> written;
  const auto method_rng = [&](const std::string& method) {
    return Rng(splitmix64(options.seed ^ fnv1a64(method)));
  };

  if (kind == PlotKind::Boxplot) {
    const fs::path path = dir / "boxplot.csv";
    auto out = open_out(path);
    out << "method,truth,n,min,q25,median,q75,max,whisker_lo,whisker_hi,n_outliers\n";
    for (const auto& method : method_names()) {
      if (!batches.contains(method)) continue;
      const ScoreBatch& b = batches.at(method);
      if (!b.hp.empty()) boxplot_row(out, method, "Hp", b.hp);
      if (!b.hd.empty()) boxplot_row(out, method, "Hd", b.hd);
    }
    written.push_back(path.string());
  } else if (kind == PlotKind::Auc) {
    const fs::path sum_path = dir / "auc_summary.csv", dist_path = dir / "auc.csv";
    auto sum = open_out(sum_path);
    auto dist = open_out(dist_path);
    sum << "method,n_hp,n_hd,auc,boot_q025,boot_median,boot_q975\n";
    dist << "method,replicate,auc\n";
    for (const auto& method : method_names()) {
      if (!batches.contains(method)) continue;
      const ScoreBatch& b = batches.at(method);
      Rng rng = method_rng(method);
      const std::vector<double> boot = auc_distribution(b, options.auc_resamples, rng);
      sum << method << ',' << b.hp.size() << ',' << b.hd.size() << ',' << f(empirical_auc(b)) << ','
          << f(quantile(boot, 0.025)) << ',' << f(quantile(boot, 0.5)) << ',' << f(quantile(boot, 0.975)) << '\n';
      for (std::size_t i = 0; i < boot.size(); ++i) dist << method << ',' << i << ',' << f(boot[i]) << '\n';
    }
    written.push_back(sum_path.string());
    written.push_back(dist_path.string());
  } else if (kind == PlotKind::Calibration) {
    for (const auto& method : method_names()) {
      if (!batches.contains(method)) continue;
      Rng rng = method_rng(method);
      const CalibrationCurve c = calibration_discrepancy(batches.at(method), options.calibration, rng);
      const fs::path path = dir / ("calibration_" + method + ".csv");
      auto out = open_out(path);
      out << "grid,median,pw_lo,pw_hi,sim_lo,sim_hi\n";
      for (Eigen::Index i = 0; i < c.grid.size(); ++i)
        out << f(c.grid(i)) << ',' << f(c.median(i)) << ',' << f(c.pointwise_lo(i)) << ',' << f(c.pointwise_hi(i))
            << ',' << f(c.simultaneous_lo(i)) << ',' << f(c.simultaneous_hi(i)) << '\n';
      written.push_back(path.string());
    }
  } else {
    const Vec grid = default_prior_grid();
    for (const auto& method : method_names()) {
      if (!batches.contains(method)) continue;
      const EceCurves e = ece_curve(batches.at(method), grid);
      const fs::path path = dir / ("ece_" + method + ".csv");
      auto out = open_out(path);
      out << "pi,ece_obs,ece_cal,ece_null\n";
      for (Eigen::Index i = 0; i < grid.size(); ++i)
        out << f(e.prior_prob(i)) << ',' << f(e.observed(i)) << ',' << f(e.calibrated(i)) << ','
            << f(e.null_curve(i)) << '\n';
      written.push_back(path.string());
    }
  }
  return written;
}

}  // namespace fidfac
