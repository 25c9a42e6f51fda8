#include "fidfac/config.hpp"

#include <fstream>
#include <set>

namespace fidfac {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.contains(it.key())) config_error("unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(where + "." + key + ": " + e.what());
  }
}

void read_chain(const json& j, ChainConfig& c, const std::string& where) {
  check_keys(j, {"n_iter", "burn_in", "thin", "target_accept", "init_attempts"}, where);
  read(j, "n_iter", c.n_iter, where);
  read(j, "burn_in", c.burn_in, where);
  read(j, "thin", c.thin, where);
  read(j, "target_accept", c.target_accept, where);
  read(j, "init_attempts", c.init_attempts, where);
}

void read_prior(const json& j, PriorKnobs& k, const std::string& where) {
  check_keys(j, {"sigma_b_scale", "nu_b", "nu_e", "k"}, where);
  read(j, "sigma_b_scale", k.sigma_b_scale, where);
  read(j, "nu_b", k.nu_b, where);
  read(j, "nu_e", k.nu_e, where);
  read(j, "k", k.k, where);
}

nlohmann::ordered_json chain_json(const ChainConfig& c) {
  return {{"n_iter", c.n_iter},
          {"burn_in", c.burn_in},
          {"thin", c.thin},
          {"target_accept", c.target_accept},
          {"init_attempts", c.init_attempts}};
}

nlohmann::ordered_json prior_json(const PriorKnobs& k) {
  return {{"sigma_b_scale", k.sigma_b_scale}, {"nu_b", k.nu_b}, {"nu_e", k.nu_e}, {"k", k.k}};
}

std::vector<std::string> screening_elements() {
  return {"Ti49", "Sr88", "K39", "Zr90", "Mn55", "Ba137", "Ce140", "La139", "Pb208", "Rb85"};
}

}  // namespace

Scale parse_scale(const std::string& name) {
  if (name == "paper") return Scale::Paper;
  if (name == "desk") return Scale::Desk;
  config_error("unknown scale '" + name + "' (expected paper or desk)");
}

const char* to_string(Scale scale) { return scale == Scale::Paper ? "paper" : "desk"; }

DesignConfig preset_config(int design, Scale scale) {
  if (design < 1 || design > 3) config_error("design must be 1, 2 or 3");
  DesignConfig c;
  c.design = design;
  c.scale = scale;
  c.m = design == 1 ? 150 : 3;
  c.m_i = 3;
  c.m_u = 2;
  c.data.elements = screening_elements();
  if (scale == Scale::Paper) {
    c.n = 659;
    c.n_hp_trials = 320;
    c.n_hd_trials = 3000;
    c.chain_s = ChainConfig{400000, 20000, 2, 0.3, 1, 100};
    c.chain_a = ChainConfig{50000, 10000, 4, 0.3, 1, 100};
    c.gff.n_importance = 4096;
    c.gff.pooled = false;
    c.bf.sweeps = 20000;
    c.bf.burn_in = 5000;
  } else {
    c.n = 100;
    c.n_hp_trials = 60;
    c.n_hd_trials = 200;
    c.chain_s = ChainConfig{200000, 10000, 1, 0.3, 1, 100};
    c.chain_a = ChainConfig{6000, 2000, 4, 0.3, 1, 100};
    c.gff.n_importance = 1024;
    c.gff.pooled = false;
    c.gff.denominator_stride = 2;
    c.bf.sweeps = 4000;
    c.bf.burn_in = 1000;
  }
  return c;
}

void DesignConfig::validate() const {
  if (design < 1 || design > 3) config_error("design must be 1, 2 or 3");
  if (design == 1 && m != 150) config_error("design 1 requires m = 150");
  if (design == 2 && m != 3) config_error("design 2 requires m = 3");
  if (design == 3 && (data.training_csv.empty() || data.calibration_csv.empty()))
    config_error("design 3 requires data.training_csv and data.calibration_csv");
  if (design == 3 && m != 3) config_error("design 3 uses 3 specific rows per source (m = 3)");
  if (design == 3 && m_u != 2) config_error("design 3 uses 2 unknown rows per source (m_u = 2)");
  if (n < 2) config_error("n must be at least 2");
  if (m < 1 || m_i < 2 || m_u < 1) config_error("need m >= 1, m_i >= 2, m_u >= 1");
  if (n_hp_trials < 0 || n_hd_trials < 0) config_error("trial counts must be non-negative");
  if (first_trial < 0 || (last_trial >= 0 && last_trial < first_trial))
    config_error("trial range must satisfy 0 <= first_trial <= last_trial");
  if (data.p < 1) config_error("data.p must be positive");
  if (!data.elements.empty() && static_cast<int>(data.elements.size()) < data.p)
    config_error("data.elements must list at least p elements");
  if (data.specific_seed_rows < 2) config_error("data.specific_seed_rows must be at least 2");
  if (data.quantum < 0.0) config_error("data.quantum must be non-negative");
  for (const ChainConfig* ch : {&chain_s, &chain_a}) {
    if (ch->n_iter <= ch->burn_in || ch->burn_in < 0 || ch->thin < 1)
      config_error("chains need n_iter > burn_in >= 0 and thin >= 1");
    if (!(ch->target_accept > 0.0 && ch->target_accept < 1.0)) config_error("target_accept must lie in (0, 1)");
    if (ch->init_attempts < 1) config_error("init_attempts must be positive");
  }
  if (gff.n_importance < 1 || gff.denominator_stride < 1 || gff.batches < 2 || !(gff.importance_df > 0.0))
    config_error("gff settings out of range");
  if (bf.sweeps <= bf.burn_in || bf.burn_in < 0 || bf.batches < 2) config_error("bf needs sweeps > burn_in >= 0");
  for (const PriorKnobs* k : {&prior_p, &prior_d})
    if (!(k->sigma_b_scale > 0.0) || !(k->k > 0.0)) config_error("prior scales must be positive");
  if (em.max_iter < 1 || !(em.tol > 0.0)) config_error("em settings out of range");
  if (threads < 1) config_error("threads must be positive");
}

DesignConfig apply_overrides(DesignConfig c, const json& j) {
  check_keys(j,
             {"design", "scale", "master_seed", "output_dir", "n", "m", "m_i", "m_u", "n_hp_trials", "n_hd_trials",
              "first_trial", "last_trial", "data", "chain_s", "chain_a", "gff", "bf", "prior_p", "prior_d", "em",
              "engines", "threads"},
             "config");
  if (j.contains("design") && j.at("design") != c.design)
    config_error("config file design does not match --design");
  if (j.contains("scale") && j.at("scale") != to_string(c.scale))
    config_error("config file scale does not match --scale");
  read(j, "master_seed", c.master_seed, "config");
  read(j, "output_dir", c.output_dir, "config");
  read(j, "n", c.n, "config");
  read(j, "m", c.m, "config");
  read(j, "m_i", c.m_i, "config");
  read(j, "m_u", c.m_u, "config");
  read(j, "n_hp_trials", c.n_hp_trials, "config");
  read(j, "n_hd_trials", c.n_hd_trials, "config");
  read(j, "first_trial", c.first_trial, "config");
  read(j, "last_trial", c.last_trial, "config");
  read(j, "threads", c.threads, "config");
  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d,
               {"training_csv", "calibration_csv", "log_transform", "elements", "p", "specific_seed_rows",
                "quantum", "fixture_seed"},
               "data");
    read(d, "training_csv", c.data.training_csv, "data");
    read(d, "calibration_csv", c.data.calibration_csv, "data");
    read(d, "log_transform", c.data.log_transform, "data");
    read(d, "elements", c.data.elements, "data");
    read(d, "p", c.data.p, "data");
    read(d, "specific_seed_rows", c.data.specific_seed_rows, "data");
    read(d, "quantum", c.data.quantum, "data");
    read(d, "fixture_seed", c.data.fixture_seed, "data");
  }
  if (j.contains("chain_s")) read_chain(j.at("chain_s"), c.chain_s, "chain_s");
  if (j.contains("chain_a")) read_chain(j.at("chain_a"), c.chain_a, "chain_a");
  if (j.contains("gff")) {
    const json& g = j.at("gff");
    check_keys(g, {"n_importance", "pooled", "importance_df", "denominator_stride", "batches"}, "gff");
    read(g, "n_importance", c.gff.n_importance, "gff");
    read(g, "pooled", c.gff.pooled, "gff");
    read(g, "importance_df", c.gff.importance_df, "gff");
    read(g, "denominator_stride", c.gff.denominator_stride, "gff");
    read(g, "batches", c.gff.batches, "gff");
  }
  if (j.contains("bf")) {
    const json& b = j.at("bf");
    check_keys(b, {"sweeps", "burn_in", "scheme", "batches"}, "bf");
    read(b, "sweeps", c.bf.sweeps, "bf");
    read(b, "burn_in", c.bf.burn_in, "bf");
    read(b, "batches", c.bf.batches, "bf");
    if (b.contains("scheme")) {
      if (!b.at("scheme").is_string()) config_error("bf.scheme must be a string");
      c.bf.scheme = parse_gibbs_scheme(b.at("scheme").get<std::string>());
    }
  }
  if (j.contains("prior_p")) read_prior(j.at("prior_p"), c.prior_p, "prior_p");
  if (j.contains("prior_d")) read_prior(j.at("prior_d"), c.prior_d, "prior_d");
  if (j.contains("em")) {
    const json& e = j.at("em");
    check_keys(e, {"max_iter", "tol"}, "em");
    read(e, "max_iter", c.em.max_iter, "em");
    read(e, "tol", c.em.tol, "em");
  }
  if (j.contains("engines")) {
    const json& e = j.at("engines");
    check_keys(e, {"gff", "bf", "lr"}, "engines");
    read(e, "gff", c.run_gff, "engines");
    read(e, "bf", c.run_bf, "engines");
    read(e, "lr", c.run_lr, "engines");
  }
  c.validate();
  return c;
}

DesignConfig load_config(const std::string& path, int design, Scale scale) {
  DesignConfig base = preset_config(design, scale);
  if (path.empty()) {
    base.validate();
    return base;
  }
  std::ifstream in(path);
  if (!in) config_error("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    config_error("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return apply_overrides(std::move(base), j);
}

nlohmann::ordered_json to_json(const DesignConfig& c) {
  nlohmann::ordered_json j;
  j["design"] = c.design;
  j["scale"] = to_string(c.scale);
  j["master_seed"] = c.master_seed;
  j["output_dir"] = c.output_dir;
  j["n"] = c.n;
  j["m"] = c.m;
  j["m_i"] = c.m_i;
  j["m_u"] = c.m_u;
  j["n_hp_trials"] = c.n_hp_trials;
  j["n_hd_trials"] = c.n_hd_trials;
  j["first_trial"] = c.first_trial;
  j["last_trial"] = c.last_trial;
  j["data"] = {{"training_csv", c.data.training_csv},
               {"calibration_csv", c.data.calibration_csv},
               {"log_transform", c.data.log_transform},
               {"elements", c.data.elements},
               {"p", c.data.p},
               {"specific_seed_rows", c.data.specific_seed_rows},
               {"quantum", c.data.quantum},
               {"fixture_seed", c.data.fixture_seed}};
  j["chain_s"] = chain_json(c.chain_s);
  j["chain_a"] = chain_json(c.chain_a);
  j["gff"] = {{"n_importance", c.gff.n_importance},
              {"pooled", c.gff.pooled},
              {"importance_df", c.gff.importance_df},
              {"denominator_stride", c.gff.denominator_stride},
              {"batches", c.gff.batches}};
  j["bf"] = {{"sweeps", c.bf.sweeps},
             {"burn_in", c.bf.burn_in},
             {"scheme", to_string(c.bf.scheme)},
             {"batches", c.bf.batches}};
  j["prior_p"] = prior_json(c.prior_p);
  j["prior_d"] = prior_json(c.prior_d);
  j["em"] = {{"max_iter", c.em.max_iter}, {"tol", c.em.tol}};
  j["engines"] = {{"gff", c.run_gff}, {"bf", c.run_bf}, {"lr", c.run_lr}};
  j["threads"] = c.threads;
  return j;
}

}  // namespace fidfac
