// fastocc command-line front end: fit, simulate, bench, gof, summary.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fastocc/config.hpp"
#include "fastocc/csv.hpp"
#include "fastocc/report.hpp"
#include "fastocc/sampler.hpp"
#include "fastocc/simulate.hpp"

#ifndef FASTOCC_VERSION
#define FASTOCC_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace fastocc;

namespace {

struct Key {
  std::string name;
  std::string help;
};

const std::vector<Key> kDataKeys = {
    {"radius_km", "neighbourhood radius for relative list length (default 50)"},
    {"filter_months", "drop months without any detection (default false)"},
    {"interactions", "year x easting / year x northing occupancy covariates (default true)"},
    {"list_length", "use the relative list length detection covariate (default true)"},
    {"julian_powers", "number of julian-day powers in the detection design (default 3)"},
    {"occupancy_covariates", "extra occupancy covariate columns"},
    {"detection_covariates", "extra detection covariate columns"},
    {"delimiter", "input field delimiter (default ',')"},
};

const std::vector<Key> kPriorKeys = {
    {"mu0_psi", ""}, {"sigma0_psi", ""}, {"mu0_p", ""},     {"sigma0_p", ""},  {"phi_psi", ""}, {"phi_p", ""},
    {"a_sigma_t", ""}, {"b_sigma_t", ""}, {"a_sigma_s", ""}, {"b_sigma_s", ""}, {"a_eps", ""},   {"b_eps", ""},
    {"a_sigma_p", ""}, {"b_sigma_p", ""}, {"a_lt", ""},      {"b_lt", ""},      {"a_ls", ""},    {"b_ls", ""},
    {"scale_lt", ""},  {"scale_ls", ""},
};

const std::vector<Key> kFitKeys = {
    {"input", "visit records (delimited text)"},
    {"out", "output directory"},
    {"seed", "random seed"},
    {"iterations", "sampling iterations after burn-in"},
    {"burnin", "burn-in iterations"},
    {"thin", "keep every thin-th draw"},
    {"threads", "worker threads"},
    {"grid_step_km", "spatial approximation grid width (default 20)"},
    {"ls_grid", "spatial length-scale grid values"},
    {"ls_grid_size", "number of default length-scale grid values"},
    {"debug_dense_check", "compare sparse and dense cross-products every iteration"},
    {"spatial", "include the spatial block (default true)"},
    {"year_detection", "year-specific detection intercepts (default true)"},
    {"temporal_step", "initial proposal scale for (l_T, sigma_T)"},
    {"season_step", "julian-day spacing of detection_season.csv"},
    {"season_year", "calendar year of the seasonal detection curve (default last)"},
    {"map_years", "calendar years with site_probs_<year>.csv (default first and last)"},
};

const std::vector<Key> kSimKeys = {
    {"preset", "supp-2.1-s500|supp-2.1-s1000|supp-2.1-s2500|supp-2.1-s5000|supp-2.2"},
    {"out", "output directory"},
    {"seed", "random seed"},
    {"sites", "number of sites"},
    {"years", "number of years"},
    {"first_year", "first calendar year"},
    {"visits", "poisson|one_plus_poisson"},
    {"visit_mean", "Poisson mean of visits per unit"},
    {"visit_prob", "probability that a site is visited in a year"},
    {"mu_psi", ""},
    {"sigma_eps", ""},
    {"u", "detection year intercept"},
    {"u_start", "first-year detection intercept of a linear trend"},
    {"u_end", "last-year detection intercept of a linear trend"},
    {"sigma_t", ""},
    {"l_t", ""},
    {"sigma_s", ""},
    {"l_s", "spatial length scale in unit-square coordinates"},
    {"extent", "side of the study square in km"},
    {"max_list_length", ""},
};

const std::vector<Key> kBenchKeys = {
    {"presets", "timing presets to run"},
    {"iterations", "iterations per preset (default 10000)"},
    {"burnin", "burn-in iterations (default 0)"},
    {"seed", "random seed"},
    {"threads", "worker threads (default 1)"},
    {"grid_step_km", "grid width"},
    {"out", "output directory"},
};

const std::vector<Key> kGofKeys = {
    {"chain", "directory written by fit"},
    {"out", "output directory (default: the chain directory)"},
};

const std::vector<Key> kSummaryKeys = {
    {"chain", "directory written by fit"},
    {"out", "output file (default <chain>/summary.csv)"},
    {"levels", "credible levels (default 0.95)"},
};

std::string dashed(std::string s) {
  for (char& c : s) {
    if (c == '_') c = '-';
  }
  return s;
}

struct Command {
  CLI::App* app = nullptr;
  std::vector<Key> keys;
  std::map<std::string, std::string> given;
  std::string config_path;
  bool no_spatial = false;
  bool constant_detection = false;

  RunConfig resolve() {
    std::set<std::string> known;
    for (const auto& k : keys) known.insert(k.name);
    RunConfig cfg(known);
    if (!config_path.empty()) cfg.parse_file(config_path);
    for (const auto& k : keys) {
      auto* opt = app->get_option_no_throw("--" + dashed(k.name));
      if (opt && opt->count() > 0) cfg.set(k.name, given[k.name]);
    }
    if (no_spatial) cfg.set("spatial", "false");
    if (constant_detection) cfg.set("year_detection", "false");
    return cfg;
  }
};

Command* add_command(CLI::App& app, std::vector<std::unique_ptr<Command>>& store, const std::string& name,
                     const std::string& description, std::vector<Key> keys) {
  auto cmd = std::make_unique<Command>();
  cmd->app = app.add_subcommand(name, description);
  cmd->keys = std::move(keys);
  cmd->app->add_option("--config", cmd->config_path, "flat key = value config file");
  for (const auto& k : cmd->keys) cmd->app->add_option("--" + dashed(k.name), cmd->given[k.name], k.help);
  store.push_back(std::move(cmd));
  return store.back().get();
}

DataOptions data_options(const RunConfig& c) {
  DataOptions o;
  o.radius_km = c.get_double("radius_km", o.radius_km);
  o.filter_months = c.get_bool("filter_months", o.filter_months);
  o.interactions = c.get_bool("interactions", o.interactions);
  o.list_length = c.get_bool("list_length", o.list_length);
  o.julian_powers = static_cast<int>(c.get_long("julian_powers", o.julian_powers));
  o.occupancy_covariates = c.get_list("occupancy_covariates");
  o.detection_covariates = c.get_list("detection_covariates");
  const std::string d = c.get("delimiter", ",");
  if (d == "tab" || d == "\\t") {
    o.delimiter = '\t';
  } else if (d.size() == 1) {
    o.delimiter = d[0];
  } else {
    throw Error(ErrorKind::Config, "delimiter must be a single character or 'tab'");
  }
  return o;
}

Priors priors_from(const RunConfig& c) {
  Priors p;
  auto g = [&](const char* key, double& v) { v = c.get_double(key, v); };
  g("mu0_psi", p.mu0_psi);
  g("sigma0_psi", p.sigma0_psi);
  g("mu0_p", p.mu0_p);
  g("sigma0_p", p.sigma0_p);
  g("phi_psi", p.phi_psi);
  g("phi_p", p.phi_p);
  g("a_sigma_t", p.a_sigma_t);
  g("b_sigma_t", p.b_sigma_t);
  g("a_sigma_s", p.a_sigma_s);
  g("b_sigma_s", p.b_sigma_s);
  g("a_eps", p.a_eps);
  g("b_eps", p.b_eps);
  g("a_sigma_p", p.a_sigma_p);
  g("b_sigma_p", p.b_sigma_p);
  g("a_lt", p.a_lt);
  g("b_lt", p.b_lt);
  g("a_ls", p.a_ls);
  g("b_ls", p.b_ls);
  g("scale_lt", p.scale_lt);
  g("scale_ls", p.scale_ls);
  for (double v : {p.sigma0_psi, p.sigma0_p, p.phi_psi, p.phi_p, p.a_sigma_t, p.b_sigma_t, p.a_sigma_s, p.b_sigma_s,
                   p.a_eps, p.b_eps, p.a_sigma_p, p.b_sigma_p, p.a_lt, p.b_lt, p.a_ls, p.b_ls}) {
    if (!(v > 0.0)) throw Error(ErrorKind::Config, "prior scale and shape values must be > 0");
  }
  return p;
}

json priors_json(const Priors& p) {
  return {{"mu0_psi", p.mu0_psi},     {"sigma0_psi", p.sigma0_psi}, {"mu0_p", p.mu0_p},
          {"sigma0_p", p.sigma0_p},   {"phi_psi", p.phi_psi},       {"phi_p", p.phi_p},
          {"a_sigma_t", p.a_sigma_t}, {"b_sigma_t", p.b_sigma_t},   {"a_sigma_s", p.a_sigma_s},
          {"b_sigma_s", p.b_sigma_s}, {"a_eps", p.a_eps},           {"b_eps", p.b_eps},
          {"a_sigma_p", p.a_sigma_p}, {"b_sigma_p", p.b_sigma_p},   {"a_lt", p.a_lt},
          {"b_lt", p.b_lt},           {"a_ls", p.a_ls},             {"b_ls", p.b_ls},
          {"scale_lt", p.scale_lt},   {"scale_ls", p.scale_ls}};
}

json data_json(const DataOptions& o) {
  return {{"radius_km", o.radius_km},
          {"filter_months", o.filter_months},
          {"interactions", o.interactions},
          {"list_length", o.list_length},
          {"julian_powers", o.julian_powers},
          {"occupancy_covariates", o.occupancy_covariates},
          {"detection_covariates", o.detection_covariates},
          {"delimiter", std::string(1, o.delimiter)}};
}

json meta_json(const ChainMetadata& m) {
  return {{"num_obs", m.num_obs},
          {"num_units", m.num_units},
          {"num_sites", m.num_sites},
          {"num_years", m.num_years},
          {"num_cells", m.num_cells},
          {"temporal_acceptance", m.temporal_acceptance},
          {"temporal_proposal_scale", m.temporal_proposal_scale},
          {"temporal_rejected_nonfinite", m.temporal_rejected_nonfinite},
          {"spatial_weight_underflow", m.spatial_weight_underflow},
          {"max_relative_jitter", m.max_relative_jitter},
          {"ls_grid", m.ls_grid},
          {"seconds_total", m.seconds_total},
          {"seconds_per_iteration", m.seconds_per_iteration}};
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

fs::path required_path(const RunConfig& c, const std::string& key) {
  if (!c.has(key) || c.get(key, "").empty()) throw Error(ErrorKind::Config, "missing required key '" + key + "'");
  return fs::absolute(c.get(key, ""));
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create output directory '" + dir.string() + "'");
}

int cmd_fit(const RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path input = required_path(c, "input");
  const fs::path out = required_path(c, "out");
  const DataOptions dopt = data_options(c);
  const Priors priors = priors_from(c);

  SamplerOptions so;
  so.spatial = c.get_bool("spatial", so.spatial);
  so.year_detection = c.get_bool("year_detection", so.year_detection);
  so.grid_step = c.get_double("grid_step_km", so.grid_step);
  so.ls_grid = c.get_doubles("ls_grid");
  so.ls_grid_size = static_cast<int>(c.get_long("ls_grid_size", so.ls_grid_size));
  so.threads = static_cast<int>(c.get_long("threads", so.threads));
  so.debug_dense_check = c.get_bool("debug_dense_check", so.debug_dense_check);
  so.temporal_step = c.get_double("temporal_step", so.temporal_step);
  so.season_step = static_cast<int>(c.get_long("season_step", so.season_step));
  if (so.threads < 1) throw Error(ErrorKind::Config, "threads must be >= 1");
  if (!(so.grid_step > 0.0)) throw Error(ErrorKind::Config, "grid_step_km must be > 0");

  McmcConfig mc;
  mc.iterations = c.get_long("iterations", mc.iterations);
  mc.burnin = c.get_long("burnin", mc.burnin);
  mc.thin = c.get_long("thin", mc.thin);
  mc.seed = c.get_seed("seed", mc.seed);

  const Dataset ds = ingest(input.string(), dopt);
  for (const auto& w : ds.warnings) std::cerr << "fastocc: warning: " << w << '\n';

  auto year_index = [&](long year) {
    for (std::size_t t = 0; t < ds.years.size(); ++t) {
      if (ds.years[t] == year) return static_cast<int>(t);
    }
    throw Error(ErrorKind::Config, "year " + std::to_string(year) + " not in the data");
  };
  if (c.has("season_year")) so.season_year_index = year_index(c.get_long("season_year", 0));
  std::vector<int> map_years;
  for (double y : c.get_doubles("map_years")) map_years.push_back(year_index(static_cast<long>(y)));
  if (!c.has("map_years")) {
    map_years.push_back(0);
    if (ds.num_years() > 1) map_years.push_back(ds.num_years() - 1);
  }

  make_dir(out);
  const ChainOutput chain = run_chain(ds, priors, so, mc);

  std::vector<std::string> files = {"occupancy_index.csv", "detection_trend.csv", "detection_season.csv",
                                    "gof_year.csv",        "gof_region.csv",      "gof_draws_year.csv",
                                    "gof_draws_region.csv", "gof_observed.csv"};
  write_occupancy_index(out, chain);
  write_detection_trend(out, chain);
  write_detection_season(out, chain);
  for (int t : map_years) {
    write_site_map(out, ds, chain, t);
    files.push_back("site_probs_" + std::to_string(ds.years[static_cast<std::size_t>(t)]) + ".csv");
  }
  const auto regions = region_labels(ds, so.grid_step);
  write_gof_draws(out, chain, regions);
  if (chain.draws() > 0) {
    write_gof_reports(out, year_labels(chain.years), regions, chain.gof_year, chain.observed_year, chain.gof_region,
                      chain.observed_region);
  } else {
    files.erase(std::remove(files.begin(), files.end(), "gof_year.csv"), files.end());
    files.erase(std::remove(files.begin(), files.end(), "gof_region.csv"), files.end());
  }
  for (const auto& f : write_traces(out, chain)) files.push_back(f);

  json log;
  log["command"] = "fit";
  log["version"] = FASTOCC_VERSION;
  log["input"] = input.string();
  log["out"] = out.string();
  log["seed"] = mc.seed;
  log["config"] = {{"iterations", mc.iterations},
                   {"burnin", mc.burnin},
                   {"thin", mc.thin},
                   {"threads", so.threads},
                   {"spatial", so.spatial},
                   {"year_detection", so.year_detection},
                   {"grid_step_km", so.grid_step},
                   {"ls_grid", chain.meta.ls_grid},
                   {"debug_dense_check", so.debug_dense_check},
                   {"temporal_step", so.temporal_step},
                   {"season_step", so.season_step},
                   {"season_year", ds.years[static_cast<std::size_t>(chain.season_year_index)]},
                   {"data", data_json(dopt)},
                   {"priors", priors_json(chain.meta.priors)}};
  log["config_keys"] = c.values();
  log["dataset"] = {{"N", ds.num_obs()}, {"J", ds.num_units()}, {"S", ds.num_sites()}, {"Y", ds.num_years()}};
  log["warnings"] = ds.warnings;
  log["chain"] = meta_json(chain.meta);
  log["draws"] = chain.draws();
  log["files"] = files;
  log["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(out / "run_log.json", log);
  std::cout << "fit: " << chain.draws() << " draws, N=" << ds.num_obs() << " J=" << ds.num_units()
            << " S=" << ds.num_sites() << " Y=" << ds.num_years() << ", outputs in " << out.string() << '\n';
  return 0;
}

SimConfig sim_config(const RunConfig& c) {
  SimConfig s = c.has("preset") ? preset(c.get("preset", "")) : SimConfig{};
  s.seed = c.get_seed("seed", s.seed);
  s.S = static_cast<int>(c.get_long("sites", s.S));
  s.Y = static_cast<int>(c.get_long("years", s.Y));
  s.first_year = static_cast<int>(c.get_long("first_year", s.first_year));
  if (c.has("visits")) {
    const std::string v = c.get("visits", "");
    if (v == "poisson") {
      s.visits = VisitModel::Poisson;
    } else if (v == "one_plus_poisson") {
      s.visits = VisitModel::OnePlusPoisson;
    } else {
      throw Error(ErrorKind::Config, "visits must be 'poisson' or 'one_plus_poisson'");
    }
  }
  s.visit_mean = c.get_double("visit_mean", s.visit_mean);
  s.visit_prob = c.get_double("visit_prob", s.visit_prob);
  s.mu_psi = c.get_double("mu_psi", s.mu_psi);
  s.sigma_eps = c.get_double("sigma_eps", s.sigma_eps);
  s.u = c.get_double("u", s.u);
  if (c.has("u_start") || c.has("u_end")) {
    s.has_u_trend = true;
    s.u_start = c.get_double("u_start", s.u);
    s.u_end = c.get_double("u_end", s.u);
  }
  s.sigma_t = c.get_double("sigma_t", s.sigma_t);
  s.l_t = c.get_double("l_t", s.l_t);
  s.sigma_s = c.get_double("sigma_s", s.sigma_s);
  s.l_s = c.get_double("l_s", s.l_s);
  s.extent = c.get_double("extent", s.extent);
  s.max_list_length = static_cast<int>(c.get_long("max_list_length", s.max_list_length));
  return s;
}

json sim_config_json(const SimConfig& s) {
  return {{"name", s.name},
          {"seed", s.seed},
          {"sites", s.S},
          {"years", s.Y},
          {"first_year", s.first_year},
          {"visits", s.visits == VisitModel::Poisson ? "poisson" : "one_plus_poisson"},
          {"visit_mean", s.visit_mean},
          {"visit_prob", s.visit_prob},
          {"mu_psi", s.mu_psi},
          {"sigma_eps", s.sigma_eps},
          {"u", s.u},
          {"u_trend", s.has_u_trend},
          {"u_start", s.u_start},
          {"u_end", s.u_end},
          {"sigma_t", s.sigma_t},
          {"l_t", s.l_t},
          {"sigma_s", s.sigma_s},
          {"l_s", s.l_s},
          {"extent", s.extent},
          {"max_list_length", s.max_list_length}};
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

int cmd_simulate(const RunConfig& c) {
  const fs::path out = required_path(c, "out");
  const SimConfig s = sim_config(c);
  const Simulation sim = generate(s);
  make_dir(out);
  write_visits_file((out / "visits.csv").string(), sim.records);

  const Truth& tr = sim.truth;
  json truth;
  truth["version"] = FASTOCC_VERSION;
  truth["config"] = sim_config_json(s);
  truth["years"] = tr.years;
  truth["b"] = to_vec(tr.b);
  truth["u"] = to_vec(tr.u);
  truth["index"] = to_vec(tr.index);
  truth["site_ids"] = tr.site_ids;
  truth["easting"] = to_vec(tr.coords.col(0));
  truth["northing"] = to_vec(tr.coords.col(1));
  truth["a"] = to_vec(tr.a);
  truth["eps"] = to_vec(tr.eps);
  std::vector<std::vector<double>> psi;
  for (Eigen::Index t = 0; t < tr.psi.cols(); ++t) psi.push_back(to_vec(tr.psi.col(t)));
  truth["psi_by_year"] = psi;
  write_json(out / "truth.json", truth);
  std::cout << "simulate: " << sim.records.size() << " visits at " << s.S << " sites over " << s.Y << " years -> "
            << (out / "visits.csv").string() << '\n';
  return 0;
}

int cmd_bench(const RunConfig& c) {
  const fs::path out = c.has("out") ? fs::absolute(c.get("out", "")) : fs::path();
  std::vector<std::string> presets = c.get_list("presets");
  if (presets.empty()) presets = {"supp-2.1-s500", "supp-2.1-s1000", "supp-2.1-s2500", "supp-2.1-s5000"};
  McmcConfig mc;
  mc.iterations = c.get_long("iterations", 10000);
  mc.burnin = c.get_long("burnin", 0);
  mc.seed = c.get_seed("seed", 1);
  SamplerOptions so;
  so.spatial = false;
  so.threads = static_cast<int>(c.get_long("threads", 1));
  so.grid_step = c.get_double("grid_step_km", so.grid_step);

  struct Row {
    std::string preset;
    int sites;
    int obs;
    double seconds;
  };
  std::vector<Row> rows;
  for (const auto& name : presets) {
    SimConfig s = preset(name);
    s.seed = mc.seed;
    const Simulation sim = generate(s);
    const Dataset ds = build_dataset(sim.records, DataOptions{});
    const ChainOutput chain = run_chain(ds, Priors{}, so, mc);
    rows.push_back({name, s.S, ds.num_obs(), chain.meta.seconds_total});
    std::cerr << "bench: " << name << " done in " << chain.meta.seconds_total << " s\n";
  }
  double exponent = NAN;
  if (rows.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (const auto& r : rows) {
      mx += std::log(r.sites);
      my += std::log(r.seconds);
    }
    mx /= static_cast<double>(rows.size());
    my /= static_cast<double>(rows.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& r : rows) {
      sxy += (std::log(r.sites) - mx) * (std::log(r.seconds) - my);
      sxx += (std::log(r.sites) - mx) * (std::log(r.sites) - mx);
    }
    exponent = sxy / sxx;
  }

  std::ostringstream table;
  table << "preset,sites,observations,wall_minutes,iterations_per_sec\n";
  for (const auto& r : rows) {
    const long total = mc.iterations + mc.burnin;
    table << r.preset << ',' << r.sites << ',' << r.obs << ',' << fmt(r.seconds / 60.0) << ','
          << fmt(r.seconds > 0.0 ? total / r.seconds : 0.0) << '\n';
  }
  std::cout << table.str();
  std::cout << "scaling_exponent," << (std::isnan(exponent) ? std::string("n/a") : fmt(exponent)) << '\n';
  if (!out.empty()) {
    make_dir(out);
    auto f = open_output(out / "bench.csv");
    f << table.str();
    json log;
    log["command"] = "bench";
    log["version"] = FASTOCC_VERSION;
    log["iterations"] = mc.iterations;
    log["burnin"] = mc.burnin;
    log["seed"] = mc.seed;
    log["threads"] = so.threads;
    log["presets"] = presets;
    log["scaling_exponent"] = std::isnan(exponent) ? json(nullptr) : json(exponent);
    write_json(out / "run_log.json", log);
  }
  return 0;
}

int cmd_gof(const RunConfig& c) {
  const fs::path chain = required_path(c, "chain");
  const fs::path out = c.has("out") ? fs::absolute(c.get("out", "")) : chain;
  make_dir(out);
  gof_from_directory(chain, out);
  std::cout << "gof: wrote " << (out / "gof_year.csv").string() << " and " << (out / "gof_region.csv").string() << '\n';
  return 0;
}

int cmd_summary(const RunConfig& c) {
  const fs::path chain = required_path(c, "chain");
  const fs::path out = c.has("out") ? fs::absolute(c.get("out", "")) : chain / "summary.csv";
  std::vector<double> levels = c.get_doubles("levels");
  if (levels.empty()) levels = {0.95};
  for (double l : levels) {
    if (!(l > 0.0 && l < 1.0)) throw Error(ErrorKind::Config, "levels must lie in (0, 1)");
  }
  summary_from_directory(chain, out, levels);
  std::cout << "summary: wrote " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian occupancy models for large presence/absence datasets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FASTOCC_VERSION);
  std::vector<std::unique_ptr<Command>> store;

  std::vector<Key> fit_keys = kFitKeys;
  fit_keys.insert(fit_keys.end(), kDataKeys.begin(), kDataKeys.end());
  fit_keys.insert(fit_keys.end(), kPriorKeys.begin(), kPriorKeys.end());
  Command* fit = add_command(app, store, "fit", "fit the model and write posterior outputs", fit_keys);
  fit->app->add_flag("--no-spatial", fit->no_spatial, "drop the spatial block");
  fit->app->add_flag("--constant-detection", fit->constant_detection, "one detection intercept for all years");
  Command* simulate = add_command(app, store, "simulate", "generate a synthetic dataset and its truth", kSimKeys);
  Command* bench = add_command(app, store, "bench", "time the timing presets", kBenchKeys);
  Command* gof = add_command(app, store, "gof", "goodness-of-fit tables from a saved chain", kGofKeys);
  Command* summary = add_command(app, store, "summary", "posterior summaries from a saved chain", kSummaryKeys);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*fit->app) return cmd_fit(fit->resolve());
    if (*simulate->app) return cmd_simulate(simulate->resolve());
    if (*bench->app) return cmd_bench(bench->resolve());
    if (*gof->app) return cmd_gof(gof->resolve());
    if (*summary->app) return cmd_summary(summary->resolve());
  } catch (const Error& e) {
    std::cerr << "fastocc: error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return e.kind() == ErrorKind::Config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "fastocc: error: internal: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
