// episim command-line driver.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "episim/episim.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace episim;

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes to a sibling temporary file and renames it into place, so a failed
// run never leaves a partial artifact behind.
void write_atomically(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("failed writing '" + tmp + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot move output into '" + path + "'");
  }
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double to_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw usage_error("bad number '" + s + "' in " + what);
  return v;
}

std::vector<double> number_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& s : split(text)) out.push_back(to_number(s, what));
  if (out.empty()) throw usage_error(what + " is empty");
  return out;
}

std::vector<std::size_t> count_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  for (double x : number_list(text, what)) {
    if (x < 0 || x != std::floor(x)) throw usage_error(what + " must hold nonnegative integers");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

duration_distribution distribution_from_json(const json& j) {
  if (j.is_string()) return duration_distribution::parse(j.get<std::string>());
  if (!j.is_object() || !j.contains("kind")) throw usage_error("distribution must be a string or {\"kind\": ...}");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "exponential" || kind == "exp") return duration_distribution::exponential(j.at("rate").get<double>());
  if (kind == "constant" || kind == "const") return duration_distribution::constant(j.at("value").get<double>());
  if (kind == "gamma")
    return duration_distribution::gamma(j.at("shape").get<double>(), j.at("rate").get<double>());
  throw usage_error("unknown distribution kind '" + kind + "'");
}

// Turns one config entry into flag text.
std::string config_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number()) return fmt(v.get<double>());
  if (v.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + config_value(v[i]);
    return out;
  }
  if (v.is_object()) return distribution_from_json(v).to_string();
  throw usage_error("unsupported config value " + v.dump());
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot read config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw usage_error("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

// Keys a subcommand reads straight from the config instead of via flags.
bool structural_key(const std::string& sub, const std::string& key) {
  if (key == "model") return true;
  return sub == "multitype" && (key == "pi" || key == "lambda" || key == "periods");
}

struct context {
  std::vector<std::string> argv;
  json config;
  std::uint64_t seed = 1;
};

json header(const context& ctx, std::optional<std::uint64_t> seed) {
  json j;
  j["version"] = kVersion;
  j["argv"] = ctx.argv;
  j["master_seed"] = seed ? json(*seed) : json(nullptr);
  return j;
}

std::string histogram_csv(const std::vector<std::size_t>& h) {
  std::string out = "final_size,count\n";
  for (std::size_t k = 0; k < h.size(); ++k)
    if (h[k]) out += std::to_string(k) + "," + std::to_string(h[k]) + "\n";
  return out;
}

json summary_json(const monte_carlo_summary& s) {
  json j;
  j["reps"] = s.reps;
  j["threshold_used"] = s.threshold_used;
  j["minor_fraction"] = s.minor_fraction;
  j["major_count"] = s.major_count;
  j["major_mean"] = s.major_mean;
  j["major_sd"] = s.major_sd;
  j["major_mean_duration"] = s.major_mean_duration;
  j["major_duration_sd"] = s.major_duration_sd;
  return j;
}

// Options shared by the standard-model simulators.
struct standard_options {
  std::size_t n = 0, m = 1, reps = 1000;
  double lambda = 0.0;
  std::string dist = "exp:1", latent;
  std::optional<std::size_t> threshold;
  std::optional<double> coverage;
  double efficacy = 1.0;
  std::string mode = "all-or-nothing";
  std::string out;

  void add(CLI::App* app, bool with_extras) {
    app->add_option("--n", n, "community size")->required();
    app->add_option("--m", m, "initial infectives")->capture_default_str();
    app->add_option("--lambda", lambda, "contact rate of one infective")->required();
    app->add_option("--dist", dist, "infectious period: exp:RATE, const:VALUE or gamma:SHAPE,RATE")
        ->capture_default_str();
    app->add_option("--reps", reps, "replicates")->capture_default_str();
    app->add_option("--threshold", threshold, "major outbreak threshold (default: histogram gap rule)");
    app->add_option("--out", out, "histogram CSV path (final_size,count)");
    if (!with_extras) return;
    app->add_option("--latent", latent, "latent period distribution (default: none)");
    app->add_option("--v", coverage, "vaccination coverage");
    app->add_option("--efficacy", efficacy, "vaccine efficacy")->capture_default_str();
    app->add_option("--mode", mode, "vaccine mode: leaky or all-or-nothing")->capture_default_str();
  }

  epidemic_params params() const {
    epidemic_params p;
    p.n = n;
    p.m = m;
    p.lambda = lambda;
    p.infectious_period = duration_distribution::parse(dist);
    if (!latent.empty()) p.latent_period = duration_distribution::parse(latent);
    if (coverage) {
      vaccine_mode vm;
      if (mode == "leaky")
        vm = vaccine_mode::leaky;
      else if (mode == "all-or-nothing" || mode == "all_or_nothing")
        vm = vaccine_mode::all_or_nothing;
      else
        throw usage_error("--mode must be leaky or all-or-nothing");
      p.vaccination = vaccination_policy{*coverage, efficacy, vm};
    }
    p.validate();
    return p;
  }
};

json run_standard(const context& ctx, const standard_options& o, simulator_kind kind) {
  const auto p = o.params();
  if (o.reps < 1) throw precondition_error("precondition violated: reps >= 1");
  const auto s = run_monte_carlo(p, o.reps, ctx.seed, o.threshold, kind);
  json j = header(ctx, ctx.seed);
  j["n"] = p.n;
  j["m"] = p.m;
  j["lambda"] = p.lambda;
  j["dist"] = p.infectious_period.to_string();
  j["r0"] = p.r0();
  j["effective_r"] = p.effective_r();
  if (p.vaccination) j["vaccinated"] = p.vaccinated_count();
  j["summary"] = summary_json(s);
  if (!o.out.empty()) write_atomically(o.out, histogram_csv(s.histogram));
  return j;
}

} // namespace

int main(int argc, char** argv) {
  context ctx;
  for (int i = 1; i < argc; ++i) ctx.argv.emplace_back(argv[i]);

  CLI::App app{"Stochastic SIR epidemic toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string config_path;
  auto add_common = [&](CLI::App* sub, bool seeded) {
    sub->add_option("--config", config_path, "JSON file of flag values (flags given on the command line win)");
    if (seeded) sub->add_option("--seed", ctx.seed, "master seed")->capture_default_str();
  };

  // exact-pmf
  auto* exact_cmd = app.add_subcommand("exact-pmf", "exact final-size distribution");
  std::size_t ex_n = 0, ex_m = 1;
  double ex_lambda = 0.0;
  std::string ex_dist = "exp:1", ex_out;
  unsigned ex_bits = 256;
  bool ex_adaptive = false;
  exact_cmd->add_option("--n", ex_n, "community size")->required();
  exact_cmd->add_option("--m", ex_m, "initial infectives")->capture_default_str();
  exact_cmd->add_option("--lambda", ex_lambda, "contact rate")->required();
  exact_cmd->add_option("--dist", ex_dist, "infectious period")->capture_default_str();
  exact_cmd->add_option("--precision-bits", ex_bits, "MPFR working precision")->capture_default_str();
  exact_cmd->add_flag("--adaptive", ex_adaptive, "raise the precision until the solution is stable");
  exact_cmd->add_option("--out", ex_out, "CSV path (k,probability)");
  add_common(exact_cmd, false);

  // simulate / sellke / reed-frost
  auto* sim_cmd = app.add_subcommand("simulate", "event-driven Monte Carlo of the standard model");
  standard_options sim_opt;
  sim_opt.add(sim_cmd, true);
  add_common(sim_cmd, true);

  auto* sellke_cmd = app.add_subcommand("sellke", "Monte Carlo final sizes by the Sellke construction");
  standard_options sellke_opt;
  sellke_opt.add(sellke_cmd, false);
  add_common(sellke_cmd, true);

  auto* rf_cmd = app.add_subcommand("reed-frost", "Reed-Frost final sizes on a random graph (constant period)");
  standard_options rf_opt;
  rf_opt.dist = "const:1";
  rf_opt.add(rf_cmd, false);
  add_common(rf_cmd, true);

  // asymptotics
  auto* asym_cmd = app.add_subcommand("asymptotics", "branching and large-population approximations");
  double as_lambda = 0.0;
  std::string as_dist = "exp:1";
  std::size_t as_m = 1;
  std::optional<std::size_t> as_n, as_progeny;
  asym_cmd->add_option("--lambda", as_lambda, "contact rate")->required();
  asym_cmd->add_option("--dist", as_dist, "infectious period")->capture_default_str();
  asym_cmd->add_option("--m", as_m, "initial infectives")->capture_default_str();
  asym_cmd->add_option("--n", as_n, "community size (enables the CLT standard deviation)");
  asym_cmd->add_option("--progeny", as_progeny, "print the total-progeny pmf for j = 0..J");
  add_common(asym_cmd, false);

  // ode
  auto* ode_cmd = app.add_subcommand("ode", "deterministic general epidemic");
  double ode_lambda = 0.0, ode_gamma = 1.0, ode_i0 = 0.0, ode_t_end = 100.0, ode_step = 1e-3, ode_every = 0.1;
  std::string ode_out;
  ode_cmd->add_option("--lambda", ode_lambda, "contact rate")->required();
  ode_cmd->add_option("--gamma", ode_gamma, "recovery rate")->capture_default_str();
  ode_cmd->add_option("--i0", ode_i0, "initial infective fraction")->required();
  ode_cmd->add_option("--t-end", ode_t_end, "end time")->capture_default_str();
  ode_cmd->add_option("--step", ode_step, "RK4 step")->capture_default_str();
  ode_cmd->add_option("--record-interval", ode_every, "CSV row spacing")->capture_default_str();
  ode_cmd->add_option("--out", ode_out, "CSV path (t,s,i,r)");
  add_common(ode_cmd, false);

  // estimate
  auto* est_cmd = app.add_subcommand("estimate", "R0 and critical coverage from an observed final size");
  std::size_t es_z = 0, es_n = 0, es_m = 1;
  double es_r2 = 1.0;
  est_cmd->add_option("--z", es_z, "infected during the outbreak")->required();
  est_cmd->add_option("--n", es_n, "community size")->required();
  est_cmd->add_option("--m", es_m, "index cases")->capture_default_str();
  est_cmd->add_option("--r2", es_r2, "squared coefficient of variation of the infectious period")
      ->capture_default_str();
  add_common(est_cmd, false);

  // vaccinate
  auto* vac_cmd = app.add_subcommand("vaccinate", "vaccination thresholds");
  double va_r0 = 0.0, va_eff = 1.0;
  std::optional<double> va_v;
  std::string va_mode = "all-or-nothing";
  vac_cmd->add_option("--r0", va_r0, "basic reproduction number")->required();
  vac_cmd->add_option("--v", va_v, "vaccination coverage");
  vac_cmd->add_option("--efficacy", va_eff, "vaccine efficacy")->capture_default_str();
  vac_cmd->add_option("--mode", va_mode, "leaky or all-or-nothing")->capture_default_str();
  add_common(vac_cmd, false);

  // multitype
  auto* mt_cmd = app.add_subcommand("multitype", "multitype offspring matrix, R0 and simulation");
  std::size_t mt_n = 1000, mt_reps = 0;
  std::string mt_m, mt_out;
  std::optional<std::size_t> mt_threshold;
  mt_cmd->add_option("--n", mt_n, "community size")->capture_default_str();
  mt_cmd->add_option("--m-by-type", mt_m, "initial infectives per type, comma separated (default: 1,0,...)");
  mt_cmd->add_option("--reps", mt_reps, "replicates (0: analysis only)")->capture_default_str();
  mt_cmd->add_option("--threshold", mt_threshold, "major outbreak threshold (default: ceil(n^(2/3)))");
  mt_cmd->add_option("--out", mt_out, "histogram CSV path of total final sizes");
  add_common(mt_cmd, true);

  // households
  auto* hh_cmd = app.add_subcommand("households", "two-level mixing household model");
  std::string hh_sizes, hh_dist = "exp:1", hh_out;
  double hh_lh = 0.0, hh_lg = 0.0;
  std::size_t hh_count = 1000, hh_m = 1, hh_reps = 0;
  std::optional<std::size_t> hh_threshold;
  hh_cmd->add_option("--size-dist", hh_sizes, "P(size = 1), P(size = 2), ..., comma separated")->required();
  hh_cmd->add_option("--lambda-h", hh_lh, "within-household per-pair contact rate")->required();
  hh_cmd->add_option("--lambda-g", hh_lg, "global contact rate")->required();
  hh_cmd->add_option("--dist", hh_dist, "infectious period")->capture_default_str();
  hh_cmd->add_option("--households", hh_count, "number of households")->capture_default_str();
  hh_cmd->add_option("--m", hh_m, "initial infectives")->capture_default_str();
  hh_cmd->add_option("--reps", hh_reps, "replicates (0: analysis only)")->capture_default_str();
  hh_cmd->add_option("--threshold", hh_threshold, "major outbreak threshold (default: ceil(E(n)^(2/3)))");
  hh_cmd->add_option("--out", hh_out, "histogram CSV path (final_size,count)");
  add_common(hh_cmd, true);

  // endemic
  auto* en_cmd = app.add_subcommand("endemic", "SIR with demography");
  std::size_t en_n = 0, en_reps = 100;
  double en_lambda = 0.0, en_gamma = 1.0, en_mu = 0.0, en_tmax = 1000.0, en_every = 1.0;
  std::optional<std::size_t> en_i0;
  std::string en_out;
  en_cmd->add_option("--n", en_n, "population scale")->required();
  en_cmd->add_option("--lambda", en_lambda, "contact rate")->required();
  en_cmd->add_option("--gamma", en_gamma, "recovery rate")->capture_default_str();
  en_cmd->add_option("--mu", en_mu, "birth and death rate")->required();
  en_cmd->add_option("--t-max", en_tmax, "censoring time")->capture_default_str();
  en_cmd->add_option("--reps", en_reps, "extinction-time replicates (0 or >= 100)")->capture_default_str();
  en_cmd->add_option("--i0", en_i0, "initial infectives (default: start at the endemic level)");
  en_cmd->add_option("--record-interval", en_every, "trajectory CSV row spacing")->capture_default_str();
  en_cmd->add_option("--out", en_out, "trajectory CSV path (t,S,I,R) of replicate 0");
  add_common(en_cmd, true);

  // duration-experiment
  auto* dur_cmd = app.add_subcommand("duration-experiment", "mean major-outbreak duration against n");
  double du_lambda = 0.0;
  std::string du_dist = "exp:1", du_grid = "100,1000,10000", du_out;
  std::size_t du_m = 1, du_reps = 1000;
  dur_cmd->add_option("--lambda", du_lambda, "contact rate")->required();
  dur_cmd->add_option("--dist", du_dist, "infectious period")->capture_default_str();
  dur_cmd->add_option("--m", du_m, "initial infectives")->capture_default_str();
  dur_cmd->add_option("--n-grid", du_grid, "community sizes, comma separated")->capture_default_str();
  dur_cmd->add_option("--reps", du_reps, "replicates per size")->capture_default_str();
  dur_cmd->add_option("--out", du_out, "CSV path (n,mean_T,se_T)");
  add_common(dur_cmd, true);

  auto usage_for = [&]() -> std::string {
    for (auto* sub : app.get_subcommands())
      if (sub->parsed()) return sub->help();
    if (argc > 1)
      for (auto* sub : app.get_subcommands({}))
        if (sub->get_name() == argv[1]) return sub->help();
    return app.help();
  };

  // Config values are inserted ahead of the command-line flags, so with the
  // take-last policy the command line wins.
  std::vector<std::string> args{argv[0]};
  try {
    if (argc > 1) {
      args.emplace_back(argv[1]);
      std::optional<std::string> cfg;
      for (int i = 2; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) cfg = argv[i + 1];
        if (a.rfind("--config=", 0) == 0) cfg = a.substr(9);
      }
      if (cfg) {
        ctx.config = load_json_file(*cfg);
        if (!ctx.config.is_object()) throw usage_error("config file must hold a JSON object");
        for (const auto& [key, value] : ctx.config.items()) {
          if (structural_key(argv[1], key)) continue;
          std::string flag = key;
          std::replace(flag.begin(), flag.end(), '_', '-');
          if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back("--" + flag);
            continue;
          }
          args.push_back("--" + flag);
          args.push_back(config_value(value));
        }
      }
      for (int i = 2; i < argc; ++i) args.emplace_back(argv[i]);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n" << usage_for();
    return 2;
  }

  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << usage_for();
    return 2;
  }

  try {
    json out;
    if (exact_cmd->parsed()) {
      const auto dist = duration_distribution::parse(ex_dist);
      exact_options opt;
      opt.precision_bits = ex_bits;
      const auto r = ex_adaptive ? final_size_pmf_adaptive(ex_n, ex_m, ex_lambda, dist, opt)
                                 : final_size_pmf(ex_n, ex_m, ex_lambda, dist, opt);
      out = header(ctx, std::nullopt);
      out["n"] = r.n;
      out["m"] = r.m;
      out["lambda"] = ex_lambda;
      out["dist"] = dist.to_string();
      out["precision_bits"] = r.precision_bits;
      out["max_residual"] = r.max_residual;
      out["cancellation_bits"] = r.cancellation_bits;
      out["reliable"] = r.reliable;
      out["mean"] = r.mean();
      if (!r.reliable)
        out["warning"] = "precision too low for this n; rerun with more --precision-bits or --adaptive";
      if (ex_out.empty()) {
        out["probabilities"] = r.probabilities;
      } else {
        std::string csv = "k,probability\n";
        for (std::size_t k = 0; k < r.probabilities.size(); ++k)
          csv += std::to_string(k) + "," + fmt(r.probabilities[k]) + "\n";
        write_atomically(ex_out, csv);
      }
    } else if (sim_cmd->parsed()) {
      out = run_standard(ctx, sim_opt, simulator_kind::event_driven);
    } else if (sellke_cmd->parsed()) {
      out = run_standard(ctx, sellke_opt, simulator_kind::sellke);
    } else if (rf_cmd->parsed()) {
      out = run_standard(ctx, rf_opt, simulator_kind::reed_frost);
    } else if (asym_cmd->parsed()) {
      const auto dist = duration_distribution::parse(as_dist);
      const auto b = extinction_probability(as_lambda, dist, as_m);
      const double z = final_size_fraction(b.r0);
      out = header(ctx, std::nullopt);
      out["lambda"] = as_lambda;
      out["dist"] = dist.to_string();
      out["m"] = as_m;
      out["r0"] = b.r0;
      out["q"] = b.q;
      out["major_outbreak_prob"] = b.major_outbreak_prob;
      out["z_star"] = z;
      if (as_n) {
        out["n"] = *as_n;
        if (b.r0 > 1.0) {
          out["clt_sd"] = clt_standard_deviation(static_cast<double>(*as_n), b.r0, dist.scv(), z);
          out["clt_mean"] = static_cast<double>(*as_n) * z;
        }
      }
      if (as_progeny) {
        if (!dist.is_exponential()) throw precondition_error("precondition violated: --progeny needs exp:RATE");
        std::vector<double> pmf;
        for (std::size_t j = 0; j <= *as_progeny; ++j) pmf.push_back(total_progeny_pmf(b.r0, j));
        out["progeny_pmf"] = pmf;
        if (as_n && static_cast<double>(*as_progeny) > std::sqrt(static_cast<double>(*as_n)))
          out["progeny_warning"] = "approximation is only valid for j up to about sqrt(n)";
      }
    } else if (ode_cmd->parsed()) {
      if (!(ode_i0 > 0.0 && ode_i0 <= 1.0)) throw precondition_error("precondition violated: 0 < i0 <= 1");
      deterministic_state init{0.0, 1.0 - ode_i0, ode_i0, 0.0};
      const auto traj = deterministic_trajectory(ode_lambda, ode_gamma, init, ode_t_end, ode_step, ode_every);
      const auto& last = traj.back();
      out = header(ctx, std::nullopt);
      out["lambda"] = ode_lambda;
      out["gamma"] = ode_gamma;
      out["i0"] = ode_i0;
      out["t_end"] = last.t;
      out["s_end"] = last.s;
      out["i_end"] = last.i;
      out["r_end"] = last.r;
      out["ultimately_infected"] = init.s - last.s;
      if (!ode_out.empty()) {
        std::string csv = "t,s,i,r\n";
        for (const auto& st : traj) csv += fmt(st.t) + "," + fmt(st.s) + "," + fmt(st.i) + "," + fmt(st.r) + "\n";
        write_atomically(ode_out, csv);
      }
    } else if (est_cmd->parsed()) {
      const outbreak_observation obs{es_z, es_n, es_m, es_r2};
      const auto r0 = estimate_r0(obs);
      const auto vc = estimate_vc(obs);
      out = header(ctx, std::nullopt);
      out["z"] = es_z;
      out["n"] = es_n;
      out["r2"] = es_r2;
      out["r0"] = r0.point;
      out["r0_se"] = r0.se;
      out["vc"] = vc.point;
      out["vc_se"] = vc.se;
      if (vc.warning) out["warning"] = "estimated R0 <= 1: no vaccination needed";
    } else if (vac_cmd->parsed()) {
      if (va_mode != "leaky" && va_mode != "all-or-nothing" && va_mode != "all_or_nothing")
        throw usage_error("--mode must be leaky or all-or-nothing");
      out = header(ctx, std::nullopt);
      out["r0"] = va_r0;
      out["efficacy"] = va_eff;
      out["mode"] = va_mode;
      if (va_v) {
        EPISIM_REQUIRE(*va_v >= 0.0 && *va_v <= 1.0);
        out["v"] = *va_v;
        out["r_v"] = (1.0 - *va_v * va_eff) * va_r0;
      }
      if (va_r0 > 1.0) {
        const auto req = imperfect_critical_coverage(va_r0, va_eff);
        out["v_c"] = req.coverage;
        out["achievable"] = req.achievable;
      } else {
        out["v_c"] = 0.0;
        out["achievable"] = true;
      }
    } else if (mt_cmd->parsed()) {
      if (!ctx.config.contains("pi") || !ctx.config.contains("lambda"))
        throw usage_error("multitype needs --config with \"pi\" and \"lambda\" (and optionally \"periods\")");
      multitype_params p;
      p.pi = ctx.config.at("pi").get<std::vector<double>>();
      p.lambda = ctx.config.at("lambda").get<matrix>();
      if (ctx.config.contains("periods")) {
        for (const auto& d : ctx.config.at("periods")) p.periods.push_back(distribution_from_json(d));
      } else {
        p.periods.assign(p.pi.size(), duration_distribution::exponential(1.0));
      }
      const auto mm = mean_offspring_matrix(p);
      const auto perron = dominant_eigenvalue(mm);
      out = header(ctx, mt_reps ? std::optional<std::uint64_t>(ctx.seed) : std::nullopt);
      out["M"] = mm;
      out["r0"] = perron.r0;
      out["reducible"] = perron.reducible;
      if (perron.reducible) out["warning"] = "offspring matrix is reducible; r0 is the Perron root of the whole matrix";
      if (mt_reps > 0) {
        std::vector<std::size_t> m_by_type(p.types(), 0);
        if (mt_m.empty())
          m_by_type[0] = 1;
        else
          m_by_type = count_list(mt_m, "--m-by-type");
        const auto runs = simulate_multitype_replicates(p, mt_n, m_by_type, mt_reps, ctx.seed);
        const std::size_t threshold =
            mt_threshold ? *mt_threshold
                         : static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(mt_n), 2.0 / 3.0)));
        std::vector<std::size_t> hist(mt_n + 1, 0);
        std::vector<double> by_type(p.types(), 0.0);
        std::size_t major = 0;
        double total = 0.0;
        for (const auto& r : runs) {
          ++hist[r.total];
          if (r.total < threshold) continue;
          ++major;
          total += static_cast<double>(r.total);
          for (std::size_t j = 0; j < p.types(); ++j) by_type[j] += static_cast<double>(r.final_by_type[j]);
        }
        json s;
        s["reps"] = mt_reps;
        s["threshold_used"] = threshold;
        s["minor_fraction"] = static_cast<double>(mt_reps - major) / static_cast<double>(mt_reps);
        s["major_count"] = major;
        for (double& x : by_type) x = major ? x / static_cast<double>(major) : std::nan("");
        s["major_mean"] = major ? total / static_cast<double>(major) : std::nan("");
        s["major_mean_by_type"] = by_type;
        out["summary"] = s;
        if (!mt_out.empty()) write_atomically(mt_out, histogram_csv(hist));
      }
    } else if (hh_cmd->parsed()) {
      household_params p;
      p.size_pmf = number_list(hh_sizes, "--size-dist");
      p.lambda_h = hh_lh;
      p.lambda_g = hh_lg;
      p.period = duration_distribution::parse(hh_dist);
      const double mu_h = household_outbreak_mean(p);
      out = header(ctx, hh_reps ? std::optional<std::uint64_t>(ctx.seed) : std::nullopt);
      out["mu_h"] = mu_h;
      out["r0"] = household_r0(p);
      if (hh_reps > 0) {
        double mean_size = 0.0;
        for (std::size_t h = 1; h <= p.size_pmf.size(); ++h) mean_size += static_cast<double>(h) * p.size_pmf[h - 1];
        const std::size_t threshold =
            hh_threshold ? *hh_threshold
                         : static_cast<std::size_t>(
                               std::ceil(std::pow(static_cast<double>(hh_count) * mean_size, 2.0 / 3.0)));
        const auto runs = simulate_household_replicates(p, hh_count, hh_m, hh_reps, ctx.seed);
        std::vector<std::size_t> hist(hh_count * p.size_pmf.size() + 1, 0);
        std::vector<outbreak_result> results;
        for (const auto& r : runs) {
          ++hist[r.outbreak.final_size];
          results.push_back(r.outbreak);
        }
        epidemic_params shape;
        shape.n = hist.size() - 1;
        shape.m = 0;
        shape.lambda = hh_lg;
        auto s = summarize(shape, results, threshold, ctx.seed);
        out["summary"] = summary_json(s);
        if (!hh_out.empty()) write_atomically(hh_out, histogram_csv(hist));
      }
    } else if (en_cmd->parsed()) {
      const endemic_params p{en_n, en_lambda, en_gamma, en_mu};
      p.validate();
      endemic_counts start;
      if (en_i0) {
        if (*en_i0 > en_n) throw precondition_error("precondition violated: i0 <= n");
        start = {en_n - *en_i0, *en_i0, 0};
      } else {
        start = start_at_equilibrium(p);
      }
      out = header(ctx, ctx.seed);
      out["r0"] = p.r0();
      out["delta"] = p.delta();
      if (p.r0() > 1.0) {
        const auto e = endemic_equilibrium(p);
        out["equilibrium"] = {{"s", e.s}, {"i", e.i}, {"r", e.r}};
      }
      out["start"] = {{"S", start.s}, {"I", start.i}, {"R", start.r}};
      if (en_reps > 0) {
        const auto s = time_to_extinction_mc(p, start, en_reps, ctx.seed, en_tmax);
        out["extinction"] = {{"reps", en_reps},           {"t_cap", en_tmax},
                             {"median", s.median},        {"lower_quartile", s.lower_quartile},
                             {"upper_quartile", s.upper_quartile}, {"censored_fraction", s.censored_fraction}};
      }
      if (!en_out.empty()) {
        stream rng(ctx.seed, 0);
        endemic_run_options opt;
        opt.record = true;
        opt.record_interval = en_every;
        const auto r = simulate_endemic(p, start, en_tmax, rng, opt);
        std::string csv = "t,S,I,R\n";
        for (const auto& smp : r.trajectory)
          csv += fmt(smp.t) + "," + std::to_string(smp.c.s) + "," + std::to_string(smp.c.i) + "," +
                 std::to_string(smp.c.r) + "\n";
        write_atomically(en_out, csv);
      }
    } else if (dur_cmd->parsed()) {
      const auto dist = duration_distribution::parse(du_dist);
      const auto grid = count_list(du_grid, "--n-grid");
      const auto r = duration_scaling_experiment(du_lambda, dist, du_m, grid, du_reps, ctx.seed);
      out = header(ctx, ctx.seed);
      json pts = json::array();
      std::string csv = "n,mean_T,se_T\n";
      for (const auto& pt : r.points) {
        pts.push_back({{"n", pt.n}, {"mean_T", pt.mean_t}, {"se_T", pt.se_t}, {"majors", pt.majors}});
        csv += std::to_string(pt.n) + "," + fmt(pt.mean_t) + "," + fmt(pt.se_t) + "\n";
      }
      out["points"] = pts;
      out["slope"] = r.slope;
      out["intercept"] = r.intercept;
      out["r_squared"] = r.r_squared;
      if (!du_out.empty()) write_atomically(du_out, csv);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << "\n" << usage_for();
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
