#include <cmath>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "activekoop/experiments/config.hpp"
#include "activekoop/experiments/report.hpp"
#include "activekoop/experiments/runners.hpp"
#include "activekoop/koopman.hpp"
#include "activekoop/metrics.hpp"
#include "activekoop/observables.hpp"

using namespace activekoop;
using nlohmann::json;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int trials = 0;
  std::string method;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* trials_opt = nullptr;
  CLI::Option* method_opt = nullptr;
};

void add_common(CLI::App* sub, Flags& f, const std::string& default_out, const char* trials_help,
                bool with_method) {
  sub->add_option("--config", f.config, "JSON config; keys override the defaults")
      ->check(CLI::ExistingFile);
  f.out = default_out;
  sub->add_option("--out", f.out, "output directory")->capture_default_str();
  f.seed_opt = sub->add_option("--seed", f.seed, "master seed");
  f.trials_opt = sub->add_option("--trials", f.trials, trials_help)->check(CLI::PositiveNumber);
  if (with_method) f.method_opt = sub->add_option("--method", f.method, "run only this method");
}

json load(const Flags& f) { return f.config.empty() ? json::object() : read_json_file(f.config); }

std::string path(const Flags& f, const std::string& name) { return f.out + "/" + name; }

json terms(const Dictionary& d) { return d.term_names(); }

void finish(const Flags& f, const std::string& experiment, const json& config, json extra,
            const std::vector<std::string>& files) {
  extra["outputs"] = files;
  write_manifest(path(f, "manifest.json"), make_manifest(experiment, config, extra));
  std::cout << "wrote";
  for (const auto& name : files) std::cout << ' ' << path(f, name);
  std::cout << ' ' << path(f, "manifest.json") << '\n';
}

void run_vdp(const Flags& f) {
  VdpConfig cfg = parse_vdp_config(load(f));
  if (*f.seed_opt) cfg.seed = f.seed;
  if (*f.trials_opt) cfg.test_conditions = f.trials;
  validate(cfg);
  const VdpReport rep = run_vdp_compare(cfg);
  ensure_directory(f.out);
  write_csv(path(f, "vdp_trajectories.csv"), rep.trajectories);
  write_csv(path(f, "vdp_summary.csv"), rep.summary);
  std::ostringstream model;
  write_model(model, rep.model);
  write_text(path(f, "vdp_model.txt"), model.str());
  std::cout << "koopman better on " << format_number(100.0 * rep.fraction_better) << "% of "
            << cfg.test_conditions << " initial conditions\n";
  json extra;
  extra["seed"] = cfg.seed;
  extra["dictionary_terms"] = terms(VdpDictionary());
  extra["fraction_better"] = rep.fraction_better;
  extra["fit_residual"] = rep.model.residual;
  finish(f, "vdp-compare", cfg, extra, {"vdp_trajectories.csv", "vdp_summary.csv", "vdp_model.txt"});
}

void run_quad(const Flags& f, bool sweep) {
  QuadConfig cfg = parse_quad_config(load(f));
  if (*f.seed_opt) cfg.seed = f.seed;
  if (*f.trials_opt) cfg.trials = f.trials;
  if (*f.method_opt) cfg.methods = {f.method};
  validate(cfg);
  const QuadReport rep = sweep ? run_quad_sweep(cfg) : run_quad_montecarlo(cfg);
  const std::string prefix = sweep ? "quad_sweep_" : "quad_";
  ensure_directory(f.out);
  const CsvTable summary = rep.summary_table();
  write_csv(path(f, prefix + "trials.csv"), rep.trial_table());
  write_csv(path(f, prefix + "summary.csv"), summary);
  write_csv(path(f, prefix + "series.csv"), rep.series);
  std::cout << summary.str();
  json extra;
  extra["seed"] = cfg.seed;
  extra["sweep"] = sweep;
  extra["dictionary_terms"] = terms(QuadDictionary(cfg.dictionary == "quad-cross"
                                                       ? QuadDictionary::Variant::CrossProduct
                                                       : QuadDictionary::Variant::Printed));
  finish(f, sweep ? "quad-fall-sweep" : "quad-fall", cfg, extra,
         {prefix + "trials.csv", prefix + "summary.csv", prefix + "series.csv"});
}

void run_nn(const Flags& f, const NnConfig& defaults, const std::string& experiment) {
  NnConfig cfg = parse_nn_config(load(f), defaults);
  if (*f.seed_opt) cfg.seed = f.seed;
  if (*f.trials_opt) cfg.seeds = f.trials;
  if (*f.method_opt) cfg.methods = {f.method};
  validate(cfg);
  const NnReport rep = run_nn_experiment(cfg);
  ensure_directory(f.out);
  const CsvTable first = rep.first_success_table();
  write_csv(path(f, "nn_iterations.csv"), rep.iteration_table());
  write_csv(path(f, "nn_first_success.csv"), first);
  std::cout << first.str();
  json extra;
  extra["seed"] = cfg.seed;
  json medians = json::object();
  for (const auto& m : cfg.methods) medians[m] = rep.median_first_success(m, cfg.seeds);
  extra["median_first_success"] = medians;
  std::vector<std::string> names;
  for (int i = 0; i < 4; ++i) names.push_back("x" + std::to_string(i));
  const int extra_terms = cfg.z_widths.back() - 4;
  for (int i = 0; i < extra_terms; ++i) names.push_back("h" + std::to_string(i));
  extra["dictionary_terms"] = names;
  finish(f, experiment, cfg, extra, {"nn_iterations.csv", "nn_first_success.csv"});
}

struct MetricsFlags {
  std::string reference, actual, label = "run", out = "results/metrics";
  double frequency = 1.0, dt = 0.0;
};

// Drops a leading time column named t or time.
Mat signal_columns(const NumericCsv& csv) {
  if (!csv.header.empty() && (csv.header.front() == "t" || csv.header.front() == "time")) {
    return csv.data.rightCols(csv.data.cols() - 1);
  }
  return csv.data;
}

void run_metrics(const MetricsFlags& f) {
  const Mat ref = signal_columns(read_numeric_csv(f.reference));
  const Mat act = signal_columns(read_numeric_csv(f.actual));
  if (ref.rows() != act.rows() || ref.cols() != act.cols()) {
    throw InvalidArgument("reference and actual differ in shape");
  }
  CsvTable t({"Method", "RMSE", "Correlation", "PValue", "PhaseLag"});
  try {
    const TrackingReport r = tracking_metrics(ref, act, f.frequency, f.dt);
    t.row().add(f.label).add(r.rmse).add(r.pearson_r).add(r.p_value).add(r.phase_lag);
  } catch (const CorrelationUndefined&) {
    // correlation is missing, not zero
    const double lag = circular_lag(ref, act) * f.frequency * f.dt;
    const double two_pi = 2.0 * 3.14159265358979323846;
    t.row().add(f.label).add(rmse(ref, act)).add("NA").add("NA").add(lag - two_pi * std::floor(lag / two_pi));
  }
  ensure_directory(f.out);
  write_csv(f.out + "/metrics.csv", t);
  std::cout << t.str();
}

void print_error(const std::string& code, const std::string& message) {
  json e;
  e["error"]["code"] = code;
  e["error"]["message"] = message;
  std::cerr << e.dump() << '\n';
}

const char* kVdpHelp =
    "vdp_trajectories.csv: method,ic,t,x1,x2,u,cum_err (method koopman|linear; cum_err = "
    "integral of |x|^2 up to t)\n"
    "vdp_summary.csv: ic,x1_0,x2_0,koopman_err,linear_err,koopman_cost,linear_cost,koopman_better\n"
    "vdp_model.txt: fitted operator blocks";

const char* kQuadHelp =
    "quad_trials.csv: method,variance,trial,seed,success,success_time,error_at_report,final_error,"
    "mean_info,blew_up\n"
    "quad_summary.csv: method,variance,trials,successes,median_err_report\n"
    "quad_series.csv: method,variance,trial,t,err,info,ag1,ag2,ag3,w1,w2,w3,v1,v2,v3,u1,u2,u3,u4\n"
    "err = |omega|^2 + |v|^2; with --sweep the files are prefixed quad_sweep_ and cover active "
    "learning at every sweep variance plus the precomputed benchmark";

const char* kNnHelp =
    "nn_iterations.csv: method,seed,iteration,success,steps,final_error,loss,w_info,noise_std,"
    "fit_failed\n"
    "nn_first_success.csv: method,seed,first_success (iterations count when never)";

const char* kMetricsHelp =
    "Inputs: CSV with a header; an optional leading t/time column is ignored, the rest are axes.\n"
    "metrics.csv: Method,RMSE,Correlation,PValue,PhaseLag (Correlation NA when an axis is constant)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman operator active learning: experiments and metrics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  Flags vdp, quad, cart, two;
  auto* s_vdp = app.add_subcommand("vdp-compare", "Koopman LQR vs linearized LQR on Van der Pol");
  add_common(s_vdp, vdp, "results/vdp", "number of test initial conditions", false);
  s_vdp->footer(kVdpHelp);

  auto* s_quad = app.add_subcommand("quad-fall", "quadcopter free-fall recovery Monte Carlo");
  add_common(s_quad, quad, "results/quad", "trials per method", true);
  bool sweep = false;
  s_quad->add_flag("--sweep", sweep, "initial-variance sensitivity sweep");
  s_quad->footer(kQuadHelp);

  auto* s_cart = app.add_subcommand("cartpole-nn", "learned observables on the cart pendulum");
  add_common(s_cart, cart, "results/cartpole", "number of seeds per method", true);
  s_cart->footer(kNnHelp);

  auto* s_two = app.add_subcommand("twolink-nn", "learned observables on the two-link arm");
  add_common(s_two, two, "results/twolink", "number of seeds per method", true);
  s_two->footer(kNnHelp);

  MetricsFlags mf;
  auto* s_met = app.add_subcommand("metrics", "tracking metrics between two time series");
  s_met->add_option("--reference", mf.reference, "reference series CSV")->required()->check(CLI::ExistingFile);
  s_met->add_option("--actual", mf.actual, "measured series CSV")->required()->check(CLI::ExistingFile);
  s_met->add_option("--dt", mf.dt, "sample spacing in seconds")->required()->check(CLI::PositiveNumber);
  s_met->add_option("--frequency", mf.frequency, "base frequency in rad/s")->capture_default_str();
  s_met->add_option("--method", mf.label, "label for the Method column")->capture_default_str();
  s_met->add_option("--out", mf.out, "output directory")->capture_default_str();
  s_met->footer(kMetricsHelp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*s_vdp) run_vdp(vdp);
    if (*s_quad) run_quad(quad, sweep);
    if (*s_cart) run_nn(cart, NnConfig{}, "cartpole-nn");
    if (*s_two) run_nn(two, twolink_defaults(), "twolink-nn");
    if (*s_met) run_metrics(mf);
  } catch (const Error& e) {
    print_error(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
