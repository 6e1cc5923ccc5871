#pragma once

#include <string>
#include <vector>

#include "activekoop/experiments/config.hpp"
#include "activekoop/experiments/report.hpp"
#include "activekoop/koopman.hpp"

namespace activekoop {

// ---------------------------------------------------------------- Van der Pol

struct VdpReport {
  KoopmanModel model;
  /// method,ic,t,x1,x2,u,cum_err
  CsvTable trajectories{{"method", "ic", "t", "x1", "x2", "u", "cum_err"}};
  /// ic,x1_0,x2_0,koopman_err,linear_err,koopman_cost,linear_cost,koopman_better;
  /// err = ∫‖x‖² dt, cost = ∫ xᵀQx + uᵀRu dt.
  CsvTable summary{{"ic", "x1_0", "x2_0", "koopman_err", "linear_err", "koopman_cost", "linear_cost",
                    "koopman_better"}};
  double fraction_better = 0.0;
};

VdpReport run_vdp_compare(const VdpConfig& cfg);

// ---------------------------------------------------------------- quadcopter

struct QuadTrial {
  std::string method;
  double variance = 1.0;
  int trial = 0;
  std::uint64_t seed = 0;
  bool success = false;
  double success_time = -1.0;  // first time the hold window is entered, -1 if never
  double error_at_report = 0.0;
  double final_error = 0.0;
  double mean_info = 0.0;
  bool blew_up = false;
};

struct QuadReport {
  std::vector<QuadTrial> trials;
  /// method,variance,trial,t,err,info,a_g1..3,w1..3,v1..3,u1..4
  CsvTable series{{"method", "variance", "trial", "t", "err", "info", "ag1", "ag2", "ag3", "w1", "w2",
                   "w3", "v1", "v2", "v3", "u1", "u2", "u3", "u4"}};
  CsvTable trial_table() const;
  /// method,variance,trials,successes,median_err_report
  CsvTable summary_table() const;
  int successes(const std::string& method, double variance) const;
  double median_error(const std::string& method, double variance) const;
};

/// One trial; `variance` is the initial-operator variance for learning
/// methods.
QuadTrial run_quad_trial(const QuadConfig& cfg, const std::string& method, int trial,
                         double variance, const KoopmanModel* precomputed, CsvTable* series);

/// Offline model for the precomputed benchmark.
KoopmanModel fit_precomputed_quad_model(const QuadConfig& cfg);

/// Every configured method at cfg.init_variance.
QuadReport run_quad_montecarlo(const QuadConfig& cfg);
/// Active learning at every sweep variance plus the precomputed benchmark.
QuadReport run_quad_sweep(const QuadConfig& cfg);

// ---------------------------------------------------------------- NN observables

struct NnIteration {
  std::string method;
  int seed_index = 0;
  int iteration = 0;
  bool success = false;
  int steps = 0;
  double final_error = 0.0;
  double loss = 0.0;
  double w_info = 0.0;
  double noise_std = 0.0;
  bool fit_failed = false;
};

struct NnReport {
  std::vector<NnIteration> iterations;
  int max_iterations = 0;
  /// method,seed,iteration,success,steps,final_error,loss,w_info,noise_std,fit_failed
  CsvTable iteration_table() const;
  /// method,seed,first_success
  CsvTable first_success_table() const;
  /// First successful iteration for one run, or max_iterations if none.
  int first_success(const std::string& method, int seed_index) const;
  double median_first_success(const std::string& method, int seeds) const;
};

std::vector<NnIteration> run_nn_seed(const NnConfig& cfg, const std::string& method,
                                     int seed_index);
NnReport run_nn_experiment(const NnConfig& cfg);

// ---------------------------------------------------------------- helpers

/// Runs f(0..n-1) on up to `threads` workers (0: hardware concurrency).
/// Exceptions from any task are rethrown after all tasks finish.
template <class F>
void parallel_for(int n, int threads, F&& f);

double median(std::vector<double> v);

}  // namespace activekoop

#include "activekoop/experiments/parallel.ipp"
