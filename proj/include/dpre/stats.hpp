#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dpre {

// Deterministic recursive pairwise sum; the reduction tree depends only
// on the element count, so results are independent of scheduling.
double pairwise_sum(const double* a, size_t n);
double pairwise_sum(const std::vector<double>& a);
double mean(const std::vector<double>& a);
double median(std::vector<double> a);

struct EmpiricalSample {
  std::vector<double> values;
  std::string label;
  std::string provenance;  // family, N, M, beta_hat, replicate range
};

struct GaussianTarget {
  double mean = 0.0;
  double variance = 1.0;
};

// W1 distance between the empirical law of the sample and the Gaussian
// target, via order statistics: sum_i int_{(i-1)/n}^{i/n} |x_(i) - q(u)| du
// with every sub-integral in closed form from int q = mu du + sigma dphi,
// split at the crossing point where q passes x_(i). Absolute error is
// dominated by the quantile evaluations, far below 1e-10 per interval.
double wasserstein1_to_gaussian(std::vector<double> sample, const GaussianTarget& target);
double wasserstein1_to_gaussian(const EmpiricalSample& sample, const GaussianTarget& target);

struct MomentEstimate {
  double value = 0.0;
  double se = 0.0;
  size_t n = 0;
};

// (1/n) sum |v_i|^p, or |v_i - mean|^p when centered, with the standard
// error of the estimate.
MomentEstimate empirical_moment(const std::vector<double>& values, double p, bool centered);

// | sum_k log(1+u_k) - sum_k (u_k - u_k^2/2) | for one replicate's
// dyadic factors.
double taylor_gap(const std::vector<double>& u_values);

// sum_k u_k^2 1{u_k^2 <= alpha/M} with M = u_values.size().
double truncated_variance_sum(const std::vector<double>& u_values, double alpha);

struct GapEstimate {
  double gap = 0.0;
  double se = 0.0;
  size_t n = 0;
};

// Paired L2 decoupling error (1/n) sum (W_i - P_i)^2 with a jackknife
// standard error; inputs must be per-replicate pairs from one shared
// environment.
GapEstimate l2_decoupling_gap(const std::vector<double>& w, const std::vector<double>& prod_z);

struct CltReport {
  size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double se_mean = 0.0;
  double w1 = 0.0;
  double target_mean = 0.0;
  double target_variance = 0.0;
};

// Empirical summary of log W_N against the subcritical limit law
// N(-lambda^2/2, lambda^2), lambda^2 = log(1/(1-beta_hat^2)).
CltReport clt_report(const std::vector<double>& log_w, double beta_hat);

}  // namespace dpre
