#pragma once

#include <cstdint>
#include <vector>

namespace dpre {

// Exact return probabilities of the 2D simple random walk at even times.
// In rotated coordinates (u, v) = (x1+x2, x1-x2) the walk factorizes into
// two independent 1D simple walks, so
//   p_{2n}(0) = (2^{-2n} binom(2n, n))^2.
// Entries are generated by the exact ratio recurrence
//   q_n = q_{n-1} * (2n-1)/(2n),  p_{2n}(0) = q_n^2,
// which stays in range for any practical n and keeps the relative
// rounding error at a few ulp per step.
struct ReturnProbabilityTable {
  int64_t max_index = 0;
  std::vector<double> values;       // values[n] = p_{2n}(0), values[0] = 1
  std::vector<double> prefix_sums;  // prefix_sums[n] = R_n = sum_{m<=n} p_{2m}(0), prefix_sums[0] = 0

  static ReturnProbabilityTable build(int64_t max_index);

  double return_probability(int64_t n) const { return values[size_t(n)]; }
  double overlap_sum(int64_t n) const { return prefix_sums[size_t(n)]; }
};

// One-off evaluations; heavy users should build a table once instead.
double return_probability(int64_t n);

struct OverlapSum {
  int64_t horizon = 0;
  double value = 0.0;  // R_N = E^{x2 walks}[#collisions in 1..N]
};

OverlapSum overlap_sum(int64_t N);

// Intermediate-disorder coupling beta_N = beta_hat / sqrt(R_N).
double coupling_constant(double beta_hat, int64_t N);
double coupling_constant(double beta_hat, const ReturnProbabilityTable& table, int64_t N);

}  // namespace dpre
