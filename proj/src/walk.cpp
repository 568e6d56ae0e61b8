#include "dpre/walk.hpp"

#include <cmath>
#include <stdexcept>

namespace dpre {

ReturnProbabilityTable ReturnProbabilityTable::build(int64_t max_index) {
  if (max_index < 0) throw std::invalid_argument("return table: max_index must be >= 0");
  ReturnProbabilityTable t;
  t.max_index = max_index;
  t.values.resize(size_t(max_index) + 1);
  t.prefix_sums.resize(size_t(max_index) + 1);
  t.values[0] = 1.0;
  t.prefix_sums[0] = 0.0;
  double q = 1.0;  // q_n = 2^{-2n} binom(2n, n)
  for (int64_t n = 1; n <= max_index; ++n) {
    q *= double(2 * n - 1) / double(2 * n);
    t.values[size_t(n)] = q * q;
    t.prefix_sums[size_t(n)] = t.prefix_sums[size_t(n) - 1] + q * q;
  }
  return t;
}

double return_probability(int64_t n) {
  if (n < 0) throw std::invalid_argument("return_probability: n must be >= 0");
  double q = 1.0;
  for (int64_t m = 1; m <= n; ++m) q *= double(2 * m - 1) / double(2 * m);
  return q * q;
}

OverlapSum overlap_sum(int64_t N) {
  if (N < 1) throw std::invalid_argument("overlap_sum: N must be >= 1");
  OverlapSum s;
  s.horizon = N;
  double q = 1.0;
  double acc = 0.0;
  for (int64_t n = 1; n <= N; ++n) {
    q *= double(2 * n - 1) / double(2 * n);
    acc += q * q;
  }
  s.value = acc;
  return s;
}

double coupling_constant(double beta_hat, int64_t N) {
  if (!(beta_hat > 0.0)) throw std::invalid_argument("coupling_constant: beta_hat must be > 0");
  return beta_hat / std::sqrt(overlap_sum(N).value);
}

double coupling_constant(double beta_hat, const ReturnProbabilityTable& table, int64_t N) {
  if (!(beta_hat > 0.0)) throw std::invalid_argument("coupling_constant: beta_hat must be > 0");
  if (N < 1 || N > table.max_index) throw std::out_of_range("coupling_constant: N outside table");
  return beta_hat / std::sqrt(table.overlap_sum(N));
}

}  // namespace dpre
