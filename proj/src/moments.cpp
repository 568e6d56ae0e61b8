#include "dpre/moments.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpre/engine.hpp"

namespace dpre {

double exact_second_moment(int64_t s, int64_t e, double big_lambda,
                           const ReturnProbabilityTable& table) {
  if (s < 0 || e < s) throw std::invalid_argument("exact_second_moment: bad window times");
  if (e > table.max_index) throw std::out_of_range("exact_second_moment: window beyond return table");
  if (!(big_lambda >= 0.0)) throw std::invalid_argument("exact_second_moment: Lambda must be >= 0");
  if (e == s || big_lambda == 0.0) return 1.0;
  const double* p = table.values.data();
  std::vector<double> u(size_t(e - s), 0.0);  // u[i] holds u(s+1+i)
  double total = 1.0;
  for (int64_t n = s + 1; n <= e; ++n) {
    double acc = p[n];  // m = 0: first meeting after the free diffusion phase
    const double* pr = p + (n - s - 1);
    for (int64_t i = 0, m = n - s - 1; i < m; ++i) acc += u[size_t(i)] * pr[-i];
    const double un = big_lambda * acc;
    u[size_t(n - s - 1)] = un;
    total += un;
  }
  return total;
}

double brute_force_second_moment(int64_t s, int64_t e, double big_lambda) {
  if (s < 0 || e < s) throw std::invalid_argument("brute_force_second_moment: bad window times");
  if (e > 6) throw std::invalid_argument("brute_force_second_moment: enumeration cap is e <= 6");
  if (!(big_lambda >= 0.0)) throw std::invalid_argument("brute_force_second_moment: Lambda must be >= 0");
  if (e == s) return 1.0;
  const int T = int(e);
  const int paths = 1 << T;  // one-axis +-1 paths
  // Collision bitmask of every ordered pair of 1D paths; bit t-1 is set
  // when the two positions agree at time t.
  std::vector<uint32_t> masks(size_t(paths) * size_t(paths));
  std::vector<int> pos(size_t(paths) * size_t(T));
  for (int a = 0; a < paths; ++a) {
    int x = 0;
    for (int t = 0; t < T; ++t) {
      x += ((a >> t) & 1) ? 1 : -1;
      pos[size_t(a) * T + t] = x;
    }
  }
  for (int a = 0; a < paths; ++a) {
    for (int b = 0; b < paths; ++b) {
      uint32_t m = 0;
      for (int t = 0; t < T; ++t) {
        if (pos[size_t(a) * T + t] == pos[size_t(b) * T + t]) m |= 1u << t;
      }
      masks[size_t(a) * paths + b] = m;
    }
  }
  const uint32_t window_mask = ((1u << T) - 1u) & ~((1u << s) - 1u);
  double powl[7];
  powl[0] = 1.0;
  for (int i = 1; i <= T; ++i) powl[i] = powl[i - 1] * (1.0 + big_lambda);
  // Each (u-pair, v-pair) combination is one ordered pair of 2D paths;
  // a 2D collision needs agreement on both axes.
  double sum = 0.0;
  const size_t np = masks.size();
  for (size_t i = 0; i < np; ++i) {
    const uint32_t mu = masks[i];
    double part = 0.0;
    for (size_t j = 0; j < np; ++j)
      part += powl[std::popcount(mu & masks[j] & window_mask)];
    sum += part;
  }
  const double pair_count = std::pow(4.0, 2.0 * double(T));
  return sum / pair_count;
}

double brute_force_second_moment(int64_t N, double big_lambda) {
  return brute_force_second_moment(0, N, big_lambda);
}

double limit_second_moment(double a, double b, double beta_hat) {
  if (!(a >= 0.0 && a <= b && b <= 1.0))
    throw std::invalid_argument("limit_second_moment: need 0 <= a <= b <= 1");
  if (!(beta_hat > 0.0 && beta_hat < 1.0))
    throw std::invalid_argument("limit_second_moment: beta_hat must lie in (0, 1)");
  const double b2 = beta_hat * beta_hat;
  return (1.0 - a * b2) / (1.0 - b * b2);
}

double lambda_MN(int64_t N, int M, double beta_hat, Family family,
                 const ReturnProbabilityTable& table) {
  const DyadicGrid grid = dyadic_decompose(N, M);
  const double beta = coupling_constant(beta_hat, table, N);
  const double big_lambda = cumulants(family, beta).big_lambda;
  double sum = 0.0;
  for (int k = 1; k <= M; ++k) {
    sum += exact_second_moment(grid.times[size_t(k) - 1], grid.times[size_t(k)],
                               big_lambda, table) -
           1.0;
  }
  return sum;
}

MomentTable build_moment_table(int64_t N, int M, double beta_hat, Family family,
                               const ReturnProbabilityTable& table) {
  MomentTable mt;
  mt.N = N;
  mt.M = M;
  mt.beta_hat = beta_hat;
  mt.family = family;
  mt.beta = coupling_constant(beta_hat, table, N);
  mt.big_lambda = cumulants(family, mt.beta).big_lambda;
  const DyadicGrid grid = dyadic_decompose(N, M);
  double running = 0.0;
  for (int k = 1; k <= M; ++k) {
    MomentTableRow row;
    row.k = k;
    row.t_lo = grid.times[size_t(k) - 1];
    row.t_hi = grid.times[size_t(k)];
    row.second_moment = exact_second_moment(row.t_lo, row.t_hi, mt.big_lambda, table);
    row.var_u = row.second_moment - 1.0;
    running += row.var_u;
    row.running_lambda_mn = running;
    row.limit_value = (beta_hat < 1.0)
                          ? limit_second_moment(double(k - 1) / M, double(k) / M, beta_hat)
                          : std::numeric_limits<double>::quiet_NaN();
    mt.rows.push_back(row);
  }
  mt.lambda_mn = running;
  return mt;
}

}  // namespace dpre
