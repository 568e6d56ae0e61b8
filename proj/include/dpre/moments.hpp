#pragma once

#include <cstdint>
#include <vector>

#include "dpre/disorder.hpp"
#include "dpre/walk.hpp"

namespace dpre {

// E[Z^2] for the window (s, e], exactly (no Monte Carlo), by the
// renewal recursion over the collision times of two independent
// replicas started together at the origin at time 0:
//   u(0) = 1
//   u(n) = Lambda * sum_{m in {0} u (s, n)} u(m) p_{2(n-m)}(0),  n in (s, e]
//   E[Z^2] = u(0) + sum_{n in (s, e]} u(n).
// The first collision factor is p_{2n}(0) even when s > 0: the replicas
// diffuse freely before the window opens.
double exact_second_moment(int64_t s, int64_t e, double big_lambda,
                           const ReturnProbabilityTable& table);

// Independent check oracle: direct enumeration of all path pairs,
// E[(1+Lambda)^{#collisions in (s, e]}]. Paths factorize into two 1D
// walks in rotated coordinates, so pairs are enumerated per axis as
// collision bitmasks and combined. Enumeration cap e <= 6.
double brute_force_second_moment(int64_t s, int64_t e, double big_lambda);
double brute_force_second_moment(int64_t N, double big_lambda);

// Limiting window second moment e^{lambda^2_{a,b}} = (1-a bh^2)/(1-b bh^2)
// for beta_hat in (0, 1).
double limit_second_moment(double a, double b, double beta_hat);

// lambda^2_{M,N} = sum_k (E[Z_k^2] - 1) over the dyadic windows of
// (N, M), with Lambda of the requested family at beta_N.
double lambda_MN(int64_t N, int M, double beta_hat, Family family,
                 const ReturnProbabilityTable& table);

struct MomentTableRow {
  int k = 0;
  int64_t t_lo = 0;
  int64_t t_hi = 0;
  double second_moment = 1.0;        // E[Z_k^2]
  double var_u = 0.0;                // E[Z_k^2] - 1
  double running_lambda_mn = 0.0;    // partial sums of var_u
  double limit_value = 0.0;          // e^{lambda^2_{(k-1)/M, k/M}}; NaN when beta_hat >= 1
};

struct MomentTable {
  int64_t N = 0;
  int M = 0;
  double beta_hat = 0.0;
  Family family = Family::gaussian;
  double beta = 0.0;
  double big_lambda = 0.0;
  double lambda_mn = 0.0;
  std::vector<MomentTableRow> rows;
};

MomentTable build_moment_table(int64_t N, int M, double beta_hat, Family family,
                               const ReturnProbabilityTable& table);

}  // namespace dpre
