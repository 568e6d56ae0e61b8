#include "dpre/engine.hpp"

#include <algorithm>
#include <cmath>

#include "dpre/walk.hpp"

namespace dpre {

namespace {

// Little-endian multiprecision unsigned integers, just enough to decide
// t^M >= N^k exactly.
using BigU = std::vector<uint64_t>;

void big_mul_u64(BigU& a, uint64_t m) {
  unsigned __int128 carry = 0;
  for (auto& w : a) {
    const unsigned __int128 p = (unsigned __int128)w * m + carry;
    w = uint64_t(p);
    carry = p >> 64;
  }
  if (carry) a.push_back(uint64_t(carry));
}

BigU big_pow(uint64_t base, int exp) {
  BigU r{1};
  for (int i = 0; i < exp; ++i) big_mul_u64(r, base);
  return r;
}

int big_cmp(const BigU& a, const BigU& b) {
  size_t na = a.size(), nb = b.size();
  while (na > 0 && a[na - 1] == 0) --na;
  while (nb > 0 && b[nb - 1] == 0) --nb;
  if (na != nb) return na < nb ? -1 : 1;
  for (size_t i = na; i-- > 0;) {
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  }
  return 0;
}

// Smallest t with t^M >= N^k. A floating guess brackets the answer and
// the exact comparison settles it, so t = N^{k/M} at exact powers.
int64_t ceil_root_power(int64_t N, int k, int M) {
  const BigU rhs = big_pow(uint64_t(N), k);
  auto ge = [&](int64_t t) { return big_cmp(big_pow(uint64_t(t), M), rhs) >= 0; };
  int64_t guess = int64_t(std::floor(std::pow((long double)N, (long double)k / M)));
  guess = std::max<int64_t>(1, guess - 2);
  while (!ge(guess)) ++guess;
  while (guess > 1 && ge(guess - 1)) --guess;
  return guess;
}

// Deterministic slice-row reduction: eight fixed stride-8 lanes combined
// pairwise, remainder added last. Independent of vector width and of
// how replicates are scheduled.
double lane_sum(const double* a, int64_t n) {
  double lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int j = 0; j < 8; ++j) lane[j] += a[i + j];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i];
  return (((lane[0] + lane[1]) + (lane[2] + lane[3])) +
          ((lane[4] + lane[5]) + (lane[6] + lane[7]))) +
         tail;
}

}  // namespace

TimeWindow DyadicGrid::window(int k) const {
  TimeWindow w;
  w.start_exp = double(k - 1) / M;
  w.end_exp = double(k) / M;
  w.start_time = times[size_t(k) - 1];
  w.end_time = times[size_t(k)];
  return w;
}

DyadicGrid dyadic_decompose(int64_t N, int M) {
  if (N < 2) throw std::invalid_argument("dyadic_decompose: N must be >= 2");
  if (M < 1) throw std::invalid_argument("dyadic_decompose: M must be >= 1");
  DyadicGrid g;
  g.N = N;
  g.M = M;
  g.times.resize(size_t(M) + 1);
  g.times[0] = 0;
  for (int k = 1; k < M; ++k) g.times[size_t(k)] = ceil_root_power(N, k, M);
  g.times[size_t(M)] = N;
  return g;
}

double KeyedEnvironment::lambda_of(double beta) const {
  return beta > 0.0 ? cumulants(spec_.family, beta).lambda : 0.0;
}

void KeyedEnvironment::begin_slice(int64_t n, double beta, double scale) {
  n_ = n;
  beta_ = beta;
  scale_ = scale;
  if (spec_.family == Family::rademacher) {
    w_sel_[0] = scale * std::exp(-beta);
    w_sel_[1] = scale * std::exp(beta);
  }
}

void KeyedEnvironment::fill_row(int64_t u, int64_t v_lo, int64_t count, double* out) {
  if (spec_.family == Family::rademacher) {
    const double wm = w_sel_[0];
    const double dd = w_sel_[1] - w_sel_[0];
    int64_t i = 0;
    while (i < count) {
      const int64_t v = v_lo + 2 * i;
      const Philox4 b = field_block(spec_.master_seed, spec_.replicate,
                                    uint32_t(n_), int32_t(u), int32_t(v >> 7));
      const uint64_t lo = uint64_t(b.x[0]) | (uint64_t(b.x[1]) << 32);
      const uint64_t hi = uint64_t(b.x[2]) | (uint64_t(b.x[3]) << 32);
      int64_t j = v & 127;
      const int64_t run = std::min(count - i, (129 - j) / 2);
      int64_t k = 0;
      for (; k < run && j < 64; ++k, j += 2)
        out[i + k] = wm + dd * double((lo >> j) & 1u);
      for (; k < run; ++k, j += 2)
        out[i + k] = wm + dd * double((hi >> (j - 64)) & 1u);
      i += run;
    }
    return;
  }
  int64_t i = 0;
  while (i < count) {
    int64_t v = v_lo + 2 * i;
    const Philox4 b = field_block(spec_.master_seed, spec_.replicate, uint32_t(n_),
                                  int32_t(u), int32_t(v >> 2));
    int slot = int((v >> 1) & 1);
    for (; slot < 2 && i < count; ++slot, ++i)
      out[i] = scale_ * std::exp(beta_ * gaussian_from_block(b, slot));
  }
}

double TableEnvironment::lambda_of(double beta) const {
  return beta > 0.0 ? cumulants(family_, beta).lambda : 0.0;
}

void TableEnvironment::begin_slice(int64_t n, double beta, double scale) {
  n_ = n;
  beta_ = beta;
  scale_ = scale;
}

void TableEnvironment::fill_row(int64_t u, int64_t v_lo, int64_t count, double* out) {
  for (int64_t i = 0; i < count; ++i) {
    const int64_t v = v_lo + 2 * i;
    const int64_t x1 = (u + v) / 2;
    const int64_t x2 = (u - v) / 2;
    const auto it = omega_.find({n_, x1, x2});
    out[i] = (it == omega_.end()) ? scale_ : scale_ * std::exp(beta_ * it->second);
  }
}

PolymerEngine::PolymerEngine(int64_t max_horizon)
    : max_horizon_(max_horizon), stride_(max_horizon + 1) {
  if (max_horizon < 1) throw std::invalid_argument("engine: max_horizon must be >= 1");
  slab_a_.assign(size_t(stride_) * size_t(stride_), 0.0);
  slab_b_.assign(size_t(stride_) * size_t(stride_), 0.0);
  tmp_.assign(size_t(max_horizon_) + 3, 0.0);
  wrow_.assign(size_t(max_horizon_) + 1, 0.0);
}

// Free-walk slice at time s from the factorization into two independent
// 1D walks: slab[iu][iv] = b[iu] b[iv] with b[j] = 2^{-s} binom(s, j).
// The row is built outward from its central value, so the relative
// error stays near machine precision everywhere that carries mass.
void PolymerEngine::free_slice_fill(double* slab, int64_t s, double* mass_out) {
  std::vector<double> b(size_t(s) + 1);
  const int64_t c = s / 2;
  const double log_center = std::lgamma(double(s) + 1.0) - std::lgamma(double(c) + 1.0) -
                            std::lgamma(double(s - c) + 1.0) -
                            double(s) * 0.6931471805599453094;
  b[size_t(c)] = std::exp(log_center);
  for (int64_t j = c; j > 0; --j) b[size_t(j) - 1] = b[size_t(j)] * double(j) / double(s - j + 1);
  for (int64_t j = c; j < s; ++j) b[size_t(j) + 1] = b[size_t(j)] * double(s - j) / double(j + 1);
  for (int64_t iu = 0; iu <= s; ++iu) {
    double* row = slab + iu * stride_;
    const double bu = b[size_t(iu)];
    for (int64_t iv = 0; iv <= s; ++iv) row[iv] = bu * b[size_t(iv)];
  }
  const double rs = lane_sum(b.data(), s + 1);
  *mass_out = rs * rs;
}

double PolymerEngine::partition_function(Environment& env, const TimeWindow& window,
                                         int64_t x1, int64_t x2, double beta,
                                         double* log_out,
                                         std::vector<double>* per_slice_mass) {
  const int64_t s = window.start_time;
  const int64_t e = window.end_time;
  if (s < 0 || e < s) throw std::invalid_argument("partition_function: bad window times");
  if (e > max_horizon_) throw std::invalid_argument("partition_function: window beyond engine horizon");
  if (beta < 0.0) throw std::invalid_argument("partition_function: beta must be >= 0");
  if (log_out) *log_out = 0.0;
  if (per_slice_mass) per_slice_mass->clear();
  if (e == s) return 1.0;

  const double lam = (beta > 0.0) ? env.lambda_of(beta) : 0.0;
  const double e_neg_lam = std::exp(-lam);
  const int64_t u0 = x1 + x2;
  const int64_t v0 = x1 - x2;

  double* prev = slab_a_.data();
  double* cur = slab_b_.data();
  double t_prev;
  double logmass = 0.0;
  if (s == 0) {
    prev[0] = 1.0;
    t_prev = 1.0;
  } else {
    free_slice_fill(prev, s, &t_prev);
    logmass = std::log(t_prev);
  }
  if (per_slice_mass) per_slice_mass->push_back(t_prev);

  for (int64_t n = s + 1; n <= e; ++n) {
    const double scale = 0.25 * e_neg_lam / t_prev;
    env.begin_slice(n, beta, scale);
    double* t = tmp_.data();
    double slice_total = 0.0;
    for (int64_t iu = 0; iu <= n; ++iu) {
      const double* ra = (iu >= 1) ? prev + (iu - 1) * stride_ : nullptr;
      const double* rb = (iu <= n - 1) ? prev + iu * stride_ : nullptr;
      t[0] = 0.0;
      if (ra && rb) {
        for (int64_t j = 0; j < n; ++j) t[1 + j] = ra[j] + rb[j];
      } else {
        const double* r = ra ? ra : rb;
        for (int64_t j = 0; j < n; ++j) t[1 + j] = r[j];
      }
      t[n + 1] = 0.0;
      env.fill_row(u0 + 2 * iu - n, v0 - n, n + 1, wrow_.data());
      double* crow = cur + iu * stride_;
      const double* w = wrow_.data();
      for (int64_t iv = 0; iv <= n; ++iv) crow[iv] = (t[iv] + t[iv + 1]) * w[iv];
      slice_total += lane_sum(crow, n + 1);
    }
    if (!std::isfinite(slice_total) || !(slice_total > 0.0))
      throw EngineNumericError("slice mass left the double range", n);
    logmass += std::log(slice_total);
    if (per_slice_mass) per_slice_mass->push_back(slice_total);
    std::swap(prev, cur);
    t_prev = slice_total;
  }
  if (log_out) *log_out = logmass;
  return std::exp(logmass);
}

double PolymerEngine::partition_function(const DisorderSpec& spec, const TimeWindow& window,
                                         int64_t x1, int64_t x2, double beta,
                                         double* log_out) {
  KeyedEnvironment env(spec);
  return partition_function(env, window, x1, x2, beta, log_out);
}

PartitionSample PolymerEngine::sample_all(const DisorderSpec& spec, int64_t N, int M,
                                          double beta_hat, bool windows_only) {
  const DyadicGrid grid = dyadic_decompose(N, M);
  return sample_all(spec, grid, coupling_constant(beta_hat, N), windows_only);
}

PartitionSample PolymerEngine::sample_all(const DisorderSpec& spec, const DyadicGrid& grid,
                                          double beta, bool windows_only) {
  KeyedEnvironment env(spec);
  PartitionSample ps;
  ps.replicate = spec.replicate;
  ps.shared_env = true;
  const int M = grid.M;
  ps.z.assign(size_t(M), 1.0);
  ps.log_z.assign(size_t(M), 0.0);
  ps.u.assign(size_t(M), 0.0);
  if (!windows_only) {
    TimeWindow full{0.0, 1.0, 0, grid.N};
    ps.w = partition_function(env, full, 0, 0, beta, &ps.log_w);
    ps.has_w = true;
  }
  for (int k = 1; k <= M; ++k) {
    const TimeWindow win = grid.window(k);
    double z, log_z;
    if (win.start_time == win.end_time) {
      z = 1.0;
      log_z = 0.0;
    } else if (M == 1 && ps.has_w) {
      z = ps.w;  // single window is the full horizon: reuse, identical bits
      log_z = ps.log_w;
    } else {
      try {
        z = partition_function(env, win, 0, 0, beta, &log_z);
      } catch (const EngineNumericError& err) {
        throw EngineNumericError(std::string(err.what()) + " (dyadic window " +
                                     std::to_string(k) + ")",
                                 err.slice, k);
      }
    }
    ps.z[size_t(k) - 1] = z;
    ps.log_z[size_t(k) - 1] = log_z;
    ps.u[size_t(k) - 1] = z - 1.0;
  }
  double prod = 1.0;
  for (int k = 0; k < M; ++k) prod *= ps.z[size_t(k)];
  ps.product_z = prod;
  return ps;
}

}  // namespace dpre
