#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpre/disorder.hpp"

namespace dpre {

// Disorder-weighted time window (s, e]: the walk leaves the start site
// at time 0, diffuses freely through times 1..s, and collects the
// weights e^{beta omega(n, S_n) - lambda(beta)} for n in s+1..e.
// start_exp / end_exp record the exponents (a, b) when the window came
// from a dyadic grid with s = ceil(N^a), e = ceil(N^b); they are
// informational and never enter the recursion.
struct TimeWindow {
  double start_exp = 0.0;
  double end_exp = 1.0;
  int64_t start_time = 0;
  int64_t end_time = 0;
};

// Dyadic times t_0 = 0, t_k = ceil(N^{k/M}); windows (t_{k-1}, t_k]
// partition {1..N}. Successive windows may be empty at small N.
struct DyadicGrid {
  int64_t N = 0;
  int M = 0;
  std::vector<int64_t> times;  // size M+1

  TimeWindow window(int k) const;  // k in 1..M
};

// t_k computed exactly as the smallest integer t with t^M >= N^k
// (big-integer power comparison), so exact powers never round up.
DyadicGrid dyadic_decompose(int64_t N, int M);

struct PartitionSample {
  uint32_t replicate = 0;
  bool has_w = false;
  bool shared_env = true;  // W and all Z_k read one environment realization
  double w = 0.0;
  double log_w = 0.0;
  std::vector<double> z;
  std::vector<double> log_z;
  std::vector<double> u;  // u[k] = z[k] - 1
  double product_z = 1.0;
};

struct EngineNumericError : std::runtime_error {
  int64_t slice = -1;
  int window_index = -1;  // 1-based dyadic index, -1 outside sample_all
  EngineNumericError(const std::string& what, int64_t slice_, int window_index_ = -1)
      : std::runtime_error(what), slice(slice_), window_index(window_index_) {}
};

// Weight supplier for one slice at a time. Instances are stateful
// per-thread helpers, not shared across threads.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual double lambda_of(double beta) const = 0;
  // Fix the slice time and the common factor `scale` multiplying every
  // weight of the slice (the engine folds 1/4, e^{-lambda} and the
  // running renormalization into it).
  virtual void begin_slice(int64_t n, double beta, double scale) = 0;
  // out[i] = scale * e^{beta omega(n, u, v_lo + 2i)} for i < count.
  virtual void fill_row(int64_t u, int64_t v_lo, int64_t count, double* out) = 0;
};

class KeyedEnvironment final : public Environment {
 public:
  explicit KeyedEnvironment(const DisorderSpec& spec) : spec_(spec) {}
  double lambda_of(double beta) const override;
  void begin_slice(int64_t n, double beta, double scale) override;
  void fill_row(int64_t u, int64_t v_lo, int64_t count, double* out) override;

 private:
  DisorderSpec spec_;
  int64_t n_ = 0;
  double beta_ = 0.0;
  double scale_ = 1.0;
  double w_sel_[2] = {1.0, 1.0};  // rademacher: scale * e^{-beta}, scale * e^{+beta}
};

// Handcrafted field for unit tests: omega defaults to 0 away from the
// listed sites, so tiny windows have directly enumerable outputs.
class TableEnvironment final : public Environment {
 public:
  explicit TableEnvironment(Family family) : family_(family) {}
  void set(int64_t n, int64_t x1, int64_t x2, double omega) { omega_[{n, x1, x2}] = omega; }
  double lambda_of(double beta) const override;
  void begin_slice(int64_t n, double beta, double scale) override;
  void fill_row(int64_t u, int64_t v_lo, int64_t count, double* out) override;

 private:
  Family family_;
  std::map<std::array<int64_t, 3>, double> omega_;
  int64_t n_ = 0;
  double beta_ = 0.0;
  double scale_ = 1.0;
};

// Transfer-matrix evaluator. Slices live in rotated coordinates
// (u, v) = (x1+x2, x1-x2), where one step changes u and v by +-1
// independently; a slice at time n is a dense (n+1) x (n+1) table.
// Each step renormalizes by the previous slice total and accumulates
// the log masses, so values stay O(1) at any beta. Buffers are reused
// across calls; an instance serves one thread.
class PolymerEngine {
 public:
  explicit PolymerEngine(int64_t max_horizon);

  int64_t max_horizon() const { return max_horizon_; }

  // Z on the window with the walk started at (x1, x2) at time 0.
  // Optional outputs: log Z, and the per-slice normalized masses
  // (first entry is the free-phase mass, then one entry per weighted
  // slice; each is 1 up to rounding when beta = 0). The mass vector
  // is reset on entry, so it can be reused across calls.
  double partition_function(Environment& env, const TimeWindow& window, int64_t x1,
                            int64_t x2, double beta, double* log_out = nullptr,
                            std::vector<double>* per_slice_mass = nullptr);

  double partition_function(const DisorderSpec& spec, const TimeWindow& window,
                            int64_t x1, int64_t x2, double beta,
                            double* log_out = nullptr);

  // W_N and the dyadic factors Z_1..Z_M on one shared environment,
  // walk started at the origin. windows_only skips W_N.
  PartitionSample sample_all(const DisorderSpec& spec, int64_t N, int M,
                             double beta_hat, bool windows_only = false);
  PartitionSample sample_all(const DisorderSpec& spec, const DyadicGrid& grid,
                             double beta, bool windows_only = false);

 private:
  int64_t max_horizon_;
  int64_t stride_;
  std::vector<double> slab_a_, slab_b_;
  std::vector<double> tmp_, wrow_;

  void free_slice_fill(double* slab, int64_t s, double* mass_out);
};

}  // namespace dpre
