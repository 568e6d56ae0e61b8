// Microbenchmark for the weight-fill and transfer-matrix hot paths.
// Usage: dpre_bench [N] [family] [beta_hat]

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "dpre/engine.hpp"
#include "dpre/walk.hpp"

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int64_t N = (argc > 1) ? std::atoll(argv[1]) : 1024;
  const std::string family_str = (argc > 2) ? argv[2] : "rademacher";
  const double beta_hat = (argc > 3) ? std::atof(argv[3]) : 0.7;

  const dpre::Family family = dpre::family_from_name(family_str);
  const double beta = dpre::coupling_constant(beta_hat, N);
  dpre::DisorderSpec spec{family, 42, 0};
  dpre::KeyedEnvironment env(spec);

  // Raw fill: one long row, repeated, mimicking the widest slices.
  {
    const int64_t count = N + 1;
    std::vector<double> row(static_cast<size_t>(count));
    env.begin_slice(1, beta, 1.0);
    const int reps = 4000;
    const double t0 = now_seconds();
    double sink = 0.0;
    for (int r = 0; r < reps; ++r) {
      env.fill_row(2 * (r % 64) - N, -N, count, row.data());
      sink += row[size_t(r % count)];
    }
    const double dt = now_seconds() - t0;
    std::printf("fill_row  %s: %.2f ns/site (sink %.3g)\n", family_str.c_str(),
                1e9 * dt / (double(reps) * double(count)), sink);
  }

  // Full partition function over (0, N].
  {
    dpre::PolymerEngine engine(N);
    dpre::TimeWindow window{0, 1, 0, N};
    const double t0 = now_seconds();
    double log_w = 0.0;
    const double w = engine.partition_function(env, window, 0, 0, beta, &log_w, nullptr);
    const double dt = now_seconds() - t0;
    double sites = 0.0;
    for (int64_t t = 1; t <= N; ++t) sites += double(t + 1) * double(t + 1);
    std::printf("partition N=%lld %s: %.3f s total, %.2f ns/site, w=%.6g log_w=%.6g\n",
                static_cast<long long>(N), family_str.c_str(), dt, 1e9 * dt / sites, w,
                log_w);
  }
  return 0;
}
