#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dpre/disorder.hpp"
#include "dpre/engine.hpp"
#include "dpre/moments.hpp"
#include "dpre/walk.hpp"

using dpre::cumulants;
using dpre::DisorderSpec;
using dpre::dyadic_decompose;
using dpre::DyadicGrid;
using dpre::EngineNumericError;
using dpre::Family;
using dpre::KeyedEnvironment;
using dpre::PartitionSample;
using dpre::PolymerEngine;
using dpre::sample_site;
using dpre::TableEnvironment;
using dpre::TimeWindow;

namespace {

TimeWindow window_of(int64_t s, int64_t e) {
  TimeWindow w;
  w.start_time = s;
  w.end_time = e;
  return w;
}

}  // namespace

TEST_CASE("dyadic grids match the ceiling-power rule") {
  const DyadicGrid g = dyadic_decompose(10, 3);
  CHECK(g.times == std::vector<int64_t>{0, 3, 5, 10});
  CHECK(dyadic_decompose(1024, 2).times == std::vector<int64_t>{0, 32, 1024});
  CHECK(dyadic_decompose(2, 1).times == std::vector<int64_t>{0, 2});
  CHECK(dyadic_decompose(2, 3).times == std::vector<int64_t>{0, 2, 2, 2});

  // Exhaustive small-range check of t_k = min{t : t^M >= N^k} with exact
  // integer powers.
  auto ipow = [](int64_t b, int e) {
    int64_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  };
  for (int64_t N = 2; N <= 50; ++N) {
    for (int M = 1; M <= 6; ++M) {
      const DyadicGrid grid = dyadic_decompose(N, M);
      REQUIRE(grid.times.size() == size_t(M) + 1);
      CHECK(grid.times.front() == 0);
      CHECK(grid.times.back() == N);
      for (int k = 1; k <= M; ++k) {
        const int64_t t = grid.times[size_t(k)];
        CHECK(ipow(t, M) >= ipow(N, k));
        if (t > 1) CHECK(ipow(t - 1, M) < ipow(N, k));
        if (k > 1) CHECK(t >= grid.times[size_t(k) - 1]);
      }
    }
  }

  CHECK_THROWS_AS((void)dyadic_decompose(1, 2), std::invalid_argument);
  CHECK_THROWS_AS((void)dyadic_decompose(16, 0), std::invalid_argument);
}

TEST_CASE("large dyadic endpoints respect the power inequality in logs") {
  for (int64_t N : {int64_t(1) << 15, int64_t(1) << 20}) {
    for (int M : {8, 32}) {
      const DyadicGrid g = dyadic_decompose(N, M);
      for (int k = 1; k <= M; ++k) {
        const double t = double(g.times[size_t(k)]);
        const double target = double(k) * std::log(double(N));
        CHECK(double(M) * std::log(t) >= target - 1e-9);
        if (t > 1.5) CHECK(double(M) * std::log(t - 1.0) < target + 1e-9);
      }
    }
  }
}

TEST_CASE("one-step window matches the four-site closed form") {
  const double beta = 0.8;
  TableEnvironment env(Family::gaussian);
  // Reachable sites after one step from the origin.
  const double om[4] = {0.3, -1.1, 0.45, 2.0};
  env.set(1, 1, 0, om[0]);
  env.set(1, -1, 0, om[1]);
  env.set(1, 0, 1, om[2]);
  env.set(1, 0, -1, om[3]);

  double expected = 0.0;
  for (double o : om) expected += std::exp(beta * o);
  const double lambda = cumulants(Family::gaussian, beta).lambda;
  expected *= 0.25 * std::exp(-lambda);

  PolymerEngine engine(4);
  double log_w = 0.0;
  const double w = engine.partition_function(env, window_of(0, 1), 0, 0, beta, &log_w);
  CHECK(w == doctest::Approx(expected).epsilon(1e-13));
  CHECK(log_w == doctest::Approx(std::log(expected)).epsilon(1e-13));
}

TEST_CASE("two-step window matches explicit path enumeration") {
  const double beta = 0.6;
  TableEnvironment env(Family::rademacher);
  // A handcrafted field on every site reachable in two steps.
  auto omega = [](int64_t n, int64_t x1, int64_t x2) {
    return 0.2 * double(n) + 0.7 * double(x1) - 0.4 * double(x2) +
           0.05 * double(x1 * x2);
  };
  for (int64_t n = 1; n <= 2; ++n) {
    for (int64_t x1 = -2; x1 <= 2; ++x1) {
      for (int64_t x2 = -2; x2 <= 2; ++x2) env.set(n, x1, x2, omega(n, x1, x2));
    }
  }

  const int dx[4] = {1, -1, 0, 0};
  const int dy[4] = {0, 0, 1, -1};
  double expected = 0.0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const int64_t x1 = dx[a], y1 = dy[a];
      const int64_t x2 = x1 + dx[b], y2 = y1 + dy[b];
      expected += std::exp(beta * (omega(1, x1, y1) + omega(2, x2, y2)));
    }
  }
  const double lambda = cumulants(Family::rademacher, beta).lambda;
  expected *= (1.0 / 16.0) * std::exp(-2.0 * lambda);

  PolymerEngine engine(4);
  std::vector<double> mass;
  const double w =
      engine.partition_function(env, window_of(0, 2), 0, 0, beta, nullptr, &mass);
  CHECK(w == doctest::Approx(expected).epsilon(1e-13));
  // Leading entry is the (trivial) free-phase mass, then one per slice.
  REQUIRE(mass.size() == 3);
  CHECK(mass[0] == 1.0);
  CHECK(mass[0] * mass[1] * mass[2] == doctest::Approx(w).epsilon(1e-13));
}

TEST_CASE("flat field gives unit partition function and unit slice masses") {
  const double beta = 1e-8;  // lambda ~ 5e-17, indistinguishable from zero
  TableEnvironment env(Family::gaussian);
  PolymerEngine engine(64);
  for (auto [s, e] : std::vector<std::pair<int64_t, int64_t>>{{0, 1}, {0, 64}, {5, 20}, {63, 64}}) {
    std::vector<double> mass;
    double log_w = 0.0;
    const double w = engine.partition_function(env, window_of(s, e), 0, 0, beta, &log_w, &mass);
    CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(log_w) < 1e-12);
    REQUIRE(mass.size() == size_t(e - s) + 1);  // free phase + weighted slices
    for (double m : mass) CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("degenerate window is the constant one") {
  TableEnvironment env(Family::gaussian);
  PolymerEngine engine(8);
  double log_w = 1.0;
  CHECK(engine.partition_function(env, window_of(3, 3), 0, 0, 0.5, &log_w) == 1.0);
  CHECK(log_w == 0.0);
}

TEST_CASE("shifting start point and field together leaves the value unchanged") {
  const double beta = 0.9;
  TableEnvironment base(Family::gaussian);
  TableEnvironment shifted(Family::gaussian);
  auto omega = [](int64_t n, int64_t x1, int64_t x2) {
    return std::sin(double(n) + 1.3 * double(x1) - 0.7 * double(x2));
  };
  for (int64_t n = 1; n <= 6; ++n) {
    for (int64_t x1 = -6; x1 <= 6; ++x1) {
      for (int64_t x2 = -6; x2 <= 6; ++x2) {
        base.set(n, x1, x2, omega(n, x1, x2));
        shifted.set(n, x1 + 2, x2 - 3, omega(n, x1, x2));
      }
    }
  }
  PolymerEngine engine(8);
  double log_a = 0.0, log_b = 0.0;
  const double a = engine.partition_function(base, window_of(0, 6), 0, 0, beta, &log_a);
  const double b = engine.partition_function(shifted, window_of(0, 6), 2, -3, beta, &log_b);
  CHECK(a == b);  // identical arithmetic, so bit-identical results
  CHECK(log_a == log_b);
}

TEST_CASE("keyed row fill agrees with the scalar site sampler") {
  PolymerEngine engine(256);
  for (Family fam : {Family::rademacher, Family::gaussian}) {
    DisorderSpec spec{fam, 77, 5};
    KeyedEnvironment env(spec);
    const double beta = 0.35, scale = 0.7;

    // Odd slice, short row.
    env.begin_slice(9, beta, scale);
    double row[160];
    env.fill_row(3, -5, 6, row);
    for (int i = 0; i < 6; ++i) {
      const int64_t v = -5 + 2 * i;
      const int64_t x1 = (3 + v) / 2, x2 = (3 - v) / 2;
      CHECK(row[i] == scale * std::exp(beta * sample_site(spec, 9, x1, x2)));
    }

    // Even slice crossing several 128-wide blocks of the sign layout.
    env.begin_slice(200, beta, scale);
    env.fill_row(0, -150, 140, row);
    for (int i = 0; i < 140; ++i) {
      const int64_t v = -150 + 2 * i;
      const int64_t x1 = (0 + v) / 2, x2 = (0 - v) / 2;
      CHECK(row[i] == scale * std::exp(beta * sample_site(spec, 200, x1, x2)));
    }
  }
}

TEST_CASE("partition functions average to one") {
  const int64_t N = 32;
  const double beta = dpre::coupling_constant(0.6, N);
  PolymerEngine engine(N);
  const int64_t R = 4000;
  double sum = 0.0, sumsq = 0.0;
  for (int64_t r = 0; r < R; ++r) {
    DisorderSpec spec{Family::rademacher, 31337, uint32_t(r)};
    const double w = engine.partition_function(spec, window_of(0, N), 0, 0, beta);
    sum += w;
    sumsq += w * w;
  }
  const double mean = sum / double(R);
  const double var = sumsq / double(R) - mean * mean;
  const double se = std::sqrt(var / double(R));
  CHECK(std::fabs(mean - 1.0) < 4.0 * se);
}

TEST_CASE("windowed variance matches the renewal oracle after free diffusion") {
  // Window (2, 6]: two free steps from the origin, then four weighted
  // slices. The second-moment recursion counts collisions of two
  // independent copies from the common origin, so this pins the
  // convention that the free phase starts at time zero.
  const int64_t s = 2, e = 6;
  const double beta = 0.5;
  const double big_lambda = cumulants(Family::rademacher, beta).big_lambda;
  const auto table = dpre::ReturnProbabilityTable::build(e);
  const double oracle = dpre::exact_second_moment(s, e, big_lambda, table);

  PolymerEngine engine(e);
  const int64_t R = 200000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (int64_t r = 0; r < R; ++r) {
    DisorderSpec spec{Family::rademacher, 555, uint32_t(r)};
    const double z = engine.partition_function(spec, window_of(s, e), 0, 0, beta);
    sum += z;
    sum2 += z * z;
    sum4 += z * z * z * z;
  }
  const double mean = sum / double(R);
  const double m2 = sum2 / double(R);
  const double se_m2 = std::sqrt((sum4 / double(R) - m2 * m2) / double(R));
  CHECK(std::fabs(mean - 1.0) < 4.0 * std::sqrt((m2 - mean * mean) / double(R)));
  CHECK(std::fabs(m2 - oracle) < 4.0 * se_m2);
  CHECK(se_m2 < 0.01);  // the comparison is actually informative
}

TEST_CASE("window factors are uncorrelated across a dyadic split") {
  const int64_t N = 64;
  const int M = 2;
  PolymerEngine engine(N);
  const int64_t R = 4000;
  double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
  for (int64_t r = 0; r < R; ++r) {
    DisorderSpec spec{Family::rademacher, 909, uint32_t(r)};
    const PartitionSample ps = engine.sample_all(spec, N, M, 0.7, true);
    const double a = ps.u[0], b = ps.u[1];
    s1 += a;
    s2 += b;
    s11 += a * a;
    s22 += b * b;
    s12 += a * b;
  }
  const double n = double(R);
  const double cov = s12 / n - (s1 / n) * (s2 / n);
  const double va = s11 / n - (s1 / n) * (s1 / n);
  const double vb = s22 / n - (s2 / n) * (s2 / n);
  const double corr = cov / std::sqrt(va * vb);
  CHECK(std::fabs(corr) < 4.0 / std::sqrt(n));
}

TEST_CASE("sample_all is internally consistent") {
  PolymerEngine engine(64);
  DisorderSpec spec{Family::gaussian, 4242, 9};
  const PartitionSample ps = engine.sample_all(spec, 64, 3, 0.5);
  CHECK(ps.replicate == 9);
  CHECK(ps.has_w);
  CHECK(ps.shared_env);
  REQUIRE(ps.z.size() == 3);
  REQUIRE(ps.log_z.size() == 3);
  REQUIRE(ps.u.size() == 3);
  double prod = 1.0;
  for (size_t k = 0; k < 3; ++k) {
    CHECK(ps.u[k] == ps.z[k] - 1.0);
    CHECK(ps.log_z[k] == doctest::Approx(std::log(ps.z[k])).epsilon(1e-12));
    prod *= ps.z[k];
  }
  CHECK(ps.product_z == doctest::Approx(prod).epsilon(1e-14));
  CHECK(ps.log_w == doctest::Approx(std::log(ps.w)).epsilon(1e-12));

  // One window: the full partition function is reused bit for bit.
  const PartitionSample one = engine.sample_all(spec, 64, 1, 0.5);
  CHECK(one.z[0] == one.w);
  CHECK(one.log_z[0] == one.log_w);
  CHECK(one.product_z == one.w);

  // windows_only drops the full-horizon pass.
  const PartitionSample wo = engine.sample_all(spec, 64, 3, 0.5, true);
  CHECK_FALSE(wo.has_w);
  CHECK(wo.z == ps.z);

  // Degenerate windows contribute exact unit factors.
  const PartitionSample deg = engine.sample_all(spec, 2, 3, 0.5);
  CHECK(deg.z[1] == 1.0);
  CHECK(deg.log_z[1] == 0.0);
}

TEST_CASE("overflowing weights raise the engine error with its location") {
  TableEnvironment env(Family::gaussian);
  env.set(2, 1, 1, 710.0);  // e^{beta omega} overflows at beta = 1.1
  PolymerEngine engine(8);
  try {
    (void)engine.partition_function(env, window_of(0, 4), 0, 0, 1.1);
    FAIL("expected EngineNumericError");
  } catch (const EngineNumericError& err) {
    CHECK(err.slice == 2);
    CHECK(err.window_index == -1);
  }
}

TEST_CASE("horizon and window validation") {
  PolymerEngine engine(16);
  TableEnvironment env(Family::gaussian);
  CHECK_THROWS_AS(
      (void)engine.partition_function(env, window_of(0, 32), 0, 0, 0.5),
      std::invalid_argument);
  CHECK_THROWS_AS(
      (void)engine.partition_function(env, window_of(-1, 4), 0, 0, 0.5),
      std::invalid_argument);
  CHECK_THROWS_AS(
      (void)engine.partition_function(env, window_of(6, 4), 0, 0, 0.5),
      std::invalid_argument);
  CHECK_THROWS_AS((void)PolymerEngine(0), std::invalid_argument);
}
