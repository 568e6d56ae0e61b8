#include "dpre/disorder.hpp"

#include <cmath>
#include <stdexcept>

namespace dpre {

std::string family_name(Family f) {
  return f == Family::gaussian ? "gaussian" : "rademacher";
}

Family family_from_name(const std::string& name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "rademacher") return Family::rademacher;
  throw std::invalid_argument("unknown disorder family: " + name);
}

double sample_site(const DisorderSpec& spec, int64_t n, int64_t x1, int64_t x2) {
  const int32_t u = int32_t(x1 + x2);
  const int32_t v = int32_t(x1 - x2);
  if (spec.family == Family::rademacher) {
    const Philox4 b = field_block(spec.master_seed, spec.replicate, uint32_t(n), u, v >> 7);
    return double(rademacher_sign_from_block(b, v & 127));
  }
  const Philox4 b = field_block(spec.master_seed, spec.replicate, uint32_t(n), u, v >> 2);
  return gaussian_from_block(b, (v >> 1) & 1);
}

namespace {

// log cosh without overflow: log cosh b = |b| + log1p(e^{-2|b|}) - log 2.
double log_cosh(double b) {
  const double a = std::fabs(b);
  return a + std::log1p(std::exp(-2.0 * a)) - 0.6931471805599453094;
}

}  // namespace

CumulantPair cumulants(Family family, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("cumulants: beta must be > 0");
  CumulantPair c;
  if (family == Family::gaussian) {
    c.lambda = 0.5 * beta * beta;
    c.lambda2 = beta * beta;
  } else {
    c.lambda = log_cosh(beta);
    c.lambda2 = log_cosh(2.0 * beta) - 2.0 * c.lambda;
  }
  c.big_lambda = std::expm1(c.lambda2);
  return c;
}

}  // namespace dpre
