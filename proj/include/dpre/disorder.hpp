#pragma once

#include <cstdint>
#include <string>

#include "dpre/gaussian.hpp"
#include "dpre/philox.hpp"

namespace dpre {

enum class Family { gaussian, rademacher };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

// Addressing scheme for the i.i.d. field omega(n, x): one Philox block
// per (n, u, v-block, replicate) with the master seed as key, where
// (u, v) = (x1+x2, x1-x2) are rotated lattice coordinates. A block
// serves 128 consecutive v values for the Rademacher family (one sign
// bit each) and 2 consecutive even v values for the Gaussian family
// (64 uniform bits each, mapped through the inverse normal CDF).
// The same extraction runs in sample_site and in the engine's row
// fill, so both see the identical field bit-for-bit.
struct DisorderSpec {
  Family family = Family::gaussian;
  uint64_t master_seed = 0;
  uint32_t replicate = 0;
};

inline Philox4 field_block(uint64_t master_seed, uint32_t replicate, uint32_t n,
                           int32_t u, int32_t v_block) {
  Philox4 ctr{{n, uint32_t(u), uint32_t(v_block), replicate}};
  return philox4x32_10(ctr, uint32_t(master_seed), uint32_t(master_seed >> 32));
}

inline double gaussian_from_block(const Philox4& b, int slot) {
  const uint64_t bits = (uint64_t(b.x[2 * slot]) << 32) | b.x[2 * slot + 1];
  const double u01 = (double((bits >> 11)) + 0.5) * 0x1p-53;
  return normal_quantile(u01);
}

inline int rademacher_sign_from_block(const Philox4& b, int j) {
  return int((b.x[j >> 5] >> (j & 31)) & 1u) * 2 - 1;
}

// Standardized variate omega(n, x) for the replicate's environment.
// Pure function of its arguments; defined for every integer site.
double sample_site(const DisorderSpec& spec, int64_t n, int64_t x1, int64_t x2);

// lambda(beta)  = log E[e^{beta omega}]
// lambda2(beta) = lambda(2 beta) - 2 lambda(beta)
// big_lambda    = e^{lambda2} - 1, the per-collision weight in second
//                 moment expansions.
struct CumulantPair {
  double lambda = 0.0;
  double lambda2 = 0.0;
  double big_lambda = 0.0;
};

CumulantPair cumulants(Family family, double beta);

}  // namespace dpre
