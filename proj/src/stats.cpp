#include "dpre/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dpre/gaussian.hpp"

namespace dpre {

double pairwise_sum(const double* a, size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += a[i];
    return s;
  }
  const size_t h = n / 2;
  return pairwise_sum(a, h) + pairwise_sum(a + h, n - h);
}

double pairwise_sum(const std::vector<double>& a) { return pairwise_sum(a.data(), a.size()); }

double mean(const std::vector<double>& a) {
  if (a.empty()) throw std::invalid_argument("mean: empty sample");
  return pairwise_sum(a) / double(a.size());
}

double median(std::vector<double> a) {
  if (a.empty()) throw std::invalid_argument("median: empty sample");
  std::sort(a.begin(), a.end());
  const size_t n = a.size();
  return (n % 2 == 1) ? a[n / 2] : 0.5 * (a[n / 2 - 1] + a[n / 2]);
}

namespace {

// int_{u1}^{u2} q(u) du for the target quantile q, via the Gaussian
// partial expectation int z dPhi = phi(z1) - phi(z2).
double quantile_integral(double mu, double sigma, double u1, double u2, double phi1,
                         double phi2) {
  return mu * (u2 - u1) + sigma * (phi1 - phi2);
}

}  // namespace

double wasserstein1_to_gaussian(std::vector<double> sample, const GaussianTarget& target) {
  if (sample.empty()) throw std::invalid_argument("wasserstein1_to_gaussian: empty sample");
  if (!(target.variance > 0.0))
    throw std::invalid_argument("wasserstein1_to_gaussian: variance must be > 0");
  for (double v : sample) {
    if (!std::isfinite(v))
      throw std::invalid_argument("wasserstein1_to_gaussian: sample must be finite");
  }
  std::sort(sample.begin(), sample.end());
  const size_t n = sample.size();
  const double mu = target.mean;
  const double sigma = std::sqrt(target.variance);
  double dist = 0.0;
  double u1 = 0.0;
  double phi1 = 0.0;  // phi(quantile) vanishes at u = 0 and u = 1
  for (size_t i = 1; i <= n; ++i) {
    const double u2 = double(i) / double(n);
    const double phi2 = (i == n) ? 0.0 : normal_pdf(normal_quantile(u2));
    const double y = sample[i - 1];
    const double zs = (y - mu) / sigma;
    const double us = normal_cdf(zs);
    if (us <= u1) {
      dist += quantile_integral(mu, sigma, u1, u2, phi1, phi2) - y * (u2 - u1);
    } else if (us >= u2) {
      dist += y * (u2 - u1) - quantile_integral(mu, sigma, u1, u2, phi1, phi2);
    } else {
      const double phis = normal_pdf(zs);
      dist += y * (us - u1) - quantile_integral(mu, sigma, u1, us, phi1, phis);
      dist += quantile_integral(mu, sigma, us, u2, phis, phi2) - y * (u2 - us);
    }
    u1 = u2;
    phi1 = phi2;
  }
  return dist;
}

double wasserstein1_to_gaussian(const EmpiricalSample& sample, const GaussianTarget& target) {
  return wasserstein1_to_gaussian(sample.values, target);
}

MomentEstimate empirical_moment(const std::vector<double>& values, double p, bool centered) {
  if (values.empty()) throw std::invalid_argument("empirical_moment: empty sample");
  if (!(p >= 1.0)) throw std::invalid_argument("empirical_moment: need p >= 1");
  const size_t n = values.size();
  const double c = centered ? mean(values) : 0.0;
  std::vector<double> terms(n);
  for (size_t i = 0; i < n; ++i) terms[i] = std::pow(std::fabs(values[i] - c), p);
  MomentEstimate est;
  est.n = n;
  est.value = pairwise_sum(terms) / double(n);
  double ss = 0.0;
  for (double t : terms) ss += (t - est.value) * (t - est.value);
  est.se = (n > 1) ? std::sqrt(ss / (double(n) * double(n - 1))) : 0.0;
  return est;
}

double taylor_gap(const std::vector<double>& u_values) {
  double lhs = 0.0, rhs = 0.0;
  for (double u : u_values) {
    if (!(1.0 + u > 0.0))
      throw std::domain_error("taylor_gap: factor 1+u must be positive (engine invariant)");
    lhs += std::log1p(u);
    rhs += u - 0.5 * u * u;
  }
  return std::fabs(lhs - rhs);
}

double truncated_variance_sum(const std::vector<double>& u_values, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("truncated_variance_sum: alpha must be > 0");
  if (u_values.empty()) return 0.0;
  const double cut = alpha / double(u_values.size());
  double s = 0.0;
  for (double u : u_values) {
    const double u2 = u * u;
    if (u2 <= cut) s += u2;
  }
  return s;
}

GapEstimate l2_decoupling_gap(const std::vector<double>& w, const std::vector<double>& prod_z) {
  if (w.empty() || w.size() != prod_z.size())
    throw std::invalid_argument("l2_decoupling_gap: need non-empty paired samples");
  const size_t n = w.size();
  std::vector<double> d(n);
  for (size_t i = 0; i < n; ++i) {
    const double diff = w[i] - prod_z[i];
    d[i] = diff * diff;
  }
  GapEstimate est;
  est.n = n;
  const double total = pairwise_sum(d);
  est.gap = total / double(n);
  if (n > 1) {
    // Leave-one-out estimates theta_(i) = (S - d_i)/(n-1).
    double ss = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double loo = (total - d[i]) / double(n - 1);
      ss += (loo - est.gap) * (loo - est.gap);
    }
    est.se = std::sqrt(ss * double(n - 1) / double(n));
  }
  return est;
}

CltReport clt_report(const std::vector<double>& log_w, double beta_hat) {
  if (log_w.empty()) throw std::invalid_argument("clt_report: empty sample");
  if (!(beta_hat > 0.0 && beta_hat < 1.0))
    throw std::invalid_argument(
        "clt_report: beta_hat must lie in (0, 1); supercritical runs use the decay report");
  const double lambda2 = std::log(1.0 / (1.0 - beta_hat * beta_hat));
  CltReport r;
  r.n = log_w.size();
  r.target_mean = -0.5 * lambda2;
  r.target_variance = lambda2;
  r.mean = mean(log_w);
  double ss = 0.0;
  for (double v : log_w) ss += (v - r.mean) * (v - r.mean);
  r.variance = (r.n > 1) ? ss / double(r.n - 1) : 0.0;
  r.se_mean = (r.n > 1) ? std::sqrt(r.variance / double(r.n)) : 0.0;
  r.w1 = wasserstein1_to_gaussian(log_w, GaussianTarget{r.target_mean, r.target_variance});
  return r;
}

}  // namespace dpre
