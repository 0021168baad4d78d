#include "snrb/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "snrb/error.hpp"

namespace snrb {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) fail(Errc::input, std::string(what) + " must be finite");
}

// Standardized distances of the thresholds from the mean on the straddling
// branch: lo = mu - a*sigma, hi = mu + b*sigma.
struct Straddle {
  double a;
  double b;
};

}  // namespace

Moments::Moments(double mu, double var) : mu_(mu), var_(var) {
  require_finite(mu, "mean");
  require_finite(var, "variance");
  if (!(var > 0.0)) fail(Errc::input, "variance must be strictly positive");
}

double Moments::sigma() const noexcept { return std::sqrt(var_); }

double Moments::standardize(double x) const noexcept { return (x - mu_) / sigma(); }

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi) {
  require_finite(lo, "interval lower threshold");
  require_finite(hi, "interval upper threshold");
  if (!(lo < hi)) fail(Errc::input, "interval requires lo < hi");
}

double upper_tail_bound(const Moments& m, double eta) {
  require_finite(eta, "threshold");
  if (eta < m.mu()) return 1.0;
  const double d = eta - m.mu();
  return m.var() / (m.var() + d * d);
}

CdfEnvelope cdf_envelope(const Moments& m, double eta) {
  require_finite(eta, "threshold");
  const double d = eta - m.mu();
  const double denom = m.var() + d * d;
  CdfEnvelope env{};
  env.lower = eta >= m.mu() ? d * d / denom : 0.0;
  env.upper = eta > m.mu() ? 1.0 : m.var() / denom;
  return env;
}

double outside_interval_upper_bound(const Moments& m, const Interval& iv) {
  if (!(iv.lo() < m.mu() && m.mu() < iv.hi())) return 1.0;
  const Straddle s{-m.standardize(iv.lo()), m.standardize(iv.hi())};
  const double product = s.a * s.b;
  if (product < 1.0) return 1.0;
  const double near = std::min(s.a, s.b);
  return std::max(1.0 / product, 1.0 / (1.0 + near * near));
}

double outside_interval_sharp_bound(const Moments& m, const Interval& iv) {
  if (!(iv.lo() < m.mu() && m.mu() < iv.hi())) return 1.0;
  const Straddle s{-m.standardize(iv.lo()), m.standardize(iv.hi())};
  const double product = s.a * s.b;
  if (product <= 1.0) return 1.0;

  // Three atoms at -a, mid, b. The interior mass is q = (ab - 1) / ((mid + a)(b - mid)),
  // smallest at the midpoint; the outer masses follow from the mean constraint.
  const double sum = s.a + s.b;
  const double mid = 0.5 * (s.b - s.a);
  const double inner = 4.0 * (product - 1.0) / (sum * sum);
  const double outer = 1.0 - inner;
  const double mass_hi = (outer * s.a - mid * inner) / sum;
  const double mass_lo = (outer * s.b + mid * inner) / sum;
  if (mass_hi >= 0.0 && mass_lo >= 0.0) return outer;

  const double near = std::min(s.a, s.b);
  return 1.0 / (1.0 + near * near);
}

double inside_interval_upper_bound(const Moments& m, const Interval& iv) {
  if (iv.lo() == m.mu() || iv.hi() == m.mu())
    fail(Errc::degenerate, "inside-interval bound is undefined for a threshold equal to the mean");
  if (iv.lo() < m.mu() && m.mu() < iv.hi()) return 1.0;
  const double near = std::min(std::abs(iv.lo() - m.mu()), std::abs(iv.hi() - m.mu()));
  return m.var() / (m.var() + near * near);
}

double inside_interval_lower_bound(const Moments& m, const Interval& iv) {
  if (!(iv.lo() < m.mu() && m.mu() < iv.hi())) return 0.0;
  return 1.0 - outside_interval_upper_bound(m, iv);
}

double tp_bound_from_snr(double s) {
  require_finite(s, "signal-to-noise ratio");
  if (s < 0.0) fail(Errc::input, "signal-to-noise ratio must be non-negative");
  return s / (1.0 + s);
}

}  // namespace snrb
