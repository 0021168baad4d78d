#pragma once

// Tightest moment-based probability bounds for a scalar random variable
// known only through its mean and variance.

namespace snrb {

/// Mean and variance of a scalar random variable. The variance must be
/// strictly positive; point masses are rejected.
class Moments {
 public:
  Moments(double mu, double var);

  double mu() const noexcept { return mu_; }
  double var() const noexcept { return var_; }
  double sigma() const noexcept;

  /// Maps x to (x - mu) / sigma.
  double standardize(double x) const noexcept;

 private:
  double mu_;
  double var_;
};

/// Closed interval [lo, hi] with lo < hi.
class Interval {
 public:
  Interval(double lo, double hi);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

struct CdfEnvelope {
  double lower;
  double upper;
};

/// sup Pr(x > eta): var / (var + (eta - mu)^2) for eta >= mu, else 1.
double upper_tail_bound(const Moments& m, double eta);

/// Feasible range of F(eta) = Pr(x <= eta) over all laws with moments m.
CdfEnvelope cdf_envelope(const Moments& m, double eta);

/// Upper bound on Pr(x <= lo or x >= hi) in the usual two-sided closed form:
/// max{var / (|lo-mu|(hi-mu)), var / (var + min distance^2)} when the
/// thresholds straddle mu and |lo-mu|(hi-mu) >= var, otherwise 1.
///
/// This expression undershoots the true supremum when the straddling
/// thresholds are moderately asymmetric (see outside_interval_sharp_bound).
double outside_interval_upper_bound(const Moments& m, const Interval& iv);

/// Exact supremum of Pr(x <= lo or x >= hi). On the straddling branch the
/// optimum is either the one-sided bound of the nearer threshold or the
/// three-atom law at {lo, (lo+hi)/2, hi}, whichever is feasible:
///   ((a-b)^2 + 4) / (a+b)^2 with a, b the standardized distances.
double outside_interval_sharp_bound(const Moments& m, const Interval& iv);

/// sup Pr(lo <= x <= hi). Throws Errc::degenerate when a threshold equals mu.
double inside_interval_upper_bound(const Moments& m, const Interval& iv);

/// Lower bound on Pr(lo <= x <= hi) obtained as 1 - outside_interval_upper_bound.
double inside_interval_lower_bound(const Moments& m, const Interval& iv);

/// Worst-case true-positive probability s / (1 + s) for a signal-to-noise ratio s.
double tp_bound_from_snr(double s);

}  // namespace snrb
