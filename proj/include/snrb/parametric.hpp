#pragma once

// Linear classifiers for vectors of independent Bernoulli observations where
// class 0 has theta_i < p_i and class 1 has theta_i >= p_i coordinate-wise.

#include <cstdint>
#include <span>
#include <vector>

namespace snrb {

class BernoulliProblem {
 public:
  /// Every boundary p_i must lie strictly inside (0, 1).
  explicit BernoulliProblem(std::vector<double> p);

  const std::vector<double>& p() const noexcept { return p_; }
  std::size_t dim() const noexcept { return p_.size(); }

 private:
  std::vector<double> p_;
};

struct LinearClassifier {
  std::vector<double> weights;
  double tau = 0.0;

  double score(std::span<const std::uint8_t> x) const;
  /// Class 1 when the score exceeds tau.
  int classify(std::span<const std::uint8_t> x) const { return score(x) > tau ? 1 : 0; }
};

/// Per-coordinate closed range [lo, hi] that theta_i is drawn uniformly from.
struct ThetaRange {
  double lo;
  double hi;
};

struct SimProtocol {
  std::vector<ThetaRange> class0;
  std::vector<ThetaRange> class1;
  std::uint64_t n_trials = 100000;
  std::uint64_t calib_trials = 100000;
  std::uint64_t seed = 1;

  /// True when class 0 draws stay below p_i and class 1 draws stay at or above it.
  bool respects_boundary(const BernoulliProblem& prob) const;
};

/// class 0: theta_i ~ U(0, p_i); class 1: theta_i ~ U(p_i, min(1, factor * p_i)).
SimProtocol default_protocol(const BernoulliProblem& prob, double factor = 10.0);

/// Diagonal of the Fisher information, 1 / (theta_i (1 - theta_i)).
std::vector<double> fisher_information_bernoulli(std::span<const double> theta);

/// Weights arccos(p_i); tau is left at zero until calibrated.
LinearClassifier snr_classifier_weights(const BernoulliProblem& prob);

/// Weights -log(p_i), the plug-in likelihood-ratio score.
LinearClassifier ml_classifier_weights(const BernoulliProblem& prob);

/// Threshold maximizing accuracy on a balanced calibration sample of
/// protocol.calib_trials draws. Candidates are the midpoints between
/// consecutive achievable scores plus one threshold below and one at the
/// top of the observed range; ties go to the smallest |tau|, then smallest tau.
double calibrate_tau(const LinearClassifier& c, const BernoulliProblem& prob, const SimProtocol& protocol);

struct SimResult {
  double acc_snr;
  double acc_ml;
  double tau_snr;
  double tau_ml;
  std::uint64_t n_trials;
  std::uint64_t seed;
  /// Trials the two classifiers decided differently.
  std::uint64_t discordant;
};

/// Calibrates both classifiers, then scores them on the same paired draws.
SimResult simulate_accuracy(const BernoulliProblem& prob, const SimProtocol& protocol);

/// Accuracy of fixed classifiers on protocol.n_trials paired draws (labels
/// alternate so classes stay balanced).
struct PairedAccuracy {
  double acc_a;
  double acc_b;
  std::uint64_t discordant;
};
PairedAccuracy paired_accuracy(const LinearClassifier& a, const LinearClassifier& b,
                               const BernoulliProblem& prob, const SimProtocol& protocol,
                               std::uint64_t stream);

}  // namespace snrb
