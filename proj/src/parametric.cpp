#include "snrb/parametric.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "snrb/error.hpp"

namespace snrb {

namespace {

constexpr std::uint64_t kCalibrationStream = 0;
constexpr std::uint64_t kEvaluationStream = 1;

std::uint64_t mix(std::uint64_t v) {
  v += 0x9e3779b97f4a7c15ULL;
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return v ^ (v >> 31);
}

// Independent generator per (seed, stream, trial) so trials can be drawn in any order.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial) {
  return std::mt19937_64(mix(mix(mix(seed) ^ stream) ^ trial));
}

void validate(const SimProtocol& protocol, const BernoulliProblem& prob) {
  auto check = [&](const std::vector<ThetaRange>& ranges, const char* which) {
    if (ranges.size() != prob.dim())
      fail(Errc::input, std::string(which) + " theta ranges must match the problem dimension");
    for (const ThetaRange& r : ranges)
      if (!(r.lo >= 0.0 && r.lo <= r.hi && r.hi <= 1.0))
        fail(Errc::input, std::string(which) + " theta ranges must satisfy 0 <= lo <= hi <= 1");
  };
  check(protocol.class0, "class 0");
  check(protocol.class1, "class 1");
}

// One labelled observation vector; labels alternate 0, 1, 0, ... by trial index.
int draw_trial(const BernoulliProblem& prob, const SimProtocol& protocol, std::uint64_t stream,
               std::uint64_t trial, std::vector<std::uint8_t>& x) {
  const int label = static_cast<int>(trial % 2);
  const auto& ranges = label == 0 ? protocol.class0 : protocol.class1;
  auto rng = trial_rng(protocol.seed, stream, trial);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  x.resize(prob.dim());
  for (std::size_t i = 0; i < prob.dim(); ++i) {
    const double theta = ranges[i].lo + (ranges[i].hi - ranges[i].lo) * unit(rng);
    x[i] = unit(rng) < theta ? 1 : 0;
  }
  return label;
}

}  // namespace

BernoulliProblem::BernoulliProblem(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) fail(Errc::input, "Bernoulli problem needs at least one coordinate");
  for (double v : p_)
    if (!(v > 0.0 && v < 1.0)) fail(Errc::input, "class boundaries p_i must lie in (0, 1)");
}

double LinearClassifier::score(std::span<const std::uint8_t> x) const {
  if (x.size() != weights.size()) fail(Errc::input, "observation length does not match classifier");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i]) s += weights[i];
  return s;
}

bool SimProtocol::respects_boundary(const BernoulliProblem& prob) const {
  if (class0.size() != prob.dim() || class1.size() != prob.dim()) return false;
  for (std::size_t i = 0; i < prob.dim(); ++i) {
    if (!(class0[i].hi <= prob.p()[i])) return false;
    if (!(class1[i].lo >= prob.p()[i])) return false;
  }
  return true;
}

SimProtocol default_protocol(const BernoulliProblem& prob, double factor) {
  if (!(factor > 1.0)) fail(Errc::input, "class 1 range factor must exceed 1");
  SimProtocol protocol;
  for (double p : prob.p()) {
    protocol.class0.push_back({0.0, p});
    protocol.class1.push_back({p, std::min(1.0, factor * p)});
  }
  return protocol;
}

std::vector<double> fisher_information_bernoulli(std::span<const double> theta) {
  std::vector<double> info;
  info.reserve(theta.size());
  for (double t : theta) {
    if (!std::isfinite(t) || t < 0.0 || t > 1.0) fail(Errc::input, "theta must lie in [0, 1]");
    if (t == 0.0 || t == 1.0) fail(Errc::singular, "Fisher information diverges at theta in {0, 1}");
    info.push_back(1.0 / (t * (1.0 - t)));
  }
  return info;
}

LinearClassifier snr_classifier_weights(const BernoulliProblem& prob) {
  LinearClassifier c;
  for (double p : prob.p()) c.weights.push_back(std::acos(p));
  return c;
}

LinearClassifier ml_classifier_weights(const BernoulliProblem& prob) {
  LinearClassifier c;
  for (double p : prob.p()) c.weights.push_back(-std::log(p));
  return c;
}

double calibrate_tau(const LinearClassifier& c, const BernoulliProblem& prob, const SimProtocol& protocol) {
  validate(protocol, prob);
  if (protocol.calib_trials < 2) fail(Errc::input, "calibration needs at least two trials");

  struct Scored {
    double score;
    int label;
  };
  std::vector<Scored> sample;
  sample.reserve(protocol.calib_trials);
  std::vector<std::uint8_t> x;
  for (std::uint64_t t = 0; t < protocol.calib_trials; ++t) {
    const int label = draw_trial(prob, protocol, kCalibrationStream, t, x);
    sample.push_back({c.score(x), label});
  }
  std::sort(sample.begin(), sample.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });

  // Group by distinct score; cut position g predicts class 1 for groups >= g.
  std::vector<double> level;
  std::vector<std::uint64_t> zeros, ones;
  for (const Scored& s : sample) {
    if (level.empty() || s.score != level.back()) {
      level.push_back(s.score);
      zeros.push_back(0);
      ones.push_back(0);
    }
    (s.label == 0 ? zeros.back() : ones.back()) += 1;
  }
  std::uint64_t total_ones = 0;
  for (auto v : ones) total_ones += v;

  const std::size_t groups = level.size();
  std::uint64_t below_zeros = 0, below_ones = 0;
  std::uint64_t best_correct = 0;
  double best_tau = 0.0;
  bool have = false;
  for (std::size_t cut = 0; cut <= groups; ++cut) {
    if (cut > 0) {
      below_zeros += zeros[cut - 1];
      below_ones += ones[cut - 1];
    }
    double tau;
    if (cut == 0)
      tau = level.front() - 1.0;
    else if (cut == groups)
      tau = level.back();
    else
      tau = 0.5 * (level[cut - 1] + level[cut]);
    const std::uint64_t correct = below_zeros + (total_ones - below_ones);
    const bool better = !have || correct > best_correct ||
                        (correct == best_correct &&
                         (std::abs(tau) < std::abs(best_tau) ||
                          (std::abs(tau) == std::abs(best_tau) && tau < best_tau)));
    if (better) {
      best_correct = correct;
      best_tau = tau;
      have = true;
    }
  }
  return best_tau;
}

PairedAccuracy paired_accuracy(const LinearClassifier& a, const LinearClassifier& b,
                               const BernoulliProblem& prob, const SimProtocol& protocol,
                               std::uint64_t stream) {
  validate(protocol, prob);
  if (protocol.n_trials == 0) fail(Errc::input, "simulation needs at least one trial");
  std::uint64_t correct_a = 0, correct_b = 0, discordant = 0;
  std::vector<std::uint8_t> x;
  for (std::uint64_t t = 0; t < protocol.n_trials; ++t) {
    const int label = draw_trial(prob, protocol, stream, t, x);
    const int da = a.classify(x);
    const int db = b.classify(x);
    correct_a += da == label;
    correct_b += db == label;
    discordant += da != db;
  }
  const double n = static_cast<double>(protocol.n_trials);
  return {static_cast<double>(correct_a) / n, static_cast<double>(correct_b) / n, discordant};
}

SimResult simulate_accuracy(const BernoulliProblem& prob, const SimProtocol& protocol) {
  if (protocol.n_trials < 10000) fail(Errc::input, "simulation needs at least 1e4 trials");
  LinearClassifier snr = snr_classifier_weights(prob);
  LinearClassifier ml = ml_classifier_weights(prob);
  snr.tau = calibrate_tau(snr, prob, protocol);
  ml.tau = calibrate_tau(ml, prob, protocol);
  const PairedAccuracy acc = paired_accuracy(snr, ml, prob, protocol, kEvaluationStream);
  return {acc.acc_a, acc.acc_b, snr.tau, ml.tau, protocol.n_trials, protocol.seed, acc.discordant};
}

}  // namespace snrb
