#pragma once

// Signal-to-noise-ratio loss on classifier logits.
//
// For each class n with at least two samples in the batch, let mu_n, var_n
// be the mean and unbiased variance of logit n over samples of class n, and
// mu_{i|n}, var_{i|n} the same for logit i != n. With threshold eta_n the
// pair loss is
//
//   var_n / ((mu_n - eta_n)^2 + eps) + var_{i|n} / ((eta_n - mu_{i|n})^2 + eps)
//     + lambda * (max(0, mu_{i|n} - eta_n - margin) + max(0, eta_n - mu_n + margin))
//
// with variances floored at eps. The total sums over n and i != n, divided
// by the number of pairs when normalize_pairs is set. Thresholds are
// constants inside the loss and move only through eta_update.

#include <span>
#include <vector>

#include "snrb/matrix.hpp"

namespace snrb {

struct ClassStats {
  int cls = 0;
  std::size_t count = 0;
  /// Per logit column, conditional on class `cls`; mean[cls] is mu_n.
  std::vector<double> mean;
  std::vector<double> var;
};

struct LogitClassStats {
  int num_classes = 0;
  std::vector<ClassStats> classes;  // ascending by cls, only classes with count >= 2

  bool empty() const noexcept { return classes.empty(); }
  const ClassStats* find(int cls) const noexcept;
};

LogitClassStats class_conditional_stats(const Matrix& logits, std::span<const int> labels);

/// Streams batches and yields the statistics of everything seen, as if all
/// rows had been passed to class_conditional_stats at once.
class StatsAccumulator {
 public:
  explicit StatsAccumulator(int num_classes);

  void add(const Matrix& logits, std::span<const int> labels);
  LogitClassStats finish() const;
  void reset();

 private:
  int num_classes_;
  std::vector<std::size_t> count_;
  std::vector<std::vector<double>> mean_;
  std::vector<std::vector<double>> m2_;
};

struct SnrLossConfig {
  double lambda = 1.0;
  double margin = 0.0;
  double eps = 1e-6;
  double weight = 1.0;
  bool normalize_pairs = true;

  void validate() const;
};

enum class EtaMode { batch, epoch };

struct EtaState {
  EtaState() = default;
  EtaState(int num_classes, double m_mult, EtaMode mode);

  std::vector<double> eta;
  std::vector<unsigned char> has_eta;  // per class, set once the class has been updated
  double m_mult = 4.0;
  EtaMode mode = EtaMode::batch;
  bool initialized = false;
};

double snr_pair_loss(double mu_n, double var_n, double mu_in, double var_in, double eta_n,
                     const SnrLossConfig& cfg);

double snr_total_loss(const LogitClassStats& stats, const EtaState& eta, const SnrLossConfig& cfg);

/// d snr_total_loss / d logits, through both the sample means and the
/// unbiased sample variances, with eta held fixed.
Matrix snr_loss_backward(const Matrix& logits, std::span<const int> labels, const EtaState& eta,
                         const SnrLossConfig& cfg);

struct SnrEvaluation {
  double loss = 0.0;
  Matrix grad;
  LogitClassStats stats;
};

/// Loss, gradient and the batch statistics from one pass.
SnrEvaluation snr_loss_evaluate(const Matrix& logits, std::span<const int> labels, const EtaState& eta,
                                const SnrLossConfig& cfg);

/// eta_n <- mu_n - m_mult * sqrt(var_n) for every class present in stats.
EtaState eta_update(EtaState state, const LogitClassStats& stats);

}  // namespace snrb
