#pragma once

// Fully connected ReLU network with hand-written reverse mode and
// classical momentum SGD, plus the training loop comparing cross entropy
// with cross entropy + SNR loss.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "snrb/data_io.hpp"
#include "snrb/matrix.hpp"
#include "snrb/snr_loss.hpp"

namespace snrb {

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

class MlpModel {
 public:
  /// dims = {input, hidden..., classes}; fan-in scaled uniform init, zero biases.
  MlpModel(std::vector<int> dims, std::uint64_t seed);

  const std::vector<int>& dims() const noexcept { return dims_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  bool all_finite() const;

 private:
  std::vector<int> dims_;
  std::vector<DenseLayer> layers_;
};

/// Post-activation outputs of every layer; the last entry is the logits.
struct ForwardTrace {
  std::vector<Matrix> outputs;
};

ForwardTrace forward_trace(const MlpModel& model, const Matrix& inputs);
Matrix forward(const MlpModel& model, const Matrix& inputs);

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  static Gradients zeros_like(const MlpModel& model);
};

Gradients backward(const MlpModel& model, const Matrix& inputs, const ForwardTrace& trace, const Matrix& d_logits);
Gradients backward(const MlpModel& model, const Matrix& inputs, const Matrix& d_logits);

struct CrossEntropy {
  double loss;  // mean over rows
  Matrix grad;  // (softmax - onehot) / rows
};

CrossEntropy cross_entropy(const Matrix& logits, std::span<const int> labels);

using Velocity = Gradients;

/// Scales g in place so its global L2 norm is at most max_norm; returns the norm before scaling.
double clip_gradient_norm(Gradients& g, double max_norm);

/// v <- beta v + g; theta <- theta - lr v.
void sgd_momentum_step(MlpModel& model, const Gradients& grads, Velocity& velocity, double lr, double beta);

enum class LossMode { ce, ce_snr_batch, ce_snr_epoch };

const char* loss_mode_name(LossMode mode) noexcept;

struct TrainConfig {
  double lr = 0.05;
  double momentum_beta = 0.9;
  std::size_t batch_size = 1024;
  int epochs = 20;
  double lr_decay = 0.5;
  int lr_decay_every = 10;
  std::uint64_t seed = 1;
  LossMode loss_mode = LossMode::ce;
  SnrLossConfig snr;
  double eta_m_mult = 4.0;
  /// Rescales the parameter gradient to at most this global L2 norm; 0 disables.
  double clip_norm = 0.0;

  void validate() const;
  /// Batch size actually used: ceil(n/8) below 8192 training rows, never above n.
  std::size_t effective_batch_size(std::size_t train_rows) const;
};

struct MetricsRecord {
  int epoch = 0;
  double train_loss_ce = 0.0;
  double train_loss_snr = 0.0;  // weighted SNR contribution to the objective
  double val_accuracy = 0.0;
  std::vector<double> eta_snapshot;
};

double accuracy(const MlpModel& model, const Dataset& ds);

using EpochCallback = std::function<void(const MetricsRecord&)>;

/// Runs cfg.epochs epochs and returns one record per epoch. Throws
/// Errc::divergence on a non-finite loss or parameter.
std::vector<MetricsRecord> train(MlpModel& model, const Dataset& train_set, const Dataset& val_set,
                                 const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace snrb
