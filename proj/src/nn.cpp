#include "snrb/nn.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "snrb/error.hpp"

namespace snrb {

namespace {

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

[[noreturn]] void diverged(int epoch, std::size_t batch, const char* what, double value) {
  std::ostringstream os;
  os << "training diverged at epoch " << epoch << ", batch " << batch << ": " << what << " = " << value;
  fail(Errc::divergence, os.str());
}

}  // namespace

MlpModel::MlpModel(std::vector<int> dims, std::uint64_t seed) : dims_(std::move(dims)) {
  if (dims_.size() < 2) fail(Errc::input, "model needs an input and an output width");
  for (int d : dims_)
    if (d < 1) fail(Errc::input, "layer widths must be positive");
  std::mt19937_64 rng(mix_seed(seed, 0x1417));
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const int in = dims_[l];
    const int out = dims_[l + 1];
    const double limit = std::sqrt(6.0 / in);
    std::uniform_real_distribution<double> init(-limit, limit);
    DenseLayer layer{Matrix(out, in), Vector::Zero(out)};
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = init(rng);
    layers_.push_back(std::move(layer));
  }
}

bool MlpModel::all_finite() const {
  for (const DenseLayer& l : layers_)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

ForwardTrace forward_trace(const MlpModel& model, const Matrix& inputs) {
  if (inputs.cols() != model.dims().front()) fail(Errc::input, "input width does not match the model");
  ForwardTrace trace;
  const auto& layers = model.layers();
  const Matrix* prev = &inputs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = *prev * layers[l].weight.transpose();
    z.rowwise() += layers[l].bias.transpose();
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    trace.outputs.push_back(std::move(z));
    prev = &trace.outputs.back();
  }
  return trace;
}

Matrix forward(const MlpModel& model, const Matrix& inputs) {
  return std::move(forward_trace(model, inputs).outputs.back());
}

Gradients Gradients::zeros_like(const MlpModel& model) {
  Gradients g;
  for (const DenseLayer& l : model.layers()) {
    g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

Gradients backward(const MlpModel& model, const Matrix& inputs, const ForwardTrace& trace, const Matrix& d_logits) {
  const auto& layers = model.layers();
  if (trace.outputs.size() != layers.size()) fail(Errc::input, "forward trace does not match the model");
  const Matrix& logits = trace.outputs.back();
  if (d_logits.rows() != logits.rows() || d_logits.cols() != logits.cols())
    fail(Errc::input, "logit gradient shape does not match the logits");

  Gradients g = Gradients::zeros_like(model);
  Matrix delta = d_logits;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix& below = l == 0 ? inputs : trace.outputs[l - 1];
    g.weight[l].noalias() = delta.transpose() * below;
    g.bias[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Matrix up = delta * layers[l].weight;
    // ReLU passes gradient where its output was positive.
    delta = (below.array() > 0.0).select(up, 0.0);
  }
  return g;
}

Gradients backward(const MlpModel& model, const Matrix& inputs, const Matrix& d_logits) {
  return backward(model, inputs, forward_trace(model, inputs), d_logits);
}

CrossEntropy cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size() || logits.rows() == 0)
    fail(Errc::input, "label count does not match logit rows");
  const double inv_rows = 1.0 / static_cast<double>(logits.rows());
  CrossEntropy ce{0.0, Matrix(logits.rows(), logits.cols())};
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int y = labels[r];
    if (y < 0 || y >= logits.cols()) fail(Errc::input, "label out of range");
    const double top = logits.row(r).maxCoeff();
    auto shifted = (logits.row(r).array() - top).exp();
    const double z = shifted.sum();
    ce.grad.row(r) = shifted / z;
    ce.loss += std::log(z) - (logits(r, y) - top);
    ce.grad(r, y) -= 1.0;
  }
  ce.loss *= inv_rows;
  ce.grad *= inv_rows;
  return ce;
}

double clip_gradient_norm(Gradients& g, double max_norm) {
  double sq = 0.0;
  for (const Matrix& w : g.weight) sq += w.squaredNorm();
  for (const Vector& b : g.bias) sq += b.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double k = max_norm / norm;
    for (Matrix& w : g.weight) w *= k;
    for (Vector& b : g.bias) b *= k;
  }
  return norm;
}

void sgd_momentum_step(MlpModel& model, const Gradients& grads, Velocity& velocity, double lr, double beta) {
  auto& layers = model.layers();
  if (grads.weight.size() != layers.size() || velocity.weight.size() != layers.size())
    fail(Errc::input, "gradient shapes do not match the model");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    velocity.weight[l] = beta * velocity.weight[l] + grads.weight[l];
    velocity.bias[l] = beta * velocity.bias[l] + grads.bias[l];
    layers[l].weight -= lr * velocity.weight[l];
    layers[l].bias -= lr * velocity.bias[l];
  }
}

const char* loss_mode_name(LossMode mode) noexcept {
  switch (mode) {
    case LossMode::ce: return "ce";
    case LossMode::ce_snr_batch: return "ce-snr-batch";
    case LossMode::ce_snr_epoch: return "ce-snr-epoch";
  }
  return "ce";
}

void TrainConfig::validate() const {
  if (!std::isfinite(lr) || !(lr > 0.0)) fail(Errc::input, "train.lr must be positive");
  if (!(momentum_beta >= 0.0 && momentum_beta < 1.0)) fail(Errc::input, "train.momentum must lie in [0, 1)");
  if (batch_size == 0) fail(Errc::input, "train.batch_size must be positive");
  if (epochs < 1) fail(Errc::input, "train.epochs must be positive");
  if (!std::isfinite(lr_decay) || !(lr_decay > 0.0)) fail(Errc::input, "train.lr_decay must be positive");
  if (lr_decay_every < 1) fail(Errc::input, "train.lr_decay_every must be positive");
  if (!std::isfinite(eta_m_mult) || eta_m_mult < 0.0) fail(Errc::input, "snr.m_mult must be non-negative");
  if (!std::isfinite(clip_norm) || clip_norm < 0.0) fail(Errc::input, "train.clip_norm must be non-negative");
  snr.validate();
}

std::size_t TrainConfig::effective_batch_size(std::size_t train_rows) const {
  std::size_t b = batch_size;
  if (train_rows < 8192) b = (train_rows + 7) / 8;
  return std::max<std::size_t>(1, std::min(b, train_rows));
}

double accuracy(const MlpModel& model, const Dataset& ds) {
  if (ds.size() == 0) fail(Errc::input, "accuracy of an empty dataset");
  const Matrix logits = forward(model, ds.inputs);
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index arg = 0;
    logits.row(r).maxCoeff(&arg);
    hits += static_cast<int>(arg) == ds.labels[static_cast<std::size_t>(r)];
  }
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

std::vector<MetricsRecord> train(MlpModel& model, const Dataset& train_set, const Dataset& val_set,
                                 const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  train_set.validate();
  val_set.validate();
  if (train_set.size() == 0 || val_set.size() == 0) fail(Errc::input, "train and validation sets must be non-empty");
  if (model.dims().back() != train_set.class_count) fail(Errc::input, "model output width must equal the class count");

  const int classes = train_set.class_count;
  const bool use_snr = cfg.loss_mode != LossMode::ce;
  const EtaMode mode = cfg.loss_mode == LossMode::ce_snr_epoch ? EtaMode::epoch : EtaMode::batch;

  std::vector<std::size_t> rows(train_set.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const BatchStream stream(std::move(rows), cfg.effective_batch_size(train_set.size()), mix_seed(cfg.seed, 0xe90c));

  Velocity velocity = Gradients::zeros_like(model);
  EtaState eta(classes, cfg.eta_m_mult, mode);
  StatsAccumulator epoch_stats(classes);

  if (use_snr) {
    // Thresholds start from a statistics pass before the first step.
    if (mode == EtaMode::batch) {
      const auto first = stream.epoch(1).front();
      const Matrix logits = forward(model, gather_rows(train_set.inputs, first));
      std::vector<int> y;
      for (std::size_t r : first) y.push_back(train_set.labels[r]);
      eta = eta_update(eta, class_conditional_stats(logits, y));
    } else {
      epoch_stats.add(forward(model, train_set.inputs), train_set.labels);
      eta = eta_update(eta, epoch_stats.finish());
      epoch_stats.reset();
    }
  }

  std::vector<MetricsRecord> records;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = cfg.lr * std::pow(cfg.lr_decay, (epoch - 1) / cfg.lr_decay_every);
    const auto batches = stream.epoch(epoch);
    double ce_sum = 0.0, snr_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Matrix x = gather_rows(train_set.inputs, batches[b]);
      std::vector<int> y;
      y.reserve(batches[b].size());
      for (std::size_t r : batches[b]) y.push_back(train_set.labels[r]);

      const ForwardTrace trace = forward_trace(model, x);
      const Matrix& logits = trace.outputs.back();
      CrossEntropy ce = cross_entropy(logits, y);
      if (!std::isfinite(ce.loss)) diverged(epoch, b, "cross entropy", ce.loss);
      Matrix grad = std::move(ce.grad);

      double snr_part = 0.0;
      if (use_snr) {
        SnrEvaluation snr = snr_loss_evaluate(logits, y, eta, cfg.snr);
        if (!std::isfinite(snr.loss)) diverged(epoch, b, "snr loss", snr.loss);
        snr_part = cfg.snr.weight * snr.loss;
        if (cfg.snr.weight != 0.0) grad += cfg.snr.weight * snr.grad;
        if (mode == EtaMode::batch)
          eta = eta_update(eta, snr.stats);
        else
          epoch_stats.add(logits, y);
      }
      ce_sum += ce.loss;
      snr_sum += snr_part;

      Gradients step = backward(model, x, trace, grad);
      if (cfg.clip_norm > 0.0) clip_gradient_norm(step, cfg.clip_norm);
      sgd_momentum_step(model, step, velocity, lr, cfg.momentum_beta);
      if (!model.all_finite()) diverged(epoch, b, "parameters", std::nan(""));
    }
    if (use_snr && mode == EtaMode::epoch) {
      eta = eta_update(eta, epoch_stats.finish());
      epoch_stats.reset();
    }

    MetricsRecord rec;
    rec.epoch = epoch;
    rec.train_loss_ce = ce_sum / static_cast<double>(batches.size());
    rec.train_loss_snr = snr_sum / static_cast<double>(batches.size());
    rec.val_accuracy = accuracy(model, val_set);
    if (use_snr) rec.eta_snapshot = eta.eta;
    if (on_epoch) on_epoch(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace snrb
