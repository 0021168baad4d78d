#include "snrb/snr_loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "snrb/error.hpp"

namespace snrb {

namespace {

void check_batch(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() == 0 || logits.cols() == 0) fail(Errc::input, "logit matrix is empty");
  if (static_cast<std::size_t>(logits.rows()) != labels.size())
    fail(Errc::input, "label count does not match logit rows");
  for (int y : labels)
    if (y < 0 || y >= logits.cols()) fail(Errc::input, "label out of range");
}

bool uses_class(const EtaState& eta, int cls) {
  return static_cast<std::size_t>(cls) < eta.has_eta.size() && eta.has_eta[cls];
}

struct PairTerms {
  double value;
  double d_mu_n;
  double d_var_n;
  double d_mu_i;
  double d_var_i;
};

PairTerms pair_terms(double mu_n, double var_n, double mu_i, double var_i, double eta, const SnrLossConfig& cfg) {
  const double vn = std::max(var_n, cfg.eps);
  const double vi = std::max(var_i, cfg.eps);
  const double dn = mu_n - eta;
  const double di = eta - mu_i;
  const double den_n = dn * dn + cfg.eps;
  const double den_i = di * di + cfg.eps;
  const double pen_i = mu_i - eta - cfg.margin;
  const double pen_n = eta - mu_n + cfg.margin;

  PairTerms t{};
  t.value = vn / den_n + vi / den_i + cfg.lambda * (std::max(0.0, pen_i) + std::max(0.0, pen_n));
  t.d_mu_n = -2.0 * vn * dn / (den_n * den_n) - (pen_n > 0.0 ? cfg.lambda : 0.0);
  t.d_var_n = var_n > cfg.eps ? 1.0 / den_n : 0.0;
  t.d_mu_i = 2.0 * vi * di / (den_i * den_i) + (pen_i > 0.0 ? cfg.lambda : 0.0);
  t.d_var_i = var_i > cfg.eps ? 1.0 / den_i : 0.0;
  return t;
}

std::size_t pair_count(const LogitClassStats& stats, const EtaState& eta) {
  std::size_t active = 0;
  for (const ClassStats& c : stats.classes)
    if (uses_class(eta, c.cls)) ++active;
  return active * static_cast<std::size_t>(stats.num_classes - 1);
}

}  // namespace

const ClassStats* LogitClassStats::find(int cls) const noexcept {
  for (const ClassStats& c : classes)
    if (c.cls == cls) return &c;
  return nullptr;
}

LogitClassStats class_conditional_stats(const Matrix& logits, std::span<const int> labels) {
  check_batch(logits, labels);
  StatsAccumulator acc(static_cast<int>(logits.cols()));
  acc.add(logits, labels);
  return acc.finish();
}

StatsAccumulator::StatsAccumulator(int num_classes) : num_classes_(num_classes) {
  if (num_classes < 2) fail(Errc::input, "need at least two classes");
  reset();
}

void StatsAccumulator::reset() {
  count_.assign(num_classes_, 0);
  mean_.assign(num_classes_, std::vector<double>(num_classes_, 0.0));
  m2_.assign(num_classes_, std::vector<double>(num_classes_, 0.0));
}

void StatsAccumulator::add(const Matrix& logits, std::span<const int> labels) {
  check_batch(logits, labels);
  if (logits.cols() != num_classes_) fail(Errc::input, "logit width does not match class count");

  // Two-pass statistics of this batch per class, then Chan's merge into the running totals.
  std::vector<std::size_t> n(num_classes_, 0);
  std::vector<std::vector<double>> mean(num_classes_, std::vector<double>(num_classes_, 0.0));
  std::vector<std::vector<double>> m2(num_classes_, std::vector<double>(num_classes_, 0.0));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int y = labels[r];
    ++n[y];
    for (int j = 0; j < num_classes_; ++j) mean[y][j] += logits(r, j);
  }
  for (int c = 0; c < num_classes_; ++c)
    if (n[c] > 0)
      for (double& v : mean[c]) v /= static_cast<double>(n[c]);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int y = labels[r];
    for (int j = 0; j < num_classes_; ++j) {
      const double d = logits(r, j) - mean[y][j];
      m2[y][j] += d * d;
    }
  }

  for (int c = 0; c < num_classes_; ++c) {
    if (n[c] == 0) continue;
    if (count_[c] == 0) {
      count_[c] = n[c];
      mean_[c] = mean[c];
      m2_[c] = m2[c];
      continue;
    }
    const double na = static_cast<double>(count_[c]);
    const double nb = static_cast<double>(n[c]);
    const double total = na + nb;
    for (int j = 0; j < num_classes_; ++j) {
      const double delta = mean[c][j] - mean_[c][j];
      mean_[c][j] += delta * nb / total;
      m2_[c][j] += m2[c][j] + delta * delta * na * nb / total;
    }
    count_[c] += n[c];
  }
}

LogitClassStats StatsAccumulator::finish() const {
  LogitClassStats out;
  out.num_classes = num_classes_;
  for (int c = 0; c < num_classes_; ++c) {
    if (count_[c] < 2) continue;
    ClassStats s;
    s.cls = c;
    s.count = count_[c];
    s.mean = mean_[c];
    s.var.resize(num_classes_);
    for (int j = 0; j < num_classes_; ++j) s.var[j] = m2_[c][j] / static_cast<double>(count_[c] - 1);
    out.classes.push_back(std::move(s));
  }
  return out;
}

void SnrLossConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) fail(Errc::input, "snr.lambda must be a finite non-negative number");
  if (!std::isfinite(margin) || margin < 0.0) fail(Errc::input, "snr.margin must be a finite non-negative number");
  if (!std::isfinite(eps) || !(eps > 0.0)) fail(Errc::input, "snr.eps must be a finite positive number");
  if (!std::isfinite(weight) || weight < 0.0) fail(Errc::input, "snr.weight must be a finite non-negative number");
}

EtaState::EtaState(int num_classes, double m_mult_, EtaMode mode_)
    : eta(num_classes, 0.0), has_eta(num_classes, 0), m_mult(m_mult_), mode(mode_) {
  if (num_classes < 2) fail(Errc::input, "need at least two classes");
  if (!std::isfinite(m_mult_) || m_mult_ < 0.0) fail(Errc::input, "snr.m_mult must be a finite non-negative number");
}

double snr_pair_loss(double mu_n, double var_n, double mu_in, double var_in, double eta_n,
                     const SnrLossConfig& cfg) {
  return pair_terms(mu_n, var_n, mu_in, var_in, eta_n, cfg).value;
}

double snr_total_loss(const LogitClassStats& stats, const EtaState& eta, const SnrLossConfig& cfg) {
  if (!eta.initialized) fail(Errc::input, "thresholds must be initialized before evaluating the loss");
  const std::size_t pairs = pair_count(stats, eta);
  if (pairs == 0) return 0.0;
  double total = 0.0;
  for (const ClassStats& c : stats.classes) {
    if (!uses_class(eta, c.cls)) continue;
    const double e = eta.eta[c.cls];
    for (int i = 0; i < stats.num_classes; ++i) {
      if (i == c.cls) continue;
      total += snr_pair_loss(c.mean[c.cls], c.var[c.cls], c.mean[i], c.var[i], e, cfg);
    }
  }
  return cfg.normalize_pairs ? total / static_cast<double>(pairs) : total;
}

SnrEvaluation snr_loss_evaluate(const Matrix& logits, std::span<const int> labels, const EtaState& eta,
                                const SnrLossConfig& cfg) {
  if (!eta.initialized) fail(Errc::input, "thresholds must be initialized before evaluating the loss");
  SnrEvaluation out;
  out.stats = class_conditional_stats(logits, labels);
  out.grad = Matrix::Zero(logits.rows(), logits.cols());
  const int k = out.stats.num_classes;
  const std::size_t pairs = pair_count(out.stats, eta);
  if (pairs == 0) return out;
  const double scale = cfg.normalize_pairs ? 1.0 / static_cast<double>(pairs) : 1.0;

  // Per class: loss sensitivity to each column's conditional mean and variance.
  std::vector<std::vector<double>> g_mean(k), g_var(k);
  for (const ClassStats& c : out.stats.classes) {
    if (!uses_class(eta, c.cls)) continue;
    const int n = c.cls;
    auto& gm = g_mean[n];
    auto& gv = g_var[n];
    gm.assign(k, 0.0);
    gv.assign(k, 0.0);
    for (int i = 0; i < k; ++i) {
      if (i == n) continue;
      const PairTerms t = pair_terms(c.mean[n], c.var[n], c.mean[i], c.var[i], eta.eta[n], cfg);
      out.loss += t.value;
      gm[n] += t.d_mu_n;
      gv[n] += t.d_var_n;
      gm[i] += t.d_mu_i;
      gv[i] += t.d_var_i;
    }
  }
  out.loss *= scale;

  // d mean / d x_r = 1/N, d var / d x_r = 2 (x_r - mean) / (N - 1).
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int y = labels[r];
    if (g_mean[y].empty()) continue;
    const ClassStats& c = *out.stats.find(y);
    const double inv_n = 1.0 / static_cast<double>(c.count);
    const double inv_n1 = 2.0 / static_cast<double>(c.count - 1);
    for (int j = 0; j < k; ++j)
      out.grad(r, j) = scale * (g_mean[y][j] * inv_n + g_var[y][j] * inv_n1 * (logits(r, j) - c.mean[j]));
  }
  return out;
}

Matrix snr_loss_backward(const Matrix& logits, std::span<const int> labels, const EtaState& eta,
                         const SnrLossConfig& cfg) {
  return snr_loss_evaluate(logits, labels, eta, cfg).grad;
}

EtaState eta_update(EtaState state, const LogitClassStats& stats) {
  for (const ClassStats& c : stats.classes) {
    if (static_cast<std::size_t>(c.cls) >= state.eta.size()) fail(Errc::input, "statistics cover more classes than thresholds");
    state.eta[c.cls] = c.mean[c.cls] - state.m_mult * std::sqrt(c.var[c.cls]);
    state.has_eta[c.cls] = 1;
  }
  if (!stats.empty()) state.initialized = true;
  return state;
}

}  // namespace snrb
