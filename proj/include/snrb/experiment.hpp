#pragma once

// Flat key/value experiment configuration and the runners behind the
// `parametric-sim` and `train` commands.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snrb/data_io.hpp"
#include "snrb/nn.hpp"
#include "snrb/parametric.hpp"

namespace snrb {

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view doc;
};

/// Every accepted key with its default, in documentation order.
std::span<const ConfigKey> config_keys();

class ExperimentConfig {
 public:
  ExperimentConfig();

  /// Throws Errc::unknown_key for keys outside config_keys().
  void set(std::string_view key, std::string_view value);
  const std::string& get(std::string_view key) const;

  /// Reads `key = value` lines; blank lines and lines starting with '#' are skipped.
  void load_file(const std::filesystem::path& path);

  double get_double(std::string_view key) const;
  long long get_int(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<double> get_list(std::string_view key) const;

  TrainConfig train_config() const;
  std::vector<int> hidden_layers() const;
  BernoulliProblem sim_problem() const;
  SimProtocol sim_protocol() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

LossMode parse_loss_mode(std::string_view text, EtaMode fallback);

struct PreparedData {
  Dataset train;
  Dataset val;
};

/// Loads the configured dataset (synthetic blobs or IDX files) and splits it.
PreparedData prepare_data(const ExperimentConfig& cfg);

struct TrainRun {
  LossMode mode = LossMode::ce;
  std::uint64_t seed = 0;
  std::size_t train_rows = 0;
  std::size_t val_rows = 0;
  std::vector<MetricsRecord> records;
};

TrainRun run_training(const ExperimentConfig& cfg, const EpochCallback& on_epoch = {});
SimResult run_parametric_sim(const ExperimentConfig& cfg);

/// Columns: epoch, train_loss_ce, train_loss_snr, val_accuracy.
std::string metrics_csv(const std::vector<MetricsRecord>& records);
std::string train_summary_json(const TrainRun& run);
std::string sim_result_json(const SimResult& result);

}  // namespace snrb
