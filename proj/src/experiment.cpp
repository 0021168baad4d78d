#include "snrb/experiment.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "snrb/error.hpp"

namespace snrb {

namespace {

constexpr std::array<ConfigKey, 36> kKeys{{
    {"seed", "1", "master seed for data, initialization, batching and simulation"},
    {"dataset", "synth", "training data: synth | mnist"},
    {"data.images", "", "IDX image file (optionally .gz) for dataset=mnist"},
    {"data.labels", "", "IDX label file (optionally .gz) for dataset=mnist"},
    {"data.val_fraction", "0.2", "share of samples held out for validation"},
    {"data.limit", "0", "use only the first N samples (0 = all)"},
    {"synth.classes", "10", "number of synthetic blobs"},
    {"synth.dim", "32", "synthetic feature dimension"},
    {"synth.samples_per_class", "500", "samples drawn per blob"},
    {"synth.separation", "6", "minimum distance between blob centers"},
    {"model.hidden", "256,128", "hidden layer widths, comma separated"},
    {"train.loss", "ce", "ce | ce-snr | ce-snr-batch | ce-snr-epoch"},
    {"train.lr", "0.05", "learning rate"},
    {"train.momentum", "0.9", "momentum coefficient beta"},
    {"train.batch_size", "1024", "batch size (ceil(n/8) below 8192 training rows)"},
    {"train.epochs", "20", "number of epochs"},
    {"train.lr_decay", "0.5", "learning-rate decay factor"},
    {"train.lr_decay_every", "10", "epochs between learning-rate decays"},
    {"train.clip_norm", "1", "clip the global gradient norm to this value (0 = off)"},
    {"snr.lambda", "1", "penalty multiplier on threshold violations"},
    {"snr.margin", "0", "margin inside the penalty terms"},
    {"snr.eps", "1e-6", "floor on variances and squared distances"},
    {"snr.weight", "1", "weight of the SNR term added to cross entropy"},
    {"snr.m_mult", "4", "threshold offset in standard deviations: eta = mean - m_mult * sd"},
    {"snr.mode", "batch", "threshold update cadence for train.loss=ce-snr: batch | epoch"},
    {"snr.normalize_pairs", "true", "divide the pair sum by the number of pairs"},
    {"sim.p", "0.001,0.001,0.001,0.001,0.1,0.1,0.1,0.1,0.1,0.1", "per-coordinate class boundaries p_i"},
    {"sim.class1_factor", "10", "class 1 draws theta_i from U(p_i, min(1, factor * p_i))"},
    {"sim.theta0", "", "override class 0 theta ranges: lo:hi per coordinate, comma separated"},
    {"sim.theta1", "", "override class 1 theta ranges: lo:hi per coordinate, comma separated"},
    {"sim.trials", "100000", "paired evaluation trials"},
    {"sim.calib_trials", "100000", "trials used to calibrate each threshold"},
    {"out.csv", "", "per-epoch metrics CSV path (train)"},
    {"out.summary", "", "summary JSON path (train)"},
    {"out.json", "", "result JSON path (parametric-sim); stdout always receives it"},
    {"bounds.step", "0", "oracle grid step (0 = sigma / 100)"},
}};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_double(std::string_view text, std::string_view key) {
  const std::string s(trim(text));
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    fail(Errc::input, "config key " + std::string(key) + " expects a number, got '" + s + "'");
  return v;
}

std::vector<ThetaRange> parse_ranges(std::string_view text, std::string_view key) {
  std::vector<ThetaRange> out;
  for (std::string_view part : split(text, ',')) {
    const auto bits = split(part, ':');
    if (bits.size() != 2) fail(Errc::input, "config key " + std::string(key) + " expects lo:hi pairs");
    out.push_back({parse_double(bits[0], key), parse_double(bits[1], key)});
  }
  return out;
}

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

std::span<const ConfigKey> config_keys() { return kKeys; }

ExperimentConfig::ExperimentConfig() {
  for (const ConfigKey& k : kKeys) values_.emplace(std::string(k.name), std::string(k.default_value));
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(Errc::unknown_key, "unknown config key: " + std::string(key));
  it->second = std::string(trim(value));
}

const std::string& ExperimentConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(Errc::unknown_key, "unknown config key: " + std::string(key));
  return it->second;
}

void ExperimentConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open config file " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      fail(Errc::parse, path.string() + ":" + std::to_string(number) + ": expected key = value");
    set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
}

double ExperimentConfig::get_double(std::string_view key) const { return parse_double(get(key), key); }

long long ExperimentConfig::get_int(std::string_view key) const {
  const std::string& s = get(key);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    fail(Errc::input, "config key " + std::string(key) + " expects an integer, got '" + s + "'");
  return v;
}

bool ExperimentConfig::get_bool(std::string_view key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  fail(Errc::input, "config key " + std::string(key) + " expects true or false, got '" + s + "'");
}

std::vector<double> ExperimentConfig::get_list(std::string_view key) const {
  std::vector<double> out;
  const std::string& s = get(key);
  if (trim(s).empty()) return out;
  for (std::string_view part : split(s, ',')) out.push_back(parse_double(part, key));
  return out;
}

LossMode parse_loss_mode(std::string_view text, EtaMode fallback) {
  if (text == "ce") return LossMode::ce;
  if (text == "ce-snr-batch") return LossMode::ce_snr_batch;
  if (text == "ce-snr-epoch") return LossMode::ce_snr_epoch;
  if (text == "ce-snr") return fallback == EtaMode::epoch ? LossMode::ce_snr_epoch : LossMode::ce_snr_batch;
  fail(Errc::input, "unknown loss mode '" + std::string(text) + "' (expected ce, ce-snr, ce-snr-batch or ce-snr-epoch)");
}

std::vector<int> ExperimentConfig::hidden_layers() const {
  std::vector<int> widths;
  for (double w : get_list("model.hidden")) {
    if (w < 1.0 || w != std::floor(w)) fail(Errc::input, "model.hidden expects positive integers");
    widths.push_back(static_cast<int>(w));
  }
  return widths;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.lr = get_double("train.lr");
  t.momentum_beta = get_double("train.momentum");
  const long long batch = get_int("train.batch_size");
  if (batch < 1) fail(Errc::input, "train.batch_size must be positive");
  t.batch_size = static_cast<std::size_t>(batch);
  t.epochs = static_cast<int>(get_int("train.epochs"));
  t.lr_decay = get_double("train.lr_decay");
  t.lr_decay_every = static_cast<int>(get_int("train.lr_decay_every"));
  t.seed = static_cast<std::uint64_t>(get_int("seed"));
  t.snr.lambda = get_double("snr.lambda");
  t.snr.margin = get_double("snr.margin");
  t.snr.eps = get_double("snr.eps");
  t.snr.weight = get_double("snr.weight");
  t.snr.normalize_pairs = get_bool("snr.normalize_pairs");
  t.eta_m_mult = get_double("snr.m_mult");
  t.clip_norm = get_double("train.clip_norm");

  const std::string& mode = get("snr.mode");
  if (mode != "batch" && mode != "epoch") fail(Errc::input, "snr.mode must be batch or epoch");
  t.loss_mode = parse_loss_mode(get("train.loss"), mode == "epoch" ? EtaMode::epoch : EtaMode::batch);
  t.validate();
  return t;
}

BernoulliProblem ExperimentConfig::sim_problem() const { return BernoulliProblem(get_list("sim.p")); }

SimProtocol ExperimentConfig::sim_protocol() const {
  const BernoulliProblem prob = sim_problem();
  SimProtocol protocol = default_protocol(prob, get_double("sim.class1_factor"));
  if (!trim(get("sim.theta0")).empty()) protocol.class0 = parse_ranges(get("sim.theta0"), "sim.theta0");
  if (!trim(get("sim.theta1")).empty()) protocol.class1 = parse_ranges(get("sim.theta1"), "sim.theta1");
  const long long trials = get_int("sim.trials");
  const long long calib = get_int("sim.calib_trials");
  if (trials < 1 || calib < 2) fail(Errc::input, "sim.trials and sim.calib_trials must be positive");
  protocol.n_trials = static_cast<std::uint64_t>(trials);
  protocol.calib_trials = static_cast<std::uint64_t>(calib);
  protocol.seed = static_cast<std::uint64_t>(get_int("seed"));
  return protocol;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  const std::string& kind = cfg.get("dataset");
  Dataset all;
  if (kind == "synth") {
    all = synth_blobs(static_cast<int>(cfg.get_int("synth.classes")), static_cast<int>(cfg.get_int("synth.dim")),
                      static_cast<int>(cfg.get_int("synth.samples_per_class")), cfg.get_double("synth.separation"),
                      seed);
  } else if (kind == "mnist") {
    if (cfg.get("data.images").empty() || cfg.get("data.labels").empty())
      fail(Errc::io, "dataset=mnist needs data.images and data.labels (or SNR_DATA_DIR)");
    all = load_idx(cfg.get("data.images"), cfg.get("data.labels"));
  } else {
    fail(Errc::input, "dataset must be synth or mnist");
  }
  const long long limit = cfg.get_int("data.limit");
  if (limit < 0) fail(Errc::input, "data.limit must be non-negative");
  if (limit > 0 && static_cast<std::size_t>(limit) < all.size()) {
    std::vector<std::size_t> head(static_cast<std::size_t>(limit));
    for (std::size_t i = 0; i < head.size(); ++i) head[i] = i;
    all = all.subset(head);
  }
  all.validate();
  const Split split = split_indices(all.size(), cfg.get_double("data.val_fraction"), seed);
  return PreparedData{all.subset(split.train), all.subset(split.val)};
}

TrainRun run_training(const ExperimentConfig& cfg, const EpochCallback& on_epoch) {
  const TrainConfig tc = cfg.train_config();
  const PreparedData data = prepare_data(cfg);
  std::vector<int> dims{static_cast<int>(data.train.inputs.cols())};
  for (int w : cfg.hidden_layers()) dims.push_back(w);
  dims.push_back(data.train.class_count);
  MlpModel model(dims, tc.seed);

  TrainRun run;
  run.mode = tc.loss_mode;
  run.seed = tc.seed;
  run.train_rows = data.train.size();
  run.val_rows = data.val.size();
  run.records = train(model, data.train, data.val, tc, on_epoch);
  return run;
}

SimResult run_parametric_sim(const ExperimentConfig& cfg) {
  return simulate_accuracy(cfg.sim_problem(), cfg.sim_protocol());
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  std::ostringstream os;
  os << "epoch,train_loss_ce,train_loss_snr,val_accuracy\n";
  for (const MetricsRecord& r : records)
    os << r.epoch << ',' << format_double("%.9g", r.train_loss_ce) << ',' << format_double("%.9g", r.train_loss_snr)
       << ',' << format_double("%.6f", r.val_accuracy) << '\n';
  return os.str();
}

std::string train_summary_json(const TrainRun& run) {
  nlohmann::ordered_json j;
  j["loss_mode"] = loss_mode_name(run.mode);
  j["seed"] = run.seed;
  j["epochs"] = run.records.size();
  j["train_rows"] = run.train_rows;
  j["val_rows"] = run.val_rows;
  double best = -1.0;
  int best_epoch = 0;
  for (const MetricsRecord& r : run.records)
    if (r.val_accuracy > best) {
      best = r.val_accuracy;
      best_epoch = r.epoch;
    }
  j["final_val_accuracy"] = run.records.empty() ? 0.0 : run.records.back().val_accuracy;
  j["best_val_accuracy"] = run.records.empty() ? 0.0 : best;
  j["best_epoch"] = best_epoch;
  j["final_eta"] = run.records.empty() ? std::vector<double>{} : run.records.back().eta_snapshot;
  return j.dump(2) + "\n";
}

std::string sim_result_json(const SimResult& result) {
  nlohmann::ordered_json j;
  j["acc_snr"] = result.acc_snr;
  j["acc_ml"] = result.acc_ml;
  j["tau_snr"] = result.tau_snr;
  j["tau_ml"] = result.tau_ml;
  j["n_trials"] = result.n_trials;
  j["seed"] = result.seed;
  j["discordant"] = result.discordant;
  return j.dump(2) + "\n";
}

}  // namespace snrb
