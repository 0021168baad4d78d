// snrb: command line front end over the snrbound C API.
//
//   snrb bounds --mu 0 --var 1 --outside -2 2 --verify
//   snrb parametric-sim --set sim.trials=100000
//   snrb train --dataset mnist --loss ce-snr-epoch --csv run.csv --summary run.json

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "snrb/snrb.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitDivergence = 3;

struct Failure {
  snrb_status status;
  std::string message;
};

void check(snrb_status s) {
  if (s != SNRB_OK) throw Failure{s, snrb_last_error()};
}

int exit_code(snrb_status s) {
  switch (s) {
    case SNRB_OK: return kExitOk;
    case SNRB_ERR_DIVERGENCE: return kExitDivergence;
    case SNRB_ERR_INTERNAL: return kExitInternal;
    default: return kExitInput;
  }
}

const char* const kFetchHelp =
    "MNIST is read from local IDX files (plain or .gz):\n"
    "  train-images-idx3-ubyte[.gz]  train-labels-idx1-ubyte[.gz]\n"
    "Pass them with --images/--labels, or set SNR_DATA_DIR to the directory holding them.\n"
    "The repository ships a 10000-sample subset in data/mnist-10k (regenerate with\n"
    "tools/fetch_mnist_subset.py). The full set is published at\n"
    "  https://storage.googleapis.com/cvdf-datasets/mnist/\n";

std::string config_help() {
  std::ostringstream os;
  os << "Config keys (--config FILE with 'key = value' lines, or --set key=value):\n";
  const size_t n = snrb_config_key_count();
  for (size_t i = 0; i < n; ++i) {
    const char* name = nullptr;
    const char* def = nullptr;
    const char* doc = nullptr;
    if (snrb_config_key_info(i, &name, &def, &doc) != SNRB_OK) continue;
    os << "  " << name << " = " << (*def ? def : "\"\"") << "\n      " << doc << "\n";
  }
  return os.str();
}

class Config {
 public:
  Config() { check(snrb_config_create(&cfg_)); }
  ~Config() { snrb_config_free(cfg_); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;

  void set(const std::string& key, const std::string& value) { check(snrb_config_set(cfg_, key.c_str(), value.c_str())); }
  std::string get(const std::string& key) const {
    const char* v = nullptr;
    check(snrb_config_get(cfg_, key.c_str(), &v));
    return v;
  }
  void load(const std::string& path) { check(snrb_config_load_file(cfg_, path.c_str())); }
  const snrb_config* raw() const { return cfg_; }

 private:
  snrb_config* cfg_ = nullptr;
};

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_file, "config file of key = value lines")->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.sets, "override one config key (key=value); repeatable");
}

void apply_common(Config& cfg, const CommonOptions& opts) {
  if (!opts.config_file.empty()) cfg.load(opts.config_file);
  for (const std::string& kv : opts.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Failure{SNRB_ERR_INPUT, "--set expects key=value, got '" + kv + "'"};
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{SNRB_ERR_IO, "cannot write " + path};
  out << text;
  if (!out) throw Failure{SNRB_ERR_IO, "short write to " + path};
}

std::string take(char* s) {
  std::string out(s);
  snrb_string_free(s);
  return out;
}

// ---- bounds ---------------------------------------------------------------

struct BoundsOptions {
  double mu = 0.0;
  double var = 1.0;
  std::optional<double> tail;
  std::optional<double> cdf;
  std::vector<double> outside;
  std::vector<double> inside;
  bool verify = false;
  double step = 0.0;
};

double oracle(double mu, double var, snrb_event_kind kind, double t1, double t2, double step) {
  double sup = 0.0;
  check(snrb_oracle_max_event(mu, var, kind, t1, t2, step, &sup, nullptr));
  return sup;
}

int run_bounds(const BoundsOptions& o) {
  nlohmann::ordered_json j;
  j["mu"] = o.mu;
  j["var"] = o.var;
  const double step = o.step > 0.0 ? o.step : 0.0;

  if (o.tail) {
    double b = 0.0;
    check(snrb_upper_tail_bound(o.mu, o.var, *o.tail, &b));
    j["event"] = "tail";
    j["eta"] = *o.tail;
    j["bound"] = b;
    if (o.verify) {
      const double sup = oracle(o.mu, o.var, SNRB_EVENT_TAIL, *o.tail, 0.0, step);
      j["oracle"] = sup;
      j["gap"] = std::fabs(b - sup);
    }
  } else if (o.cdf) {
    double lower = 0.0, upper = 0.0;
    check(snrb_cdf_envelope(o.mu, o.var, *o.cdf, &lower, &upper));
    j["event"] = "cdf";
    j["eta"] = *o.cdf;
    j["lower"] = lower;
    j["upper"] = upper;
    if (o.verify) {
      // F(eta) >= 1 - sup Pr(x >= eta) and F(eta) <= sup Pr(-x >= -eta).
      const double lo = 1.0 - oracle(o.mu, o.var, SNRB_EVENT_TAIL, *o.cdf, 0.0, step);
      const double hi = oracle(-o.mu, o.var, SNRB_EVENT_TAIL, -*o.cdf, 0.0, step);
      j["oracle_lower"] = lo;
      j["oracle_upper"] = hi;
      j["gap"] = std::max(std::fabs(lower - lo), std::fabs(upper - hi));
    }
  } else if (o.outside.size() == 2) {
    double b = 0.0, sharp = 0.0;
    check(snrb_outside_interval_upper_bound(o.mu, o.var, o.outside[0], o.outside[1], &b));
    check(snrb_outside_interval_sharp_bound(o.mu, o.var, o.outside[0], o.outside[1], &sharp));
    j["event"] = "outside";
    j["lo"] = o.outside[0];
    j["hi"] = o.outside[1];
    j["bound"] = b;
    j["sharp_bound"] = sharp;
    if (o.verify) {
      const double sup = oracle(o.mu, o.var, SNRB_EVENT_OUTSIDE, o.outside[0], o.outside[1], step);
      j["oracle"] = sup;
      j["gap"] = std::fabs(b - sup);
      j["sharp_gap"] = std::fabs(sharp - sup);
    }
  } else if (o.inside.size() == 2) {
    double upper = 0.0, lower = 0.0;
    check(snrb_inside_interval_upper_bound(o.mu, o.var, o.inside[0], o.inside[1], &upper));
    check(snrb_inside_interval_lower_bound(o.mu, o.var, o.inside[0], o.inside[1], &lower));
    j["event"] = "inside";
    j["lo"] = o.inside[0];
    j["hi"] = o.inside[1];
    j["bound"] = upper;
    j["lower_bound"] = lower;
    if (o.verify) {
      const double sup = oracle(o.mu, o.var, SNRB_EVENT_INSIDE, o.inside[0], o.inside[1], step);
      j["oracle"] = sup;
      j["gap"] = std::fabs(upper - sup);
    }
  } else {
    throw Failure{SNRB_ERR_INPUT, "choose one of --tail, --cdf, --outside, --inside"};
  }
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

// ---- parametric-sim -------------------------------------------------------

struct SimOptions {
  CommonOptions common;
  std::optional<long long> seed;
  std::optional<long long> trials;
  std::string json_out;
};

int run_sim(const SimOptions& o) {
  Config cfg;
  apply_common(cfg, o.common);
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  if (o.trials) cfg.set("sim.trials", std::to_string(*o.trials));
  if (!o.json_out.empty()) cfg.set("out.json", o.json_out);

  snrb_sim_result r{};
  check(snrb_parametric_sim(cfg.raw(), &r));
  char* text = nullptr;
  check(snrb_sim_result_json(&r, &text));
  const std::string json = take(text);
  std::cout << json;
  const std::string path = cfg.get("out.json");
  if (!path.empty()) write_file(path, json);
  return kExitOk;
}

// ---- train ----------------------------------------------------------------

struct TrainOptions {
  CommonOptions common;
  std::string dataset;
  std::string loss;
  std::optional<long long> epochs;
  std::optional<long long> seed;
  std::optional<long long> limit;
  std::string images;
  std::string labels;
  std::string csv;
  std::string summary;
  bool quiet = false;
};

std::string find_in(const std::filesystem::path& dir, const std::string& stem) {
  for (const char* suffix : {"", ".gz"}) {
    const auto p = dir / (stem + suffix);
    if (std::filesystem::exists(p)) return p.string();
  }
  return (dir / stem).string();
}

void on_epoch(const snrb_epoch_record* r, void*) {
  std::fprintf(stderr, "epoch %3d  ce %.6f  snr %.6f  val_acc %.4f\n", r->epoch, r->train_loss_ce,
               r->train_loss_snr, r->val_accuracy);
}

int run_train(const TrainOptions& o) {
  Config cfg;
  apply_common(cfg, o.common);
  if (!o.dataset.empty()) cfg.set("dataset", o.dataset);
  if (!o.loss.empty()) cfg.set("train.loss", o.loss);
  if (o.epochs) cfg.set("train.epochs", std::to_string(*o.epochs));
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  if (o.limit) cfg.set("data.limit", std::to_string(*o.limit));
  if (!o.images.empty()) cfg.set("data.images", o.images);
  if (!o.labels.empty()) cfg.set("data.labels", o.labels);
  if (!o.csv.empty()) cfg.set("out.csv", o.csv);
  if (!o.summary.empty()) cfg.set("out.summary", o.summary);

  if (cfg.get("dataset") == "mnist") {
    const char* env = std::getenv("SNR_DATA_DIR");
    const std::filesystem::path dir = env != nullptr && *env ? env : SNRB_DEFAULT_DATA_DIR;
    if (cfg.get("data.images").empty()) cfg.set("data.images", find_in(dir, "train-images-idx3-ubyte"));
    if (cfg.get("data.labels").empty()) cfg.set("data.labels", find_in(dir, "train-labels-idx1-ubyte"));
    for (const char* key : {"data.images", "data.labels"})
      if (!std::filesystem::exists(cfg.get(key))) {
        std::cerr << kFetchHelp;
        throw Failure{SNRB_ERR_IO, "missing dataset file: " + cfg.get(key)};
      }
  }

  snrb_run* run = nullptr;
  check(snrb_train(cfg.raw(), o.quiet ? nullptr : on_epoch, nullptr, &run));
  std::string csv, summary;
  char* text = nullptr;
  const snrb_status s1 = snrb_run_csv(run, &text);
  if (s1 == SNRB_OK) csv = take(text);
  const snrb_status s2 = s1 == SNRB_OK ? snrb_run_summary_json(run, &text) : s1;
  if (s2 == SNRB_OK && s1 == SNRB_OK) summary = take(text);
  snrb_run_free(run);
  check(s1);
  check(s2);

  if (!cfg.get("out.csv").empty()) write_file(cfg.get("out.csv"), csv);
  if (!cfg.get("out.summary").empty()) write_file(cfg.get("out.summary"), summary);
  std::cout << summary;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moment bounds, parametric classifier simulation and SNR-loss training"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(snrb_version()));
  app.footer(config_help());

  BoundsOptions bo;
  auto* bounds = app.add_subcommand("bounds", "closed-form moment bound, optionally checked by the grid oracle");
  bounds->add_option("--mu", bo.mu, "mean")->required();
  bounds->add_option("--var", bo.var, "variance (> 0)")->required();
  auto* o_tail = bounds->add_option("--tail", bo.tail, "sup Pr(x > eta)");
  auto* o_cdf = bounds->add_option("--cdf", bo.cdf, "range of Pr(x <= eta)");
  auto* o_out = bounds->add_option("--outside", bo.outside, "sup Pr(x <= lo or x >= hi)")->expected(2);
  auto* o_in = bounds->add_option("--inside", bo.inside, "sup Pr(lo <= x <= hi)")->expected(2);
  o_tail->excludes(o_cdf)->excludes(o_out)->excludes(o_in);
  o_cdf->excludes(o_out)->excludes(o_in);
  o_out->excludes(o_in);
  bounds->add_flag("--verify", bo.verify, "run the enumeration oracle and report |bound - oracle|");
  bounds->add_option("--step", bo.step, "oracle grid step (default sigma / 100)");

  SimOptions so;
  auto* sim = app.add_subcommand("parametric-sim", "Bernoulli example: arccos (SNR) vs likelihood-ratio classifier");
  add_common(sim, so.common);
  sim->add_option("--seed", so.seed, "seed");
  sim->add_option("--trials", so.trials, "paired evaluation trials");
  sim->add_option("--json", so.json_out, "also write the result JSON here");

  TrainOptions to;
  auto* train = app.add_subcommand("train", "train the MLP with ce, ce-snr-batch or ce-snr-epoch");
  add_common(train, to.common);
  train->add_option("--dataset", to.dataset, "synth | mnist");
  train->add_option("--loss", to.loss, "ce | ce-snr | ce-snr-batch | ce-snr-epoch");
  train->add_option("--epochs", to.epochs, "epochs");
  train->add_option("--seed", to.seed, "seed");
  train->add_option("--limit", to.limit, "use only the first N samples");
  train->add_option("--images", to.images, "IDX image file");
  train->add_option("--labels", to.labels, "IDX label file");
  train->add_option("--csv", to.csv, "per-epoch metrics CSV");
  train->add_option("--summary", to.summary, "summary JSON");
  train->add_flag("--quiet", to.quiet, "no per-epoch progress on stderr");
  train->footer(kFetchHelp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (bounds->parsed()) return run_bounds(bo);
    if (sim->parsed()) return run_sim(so);
    if (train->parsed()) return run_train(to);
  } catch (const Failure& f) {
    std::cerr << "error (" << snrb_status_name(f.status) << "): " << f.message << "\n";
    return exit_code(f.status);
  }
  return kExitInternal;
}
