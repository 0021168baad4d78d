#include "snrb/snrb.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <utility>

#include "snrb/bounds.hpp"
#include "snrb/error.hpp"
#include "snrb/experiment.hpp"
#include "snrb/extremal.hpp"

struct snrb_dist {
  snrb::DiscreteDist dist;
};

struct snrb_config {
  snrb::ExperimentConfig cfg;
};

struct snrb_run {
  snrb::TrainRun run;
};

namespace {

thread_local std::string last_error;

snrb_status status_of(snrb::Errc code) {
  switch (code) {
    case snrb::Errc::input: return SNRB_ERR_INPUT;
    case snrb::Errc::degenerate: return SNRB_ERR_DEGENERATE;
    case snrb::Errc::infeasible: return SNRB_ERR_INFEASIBLE;
    case snrb::Errc::singular: return SNRB_ERR_SINGULAR;
    case snrb::Errc::parse: return SNRB_ERR_PARSE;
    case snrb::Errc::io: return SNRB_ERR_IO;
    case snrb::Errc::divergence: return SNRB_ERR_DIVERGENCE;
    case snrb::Errc::generation: return SNRB_ERR_GENERATION;
    case snrb::Errc::unknown_key: return SNRB_ERR_UNKNOWN_KEY;
  }
  return SNRB_ERR_INTERNAL;
}

snrb_status set_error(snrb_status s, std::string msg) {
  last_error = std::move(msg);
  return s;
}

template <class F>
snrb_status guard(F&& body) {
  try {
    body();
    return SNRB_OK;
  } catch (const snrb::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(SNRB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(SNRB_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(SNRB_ERR_INTERNAL, "unknown failure");
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) snrb::fail(snrb::Errc::input, std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

snrb::Event make_event(snrb_event_kind kind, double t1, double t2) {
  switch (kind) {
    case SNRB_EVENT_TAIL: return snrb::TailEvent{t1};
    case SNRB_EVENT_OUTSIDE: return snrb::OutsideEvent{snrb::Interval(t1, t2)};
    case SNRB_EVENT_INSIDE: return snrb::InsideEvent{snrb::Interval(t1, t2)};
  }
  snrb::fail(snrb::Errc::input, "unknown event kind");
}

snrb_epoch_record to_record(const snrb::MetricsRecord& r) {
  return snrb_epoch_record{r.epoch, r.train_loss_ce, r.train_loss_snr, r.val_accuracy};
}

template <class F>
snrb_status bound1(double* out, F&& f) {
  return guard([&] {
    need(out, "out");
    *out = f();
  });
}

template <class F>
snrb_status make_dist(snrb_dist** out, F&& f) {
  return guard([&] {
    need(out, "out");
    *out = new snrb_dist{f()};
  });
}

}  // namespace

extern "C" {

const char* snrb_version(void) { return "1.0.0"; }

const char* snrb_last_error(void) { return last_error.c_str(); }

const char* snrb_status_name(snrb_status status) {
  switch (status) {
    case SNRB_OK: return "ok";
    case SNRB_ERR_INPUT: return "input";
    case SNRB_ERR_DEGENERATE: return "degenerate";
    case SNRB_ERR_INFEASIBLE: return "infeasible";
    case SNRB_ERR_SINGULAR: return "singular";
    case SNRB_ERR_PARSE: return "parse";
    case SNRB_ERR_IO: return "io";
    case SNRB_ERR_DIVERGENCE: return "divergence";
    case SNRB_ERR_GENERATION: return "generation";
    case SNRB_ERR_UNKNOWN_KEY: return "unknown_key";
    case SNRB_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void snrb_string_free(char* s) { std::free(s); }

snrb_status snrb_upper_tail_bound(double mu, double var, double eta, double* out) {
  return bound1(out, [&] { return snrb::upper_tail_bound(snrb::Moments(mu, var), eta); });
}

snrb_status snrb_cdf_envelope(double mu, double var, double eta, double* lower, double* upper) {
  return guard([&] {
    need(lower, "lower");
    need(upper, "upper");
    const snrb::CdfEnvelope env = snrb::cdf_envelope(snrb::Moments(mu, var), eta);
    *lower = env.lower;
    *upper = env.upper;
  });
}

snrb_status snrb_outside_interval_upper_bound(double mu, double var, double lo, double hi, double* out) {
  return bound1(out, [&] { return snrb::outside_interval_upper_bound(snrb::Moments(mu, var), snrb::Interval(lo, hi)); });
}

snrb_status snrb_outside_interval_sharp_bound(double mu, double var, double lo, double hi, double* out) {
  return bound1(out, [&] { return snrb::outside_interval_sharp_bound(snrb::Moments(mu, var), snrb::Interval(lo, hi)); });
}

snrb_status snrb_inside_interval_upper_bound(double mu, double var, double lo, double hi, double* out) {
  return bound1(out, [&] { return snrb::inside_interval_upper_bound(snrb::Moments(mu, var), snrb::Interval(lo, hi)); });
}

snrb_status snrb_inside_interval_lower_bound(double mu, double var, double lo, double hi, double* out) {
  return bound1(out, [&] { return snrb::inside_interval_lower_bound(snrb::Moments(mu, var), snrb::Interval(lo, hi)); });
}

snrb_status snrb_tp_bound_from_snr(double s, double* out) {
  return bound1(out, [&] { return snrb::tp_bound_from_snr(s); });
}

snrb_status snrb_dist_create(const double* x, const double* p, size_t n, snrb_dist** out) {
  return make_dist(out, [&] {
    if (n > 0) {
      need(x, "x");
      need(p, "p");
    }
    std::vector<snrb::Atom> atoms;
    for (size_t i = 0; i < n; ++i) atoms.push_back({x[i], p[i]});
    return snrb::DiscreteDist(std::move(atoms));
  });
}

void snrb_dist_free(snrb_dist* d) { delete d; }

size_t snrb_dist_size(const snrb_dist* d) { return d == nullptr ? 0 : d->dist.size(); }

snrb_status snrb_dist_atom(const snrb_dist* d, size_t index, double* x, double* p) {
  return guard([&] {
    need(d, "dist");
    need(x, "x");
    need(p, "p");
    if (index >= d->dist.size()) snrb::fail(snrb::Errc::input, "atom index out of range");
    *x = d->dist.atoms()[index].x;
    *p = d->dist.atoms()[index].p;
  });
}

snrb_status snrb_dist_moments(const snrb_dist* d, double* mu, double* var) {
  return guard([&] {
    need(d, "dist");
    need(mu, "mu");
    need(var, "var");
    const snrb::RawMoments m = snrb::moments_of(d->dist);
    *mu = m.mu;
    *var = m.var;
  });
}

snrb_status snrb_dist_event_prob(const snrb_dist* d, snrb_event_kind kind, double t1, double t2, double* out) {
  return bound1(out, [&] {
    need(d, "dist");
    const snrb::Event e = make_event(kind, t1, t2);
    return d->dist.prob([&](double x) { return snrb::event_contains(e, x); });
  });
}

snrb_status snrb_construct_tail_extremal(double mu, double var, double eta, snrb_dist** out) {
  return make_dist(out, [&] { return snrb::construct_tail_extremal(snrb::Moments(mu, var), eta); });
}

snrb_status snrb_construct_spike(double mu, double var, double eps, snrb_dist** out) {
  return make_dist(out, [&] { return snrb::construct_spike(snrb::Moments(mu, var), eps); });
}

snrb_status snrb_construct_outside_extremal(double mu, double var, double lo, double hi, snrb_dist** out) {
  return make_dist(out, [&] { return snrb::construct_outside_extremal(snrb::Moments(mu, var), snrb::Interval(lo, hi)); });
}

snrb_status snrb_oracle_max_event(double mu, double var, snrb_event_kind kind, double t1, double t2, double step,
                                  double* sup_prob, snrb_dist** witness) {
  return guard([&] {
    need(sup_prob, "sup_prob");
    const snrb::Moments m(mu, var);
    snrb::Grid grid = snrb::default_grid(m);
    if (step > 0.0) grid.step = step;
    snrb::OracleResult r = snrb::oracle_max_event(m, make_event(kind, t1, t2), grid);
    *sup_prob = r.sup_prob;
    if (witness != nullptr) *witness = new snrb_dist{std::move(r.witness)};
  });
}

snrb_status snrb_config_create(snrb_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new snrb_config{};
  });
}

void snrb_config_free(snrb_config* cfg) { delete cfg; }

snrb_status snrb_config_set(snrb_config* cfg, const char* key, const char* value) {
  return guard([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    cfg->cfg.set(key, value);
  });
}

snrb_status snrb_config_get(const snrb_config* cfg, const char* key, const char** value) {
  return guard([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    *value = cfg->cfg.get(key).c_str();
  });
}

snrb_status snrb_config_load_file(snrb_config* cfg, const char* path) {
  return guard([&] {
    need(cfg, "config");
    need(path, "path");
    cfg->cfg.load_file(path);
  });
}

size_t snrb_config_key_count(void) { return snrb::config_keys().size(); }

snrb_status snrb_config_key_info(size_t index, const char** name, const char** default_value, const char** doc) {
  return guard([&] {
    const auto keys = snrb::config_keys();
    if (index >= keys.size()) snrb::fail(snrb::Errc::input, "config key index out of range");
    // The key table is built from string literals, so data() is terminated.
    if (name != nullptr) *name = keys[index].name.data();
    if (default_value != nullptr) *default_value = keys[index].default_value.data();
    if (doc != nullptr) *doc = keys[index].doc.data();
  });
}

snrb_status snrb_parametric_sim(const snrb_config* cfg, snrb_sim_result* out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "out");
    const snrb::SimResult r = snrb::run_parametric_sim(cfg->cfg);
    *out = snrb_sim_result{r.acc_snr, r.acc_ml, r.tau_snr, r.tau_ml, r.n_trials, r.seed, r.discordant};
  });
}

snrb_status snrb_sim_result_json(const snrb_sim_result* result, char** out) {
  return guard([&] {
    need(result, "result");
    need(out, "out");
    const snrb::SimResult r{result->acc_snr, result->acc_ml, result->tau_snr, result->tau_ml,
                            result->n_trials, result->seed,   result->discordant};
    *out = dup_string(snrb::sim_result_json(r));
  });
}

snrb_status snrb_train(const snrb_config* cfg, snrb_epoch_callback on_epoch, void* user, snrb_run** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "out");
    snrb::EpochCallback cb;
    if (on_epoch != nullptr)
      cb = [&](const snrb::MetricsRecord& r) {
        const snrb_epoch_record rec = to_record(r);
        on_epoch(&rec, user);
      };
    *out = new snrb_run{snrb::run_training(cfg->cfg, cb)};
  });
}

void snrb_run_free(snrb_run* run) { delete run; }

size_t snrb_run_epochs(const snrb_run* run) { return run == nullptr ? 0 : run->run.records.size(); }

snrb_status snrb_run_record(const snrb_run* run, size_t index, snrb_epoch_record* out) {
  return guard([&] {
    need(run, "run");
    need(out, "out");
    if (index >= run->run.records.size()) snrb::fail(snrb::Errc::input, "epoch index out of range");
    *out = to_record(run->run.records[index]);
  });
}

snrb_status snrb_run_eta(const snrb_run* run, size_t index, double* buf, size_t cap, size_t* count) {
  return guard([&] {
    need(run, "run");
    need(count, "count");
    if (index >= run->run.records.size()) snrb::fail(snrb::Errc::input, "epoch index out of range");
    const auto& eta = run->run.records[index].eta_snapshot;
    *count = eta.size();
    if (cap > 0) need(buf, "buf");
    for (size_t i = 0; i < eta.size() && i < cap; ++i) buf[i] = eta[i];
  });
}

snrb_status snrb_run_csv(const snrb_run* run, char** out) {
  return guard([&] {
    need(run, "run");
    need(out, "out");
    *out = dup_string(snrb::metrics_csv(run->run.records));
  });
}

snrb_status snrb_run_summary_json(const snrb_run* run, char** out) {
  return guard([&] {
    need(run, "run");
    need(out, "out");
    *out = dup_string(snrb::train_summary_json(run->run));
  });
}

}  // extern "C"
