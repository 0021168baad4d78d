#include <gtest/gtest.h>

#include <cstring>
#include <string>
#include <vector>

#include "snrb/snrb.h"

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(snrb_version(), "1.0.0");
  EXPECT_STREQ(snrb_status_name(SNRB_OK), "ok");
  EXPECT_STREQ(snrb_status_name(SNRB_ERR_DEGENERATE), "degenerate");
}

TEST(CApi, Bounds) {
  double v = 0.0, lo = 0.0, hi = 0.0;
  ASSERT_EQ(snrb_upper_tail_bound(0.0, 1.0, 2.0, &v), SNRB_OK);
  EXPECT_DOUBLE_EQ(v, 0.2);
  ASSERT_EQ(snrb_cdf_envelope(0.0, 1.0, 3.0, &lo, &hi), SNRB_OK);
  EXPECT_DOUBLE_EQ(lo, 0.9);
  EXPECT_DOUBLE_EQ(hi, 1.0);
  ASSERT_EQ(snrb_outside_interval_upper_bound(0.0, 1.0, -2.0, 2.0, &v), SNRB_OK);
  EXPECT_DOUBLE_EQ(v, 0.25);
  ASSERT_EQ(snrb_outside_interval_sharp_bound(0.0, 1.0, -2.0, 1.0, &v), SNRB_OK);
  EXPECT_NEAR(v, 5.0 / 9.0, 1e-15);
  ASSERT_EQ(snrb_inside_interval_upper_bound(0.0, 1.0, 1.0, 3.0, &v), SNRB_OK);
  EXPECT_DOUBLE_EQ(v, 0.5);
  ASSERT_EQ(snrb_inside_interval_lower_bound(0.0, 1.0, -2.0, 2.0, &v), SNRB_OK);
  EXPECT_DOUBLE_EQ(v, 0.75);
  ASSERT_EQ(snrb_tp_bound_from_snr(4.0, &v), SNRB_OK);
  EXPECT_DOUBLE_EQ(v, 0.8);
}

TEST(CApi, ErrorsCarryCodeAndMessage) {
  double v = 0.0;
  EXPECT_EQ(snrb_upper_tail_bound(0.0, 0.0, 1.0, &v), SNRB_ERR_INPUT);
  EXPECT_NE(std::strstr(snrb_last_error(), "variance"), nullptr);
  EXPECT_EQ(snrb_inside_interval_upper_bound(0.0, 1.0, 0.0, 1.0, &v), SNRB_ERR_DEGENERATE);
  EXPECT_EQ(snrb_upper_tail_bound(0.0, 1.0, 1.0, nullptr), SNRB_ERR_INPUT);
  snrb_dist* d = nullptr;
  EXPECT_EQ(snrb_construct_outside_extremal(0.0, 1.0, -2.0, 2.0, &d), SNRB_ERR_INFEASIBLE);
  EXPECT_EQ(d, nullptr);
}

TEST(CApi, DistributionHandles) {
  const double x[] = {2.0, -0.5};
  const double p[] = {0.2, 0.8};
  snrb_dist* d = nullptr;
  ASSERT_EQ(snrb_dist_create(x, p, 2, &d), SNRB_OK);
  EXPECT_EQ(snrb_dist_size(d), 2u);
  double ax = 0.0, ap = 0.0, mu = 1.0, var = 0.0, prob = 0.0;
  ASSERT_EQ(snrb_dist_atom(d, 0, &ax, &ap), SNRB_OK);
  EXPECT_DOUBLE_EQ(ax, -0.5);
  EXPECT_EQ(snrb_dist_atom(d, 2, &ax, &ap), SNRB_ERR_INPUT);
  ASSERT_EQ(snrb_dist_moments(d, &mu, &var), SNRB_OK);
  EXPECT_NEAR(mu, 0.0, 1e-15);
  EXPECT_NEAR(var, 1.0, 1e-15);
  ASSERT_EQ(snrb_dist_event_prob(d, SNRB_EVENT_TAIL, 2.0, 0.0, &prob), SNRB_OK);
  EXPECT_DOUBLE_EQ(prob, 0.2);
  snrb_dist_free(d);

  const double bad_p[] = {0.5, 0.6};
  EXPECT_EQ(snrb_dist_create(x, bad_p, 2, &d), SNRB_ERR_INPUT);
  snrb_dist_free(nullptr);
}

TEST(CApi, Constructors) {
  snrb_dist* d = nullptr;
  ASSERT_EQ(snrb_construct_spike(0.0, 1.0, 0.04, &d), SNRB_OK);
  EXPECT_EQ(snrb_dist_size(d), 3u);
  snrb_dist_free(d);
  ASSERT_EQ(snrb_construct_tail_extremal(3.0, 4.0, 5.0, &d), SNRB_OK);
  double prob = 0.0;
  ASSERT_EQ(snrb_dist_event_prob(d, SNRB_EVENT_TAIL, 5.0, 0.0, &prob), SNRB_OK);
  EXPECT_DOUBLE_EQ(prob, 0.5);
  snrb_dist_free(d);
  ASSERT_EQ(snrb_construct_outside_extremal(0.0, 1.0, -0.5, 0.5, &d), SNRB_OK);
  ASSERT_EQ(snrb_dist_event_prob(d, SNRB_EVENT_OUTSIDE, -0.5, 0.5, &prob), SNRB_OK);
  EXPECT_DOUBLE_EQ(prob, 1.0);
  snrb_dist_free(d);
}

TEST(CApi, Oracle) {
  double sup = 0.0;
  snrb_dist* w = nullptr;
  ASSERT_EQ(snrb_oracle_max_event(0.0, 1.0, SNRB_EVENT_OUTSIDE, -2.0, 2.0, 0.0, &sup, &w), SNRB_OK);
  EXPECT_NEAR(sup, 0.25, 1e-3);
  ASSERT_NE(w, nullptr);
  double mu = 1.0, var = 0.0;
  ASSERT_EQ(snrb_dist_moments(w, &mu, &var), SNRB_OK);
  EXPECT_NEAR(var, 1.0, 1e-9);
  snrb_dist_free(w);
  ASSERT_EQ(snrb_oracle_max_event(0.0, 1.0, SNRB_EVENT_TAIL, 1.0, 0.0, 0.02, &sup, nullptr), SNRB_OK);
  EXPECT_NEAR(sup, 0.5, 1e-3);
  EXPECT_EQ(snrb_oracle_max_event(0.0, 1.0, static_cast<snrb_event_kind>(9), 1.0, 2.0, 0.0, &sup, nullptr),
            SNRB_ERR_INPUT);
}

TEST(CApi, ConfigRoundTrip) {
  snrb_config* cfg = nullptr;
  ASSERT_EQ(snrb_config_create(&cfg), SNRB_OK);
  const char* v = nullptr;
  ASSERT_EQ(snrb_config_get(cfg, "train.lr", &v), SNRB_OK);
  EXPECT_STREQ(v, "0.05");
  ASSERT_EQ(snrb_config_set(cfg, "train.lr", "0.1"), SNRB_OK);
  ASSERT_EQ(snrb_config_get(cfg, "train.lr", &v), SNRB_OK);
  EXPECT_STREQ(v, "0.1");
  EXPECT_EQ(snrb_config_set(cfg, "train.nope", "1"), SNRB_ERR_UNKNOWN_KEY);
  EXPECT_EQ(snrb_config_load_file(cfg, "/definitely/not/here"), SNRB_ERR_IO);
  snrb_config_free(cfg);

  const size_t n = snrb_config_key_count();
  ASSERT_GT(n, 20u);
  const char *name = nullptr, *def = nullptr, *doc = nullptr;
  ASSERT_EQ(snrb_config_key_info(0, &name, &def, &doc), SNRB_OK);
  EXPECT_STREQ(name, "seed");
  EXPECT_EQ(snrb_config_key_info(n, &name, &def, &doc), SNRB_ERR_INPUT);
}

TEST(CApi, ParametricSim) {
  snrb_config* cfg = nullptr;
  ASSERT_EQ(snrb_config_create(&cfg), SNRB_OK);
  ASSERT_EQ(snrb_config_set(cfg, "sim.trials", "10000"), SNRB_OK);
  ASSERT_EQ(snrb_config_set(cfg, "sim.calib_trials", "10000"), SNRB_OK);
  snrb_sim_result a{}, b{};
  ASSERT_EQ(snrb_parametric_sim(cfg, &a), SNRB_OK);
  ASSERT_EQ(snrb_parametric_sim(cfg, &b), SNRB_OK);
  EXPECT_EQ(a.acc_snr, b.acc_snr);
  EXPECT_EQ(a.n_trials, 10000u);
  char* json = nullptr;
  ASSERT_EQ(snrb_sim_result_json(&a, &json), SNRB_OK);
  EXPECT_NE(std::strstr(json, "\"acc_snr\""), nullptr);
  snrb_string_free(json);
  ASSERT_EQ(snrb_config_set(cfg, "sim.trials", "10"), SNRB_OK);
  EXPECT_EQ(snrb_parametric_sim(cfg, &a), SNRB_ERR_INPUT);
  snrb_config_free(cfg);
}

namespace {
void count_epochs(const snrb_epoch_record* r, void* user) {
  static_cast<std::vector<int>*>(user)->push_back(r->epoch);
}
}  // namespace

TEST(CApi, TrainRun) {
  snrb_config* cfg = nullptr;
  ASSERT_EQ(snrb_config_create(&cfg), SNRB_OK);
  for (auto [k, v] : std::vector<std::pair<const char*, const char*>>{{"synth.classes", "3"},
                                                                      {"synth.dim", "4"},
                                                                      {"synth.samples_per_class", "30"},
                                                                      {"model.hidden", "8"},
                                                                      {"train.epochs", "2"},
                                                                      {"train.loss", "ce-snr-batch"}})
    ASSERT_EQ(snrb_config_set(cfg, k, v), SNRB_OK);
  std::vector<int> seen;
  snrb_run* run = nullptr;
  ASSERT_EQ(snrb_train(cfg, count_epochs, &seen, &run), SNRB_OK);
  EXPECT_EQ(seen, (std::vector<int>{1, 2}));
  ASSERT_EQ(snrb_run_epochs(run), 2u);
  snrb_epoch_record rec{};
  ASSERT_EQ(snrb_run_record(run, 1, &rec), SNRB_OK);
  EXPECT_EQ(rec.epoch, 2);
  size_t count = 0;
  double eta[8];
  ASSERT_EQ(snrb_run_eta(run, 1, eta, 8, &count), SNRB_OK);
  EXPECT_EQ(count, 3u);
  ASSERT_EQ(snrb_run_eta(run, 1, nullptr, 0, &count), SNRB_OK);
  char* csv = nullptr;
  ASSERT_EQ(snrb_run_csv(run, &csv), SNRB_OK);
  EXPECT_EQ(std::string(csv).rfind("epoch,train_loss_ce,train_loss_snr,val_accuracy\n", 0), 0u);
  snrb_string_free(csv);
  char* summary = nullptr;
  ASSERT_EQ(snrb_run_summary_json(run, &summary), SNRB_OK);
  EXPECT_NE(std::strstr(summary, "\"loss_mode\": \"ce-snr-batch\""), nullptr);
  snrb_string_free(summary);
  EXPECT_EQ(snrb_run_record(run, 2, &rec), SNRB_ERR_INPUT);
  snrb_run_free(run);

  ASSERT_EQ(snrb_config_set(cfg, "dataset", "mnist"), SNRB_OK);
  EXPECT_EQ(snrb_train(cfg, nullptr, nullptr, &run), SNRB_ERR_IO);
  snrb_config_free(cfg);
}
