#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "snl/error.hpp"
#include "snl/metrics.hpp"
#include "snl/synthdata.hpp"

using namespace snl;

namespace {

// Monte-Carlo accuracy of sign(<w, x>) on fresh toy test samples.
double monte_carlo_accuracy(std::span<const double> w, ToyDataConfig c, std::size_t n) {
  c.n_train = 1;
  c.n_test = n;
  const auto test = sample_toy(c).test;
  Model m = Model::linear(c.dim);
  std::copy(w.begin(), w.end(), m.params().begin());
  return accuracy(m, test);
}

}  // namespace

TEST_CASE("normal cdf") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(1.0 - normal_cdf(-2.0) == doctest::Approx(0.9772498680518208).epsilon(1e-14));
  CHECK(normal_cdf(-40.0) >= 0.0);
  CHECK(normal_cdf(40.0) == 1.0);
}

TEST_CASE("closed-form toy accuracy on hand examples") {
  ToyDataConfig c;
  c.dim = 5;
  c.gamma = 1.0;
  c.signal_b = 2.0;
  std::vector<double> w{1.0, 0.0, 0.0, 0.0, 0.0};
  CHECK(closed_form_toy_accuracy(w, c) == 1.0);
  w[0] = -1.0;
  CHECK(closed_form_toy_accuracy(w, c) == 0.0);
  w = {0.0, 1.0, 0.0, 0.0, 0.0};
  CHECK(closed_form_toy_accuracy(w, c) == doctest::Approx(0.5));
  // B sqrt(d-1) w1 / (gamma |w_rest|) = 2 * 2 * 1 / 2 = 2
  w = {1.0, 2.0, 0.0, 0.0, 0.0};
  CHECK(closed_form_toy_accuracy(w, c) == doctest::Approx(normal_cdf(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(closed_form_toy_accuracy(std::vector<double>(5, 0.0), c), UndefinedAccuracy);
  CHECK_THROWS_AS(closed_form_toy_accuracy(std::vector<double>(4, 1.0), c), DimensionMismatch);
}

TEST_CASE("closed-form accuracy agrees with Monte-Carlo") {
  ToyDataConfig c;
  c.dim = 50;
  c.seed = 17;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int k = 0; k < 5; ++k) {
    std::vector<double> w(c.dim);
    for (auto& v : w) v = g(rng);
    w[0] = std::abs(w[0]) * 0.3;
    CHECK(std::abs(closed_form_toy_accuracy(w, c) - monte_carlo_accuracy(w, c, 20000)) < 0.015);
  }
}

TEST_CASE("logit up-weighting ratio") {
  Model m = Model::linear(2);
  const std::vector<double> x{0.6, 0.8};
  CHECK(logit_upweight_ratio(m, x, 1, 0.0) == 1.0);
  // At w = 0 with |x| = 1 the margin drops by ln 2: sigma(ln 2) / sigma(0) = 4/3.
  CHECK(logit_upweight_ratio(m, x, 1, std::log(2.0)) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(logit_upweight_ratio(m, x, -1, std::log(2.0)) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  // Bounded by e^C for the unit-norm linear case.
  m.params()[0] = 30.0;
  CHECK(logit_upweight_ratio(m, x, 1, 1.0) < std::exp(1.0));
  CHECK_THROWS_AS(logit_upweight_ratio(Model::dln2(2, 2), x, 1, 0.5), DegenerateGradient);
}

TEST_CASE("stratified statistics") {
  ToyDataConfig c;
  c.dim = 10;
  c.n_train = 100;
  const auto s = sample_toy(c);
  Model m = Model::linear(10);
  m.params()[0] = 1.0;
  const auto st = stratified_stats(m, s.train);
  CHECK(st.clean.count == 60);
  CHECK(st.noisy.count == 40);
  CHECK(st.acc_gap() == st.clean.accuracy - st.noisy.accuracy);
  CHECK(st.clean.accuracy > 0.9);
  CHECK(st.noisy.accuracy < 0.1);

  const Model zero = Model::mlp(10, 4, 1);
  const auto z = stratified_stats(zero, s.train);
  CHECK(z.clean.loss == doctest::Approx(std::log(2.0)));

  c.noise_rate = 0.0;
  const auto clean = sample_toy(c).train;
  CHECK_THROWS_AS(stratified_stats(m, clean), EmptyStratum);
  CHECK_FALSE(stratum_stats(m, clean, false).has_value());
}

TEST_CASE("uniform multiclass loss is ln K") {
  MixtureConfig mc;
  mc.n_train = 50;
  mc.n_test = 1;
  mc.dim = 8;
  const auto d = sample_mixture(mc).train;
  const auto st = stratified_stats(Model::linear(8, 10), d);
  CHECK(st.clean.loss == doctest::Approx(std::log(10.0)).epsilon(1e-14));
  CHECK(st.noisy.logit_scale == doctest::Approx(std::sqrt(0.9)).epsilon(1e-14));
}

TEST_CASE("gradient norm ratio") {
  ToyDataConfig c;
  c.dim = 10;
  c.n_train = 200;
  const auto d = sample_toy(c).train;
  OptimConfig sgd;
  // At w = 0 every per-example SGD update has norm |x| / 2 and the ratio is near 1.
  const double r0 = grad_norm_ratio(Model::linear(10), d, sgd);
  CHECK(r0 == doctest::Approx(1.0).epsilon(0.05));

  Model w = Model::linear(10);
  w.params()[0] = 1.0;
  // A classifier agreeing with the clean labels has small clean losses.
  CHECK(grad_norm_ratio(w, d, sgd) < 1.0);
  OptimConfig sam = sgd;
  sam.rule = Rule::SAM1;
  sam.rho = 0.5;
  CHECK(grad_norm_ratio(w, d, sam) > grad_norm_ratio(w, d, sgd));

  const std::vector<std::size_t> only_clean{0};
  REQUIRE(d.clean[0] != 0);
  CHECK_THROWS_AS(grad_norm_ratio(w, d, sgd, only_clean), EmptyStratum);
}

TEST_CASE("mean activation norm") {
  Model m = Model::dln2(2, 2);
  auto p = m.params();
  p[0] = 1.0;
  p[3] = 1.0;
  LabeledDataset d;
  d.n = 2;
  d.dim = 2;
  d.encoding = LabelEncoding::Signed;
  d.inputs = {3.0, 4.0, 0.0, 1.0};
  d.observed = {1, 1};
  d.truth = d.observed;
  d.refresh_mask();
  CHECK(mean_activation_norm(m, d) == doctest::Approx(3.0));
}

TEST_CASE("trace keeps a running best and leaves missing fields empty") {
  MetricTrace t("sgd", 0.0, 0.01, 4);
  MetricRecord a;
  a.epoch = 1;
  a.test_acc = 0.7;
  t.append(a);
  MetricRecord b;
  b.epoch = 2;
  b.test_acc = 0.6;
  t.append(b);
  MetricRecord c;
  c.epoch = 3;
  c.test_acc = 0.7;
  t.append(c);
  CHECK(t.records()[1].best_test_acc == 0.7);
  const auto best = t.best();
  REQUIRE(best);
  CHECK(best->first == 0.7);
  CHECK(best->second == 1);
  CHECK(t.at_epoch(2)->test_acc == 0.6);
  CHECK(t.at_epoch(9) == nullptr);

  std::ostringstream os;
  t.write_csv(os);
  const std::string text = os.str();
  CHECK(text.rfind(MetricTrace::csv_header(), 0) == 0);
  // Unset columns are written as empty fields.
  CHECK(text.find(",,") != std::string::npos);
  std::size_t lines = 0;
  for (char ch : text) lines += ch == '\n';
  CHECK(lines == 4);

  MetricTrace empty("sam1", 0.1, 0.01, 0);
  CHECK_FALSE(empty.best().has_value());
}

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(0.18) == "0.18");
  CHECK(format_double(2.0) == "2");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
