#include <cmath>
#include <random>

#include "doctest.h"
#include "snl/error.hpp"
#include "snl/optim.hpp"
#include "snl/oracle.hpp"
#include "snl/synthdata.hpp"

using namespace snl;

namespace {

LabeledDataset binary_data(std::vector<std::vector<double>> rows, std::vector<std::int64_t> labels) {
  LabeledDataset d;
  d.n = rows.size();
  d.dim = rows.front().size();
  d.encoding = LabelEncoding::Signed;
  for (const auto& r : rows) d.inputs.insert(d.inputs.end(), r.begin(), r.end());
  d.observed = labels;
  d.truth = labels;
  d.refresh_mask();
  return d;
}

LabeledDataset random_binary(std::size_t n, std::size_t dim, std::uint64_t seed) {
  ToyDataConfig c;
  c.dim = dim;
  c.n_train = n;
  c.n_test = 1;
  c.seed = seed;
  return sample_toy(c).train;
}

void fill_random(Model& m, std::uint64_t seed, double std = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, std);
  for (auto& p : m.params()) p = g(rng);
}

OptimConfig with(Rule rule, double rho, double lr = 0.1) {
  OptimConfig c;
  c.rule = rule;
  c.rho = rho;
  c.lr = lr;
  return c;
}

const Rule kAllRules[] = {Rule::SGD, Rule::NSAM, Rule::SAM1, Rule::LSAM, Rule::JSAM, Rule::REGSGD};

}  // namespace

TEST_CASE("rule names round trip") {
  for (auto r : kAllRules) CHECK(rule_from_string(to_string(r)) == r);
  CHECK(rule_from_string("1-SAM") == Rule::SAM1);
  CHECK_THROWS_AS(rule_from_string("adam"), InvalidArgument);
}

TEST_CASE("config validation") {
  OptimConfig c;
  c.lr = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.rho = -0.1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.full_batch = true;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("SGD at the origin steps by lr * t * x / 2") {
  const auto d = binary_data({{1.0, -2.0}}, {1});
  const auto idx = all_indices(1);
  const Model w = step_sgd(Model::linear(2), d, idx, with(Rule::SGD, 0.0, 0.1));
  CHECK(w.params()[0] == doctest::Approx(0.05));
  CHECK(w.params()[1] == doctest::Approx(-0.1));
}

TEST_CASE("a symmetric pair cancels") {
  const auto d = binary_data({{1.0, 2.0}, {1.0, 2.0}}, {1, -1});
  const Model w = step_sgd(Model::linear(2), d, all_indices(2), with(Rule::SGD, 0.0));
  CHECK(w.params()[0] == 0.0);
  CHECK(w.params()[1] == 0.0);
}

TEST_CASE("SGD step matches a direct sum of gradients") {
  const auto d = random_binary(37, 6, 11);
  Model m = Model::dln2(6, 4);
  fill_random(m, 2, 0.5);
  OptimConfig c = with(Rule::SGD, 0.0, 0.07);
  c.weight_decay = 0.01;
  const Model next = step_sgd(m, d, all_indices(d.n), c);

  std::vector<double> mean(m.param_count(), 0.0);
  for (std::size_t i = 0; i < d.n; ++i) {
    const auto g = grad_decomp(m, d.row(i), d.observed[i]).grad;
    for (std::size_t j = 0; j < g.size(); ++j) mean[j] += g[j] / static_cast<double>(d.n);
  }
  std::vector<double> expect(m.param_count());
  for (std::size_t j = 0; j < expect.size(); ++j) expect[j] = m.params()[j] - 0.07 * (mean[j] + 0.01 * m.params()[j]);
  CHECK(relative_error(next.params(), expect) < 1e-13);
}

TEST_CASE("rho = 0 reproduces SGD bit for bit") {
  const auto d = random_binary(40, 5, 3);
  for (auto fam : {Family::Linear, Family::DLN2, Family::MLP}) {
    Model m = fam == Family::Linear ? Model::linear(5) : fam == Family::DLN2 ? Model::dln2(5, 3) : Model::mlp(5, 3, 1);
    fill_random(m, 7);
    const Model sgd = step_sgd(m, d, all_indices(d.n), with(Rule::SGD, 0.0));
    CHECK(step_nsam(m, d, all_indices(d.n), with(Rule::NSAM, 0.0)) == sgd);
    CHECK(step_sam1(m, d, all_indices(d.n), with(Rule::SAM1, 0.0)) == sgd);
    CHECK(step_lsam(m, d, all_indices(d.n), with(Rule::LSAM, 0.0)) == sgd);
    CHECK(step_jsam(m, d, all_indices(d.n), with(Rule::JSAM, 0.0)) == sgd);
    if (fam != Family::Linear) CHECK(step_regsgd(m, d, all_indices(d.n), with(Rule::REGSGD, 0.0)) == sgd);
  }
  CHECK(collapse_check().pass);
}

TEST_CASE("NSAM on a single example equals SAM1") {
  const auto d = random_binary(5, 4, 8);
  Model m = Model::dln2(4, 3);
  fill_random(m, 1);
  for (std::size_t i = 0; i < d.n; ++i) {
    const std::vector<std::size_t> one{i};
    const Model a = step_nsam(m, d, one, with(Rule::NSAM, 0.3));
    const Model b = step_sam1(m, d, one, with(Rule::SAM1, 0.3));
    CHECK(relative_error(a.params(), b.params()) < 1e-14);
  }
}

TEST_CASE("linear identities and their failure on DLN2") {
  const auto d = random_binary(30, 6, 4);
  Model lin = Model::linear(6);
  fill_random(lin, 2, 0.3);
  const auto idx = all_indices(d.n);
  CHECK(relative_error(step_sam1(lin, d, idx, with(Rule::SAM1, 0.5)).params(),
                       step_lsam(lin, d, idx, with(Rule::LSAM, 0.5)).params()) <= 1e-12);
  CHECK(relative_error(step_jsam(lin, d, idx, with(Rule::JSAM, 0.5)).params(),
                       step_sgd(lin, d, idx, with(Rule::SGD, 0.5)).params()) <= 1e-12);
  CHECK(linear_identity_check().pass);

  Model dln = Model::dln2(6, 4);
  fill_random(dln, 5, 0.5);
  const Model base = step_sgd(dln, d, idx, with(Rule::SGD, 0.0));
  const Model s = step_sam1(dln, d, idx, with(Rule::SAM1, 0.5));
  const Model l = step_lsam(dln, d, idx, with(Rule::LSAM, 0.5));
  const Model j = step_jsam(dln, d, idx, with(Rule::JSAM, 0.5));
  CHECK(relative_error(s.params(), l.params()) > 1e-6);
  CHECK(relative_error(j.params(), base.params()) > 1e-6);
}

TEST_CASE("1-SAM linear update shifts the margin by rho |x|") {
  Model m = Model::linear(3);
  m.params()[0] = 0.4;
  m.params()[1] = -0.2;
  const std::vector<double> x{1.0, 2.0, 2.0};  // |x| = 3
  const double rho = 0.25;
  for (std::int64_t t : {1, -1}) {
    Optimizer opt(with(Rule::SAM1, rho), m);
    std::vector<double> out(3);
    opt.example_update(m, x, t, {}, out);
    const double tt = static_cast<double>(t);
    const double margin = tt * (0.4 * 1.0 - 0.2 * 2.0);
    const double s = sigmoid(-(margin - rho * 3.0));
    for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(-tt * s * x[i]).epsilon(1e-13));
  }
}

TEST_CASE("J-SAM hand example: penalty coefficient one half") {
  Model m = Model::dln2(2, 2);
  auto p = m.params();
  p[0] = 1.0;
  p[3] = 1.0;
  p[4] = 1.0;
  const std::vector<double> x{0.0, 1.0};
  const double rho = std::sqrt(2.0);
  Optimizer opt(with(Rule::JSAM, rho), m);
  std::vector<double> out(m.param_count());
  opt.example_update(m, x, 1, {}, out);
  const auto g = grad_decomp(m, x, 1).grad;
  // Extra term 0.5 * z x^T on W (z = (0, 1)) and 0.5 * |x|^2 * v on v.
  std::vector<double> expect = g;
  expect[3] += 0.5;
  expect[4] += 0.5;
  CHECK(relative_error(out, expect) < 1e-14);
  CHECK(jsam_identity_check(200).pass);
}

TEST_CASE("a zero per-example gradient skips the perturbation") {
  CHECK(Optimizer::perturbation_scale(std::vector<double>{0.0, 0.0}, 1.0) < 0.0);
  CHECK(Optimizer::perturbation_scale(std::vector<double>{3.0, 4.0}, 1.0) == doctest::Approx(0.2));
  // DLN2 at the origin has a zero gradient; SAM1 then matches SGD.
  const auto d = random_binary(10, 3, 2);
  const Model z = Model::dln2(3, 2);
  CHECK(step_sam1(z, d, all_indices(d.n), with(Rule::SAM1, 0.5)) ==
        step_sgd(z, d, all_indices(d.n), with(Rule::SGD, 0.0)));
  CHECK(step_nsam(z, d, all_indices(d.n), with(Rule::NSAM, 0.5)) ==
        step_sgd(z, d, all_indices(d.n), with(Rule::SGD, 0.0)));
}

TEST_CASE("regularized SGD follows the penalized objective") {
  const auto d = random_binary(12, 4, 6);
  Model m = Model::dln2(4, 3);
  fill_random(m, 9, 0.7);
  OptimConfig c = with(Rule::REGSGD, 0.0);
  c.gamma_z = 0.3;
  c.gamma_v = 0.2;
  Optimizer opt(c, m);
  std::vector<double> mean(m.param_count());
  opt.mean_update(m, d, all_indices(d.n), mean);

  auto objective = [&](const Model& w) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.n; ++i) {
      const auto x = d.row(i);
      total += loss_value(forward(w, x), d.observed[i]);
      double zz = 0.0;
      for (std::size_t j = 0; j < w.hidden_dim(); ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < w.input_dim(); ++k) s += w.first_layer()[j * w.input_dim() + k] * x[k];
        zz += s * s;
      }
      total += c.gamma_z * std::sqrt(zz);
    }
    double vv = 0.0;
    for (double v : w.last_layer()) vv += v * v;
    return total / static_cast<double>(d.n) + c.gamma_v * vv;
  };
  std::vector<double> numeric(m.param_count());
  Model probe = m;
  for (std::size_t j = 0; j < numeric.size(); ++j) {
    const double keep = probe.params()[j];
    probe.params()[j] = keep + 1e-6;
    const double up = objective(probe);
    probe.params()[j] = keep - 1e-6;
    const double down = objective(probe);
    probe.params()[j] = keep;
    numeric[j] = (up - down) / 2e-6;
  }
  CHECK(relative_error(mean, numeric) < 1e-7);

  CHECK_THROWS_AS(Optimizer(c, Model::linear(4)), UnsupportedModel);
}

TEST_CASE("minibatch order does not change the full-batch mean beyond rounding") {
  const auto d = random_binary(50, 5, 12);
  Model m = Model::mlp(5, 4, 1);
  fill_random(m, 3, 0.5);
  auto idx = all_indices(d.n);
  Optimizer opt(with(Rule::SAM1, 0.2), m);
  std::vector<double> a(m.param_count()), b(m.param_count());
  opt.mean_update(m, d, idx, a);
  std::reverse(idx.begin(), idx.end());
  opt.mean_update(m, d, idx, b);
  CHECK(relative_error(a, b) < 1e-13);
}

TEST_CASE("multiclass steps keep parameters finite") {
  MixtureConfig mc;
  mc.n_train = 64;
  mc.n_test = 1;
  mc.dim = 12;
  mc.num_classes = 5;
  const auto d = sample_mixture(mc).train;
  for (auto rule : kAllRules) {
    Model m = Model::mlp(12, 8, 5);
    m.init_fan_in(1);
    OptimConfig c = with(rule, 0.5, 0.5);
    c.gamma_z = 0.1;
    c.gamma_v = 0.1;
    Optimizer opt(c, m);
    for (int it = 0; it < 20; ++it) opt.step(m, d, all_indices(d.n));
    for (double p : m.params()) CHECK(std::isfinite(p));
  }
}
