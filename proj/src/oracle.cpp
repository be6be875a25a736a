#include "snl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>

#include "json.hpp"

#include "snl/error.hpp"
#include "snl/metrics.hpp"
#include "snl/optim.hpp"
#include "snl/synthdata.hpp"

namespace snl {

namespace {

double plain_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ab += a[i] * b[i];
  return ab / (plain_norm(a) * plain_norm(b));
}

double plain_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

OracleReport finish(std::string name, double err, double tol, std::size_t n) {
  return {std::move(name), err, tol, err <= tol, n};
}

std::vector<double> normal_vector(std::mt19937_64& rng, std::size_t n, double std = 1.0) {
  std::normal_distribution<double> g(0.0, std);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

std::int64_t random_label(std::mt19937_64& rng, std::size_t outputs) {
  if (outputs == 1) return std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
  return std::uniform_int_distribution<std::int64_t>(0, static_cast<std::int64_t>(outputs) - 1)(rng);
}

Model random_model(std::mt19937_64& rng, Family family, std::size_t d, std::size_t h, std::size_t k) {
  Model m = family == Family::Linear ? Model::linear(d, k)
            : family == Family::DLN2 ? Model::dln2(d, h, k)
                                     : Model::mlp(d, h, k, Activation::ReLU);
  auto p = m.params();
  const auto v = normal_vector(rng, p.size());
  std::copy(v.begin(), v.end(), p.begin());
  return m;
}

LabeledDataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t d, std::size_t outputs) {
  LabeledDataset data;
  data.n = n;
  data.dim = d;
  data.num_classes = outputs == 1 ? 2 : outputs;
  data.encoding = outputs == 1 ? LabelEncoding::Signed : LabelEncoding::Index;
  data.inputs = normal_vector(rng, n * d);
  for (std::size_t i = 0; i < n; ++i) data.observed.push_back(random_label(rng, outputs));
  data.truth = data.observed;
  data.refresh_mask();
  return data;
}

// Pre-activations computed directly, for kink detection.
bool near_kink(const Model& m, std::span<const double> x, double window) {
  const auto w = m.first_layer();
  for (std::size_t j = 0; j < m.hidden_dim(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.input_dim(); ++i) s += w[j * m.input_dim() + i] * x[i];
    if (std::abs(s) < window) return true;
  }
  return false;
}

}  // namespace

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("relative_error: length mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(diff) / std::max({plain_norm(a), plain_norm(b), 1e-12});
}

OracleReport fd_gradient_check(Family family, std::size_t n_instances, double tol, std::uint64_t seed,
                               GradientFn grad) {
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (!grad) {
    grad = [](const Model& m, std::span<const double> x, std::int64_t t) { return grad_decomp(m, x, t).grad; };
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(2, 8), width(1, 6);
  double worst = 0.0;
  std::size_t done = 0;
  while (done < n_instances) {
    const std::size_t d = dim(rng);
    const std::size_t h = width(rng);
    const std::size_t k = family == Family::MLP ? 3 : (done % 2 == 0 ? 1 : 3);
    Model m = random_model(rng, family, d, h, k);
    const auto x = normal_vector(rng, d);
    const std::int64_t t = random_label(rng, k);
    if (family == Family::MLP && near_kink(m, x, 10.0 * kFdStep)) continue;

    const auto analytic = grad(m, x, t);
    std::vector<double> numeric(m.param_count());
    auto p = m.params();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double keep = p[j];
      p[j] = keep + kFdStep;
      const double up = loss_value(forward(m, x), t);
      p[j] = keep - kFdStep;
      const double down = loss_value(forward(m, x), t);
      p[j] = keep;
      numeric[j] = (up - down) / (2.0 * kFdStep);
    }
    worst = std::max(worst, relative_error(analytic, numeric));
    ++done;
  }
  return finish(std::string("fd_gradient_") + to_string(family), worst, tol, done);
}

OracleReport jsam_identity_check(std::size_t n_instances, double tol, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 8), width(1, 8);
  std::uniform_real_distribution<double> rho_dist(0.01, 2.0);
  double worst = 0.0;
  for (std::size_t n = 0; n < n_instances; ++n) {
    const std::size_t d = dim(rng), h = width(rng);
    Model m = random_model(rng, Family::DLN2, d, h, 1);
    const auto x = normal_vector(rng, d);
    const std::int64_t t = random_label(rng, 1);
    const double rho = rho_dist(rng);

    OptimConfig cfg;
    cfg.rule = Rule::JSAM;
    cfg.rho = rho;
    Optimizer opt(cfg, m);
    std::vector<double> lib(m.param_count());
    opt.example_update(m, x, t, {}, lib);

    const auto W = m.first_layer();
    const auto v = m.last_layer();
    std::vector<double> z(h, 0.0);
    for (std::size_t j = 0; j < h; ++j) {
      for (std::size_t i = 0; i < d; ++i) z[j] += W[j * d + i] * x[i];
    }
    double f = 0.0, zz = 0.0, vv = 0.0, xx = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      f += v[j] * z[j];
      zz += z[j] * z[j];
      vv += v[j] * v[j];
    }
    for (double xi : x) xx += xi * xi;
    const double s = plain_sigmoid(-static_cast<double>(t) * f);
    const double J = std::sqrt(zz + xx * vv);
    const double tt = static_cast<double>(t);
    std::vector<double> closed(m.param_count());
    for (std::size_t j = 0; j < h; ++j) {
      for (std::size_t i = 0; i < d; ++i) {
        closed[j * d + i] = -tt * s * v[j] * x[i] + rho * s / J * z[j] * x[i];
      }
      closed[h * d + j] = -tt * s * z[j] + rho * s * xx / J * v[j];
    }
    worst = std::max(worst, relative_error(lib, closed));
  }
  return finish("jsam_identity_dln2", worst, tol, n_instances);
}

double reweight_factor(double z, double c) { return (1.0 + std::exp(z)) / (1.0 + std::exp(z - c)); }

OracleReport lemma_monotonicity_check(std::span<const double> c_grid, double z_lo, double z_hi,
                                      std::size_t points) {
  if (points < 2) throw InvalidArgument("need at least two grid points");
  // Unit-norm example so that the perturbation shifts the margin by exactly c.
  const std::vector<double> x{0.6, 0.8};
  double worst = 0.0;
  bool monotone = true;
  std::size_t n = 0;
  for (double c : c_grid) {
    if (!(c > 0.0)) throw InvalidArgument("monotonicity grid needs c > 0");
    double prev = -1.0;
    for (std::size_t k = 0; k < points; ++k) {
      const double z = z_lo + (z_hi - z_lo) * static_cast<double>(k) / static_cast<double>(points - 1);
      const double f = reweight_factor(z, c);
      const double slope = (std::exp(z) - std::exp(z - c)) / std::pow(1.0 + std::exp(z - c), 2.0);
      if (!(slope > 0.0) || (k > 0 && !(f > prev))) monotone = false;
      prev = f;

      Model m = Model::linear(2);
      m.params()[0] = z * x[0];
      m.params()[1] = z * x[1];
      const double lib = logit_upweight_ratio(m, x, 1, c);
      worst = std::max(worst, std::abs(lib - f) / f);
      ++n;
    }
  }
  OracleReport r = finish("lemma_monotonicity", worst, 1e-12, n);
  r.pass = r.pass && monotone;
  return r;
}

OracleReport asymptotic_sam_check(const LabeledDataset& data, double rho, double tol) {
  if (!data.binary()) throw InvalidArgument("asymptotic check needs a binary dataset");
  Model m = Model::linear(data.dim);
  OptimConfig cfg;
  cfg.rule = Rule::SAM1;
  cfg.rho = rho;
  cfg.full_batch = true;
  Optimizer opt(cfg, m);
  std::vector<double> mean(m.param_count());
  const auto idx = all_indices(data.n);
  opt.mean_update(m, data, idx, mean);
  std::vector<double> step(mean.size()), xt(data.dim, 0.0);
  for (std::size_t j = 0; j < mean.size(); ++j) step[j] = -mean[j];
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t j = 0; j < data.dim; ++j) xt[j] += static_cast<double>(data.observed[i]) * data.inputs[i * data.dim + j];
  }
  return finish("asymptotic_sam_cosine", 1.0 - cosine(step, xt), tol, data.n);
}

OracleReport asymptotic_scale_spread_check(const LabeledDataset& data, double rho, double tol) {
  Model m = Model::linear(data.dim);
  double lo = INFINITY, hi = 0.0;
  Workspace ws(m);
  std::vector<double> g(m.param_count());
  for (std::size_t i = 0; i < data.n; ++i) {
    loss_gradient(m, data.row(i), data.observed[i], ws, g);
    const Model shifted = perturb(m, g, rho);
    const double s = logit_scale(forward(shifted, data.row(i)), data.observed[i])[0];
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return finish("asymptotic_sam_scale_spread", hi / lo - 1.0, tol, data.n);
}

OracleReport first_coordinate_check(const LabeledDataset& data, double expected) {
  if (data.n < 2) throw InvalidArgument("need at least two examples");
  std::vector<double> v(data.n);
  double mean = 0.0;
  for (std::size_t i = 0; i < data.n; ++i) {
    v[i] = static_cast<double>(data.observed[i]) * data.inputs[i * data.dim];
    mean += v[i];
  }
  mean /= static_cast<double>(data.n);
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(data.n - 1);
  const double se = std::sqrt(var / static_cast<double>(data.n));
  return finish("asymptotic_first_coordinate", std::abs(mean - expected), 3.0 * se, data.n);
}

OracleReport ridge_limit_check(std::size_t n, std::size_t d, double lambda, double tol, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto X = normal_vector(rng, n * d);
  std::vector<double> t(n);
  for (auto& v : t) v = static_cast<double>(random_label(rng, 1));
  // Augmented system [X^T X + lambda I | X^T t].
  std::vector<double> a(d * (d + 1), 0.0), xt(d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t i = 0; i < n; ++i) a[r * (d + 1) + c] += X[i * d + r] * X[i * d + c];
    }
    a[r * (d + 1) + r] += lambda;
    for (std::size_t i = 0; i < n; ++i) xt[r] += X[i * d + r] * t[i];
    a[r * (d + 1) + d] = xt[r];
  }
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < d; ++r) {
      if (std::abs(a[r * (d + 1) + col]) > std::abs(a[piv * (d + 1) + col])) piv = r;
    }
    for (std::size_t c = 0; c <= d; ++c) std::swap(a[col * (d + 1) + c], a[piv * (d + 1) + c]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = a[r * (d + 1) + col] / a[col * (d + 1) + col];
      for (std::size_t c = col; c <= d; ++c) a[r * (d + 1) + c] -= f * a[col * (d + 1) + c];
    }
  }
  std::vector<double> ridge(d), scaled(d);
  for (std::size_t r = 0; r < d; ++r) {
    ridge[r] = a[r * (d + 1) + d] / a[r * (d + 1) + r];
    scaled[r] = xt[r] / lambda;
  }
  return finish("ridge_limit", 1.0 - cosine(ridge, scaled), tol, 1);
}

OracleReport collapse_check(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  struct Shape {
    Family family;
    std::size_t h, k;
  };
  const Shape shapes[] = {{Family::Linear, 0, 1}, {Family::Linear, 0, 3}, {Family::DLN2, 4, 1},
                          {Family::DLN2, 4, 3},   {Family::MLP, 5, 3}};
  const std::size_t d = 6, n = 40;
  double worst = 0.0;
  bool equal = true;
  std::size_t count = 0;
  for (const auto& s : shapes) {
    const Model m = random_model(rng, s.family, d, s.h, s.k);
    const auto data = random_dataset(rng, n, d, s.k);
    const auto batch = all_indices(n);
    OptimConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 1e-3;
    const Model ref = step_sgd(m, data, batch, cfg);
    std::vector<Rule> rules{Rule::NSAM, Rule::SAM1, Rule::LSAM, Rule::JSAM};
    if (m.has_hidden()) rules.push_back(Rule::REGSGD);
    for (Rule r : rules) {
      cfg.rule = r;
      Optimizer opt(cfg, m);
      Model out = m;
      opt.step(out, data, batch);
      equal = equal && out == ref;
      worst = std::max(worst, relative_error(out.params(), ref.params()));
      ++count;
    }
  }
  OracleReport r = finish("rho0_collapse", worst, 0.0, count);
  r.pass = equal;
  return r;
}

OracleReport linear_identity_check(double tol, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  std::size_t count = 0;
  for (std::size_t k : {std::size_t{1}, std::size_t{3}}) {
    for (double rho : {0.05, 0.5, 5.0}) {
      const Model m = random_model(rng, Family::Linear, 7, 0, k);
      const auto data = random_dataset(rng, 50, 7, k);
      const auto batch = all_indices(data.n);
      auto mean = [&](Rule r) {
        OptimConfig cfg;
        cfg.rule = r;
        cfg.rho = rho;
        Optimizer opt(cfg, m);
        std::vector<double> u(m.param_count());
        opt.mean_update(m, data, batch, u);
        return u;
      };
      worst = std::max(worst, relative_error(mean(Rule::SAM1), mean(Rule::LSAM)));
      worst = std::max(worst, relative_error(mean(Rule::JSAM), mean(Rule::SGD)));
      count += 2;
    }
  }
  return finish("linear_identities", worst, tol, count);
}

std::vector<OracleReport> run_oracle_suite() {
  std::vector<OracleReport> out;
  out.push_back(fd_gradient_check(Family::Linear, 100, 1e-6));
  out.push_back(fd_gradient_check(Family::DLN2, 100, 1e-5));
  out.push_back(fd_gradient_check(Family::MLP, 100, 1e-5));
  out.push_back(jsam_identity_check(1000));
  const double grid[] = {0.1, 0.5, 1.0, 2.0};
  out.push_back(lemma_monotonicity_check(grid));

  ToyDataConfig toy;
  const auto split = sample_toy(toy);
  out.push_back(asymptotic_sam_check(split.train, 1e4));
  out.push_back(asymptotic_scale_spread_check(split.train, 1e4));
  out.push_back(first_coordinate_check(split.train, (1.0 - 2.0 * toy.noise_rate) * toy.signal_b));
  out.push_back(ridge_limit_check(20, 5, 1e8));
  out.push_back(collapse_check());
  out.push_back(linear_identity_check());

  // Mutation: a sign-flipped gradient must be caught.
  auto flipped = fd_gradient_check(Family::DLN2, 20, 1e-5, 11, [](const Model& m, std::span<const double> x, std::int64_t t) {
    auto g = grad_decomp(m, x, t).grad;
    for (auto& v : g) v = -v;
    return g;
  });
  flipped.name = "mutation_negated_gradient";
  flipped.pass = !flipped.pass;
  out.push_back(flipped);
  return out;
}

void print_reports(std::ostream& os, const std::vector<OracleReport>& reports) {
  char line[160];
  std::snprintf(line, sizeof line, "%-30s %14s %12s %8s  %s\n", "check", "max_rel_err", "tol", "n", "result");
  os << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-30s %14.6e %12.3e %8zu  %s\n", r.name.c_str(), r.max_rel_err, r.tol, r.n,
                  r.pass ? "PASS" : "FAIL");
    os << line;
  }
}

void write_reports_json(const std::filesystem::path& path, const std::vector<OracleReport>& reports) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) {
    j.push_back({{"name", r.name}, {"max_rel_err", r.max_rel_err}, {"tol", r.tol}, {"pass", r.pass}, {"n", r.n}});
  }
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

}  // namespace snl
