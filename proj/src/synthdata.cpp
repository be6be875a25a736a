#include "snl/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "snl/error.hpp"
#include "snl/kernels.hpp"
#include "snl/rng.hpp"

namespace snl {

void LabeledDataset::refresh_mask() {
  clean.resize(n);
  for (std::size_t i = 0; i < n; ++i) clean[i] = observed[i] == truth[i] ? 1 : 0;
}

LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> indices) {
  LabeledDataset out;
  out.n = indices.size();
  out.dim = data.dim;
  out.num_classes = data.num_classes;
  out.encoding = data.encoding;
  out.inputs.resize(out.n * out.dim);
  out.observed.resize(out.n);
  out.truth.resize(out.n);
  out.clean.resize(out.n);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= data.n) throw InvalidArgument("subset index " + std::to_string(i) + " out of range");
    std::copy_n(data.inputs.begin() + static_cast<std::ptrdiff_t>(i * data.dim), data.dim,
                out.inputs.begin() + static_cast<std::ptrdiff_t>(k * data.dim));
    out.observed[k] = data.observed[i];
    out.truth[k] = data.truth[i];
    out.clean[k] = data.clean[i];
  }
  return out;
}

void ToyDataConfig::validate() const {
  if (dim < 2) throw InvalidArgument("toy data needs dim >= 2");
  if (!(noise_rate >= 0.0 && noise_rate < 0.5)) throw InvalidArgument("toy noise_rate must lie in [0, 0.5)");
  if (!(gamma >= 0.0)) throw InvalidArgument("toy gamma must be >= 0");
  if (n_train == 0 || n_test == 0) throw InvalidArgument("toy splits must be nonempty");
}

namespace {

LabeledDataset toy_split(const ToyDataConfig& c, std::size_t n, std::uint64_t label_stream,
                         std::uint64_t noise_stream) {
  LabeledDataset d;
  d.n = n;
  d.dim = c.dim;
  d.num_classes = 2;
  d.encoding = LabelEncoding::Signed;
  d.inputs.resize(n * c.dim);
  d.truth.resize(n);

  auto label_rng = make_stream(c.seed, label_stream);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < n; ++i) d.truth[i] = coin(label_rng) ? 1 : -1;

  auto noise_rng = make_stream(c.seed, noise_stream);
  std::normal_distribution<double> noise(0.0, std::sqrt(c.noise_variance()));
  for (std::size_t i = 0; i < n; ++i) {
    double* x = d.inputs.data() + i * c.dim;
    const auto y = static_cast<double>(d.truth[i]);
    x[0] = y * c.signal_b;
    for (std::size_t j = 1; j < c.dim; ++j) x[j] = y * noise(noise_rng);
  }
  d.observed = d.truth;
  d.clean.assign(n, 1);
  return d;
}

}  // namespace

Split sample_toy(const ToyDataConfig& config) {
  config.validate();
  Split s;
  s.train = toy_split(config, config.n_train, streams::kTrainLabels, streams::kTrainNoise);
  s.test = toy_split(config, config.n_test, streams::kTestLabels, streams::kTestNoise);
  corrupt_dataset(s.train, config.noise_rate, config.seed);
  return s;
}

void MixtureConfig::validate() const {
  if (num_classes < 2) throw InvalidArgument("mixture needs at least 2 classes");
  if (dim < 1) throw InvalidArgument("mixture needs dim >= 1");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw InvalidArgument("mixture noise_rate must lie in [0, 1]");
  if (n_train == 0 || n_test == 0) throw InvalidArgument("mixture splits must be nonempty");
}

Split sample_mixture(const MixtureConfig& c) {
  c.validate();
  std::vector<double> centers(c.num_classes * c.dim);
  {
    auto rng = make_stream(c.geometry_seed, streams::kGeometry);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t k = 0; k < c.num_classes; ++k) {
      double* u = centers.data() + k * c.dim;
      for (std::size_t j = 0; j < c.dim; ++j) u[j] = g(rng);
      const double norm = std::sqrt(kernels::sum_sq(u, c.dim));
      for (std::size_t j = 0; j < c.dim; ++j) u[j] *= c.separation / norm;
    }
  }

  auto draw = [&](std::size_t n, std::uint64_t label_stream, std::uint64_t noise_stream) {
    LabeledDataset d;
    d.n = n;
    d.dim = c.dim;
    d.num_classes = c.num_classes;
    d.encoding = LabelEncoding::Index;
    d.inputs.resize(n * c.dim);
    d.truth.resize(n);
    auto label_rng = make_stream(c.seed, label_stream);
    std::uniform_int_distribution<std::int64_t> cls(0, static_cast<std::int64_t>(c.num_classes) - 1);
    for (auto& t : d.truth) t = cls(label_rng);
    auto noise_rng = make_stream(c.seed, noise_stream);
    std::normal_distribution<double> noise(0.0, c.noise / std::sqrt(static_cast<double>(c.dim)));
    for (std::size_t i = 0; i < n; ++i) {
      const double* mu = centers.data() + static_cast<std::size_t>(d.truth[i]) * c.dim;
      double* x = d.inputs.data() + i * c.dim;
      for (std::size_t j = 0; j < c.dim; ++j) x[j] = mu[j] + noise(noise_rng);
    }
    d.observed = d.truth;
    d.clean.assign(n, 1);
    return d;
  };

  Split s;
  s.train = draw(c.n_train, streams::kTrainLabels, streams::kTrainNoise);
  s.test = draw(c.n_test, streams::kTestLabels, streams::kTestNoise);
  corrupt_dataset(s.train, c.noise_rate, c.seed);
  return s;
}

Corruption corrupt_labels(const std::vector<std::int64_t>& targets, std::size_t num_classes,
                          double delta, std::uint64_t seed, LabelEncoding encoding) {
  if (num_classes < 2) throw InvalidArgument("corrupt_labels needs K >= 2");
  if (!(delta >= 0.0 && delta <= 1.0)) throw InvalidArgument("corrupt_labels needs delta in [0, 1]");
  const std::size_t n = targets.size();
  Corruption out{targets, std::vector<std::uint8_t>(n, 1)};
  const auto count = static_cast<std::size_t>(std::llround(delta * static_cast<double>(n)));
  if (count == 0) return out;

  auto rng = make_stream(seed, streams::kCorruption);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  const auto wrong_classes = static_cast<std::int64_t>(num_classes) - 2;
  std::uniform_int_distribution<std::int64_t> pick(0, wrong_classes);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = order[k];
    if (encoding == LabelEncoding::Signed) {
      out.targets[i] = -targets[i];
    } else {
      // Draw among the K-1 wrong classes by skipping over the true one.
      const std::int64_t j = pick(rng);
      out.targets[i] = j < targets[i] ? j : j + 1;
    }
    out.clean[i] = 0;
  }
  return out;
}

void corrupt_dataset(LabeledDataset& data, double delta, std::uint64_t seed) {
  auto c = corrupt_labels(data.truth, data.num_classes, delta, seed, data.encoding);
  data.observed = std::move(c.targets);
  data.clean = std::move(c.clean);
}

}  // namespace snl
