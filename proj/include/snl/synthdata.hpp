#pragma once
// Synthetic data: the toy Gaussian signal-plus-noise distribution, a
// multiclass Gaussian mixture used for desk-scale nonlinear runs, and
// seeded label corruption.

#include <cstdint>
#include <utility>
#include <vector>

#include "snl/dataset.hpp"

namespace snl {

// x = y * [B, z],  z ~ N(0, gamma^2/(dim-1) I),  y a fair coin in {-1,+1}.
struct ToyDataConfig {
  double signal_b = 2.0;
  double gamma = 1.0;
  std::size_t dim = 1000;
  double noise_rate = 0.4;
  std::size_t n_train = 500;
  std::size_t n_test = 1000;
  std::uint64_t seed = 0;

  void validate() const;
  double noise_variance() const { return gamma * gamma / static_cast<double>(dim - 1); }
};

struct Split {
  LabeledDataset train;
  LabeledDataset test;
};

// Training targets carry exactly round(noise_rate * n_train) sign flips; the
// test split is noiseless. Inputs do not depend on noise_rate.
Split sample_toy(const ToyDataConfig& config);

// K-class mixture: class c has mean separation * u_c for fixed random unit
// vectors u_c, plus isotropic noise with per-coordinate variance noise^2/dim.
// The class directions depend only on `geometry_seed`, so train and test (and
// every run seed) share one distribution.
struct MixtureConfig {
  std::size_t num_classes = 10;
  std::size_t dim = 200;
  double separation = 1.0;
  double noise = 4.0;
  double noise_rate = 0.3;
  std::size_t n_train = 1000;
  std::size_t n_test = 2000;
  std::uint64_t geometry_seed = 4321;
  std::uint64_t seed = 0;

  void validate() const;
};

Split sample_mixture(const MixtureConfig& config);

struct Corruption {
  std::vector<std::int64_t> targets;
  std::vector<std::uint8_t> clean;
};

// Picks round(delta*n) indices by a seeded shuffle prefix and replaces each
// selected label with a uniformly drawn wrong class. Signed labels are flipped.
Corruption corrupt_labels(const std::vector<std::int64_t>& targets, std::size_t num_classes,
                          double delta, std::uint64_t seed,
                          LabelEncoding encoding = LabelEncoding::Index);

// Applies corrupt_labels to the observed targets of a dataset in place.
void corrupt_dataset(LabeledDataset& data, double delta, std::uint64_t seed);

}  // namespace snl
