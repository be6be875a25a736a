#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace snl {

// Binary tasks carry labels in {-1, +1}; multiclass tasks carry class indices 0..K-1.
enum class LabelEncoding { Signed, Index };

struct LabeledDataset {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::size_t num_classes = 2;
  LabelEncoding encoding = LabelEncoding::Index;
  std::vector<double> inputs;  // row-major n x dim
  std::vector<std::int64_t> observed;
  std::vector<std::int64_t> truth;
  std::vector<std::uint8_t> clean;  // clean[i] == (observed[i] == truth[i])

  bool binary() const noexcept { return encoding == LabelEncoding::Signed; }
  std::span<const double> row(std::size_t i) const noexcept { return {inputs.data() + i * dim, dim}; }
  std::span<double> row(std::size_t i) noexcept { return {inputs.data() + i * dim, dim}; }

  std::size_t noisy_count() const noexcept {
    std::size_t k = 0;
    for (auto c : clean) k += c ? 0 : 1;
    return k;
  }

  // Recomputes clean from observed and truth.
  void refresh_mask();
};

// Copies the rows listed in `indices` (in that order).
LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> indices);

}  // namespace snl
