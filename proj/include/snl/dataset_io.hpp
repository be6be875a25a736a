#pragma once
// Readers for IDX and CIFAR-10 binary files, and the flat SNLD container
// used to export generated datasets.
//
// SNLD layout (little-endian):
//   char[4] "SNLD" | u32 version (=1) | u64 n | u64 d | u64 K | u32 encoding
//   f64 inputs[n*d] (row-major) | i64 observed[n] | i64 true[n]

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "snl/dataset.hpp"

namespace snl {

struct IdxArray {
  std::uint8_t type_code = 0x08;  // 0x08 u8, 0x09 i8, 0x0B i16, 0x0C i32, 0x0D f32, 0x0E f64
  std::vector<std::uint32_t> dims;
  std::vector<double> values;  // raw values, no scaling
};

IdxArray read_idx(const std::filesystem::path& path);
void write_idx_u8(const std::filesystem::path& path, const std::vector<std::uint32_t>& dims,
                  const std::vector<std::uint8_t>& values);

struct ChannelNorm {
  std::array<double, 3> mean{0.4914, 0.4822, 0.4465};
  std::array<double, 3> std{0.2023, 0.1994, 0.2010};
};

// Image file (u8, dims n x ...) and label file (u8, dims n). Pixels are scaled
// to [0, 1] and each image is flattened.
LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// Records of 1 label byte followed by 3072 channel-major pixel bytes. With
// `normalize`, channel c is mapped to (v - mean[c]) / std[c] after scaling.
LabeledDataset load_cifar_binary(const std::filesystem::path& path, bool normalize = false,
                                 const ChannelNorm& norm = {});

void save_snld(const std::filesystem::path& path, const LabeledDataset& data);
LabeledDataset load_snld(const std::filesystem::path& path);

}  // namespace snl
