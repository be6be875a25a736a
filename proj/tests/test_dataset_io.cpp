#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "snl/dataset_io.hpp"
#include "snl/error.hpp"
#include "snl/synthdata.hpp"

using namespace snl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  auto p = fs::temp_directory_path() / "snl_io_tests";
  fs::create_directories(p);
  return p;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream os(p, std::ios::binary);
  os.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST_CASE("IDX images flatten to vectors") {
  const auto dir = scratch_dir();
  std::vector<std::uint8_t> px(10 * 28 * 28);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i % 256);
  write_idx_u8(dir / "img.idx", {10, 28, 28}, px);
  std::vector<std::uint8_t> labels{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  write_idx_u8(dir / "lab.idx", {10}, labels);

  const auto raw = read_idx(dir / "img.idx");
  CHECK(raw.dims == std::vector<std::uint32_t>{10, 28, 28});

  const auto d = load_idx(dir / "img.idx", dir / "lab.idx");
  CHECK(d.n == 10);
  CHECK(d.dim == 784);
  CHECK(d.num_classes == 10);
  CHECK(d.truth[7] == 7);
  CHECK(d.inputs[255] == doctest::Approx(1.0));
  CHECK(d.inputs[1] == doctest::Approx(1.0 / 255.0));
}

TEST_CASE("IDX header starts with 0x00000803 for rank-3 unsigned bytes") {
  const auto dir = scratch_dir();
  write_idx_u8(dir / "hdr.idx", {1, 2, 2}, {1, 2, 3, 4});
  std::ifstream is(dir / "hdr.idx", std::ios::binary);
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  CHECK(b[0] == 0);
  CHECK(b[1] == 0);
  CHECK(b[2] == 0x08);
  CHECK(b[3] == 0x03);
}

TEST_CASE("malformed IDX files report a byte offset") {
  const auto dir = scratch_dir();
  write_bytes(dir / "magic.idx", {0x12, 0x34, 0x08, 0x01, 0, 0, 0, 1, 5});
  try {
    read_idx(dir / "magic.idx");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 0);
    CHECK(std::string(e.what()).find("byte offset 0") != std::string::npos);
  }

  write_bytes(dir / "short.idx", {0, 0, 0x08, 0x01, 0, 0, 0, 4, 1, 2});
  try {
    read_idx(dir / "short.idx");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 8);
  }

  write_bytes(dir / "huge.idx", {0, 0, 0x08, 0x03, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF});
  CHECK_THROWS_AS(read_idx(dir / "huge.idx"), ParseError);
  write_bytes(dir / "type.idx", {0, 0, 0x07, 0x01, 0, 0, 0, 1, 0});
  CHECK_THROWS_AS(read_idx(dir / "type.idx"), ParseError);
  CHECK_THROWS_AS(read_idx(dir / "missing.idx"), IoError);
}

TEST_CASE("CIFAR-10 records") {
  const auto dir = scratch_dir();
  std::vector<std::uint8_t> bytes(2 * 3073, 0);
  bytes[0] = 3;
  bytes[1] = 255;
  bytes[3073] = 9;
  bytes[3073 + 1 + 1024] = 51;  // first green pixel of record 2
  write_bytes(dir / "batch.bin", bytes);

  const auto d = load_cifar_binary(dir / "batch.bin");
  CHECK(d.n == 2);
  CHECK(d.dim == 3072);
  CHECK(d.truth[0] == 3);
  CHECK(d.truth[1] == 9);
  CHECK(d.inputs[0] == 1.0);
  CHECK(d.inputs[3072 + 1024] == doctest::Approx(0.2));

  const auto n = load_cifar_binary(dir / "batch.bin", true);
  CHECK(n.inputs[0] == doctest::Approx((1.0 - 0.4914) / 0.2023));
  CHECK(n.inputs[3072 + 1024] == doctest::Approx((0.2 - 0.4822) / 0.1994));

  // A value equal to the channel mean maps to zero.
  ChannelNorm at_mean;
  at_mean.mean = {51.0 / 255.0, 0.0, 0.0};
  bytes[1] = 51;
  write_bytes(dir / "mean.bin", bytes);
  CHECK(load_cifar_binary(dir / "mean.bin", true, at_mean).inputs[0] == doctest::Approx(0.0));

  bytes.pop_back();
  write_bytes(dir / "cut.bin", bytes);
  try {
    load_cifar_binary(dir / "cut.bin");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 3073);
  }
  bytes.push_back(0);
  bytes[0] = 10;
  write_bytes(dir / "label.bin", bytes);
  CHECK_THROWS_AS(load_cifar_binary(dir / "label.bin"), ParseError);
}

TEST_CASE("SNLD round trip") {
  const auto dir = scratch_dir();
  ToyDataConfig c;
  c.dim = 7;
  c.n_train = 40;
  c.n_test = 3;
  const auto s = sample_toy(c);
  save_snld(dir / "train.snld", s.train);
  const auto back = load_snld(dir / "train.snld");
  CHECK(back.n == s.train.n);
  CHECK(back.dim == 7);
  CHECK(back.binary());
  CHECK(back.inputs == s.train.inputs);
  CHECK(back.observed == s.train.observed);
  CHECK(back.truth == s.train.truth);
  CHECK(back.clean == s.train.clean);

  MixtureConfig m;
  m.n_train = 12;
  m.n_test = 1;
  m.dim = 5;
  const auto mix = sample_mixture(m).train;
  save_snld(dir / "mix.snld", mix);
  const auto mb = load_snld(dir / "mix.snld");
  CHECK_FALSE(mb.binary());
  CHECK(mb.num_classes == 10);
  CHECK(mb.observed == mix.observed);
}

TEST_CASE("malformed SNLD files") {
  const auto dir = scratch_dir();
  write_bytes(dir / "bad.snld", {'S', 'N', 'L', 'X', 1, 0, 0, 0});
  CHECK_THROWS_AS(load_snld(dir / "bad.snld"), ParseError);

  ToyDataConfig c;
  c.dim = 3;
  c.n_train = 5;
  c.n_test = 1;
  save_snld(dir / "ok.snld", sample_toy(c).train);
  std::ifstream is(dir / "ok.snld", std::ios::binary);
  std::vector<std::uint8_t> b{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
  b.resize(b.size() - 3);
  write_bytes(dir / "cut.snld", b);
  try {
    load_snld(dir / "cut.snld");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 36);
  }
  b.resize(20);
  write_bytes(dir / "header.snld", b);
  CHECK_THROWS_AS(load_snld(dir / "header.snld"), ParseError);
}
