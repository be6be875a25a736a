#include "snl/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "snl/error.hpp"

namespace snl {
namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Bounds-checked cursor over a byte buffer.
class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::uint64_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t k, const char* field) const {
    if (remaining() < k) throw ParseError(what_ + ": truncated while reading " + field, pos_);
  }

  std::uint32_t be_u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }

  template <class T>
  T le(const char* field) {
    need(sizeof(T), field);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
    pos_ += sizeof(T);
    return v;
  }

  template <class T>
  T be(const char* field) {
    need(sizeof(T), field);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::little) v = byteswap_value(v);
    pos_ += sizeof(T);
    return v;
  }

  const std::uint8_t* take(std::size_t k, const char* field) {
    need(k, field);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += k;
    return p;
  }

 private:
  template <class T>
  static T byteswap_value(T v) {
    std::uint8_t b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }

  const std::vector<std::uint8_t>& bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

template <class T>
void put_le(std::ofstream& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  out.write(b, sizeof(T));
}

constexpr char kSnldMagic[4] = {'S', 'N', 'L', 'D'};
constexpr std::uint32_t kSnldVersion = 1;

}  // namespace

IdxArray read_idx(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  Reader r(bytes, "IDX file " + path.string());
  const std::uint32_t magic = r.be_u32("magic number");
  if ((magic >> 16) != 0) throw ParseError("IDX magic must start with two zero bytes", 0);
  IdxArray a;
  a.type_code = static_cast<std::uint8_t>((magic >> 8) & 0xFF);
  const std::uint32_t rank = magic & 0xFF;
  std::size_t elem = 0;
  switch (a.type_code) {
    case 0x08:
    case 0x09: elem = 1; break;
    case 0x0B: elem = 2; break;
    case 0x0C:
    case 0x0D: elem = 4; break;
    case 0x0E: elem = 8; break;
    default: throw ParseError("unknown IDX type code " + std::to_string(a.type_code), 2);
  }
  if (rank == 0) throw ParseError("IDX rank must be positive", 3);
  std::size_t count = 1;
  for (std::uint32_t k = 0; k < rank; ++k) {
    a.dims.push_back(r.be_u32("dimension size"));
    const std::size_t dim = a.dims.back();
    if (dim != 0 && count > r.remaining() / dim) throw ParseError("IDX payload is truncated", r.offset());
    count *= dim;
  }
  r.need(count * elem, "IDX payload");
  a.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    switch (a.type_code) {
      case 0x08: a.values[i] = *r.take(1, "u8"); break;
      case 0x09: a.values[i] = static_cast<std::int8_t>(*r.take(1, "i8")); break;
      case 0x0B: a.values[i] = r.be<std::int16_t>("i16"); break;
      case 0x0C: a.values[i] = r.be<std::int32_t>("i32"); break;
      case 0x0D: a.values[i] = r.be<float>("f32"); break;
      case 0x0E: a.values[i] = r.be<double>("f64"); break;
      default: break;
    }
  }
  return a;
}

void write_idx_u8(const std::filesystem::path& path, const std::vector<std::uint32_t>& dims,
                  const std::vector<std::uint8_t>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  auto be32 = [&](std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                       static_cast<char>(v)};
    out.write(b, 4);
  };
  be32(0x00000800u | static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) be32(d);
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size()));
  if (!out) throw IoError("short write to " + path.string());
}

LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const IdxArray img = read_idx(images);
  const IdxArray lab = read_idx(labels);
  if (img.type_code != 0x08) throw ParseError("IDX images must be unsigned bytes", 2);
  if (img.dims.size() < 2) throw ParseError("IDX images need at least 2 dimensions", 3);
  if (lab.dims.size() != 1 || lab.dims[0] != img.dims[0]) {
    throw ParseError("IDX label count does not match image count", 4);
  }
  LabeledDataset d;
  d.n = img.dims[0];
  d.dim = d.n == 0 ? 0 : img.values.size() / d.n;
  d.encoding = LabelEncoding::Index;
  d.inputs.resize(img.values.size());
  for (std::size_t i = 0; i < img.values.size(); ++i) d.inputs[i] = img.values[i] / 255.0;
  d.truth.resize(d.n);
  std::int64_t max_label = 0;
  for (std::size_t i = 0; i < d.n; ++i) {
    const double v = lab.values[i];
    if (v < 0) throw ParseError("negative IDX label", 8 + i);
    d.truth[i] = static_cast<std::int64_t>(v);
    max_label = std::max(max_label, d.truth[i]);
  }
  d.num_classes = static_cast<std::size_t>(std::max<std::int64_t>(max_label + 1, 2));
  d.observed = d.truth;
  d.clean.assign(d.n, 1);
  return d;
}

LabeledDataset load_cifar_binary(const std::filesystem::path& path, bool normalize, const ChannelNorm& norm) {
  constexpr std::size_t kPixels = 3072;
  constexpr std::size_t kRecord = 1 + kPixels;
  const auto bytes = slurp(path);
  if (bytes.size() % kRecord != 0) {
    throw ParseError("CIFAR-10 file " + path.string() + " is not a whole number of 3073-byte records",
                     bytes.size() - bytes.size() % kRecord);
  }
  LabeledDataset d;
  d.n = bytes.size() / kRecord;
  d.dim = kPixels;
  d.num_classes = 10;
  d.encoding = LabelEncoding::Index;
  d.inputs.resize(d.n * kPixels);
  d.truth.resize(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    const std::uint8_t* rec = bytes.data() + i * kRecord;
    if (rec[0] > 9) throw ParseError("CIFAR-10 label out of range", i * kRecord);
    d.truth[i] = rec[0];
    double* x = d.inputs.data() + i * kPixels;
    for (std::size_t p = 0; p < kPixels; ++p) {
      double v = rec[1 + p] / 255.0;
      if (normalize) {
        const std::size_t c = p / 1024;
        v = (v - norm.mean[c]) / norm.std[c];
      }
      x[p] = v;
    }
  }
  d.observed = d.truth;
  d.clean.assign(d.n, 1);
  return d;
}

void save_snld(const std::filesystem::path& path, const LabeledDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kSnldMagic, 4);
  put_le<std::uint32_t>(out, kSnldVersion);
  put_le<std::uint64_t>(out, data.n);
  put_le<std::uint64_t>(out, data.dim);
  put_le<std::uint64_t>(out, data.num_classes);
  put_le<std::uint32_t>(out, data.encoding == LabelEncoding::Signed ? 1u : 0u);
  for (double v : data.inputs) put_le<double>(out, v);
  for (auto v : data.observed) put_le<std::int64_t>(out, v);
  for (auto v : data.truth) put_le<std::int64_t>(out, v);
  if (!out) throw IoError("short write to " + path.string());
}

LabeledDataset load_snld(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  Reader r(bytes, "SNLD file " + path.string());
  const std::uint8_t* magic = r.take(4, "magic");
  if (std::memcmp(magic, kSnldMagic, 4) != 0) throw ParseError("bad SNLD magic", 0);
  const auto version = r.le<std::uint32_t>("version");
  if (version != kSnldVersion) throw ParseError("unsupported SNLD version " + std::to_string(version), 4);
  LabeledDataset d;
  d.n = r.le<std::uint64_t>("n");
  d.dim = r.le<std::uint64_t>("d");
  d.num_classes = r.le<std::uint64_t>("K");
  const auto enc = r.le<std::uint32_t>("encoding");
  if (enc > 1) throw ParseError("bad SNLD label encoding", r.offset() - 4);
  d.encoding = enc == 1 ? LabelEncoding::Signed : LabelEncoding::Index;
  const std::size_t room = r.remaining();
  if (d.n > room / 16 || (d.n > 0 && d.dim > (room - d.n * 16) / (8 * d.n))) {
    throw ParseError("SNLD file " + path.string() + ": truncated payload", r.offset());
  }
  d.inputs.resize(d.n * d.dim);
  for (auto& v : d.inputs) v = r.le<double>("input");
  d.observed.resize(d.n);
  for (auto& v : d.observed) v = r.le<std::int64_t>("observed label");
  d.truth.resize(d.n);
  for (auto& v : d.truth) v = r.le<std::int64_t>("true label");
  d.refresh_mask();
  return d;
}

}  // namespace snl
