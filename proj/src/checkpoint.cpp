// SNLM checkpoints (little-endian):
//   char[4] "SNLM" | u32 version (=1) | u32 family | u32 activation
//   u64 input_dim | u64 hidden_dim | u64 output_dim | f64 params[P]

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "snl/error.hpp"
#include "snl/models.hpp"

namespace snl {
namespace {

constexpr char kMagic[4] = {'S', 'N', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(const std::vector<char>& bytes, std::size_t& pos, const char* field) {
  if (bytes.size() - pos < sizeof(T)) throw ParseError(std::string("SNLM truncated while reading ") + field, pos);
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.family()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.activation()));
  put<std::uint64_t>(out, model.input_dim());
  put<std::uint64_t>(out, model.hidden_dim());
  put<std::uint64_t>(out, model.output_dim());
  out.write(reinterpret_cast<const char*>(model.params().data()),
            static_cast<std::streamsize>(model.param_count() * sizeof(double)));
  if (!out) throw IoError("short write to " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::size_t pos = 0;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw ParseError("bad SNLM magic", 0);
  pos = 4;
  const auto version = get<std::uint32_t>(bytes, pos, "version");
  if (version != kVersion) throw ParseError("unsupported SNLM version", 4);
  const auto family = get<std::uint32_t>(bytes, pos, "family");
  const auto act = get<std::uint32_t>(bytes, pos, "activation");
  const auto d = get<std::uint64_t>(bytes, pos, "input_dim");
  const auto h = get<std::uint64_t>(bytes, pos, "hidden_dim");
  const auto k = get<std::uint64_t>(bytes, pos, "output_dim");
  Model m;
  switch (family) {
    case 0: m = Model::linear(d, k); break;
    case 1: m = Model::dln2(d, h, k); break;
    case 2:
      if (act > 1) throw ParseError("bad SNLM activation tag", 12);
      m = Model::mlp(d, h, k, static_cast<Activation>(act));
      break;
    default: throw ParseError("bad SNLM family tag", 8);
  }
  const std::size_t need = m.param_count() * sizeof(double);
  if (bytes.size() - pos != need) throw ParseError("SNLM parameter block has the wrong length", pos);
  std::memcpy(m.params().data(), bytes.data() + pos, need);
  return m;
}

}  // namespace snl
