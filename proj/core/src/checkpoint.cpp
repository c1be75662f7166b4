#include "abrlab/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace abrlab {

namespace {

constexpr char kMagic[8] = {'A', 'B', 'R', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_i32(std::ofstream& out, std::int32_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
}

void put_f64(std::ofstream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::int32_t get_i32(std::ifstream& in) { return static_cast<std::int32_t>(get_u32(in)); }

double get_f64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out.write(kMagic, 8);
  put_u32(out, 1);  // format version
  const ParamLayout& layout = *params.layout();
  put_u32(out, static_cast<std::uint32_t>(layout.count()));
  for (int id = 0; id < layout.count(); ++id) {
    const SegmentSpec& s = layout.seg(id);
    put_u32(out, static_cast<std::uint32_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    put_u32(out, static_cast<std::uint32_t>(s.rows));
    put_u32(out, static_cast<std::uint32_t>(s.cols));
    put_i32(out, static_cast<std::int32_t>(s.net));
    put_i32(out, s.expert);
  }
  for (double v : params.flat()) put_f64(out, v);
  if (!out) throw std::runtime_error("short write: " + path.string());
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("bad checkpoint magic: " + path.string());
  }
  const std::uint32_t version = get_u32(in);
  if (version != 1) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t nsegs = get_u32(in);
  auto layout = std::make_shared<ParamLayout>();
  for (std::uint32_t i = 0; i < nsegs; ++i) {
    const std::uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    const std::int32_t net = get_i32(in);
    const std::int32_t expert = get_i32(in);
    layout->add(std::move(name), static_cast<int>(rows), static_cast<int>(cols),
                static_cast<Net>(net), expert);
  }
  ParamSet params(layout);
  for (double& v : params.flat()) v = get_f64(in);
  if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
  return params;
}

}  // namespace abrlab
