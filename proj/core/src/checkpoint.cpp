#include "attnca/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace nca {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

namespace {

constexpr char kMagic[8] = {'A', 'T', 'T', 'N', 'C', 'A', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));  // host is little-endian
  os.write(buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  char buf[sizeof(T)];
  is.read(buf, sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated stream");
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& os, std::uint64_t config_digest, const std::vector<ParamRef>& params) {
  os.write(kMagic, sizeof(kMagic));
  write_le(os, kVersion);
  write_le(os, config_digest);
  write_le(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    write_le(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    const auto& t = *p.tensor;
    write_le(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) write_le(os, static_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed");
}

std::uint64_t read_checkpoint(std::istream& is, const std::vector<ParamRef>& params) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  const auto version = read_le<std::uint32_t>(is);
  if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  const auto digest = read_le<std::uint64_t>(is);
  const auto count = read_le<std::uint32_t>(is);
  if (count != params.size())
    throw std::runtime_error("checkpoint: tensor count mismatch, file has " + std::to_string(count));

  for (const auto& p : params) {
    const auto name_len = read_le<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is || name != p.name) throw std::runtime_error("checkpoint: tensor name mismatch at " + p.name);
    const auto rank = read_le<std::uint32_t>(is);
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = static_cast<std::size_t>(read_le<std::uint64_t>(is));
    if (dims != p.tensor->shape()) throw std::runtime_error("checkpoint: shape mismatch at " + p.name);
    is.read(reinterpret_cast<char*>(p.tensor->data()),
            static_cast<std::streamsize>(p.tensor->size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated tensor data at " + p.name);
  }
  return digest;
}

void save_checkpoint(const std::filesystem::path& path, std::uint64_t config_digest,
                     const std::vector<ParamRef>& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string());
  write_checkpoint(os, config_digest, params);
}

std::uint64_t load_checkpoint(const std::filesystem::path& path, const std::vector<ParamRef>& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  return read_checkpoint(is, params);
}

}  // namespace nca
