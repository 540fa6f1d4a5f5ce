#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgfdc/tensor.hpp"

namespace pgfdc {

// Ordered so serialization is deterministic.
using ParamMap = std::map<std::string, Tensor>;

namespace detail {
constexpr char kCkptMagic[8] = {'P', 'G', 'F', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCkptVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(std::string("checkpoint truncated reading ") + what);
  return v;
}
}  // namespace detail

inline void save_checkpoint(const std::string& path, const ParamMap& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write(detail::kCkptMagic, sizeof(detail::kCkptMagic));
  detail::write_pod(os, detail::kCkptVersion);
  detail::write_pod(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    detail::write_pod(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_pod(os, static_cast<std::uint32_t>(t.ndim()));
    for (int d : t.shape()) detail::write_pod(os, static_cast<std::int32_t>(d));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size()) * static_cast<std::streamsize>(sizeof(double)));
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline ParamMap load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, detail::kCkptMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  const auto version = detail::read_pod<std::uint32_t>(is, "version");
  if (version != detail::kCkptVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) + ": " +
                             path);
  const auto count = detail::read_pod<std::uint32_t>(is, "entry count");
  ParamMap out;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto name_len = detail::read_pod<std::uint32_t>(is, "name length");
    if (name_len > (1u << 16)) throw std::runtime_error("corrupt checkpoint (name length): " + path);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw std::runtime_error("checkpoint truncated reading name: " + path);
    const auto ndim = detail::read_pod<std::uint32_t>(is, "ndim");
    if (ndim == 0 || ndim > 8) throw std::runtime_error("corrupt checkpoint (ndim): " + path);
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const auto dim = detail::read_pod<std::int32_t>(is, "dim");
      if (dim <= 0) throw std::runtime_error("corrupt checkpoint (dim): " + path);
      shape.push_back(dim);
    }
    Tensor t = Tensor::zeros(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size()) * static_cast<std::streamsize>(sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint truncated reading values of " + name + ": " + path);
    if (!out.emplace(std::move(name), std::move(t)).second)
      throw std::runtime_error("corrupt checkpoint (duplicate entry): " + path);
  }
  return out;
}

}  // namespace pgfdc
