#pragma once

#include "ifgsim/core/errors.hpp"
#include "ifgsim/imaging/interferogram.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

namespace ifgsim::io {

/// IFG1 interferogram file, all fields little-endian:
///
///   offset  size  field
///        0     4  magic "IFG1"
///        4     2  version (u16, = 1)
///        6     2  width   (u16)
///        8     2  height  (u16)
///       10     8  pitch, m           (f64)
///       18     8  detuning, Hz       (f64)
///       26     8  defocus_object, m  (f64)
///       34     8  smoothed_with, m   (f64)
///       42   4wh  signal, row-major  (f32)
inline constexpr std::uint16_t ifg1_version = 1;
inline constexpr std::size_t ifg1_header_size = 42;

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

template <class T>
T get_le(const unsigned char* in) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(static_cast<U>(in[i]) << (8 * i));
  return std::bit_cast<T>(bits);
}

} // namespace detail

inline std::vector<unsigned char> encode_ifg1(const Interferogram& img) {
  const std::size_t n = img.grid.n();
  if (n > std::numeric_limits<std::uint16_t>::max()) throw InputError("image too large for IFG1");
  if (img.signal.size() != img.grid.size()) throw InputError("image size does not match its grid");
  std::vector<unsigned char> out;
  out.reserve(ifg1_header_size + 4 * img.signal.size());
  for (char c : std::string("IFG1")) out.push_back(static_cast<unsigned char>(c));
  detail::put_le(out, ifg1_version);
  detail::put_le(out, static_cast<std::uint16_t>(n));
  detail::put_le(out, static_cast<std::uint16_t>(n));
  detail::put_le(out, img.grid.pitch());
  detail::put_le(out, img.detuning);
  detail::put_le(out, img.defocus_object);
  detail::put_le(out, img.smoothed_with);
  for (double v : img.signal) detail::put_le(out, static_cast<float>(v));
  return out;
}

inline Interferogram decode_ifg1(const std::vector<unsigned char>& bytes, const std::string& name = "<buffer>") {
  if (bytes.size() < ifg1_header_size || std::memcmp(bytes.data(), "IFG1", 4) != 0)
    throw IoError(name + ": not an IFG1 file");
  const auto* p = bytes.data();
  const auto version = detail::get_le<std::uint16_t>(p + 4);
  if (version != ifg1_version) throw IoError(name + ": unsupported IFG1 version " + std::to_string(version));
  const auto width = detail::get_le<std::uint16_t>(p + 6);
  const auto height = detail::get_le<std::uint16_t>(p + 8);
  if (width != height) throw IoError(name + ": only square images are supported");
  const std::size_t count = std::size_t{width} * height;
  if (bytes.size() != ifg1_header_size + 4 * count)
    throw IoError(name + ": payload length does not match width x height");
  Interferogram img;
  try {
    img.grid = Grid(width, detail::get_le<double>(p + 10));
  } catch (const ConfigError& e) {
    throw IoError(name + ": " + e.what());
  }
  img.detuning = detail::get_le<double>(p + 18);
  img.defocus_object = detail::get_le<double>(p + 26);
  img.smoothed_with = detail::get_le<double>(p + 34);
  img.signal.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    img.signal[i] = detail::get_le<float>(p + ifg1_header_size + 4 * i);
  return img;
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline Interferogram read_ifg1(const std::filesystem::path& path) {
  return decode_ifg1(read_bytes(path), path.string());
}

inline void write_ifg1(const std::filesystem::path& path, const Interferogram& img) {
  write_bytes(path, encode_ifg1(img));
}

} // namespace ifgsim::io
