#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motility/error.hpp"

namespace motility::binio {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(Errc::BadFormat, "truncated binary stream");
  return value;
}

template <typename T>
void write_array(std::ostream& out, std::span<const T> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
}

template <typename T>
void read_array(std::istream& in, std::span<T> values) {
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  if (!in) throw Error(Errc::BadFormat, "truncated binary stream");
}

inline void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline bool read_magic(std::istream& in, std::string_view magic) {
  std::string buffer(magic.size(), '\0');
  in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  return in && buffer == magic;
}

inline void write_string(std::ostream& out, std::string_view text) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline std::string read_string(std::istream& in) {
  const auto length = read_pod<std::uint32_t>(in);
  std::string text(length, '\0');
  in.read(text.data(), length);
  if (!in) throw Error(Errc::BadFormat, "truncated string");
  return text;
}

inline void write_floats(std::ostream& out, const std::vector<float>& values) {
  write_pod<std::uint64_t>(out, values.size());
  write_array<float>(out, values);
}

inline std::vector<float> read_floats(std::istream& in) {
  const auto n = read_pod<std::uint64_t>(in);
  if (n > (std::uint64_t{1} << 34)) throw Error(Errc::BadFormat, "implausible array length");
  std::vector<float> values(n);
  read_array<float>(in, values);
  return values;
}

inline void write_doubles(std::ostream& out, const std::vector<double>& values) {
  write_pod<std::uint64_t>(out, values.size());
  write_array<double>(out, values);
}

inline std::vector<double> read_doubles(std::istream& in) {
  const auto n = read_pod<std::uint64_t>(in);
  if (n > (std::uint64_t{1} << 33)) throw Error(Errc::BadFormat, "implausible array length");
  std::vector<double> values(n);
  read_array<double>(in, values);
  return values;
}

// Writes `content` to `path` through a sibling temporary and a rename, so
// concurrent readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace motility::binio
