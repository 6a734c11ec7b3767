#pragma once

// Little-endian primitives for the solver artifact files.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace lcm::binary {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
T to_little(T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  template <class T>
  void put(T v) {
    v = to_little(v);
    bytes(&v, sizeof(T));
  }
  template <class T>
  void put_all(const std::vector<T>& v) {
    if constexpr (std::endian::native == std::endian::little)
      bytes(v.data(), v.size() * sizeof(T));
    else
      for (T x : v) put(x);
  }
  void finish() {
    out_.flush();
    if (!out_) throw std::runtime_error("write failed: " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("cannot open " + path.string());
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("truncated file " + path_.string());
  }
  template <class T>
  T get() {
    T v;
    bytes(&v, sizeof(T));
    return to_little(v);
  }
  template <class T>
  std::vector<T> get_all(std::size_t n) {
    std::vector<T> v(n);
    bytes(v.data(), n * sizeof(T));
    if constexpr (std::endian::native != std::endian::little)
      for (auto& x : v) x = to_little(x);
    return v;
  }
  void expect_magic(const char (&magic)[9]) {
    char buf[8];
    bytes(buf, 8);
    if (std::memcmp(buf, magic, 8) != 0) throw FormatError(path_.string() + ": not a " + std::string(magic, 8) + " file");
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw FormatError(path_.string() + ": trailing bytes");
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

}  // namespace lcm::binary
