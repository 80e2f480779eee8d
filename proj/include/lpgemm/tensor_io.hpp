#pragma once

// Flat binary tensor files:
//   u32 rank, u32 dims[rank], float32 data[prod(dims)]
// all little-endian.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "lpgemm/core.hpp"

namespace lpgemm {

class TensorIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw TensorIoError("tensor file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline void write_tensor(std::ostream& os, ConstMatrixView m) {
  detail::put_u32(os, 2);
  detail::put_u32(os, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) detail::put_u32(os, std::bit_cast<std::uint32_t>(m(i, j)));
  }
}

/// Reads a rank-1 or rank-2 tensor; rank 1 becomes a single row.
inline Matrix read_tensor(std::istream& is) {
  const std::uint32_t rank = detail::get_u32(is);
  if (rank != 1 && rank != 2) throw TensorIoError("unsupported tensor rank " + std::to_string(rank));
  std::vector<std::uint32_t> dims(rank);
  for (auto& d : dims) d = detail::get_u32(is);
  const std::size_t rows = rank == 2 ? dims[0] : 1;
  const std::size_t cols = dims.back();
  Matrix m(rows, cols);
  for (float& v : m.flat()) v = std::bit_cast<float>(detail::get_u32(is));
  return m;
}

inline void save_tensor(const std::filesystem::path& path, ConstMatrixView m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw TensorIoError("cannot open " + path.string() + " for writing");
  write_tensor(os, m);
}

inline Matrix load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw TensorIoError("cannot open " + path.string());
  return read_tensor(is);
}

}  // namespace lpgemm
