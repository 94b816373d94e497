#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

// Arithmetic in GF(2^8) with primitive polynomial x^8+x^4+x^3+x^2+1 (0x11d).
namespace swarmlab::gf256 {

inline constexpr unsigned kPolynomial = 0x11d;

std::uint8_t mul(std::uint8_t a, std::uint8_t b);
std::uint8_t inv(std::uint8_t a);  // a != 0
std::uint8_t pow(std::uint8_t a, unsigned e);

// dst[i] ^= c * src[i] for i < src.size(); dst must be at least as long.
void mul_add_region(std::uint8_t c, std::span<const std::uint8_t> src, std::span<std::uint8_t> dst);

// Dense row-major matrix over the field.
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), cells_(rows * cols, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint8_t& at(std::size_t r, std::size_t c) { return cells_[r * cols_ + c]; }
  std::uint8_t at(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }

  Matrix multiply(const Matrix& rhs) const;
  // Gauss-Jordan inverse; throws if singular.
  Matrix inverse() const;
  Matrix select_rows(std::span<const std::size_t> rows) const;

  static Matrix identity(std::size_t n);
  // n x k with row i = (x_i^0, x_i^1, ...) at distinct points x_i = i.
  static Matrix vandermonde(std::size_t n, std::size_t k);

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint8_t> cells_;
};

}  // namespace swarmlab::gf256
