#include "swarmlab/gf256.hpp"

#include <array>
#include <utility>

#include "swarmlab/types.hpp"

namespace swarmlab::gf256 {

namespace {

struct Tables {
  std::array<std::uint8_t, 512> exp{};
  std::array<int, 256> log{};
  // Full product table: product[a][b].
  std::array<std::array<std::uint8_t, 256>, 256> product{};

  Tables() {
    unsigned x = 1;
    for (int i = 0; i < 255; ++i) {
      exp[i] = static_cast<std::uint8_t>(x);
      log[x] = i;
      x <<= 1;
      if (x & 0x100) x ^= kPolynomial;
    }
    for (int i = 255; i < 512; ++i) exp[i] = exp[i - 255];
    log[0] = -1;
    for (unsigned a = 0; a < 256; ++a) {
      for (unsigned b = 0; b < 256; ++b) {
        product[a][b] = (a == 0 || b == 0) ? 0 : exp[log[a] + log[b]];
      }
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

}  // namespace

std::uint8_t mul(std::uint8_t a, std::uint8_t b) { return tables().product[a][b]; }

std::uint8_t inv(std::uint8_t a) {
  if (a == 0) throw Error(Errc::kInvalidArgument, "zero has no inverse in GF(256)");
  const auto& t = tables();
  return t.exp[255 - t.log[a]];
}

std::uint8_t pow(std::uint8_t a, unsigned e) {
  std::uint8_t r = 1;
  for (unsigned i = 0; i < e; ++i) r = mul(r, a);
  return r;
}

void mul_add_region(std::uint8_t c, std::span<const std::uint8_t> src, std::span<std::uint8_t> dst) {
  if (c == 0) return;
  const auto& row = tables().product[c];
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] ^= row[src[i]];
}

Matrix Matrix::multiply(const Matrix& rhs) const {
  Matrix out(rows_, rhs.cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t i = 0; i < cols_; ++i) {
      const std::uint8_t a = at(r, i);
      if (a == 0) continue;
      for (std::size_t c = 0; c < rhs.cols_; ++c) out.at(r, c) ^= mul(a, rhs.at(i, c));
    }
  }
  return out;
}

Matrix Matrix::inverse() const {
  if (rows_ != cols_) throw Error(Errc::kInvalidArgument, "only square matrices are invertible");
  const std::size_t n = rows_;
  Matrix work = *this;
  Matrix out = identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && work.at(pivot, col) == 0) ++pivot;
    if (pivot == n) throw Error(Errc::kCorrupt, "singular coding matrix");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(work.at(pivot, c), work.at(col, c));
        std::swap(out.at(pivot, c), out.at(col, c));
      }
    }
    const std::uint8_t scale = inv(work.at(col, col));
    for (std::size_t c = 0; c < n; ++c) {
      work.at(col, c) = mul(work.at(col, c), scale);
      out.at(col, c) = mul(out.at(col, c), scale);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const std::uint8_t f = work.at(r, col);
      if (f == 0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        work.at(r, c) ^= mul(f, work.at(col, c));
        out.at(r, c) ^= mul(f, out.at(col, c));
      }
    }
  }
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < cols_; ++c) out.at(i, c) = at(rows[i], c);
  }
  return out;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

Matrix Matrix::vandermonde(std::size_t n, std::size_t k) {
  if (n > 256) throw Error(Errc::kInvalidArgument, "GF(256) supports at most 256 evaluation points");
  Matrix m(n, k);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) m.at(r, c) = pow(static_cast<std::uint8_t>(r), static_cast<unsigned>(c));
  }
  return m;
}

}  // namespace swarmlab::gf256
