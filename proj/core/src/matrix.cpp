#include "spkid/matrix.hpp"

#include <algorithm>
#include <cstdio>

#include "spkid/error.hpp"
#include "spkid/hash.hpp"

namespace spkid {

Matrix vstack(std::span<const Matrix* const> parts) {
  Matrix out;
  for (const Matrix* m : parts) {
    if (!out.empty() && m->cols() != out.cols())
      throw Error(ErrorCode::kDimensionMismatch, "vstack column mismatch");
    for (std::size_t r = 0; r < m->rows(); ++r) out.append_row(m->row(r));
  }
  return out;
}

Matrix hstack(std::span<const Matrix* const> parts) {
  if (parts.empty()) return {};
  const std::size_t rows = parts.front()->rows();
  std::size_t cols = 0;
  for (const Matrix* m : parts) {
    if (m->rows() != rows)
      throw Error(ErrorCode::kDimensionMismatch, "hstack row mismatch");
    cols += m->cols();
  }
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = out.row(r).begin();
    for (const Matrix* m : parts) dst = std::copy(m->row(r).begin(), m->row(r).end(), dst);
  }
  return out;
}

std::string hash_to_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace spkid
