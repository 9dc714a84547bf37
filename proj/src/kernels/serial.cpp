#include "clstream/error.hpp"
#include "clstream/kernels.hpp"

namespace cl::kernels::serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Matrix c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: row counts differ");
  const std::size_t r = a.rows(), m = a.cols(), n = b.cols();
  Matrix c(m, n);
  for (std::size_t q = 0; q < r; ++q) {
    const double* bq = b.data() + q * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double aqi = a(q, i);
      double* ci = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aqi * bq[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: column counts differ");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Matrix c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c(i, j) = s;
    }
  }
  return c;
}

Matrix column_sums(const Matrix& a) {
  Matrix s(1, a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* ar = a.data() + r * a.cols();
    for (std::size_t j = 0; j < a.cols(); ++j) s(0, j) += ar[j];
  }
  return s;
}

}  // namespace cl::kernels::serial
