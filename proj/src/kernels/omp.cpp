#include <cstdint>

#include "clstream/error.hpp"
#include "clstream/kernels.hpp"

namespace cl::kernels::omp {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
  const std::size_t k = a.cols(), n = b.cols();
  Matrix c(a.rows(), n);
  const double* ad = a.data();
  const double* bd = b.data();
  double* cd = c.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    double* ci = cd + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ad[i * k + p];
      const double* bp = bd + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: row counts differ");
  const std::size_t r = a.rows(), n = b.cols();
  const std::int64_t m = static_cast<std::int64_t>(a.cols());
  Matrix c(a.cols(), n);
  const double* ad = a.data();
  const double* bd = b.data();
  double* cd = c.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    double* ci = cd + i * n;
    for (std::size_t q = 0; q < r; ++q) {
      const double aqi = ad[q * m + i];
      const double* bq = bd + q * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aqi * bq[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: column counts differ");
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
  const std::size_t k = a.cols(), n = b.rows();
  Matrix c(a.rows(), n);
  const double* ad = a.data();
  const double* bd = b.data();
  double* cd = c.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    const double* ai = ad + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = bd + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      cd[i * n + j] = s;
    }
  }
  return c;
}

Matrix column_sums(const Matrix& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  Matrix s(1, cols);
  const double* ad = a.data();
  double* sd = s.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(cols); ++j) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += ad[r * cols + j];
    sd[j] = acc;
  }
  return s;
}

}  // namespace cl::kernels::omp

namespace cl::kernels {

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

namespace {
bool go_parallel(std::size_t work) { return openmp_enabled() && work >= kParallelWorkThreshold; }
}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  return go_parallel(a.rows() * a.cols() * b.cols()) ? omp::matmul(a, b) : serial::matmul(a, b);
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  return go_parallel(a.rows() * a.cols() * b.cols()) ? omp::matmul_tn(a, b) : serial::matmul_tn(a, b);
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  return go_parallel(a.rows() * a.cols() * b.rows()) ? omp::matmul_nt(a, b) : serial::matmul_nt(a, b);
}

Matrix column_sums(const Matrix& a) {
  return go_parallel(a.size()) ? omp::column_sums(a) : serial::column_sums(a);
}

void add_row_broadcast(Matrix& out, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != out.cols()) throw ShapeError("add_row_broadcast: bias shape");
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias(0, j);
  }
}

void accumulate(Matrix& acc, const Matrix& delta) {
  if (!acc.same_shape(delta)) throw ShapeError("accumulate: shape mismatch");
  auto a = acc.values();
  auto d = delta.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += d[i];
}

}  // namespace cl::kernels
