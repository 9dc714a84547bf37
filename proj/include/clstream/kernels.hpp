#pragma once

#include "clstream/matrix.hpp"

// Dense kernels used by the network core.
//
// Two implementations live side by side: `serial` is the reference and
// `omp` parallelizes over output rows with OpenMP. Both accumulate every
// output element in the same order (ascending inner index, starting from
// +0.0), so their results are bitwise identical. The unqualified entry
// points pick `omp` for large problems when OpenMP is compiled in.
namespace cl::kernels {

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);     // a[m×k] · b[k×n]
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // aᵀ[m×r] · b[r×n]
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a[m×k] · bᵀ[k×n]
Matrix column_sums(const Matrix& a);                 // [1×n]
}  // namespace serial

namespace omp {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix column_sums(const Matrix& a);
}  // namespace omp

/// True when the omp variants were compiled with OpenMP enabled.
bool openmp_enabled();

/// Work (multiply-adds) above which the dispatching kernels go parallel.
inline constexpr std::size_t kParallelWorkThreshold = 1 << 15;

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix column_sums(const Matrix& a);

/// out += bias broadcast over rows; bias is [1×n].
void add_row_broadcast(Matrix& out, const Matrix& bias);

/// acc += delta, elementwise.
void accumulate(Matrix& acc, const Matrix& delta);

}  // namespace cl::kernels
