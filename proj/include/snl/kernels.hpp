#pragma once
// Dense f64 vector kernels behind every inner loop of the library.
//
// A scalar reference implementation is always built. Vectorized variants
// (AVX2+FMA on x86-64, NEON on aarch64) are compiled into separate
// translation units and chosen once at startup from the CPU features.
// Setting SNL_KERNELS=scalar in the environment forces the reference path.
//
// All matrices are row-major and dense. Sizes are element counts.

#include <cstddef>
#include <string_view>

namespace snl::kernels {

struct KernelTable {
  std::string_view name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i x[i]^2
  double (*sum_sq)(const double* x, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scal)(double alpha, double* x, std::size_t n);
  // y = A x, A is rows x cols
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y = A^T x, A is rows x cols, y has cols entries
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // A += alpha * u v^T, u has rows entries, v has cols entries
  void (*ger)(double alpha, const double* u, std::size_t rows, const double* v, std::size_t cols,
              double* a);
  // p -= lr * (g + decay * p)
  void (*descent)(double lr, double decay, const double* g, double* p, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
// nullptr when the variant was not compiled for this target or the CPU lacks it.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

// Active table, resolved on first use.
const KernelTable& active() noexcept;

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline double sum_sq(const double* x, std::size_t n) { return active().sum_sq(x, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
inline void scal(double alpha, double* x, std::size_t n) { active().scal(alpha, x, n); }
inline void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  active().gemv(a, rows, cols, x, y);
}
inline void gemv_t(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  active().gemv_t(a, rows, cols, x, y);
}
inline void ger(double alpha, const double* u, std::size_t rows, const double* v, std::size_t cols,
                double* a) {
  active().ger(alpha, u, rows, v, cols, a);
}
inline void descent(double lr, double decay, const double* g, double* p, std::size_t n) {
  active().descent(lr, decay, g, p, n);
}

}  // namespace snl::kernels
