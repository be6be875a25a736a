// NEON variants for aarch64, where Advanced SIMD with f64 lanes is baseline.

#include "snl/kernels.hpp"

#if defined(__aarch64__) || defined(_M_ARM64)

#include <arm_neon.h>

namespace snl::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq_neon(const double* x, std::size_t n) { return dot_neon(x, x, n); }

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_neon(double alpha, double* x, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void gemv_neon(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_neon(a + r * cols, x, cols);
}

void gemv_t_neon(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (x[r] != 0.0) axpy_neon(x[r], a + r * cols, y, cols);
  }
}

void ger_neon(double alpha, const double* u, std::size_t rows, const double* v, std::size_t cols,
              double* a) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = alpha * u[r];
    if (s != 0.0) axpy_neon(s, v, a + r * cols, cols);
  }
}

void descent_neon(double lr, double decay, const double* g, double* p, std::size_t n) {
  const float64x2_t vlr = vdupq_n_f64(lr);
  const float64x2_t vdec = vdupq_n_f64(decay);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vp = vld1q_f64(p + i);
    const float64x2_t step = vaddq_f64(vld1q_f64(g + i), vmulq_f64(vdec, vp));
    vst1q_f64(p + i, vsubq_f64(vp, vmulq_f64(vlr, step)));
  }
  for (; i < n; ++i) p[i] -= lr * (g[i] + decay * p[i]);
}

constexpr KernelTable kNeon{
    "neon",    dot_neon,    sum_sq_neon, axpy_neon,    scal_neon,
    gemv_neon, gemv_t_neon, ger_neon,    descent_neon,
};

}  // namespace

const KernelTable& neon_table_unchecked() noexcept { return kNeon; }

}  // namespace snl::kernels

#endif
