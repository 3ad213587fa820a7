// SPDX-License-Identifier: Apache-2.0
// Built with -mavx2 -mfma; only reached after a CPUID check.
#include "hris/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace hris::kernels::avx2 {
namespace {

// Two complex doubles per register: [re0, im0, re1, im1].
inline __m256d load2(const cd* p) { return _mm256_loadu_pd(reinterpret_cast<const double*>(p)); }
inline void store2(cd* p, __m256d v) { _mm256_storeu_pd(reinterpret_cast<double*>(p), v); }
inline __m256d swap_pairs(__m256d v) { return _mm256_permute_pd(v, 0b0101); }

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// lane0 - lane1 + lane2 - lane3
inline double alt_sum(__m256d v) {
  alignas(32) double t[4];
  _mm256_store_pd(t, v);
  return (t[0] - t[1]) + (t[2] - t[3]);
}

cd dotc(const cd* x, const cd* y, int n) {
  __m256d re0 = _mm256_setzero_pd(), re1 = _mm256_setzero_pd();
  __m256d im0 = _mm256_setzero_pd(), im1 = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a0 = load2(x + i), b0 = load2(y + i);
    const __m256d a1 = load2(x + i + 2), b1 = load2(y + i + 2);
    re0 = _mm256_fmadd_pd(a0, b0, re0);
    re1 = _mm256_fmadd_pd(a1, b1, re1);
    im0 = _mm256_fmadd_pd(a0, swap_pairs(b0), im0);
    im1 = _mm256_fmadd_pd(a1, swap_pairs(b1), im1);
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d a = load2(x + i), b = load2(y + i);
    re0 = _mm256_fmadd_pd(a, b, re0);
    im0 = _mm256_fmadd_pd(a, swap_pairs(b), im0);
  }
  double re = hsum(_mm256_add_pd(re0, re1));
  double im = alt_sum(_mm256_add_pd(im0, im1));
  for (; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

void axpy(cd alpha, const cd* x, cd* y, int n) {
  const __m256d ar = _mm256_set1_pd(alpha.real());
  const __m256d ai = _mm256_setr_pd(-alpha.imag(), alpha.imag(), -alpha.imag(), alpha.imag());
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x0 = load2(x + i), x1 = load2(x + i + 2);
    __m256d y0 = load2(y + i), y1 = load2(y + i + 2);
    y0 = _mm256_fmadd_pd(x0, ar, y0);
    y1 = _mm256_fmadd_pd(x1, ar, y1);
    y0 = _mm256_fmadd_pd(swap_pairs(x0), ai, y0);
    y1 = _mm256_fmadd_pd(swap_pairs(x1), ai, y1);
    store2(y + i, y0);
    store2(y + i + 2, y1);
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = load2(x + i);
    __m256d yv = load2(y + i);
    yv = _mm256_fmadd_pd(xv, ar, yv);
    yv = _mm256_fmadd_pd(swap_pairs(xv), ai, yv);
    store2(y + i, yv);
  }
  for (; i < n; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    y[i] = cd(y[i].real() + alpha.real() * xr - alpha.imag() * xi,
              y[i].imag() + alpha.real() * xi + alpha.imag() * xr);
  }
}

double norm2(const cd* x, int n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a0 = load2(x + i), a1 = load2(x + i + 2);
    s0 = _mm256_fmadd_pd(a0, a0, s0);
    s1 = _mm256_fmadd_pd(a1, a1, s1);
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d a = load2(x + i);
    s0 = _mm256_fmadd_pd(a, a, s0);
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return s;
}

void gemv(const cd* a, int rows, int cols, const cd* x, cd* y) {
  for (int i = 0; i < rows; ++i) y[i] = 0.0;
  for (int j = 0; j < cols; ++j) axpy(x[j], a + static_cast<std::ptrdiff_t>(j) * rows, y, rows);
}

void gemv_conj_trans(const cd* a, int rows, int cols, const cd* x, cd* y) {
  for (int j = 0; j < cols; ++j) y[j] = dotc(a + static_cast<std::ptrdiff_t>(j) * rows, x, rows);
}

}  // namespace

const KernelTable* table() {
  static const KernelTable t{dotc, axpy, norm2, gemv, gemv_conj_trans};
  return &t;
}

}  // namespace hris::kernels::avx2

#else

namespace hris::kernels::avx2 {
const KernelTable* table() { return nullptr; }
}  // namespace hris::kernels::avx2

#endif
