// SPDX-License-Identifier: Apache-2.0
#include "hris/kernels.hpp"

namespace hris::kernels::scalar {
namespace {

cd dotc(const cd* x, const cd* y, int n) {
  double re = 0.0, im = 0.0;
  for (int i = 0; i < n; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    const double yr = y[i].real(), yi = y[i].imag();
    re += xr * yr + xi * yi;
    im += xr * yi - xi * yr;
  }
  return {re, im};
}

void axpy(cd alpha, const cd* x, cd* y, int n) {
  const double ar = alpha.real(), ai = alpha.imag();
  for (int i = 0; i < n; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    y[i] = cd(y[i].real() + ar * xr - ai * xi, y[i].imag() + ar * xi + ai * xr);
  }
}

double norm2(const cd* x, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
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

const KernelTable& table() {
  static const KernelTable t{dotc, axpy, norm2, gemv, gemv_conj_trans};
  return t;
}

}  // namespace hris::kernels::scalar
