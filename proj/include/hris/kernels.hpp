// SPDX-License-Identifier: Apache-2.0
#pragma once

// Complex double BLAS-1/2 kernels used on the hot paths (randomisation
// sampling and candidate evaluation). Every kernel has a scalar reference
// and an AVX2+FMA variant; the variant is picked once at start-up from
// CPUID and can be overridden with HRIS_KERNELS=scalar|avx2.

#include <span>

#include "hris/types.hpp"

namespace hris::kernels {

enum class Backend { scalar, avx2 };

struct KernelTable {
  // sum_i conj(x_i) y_i
  cd (*dotc)(const cd* x, const cd* y, int n);
  // y += alpha x
  void (*axpy)(cd alpha, const cd* x, cd* y, int n);
  // sum_i |x_i|^2
  double (*norm2)(const cd* x, int n);
  // y = A x, A column-major rows x cols
  void (*gemv)(const cd* a, int rows, int cols, const cd* x, cd* y);
  // y = A^H x, A column-major rows x cols
  void (*gemv_conj_trans)(const cd* a, int rows, int cols, const cd* x, cd* y);
};

bool backend_supported(Backend b);
const char* backend_name(Backend b);

// Kernels of one specific backend. Throws std::runtime_error if the CPU
// cannot run it.
const KernelTable& table(Backend b);

Backend active_backend();
// Throws std::runtime_error if unsupported.
void set_backend(Backend b);

cd dotc(std::span<const cd> x, std::span<const cd> y);
void axpy(cd alpha, std::span<const cd> x, std::span<cd> y);
double norm2(std::span<const cd> x);
void gemv(const CMat& a, std::span<const cd> x, std::span<cd> y);
void gemv_conj_trans(const CMat& a, std::span<const cd> x, std::span<cd> y);

namespace scalar {
const KernelTable& table();
}
namespace avx2 {
// nullptr when the translation unit was built without AVX2 support.
const KernelTable* table();
}

}  // namespace hris::kernels
