// SPDX-License-Identifier: Apache-2.0
#include "hris/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace hris::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend pick_default() {
  if (const char* env = std::getenv("HRIS_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Backend::scalar;
    if (v == "avx2" && backend_supported(Backend::avx2)) return Backend::avx2;
  }
  return backend_supported(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> t{&table(pick_default())};
  return t;
}

std::atomic<Backend>& current_backend() {
  static std::atomic<Backend> b{pick_default()};
  return b;
}

}  // namespace

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::scalar: return true;
    case Backend::avx2: return avx2::table() != nullptr && cpu_has_avx2();
  }
  return false;
}

const char* backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

const KernelTable& table(Backend b) {
  if (!backend_supported(b))
    throw std::runtime_error(std::string("kernel backend not supported: ") + backend_name(b));
  return b == Backend::avx2 ? *avx2::table() : scalar::table();
}

Backend active_backend() { return current_backend().load(); }

void set_backend(Backend b) {
  current().store(&table(b));
  current_backend().store(b);
}

namespace {
void check_same(std::size_t a, std::size_t b) {
  if (a != b) throw ValidationError("kernel operands differ in length");
}
}  // namespace

cd dotc(std::span<const cd> x, std::span<const cd> y) {
  check_same(x.size(), y.size());
  return current().load()->dotc(x.data(), y.data(), static_cast<int>(x.size()));
}

void axpy(cd alpha, std::span<const cd> x, std::span<cd> y) {
  check_same(x.size(), y.size());
  current().load()->axpy(alpha, x.data(), y.data(), static_cast<int>(x.size()));
}

double norm2(std::span<const cd> x) {
  return current().load()->norm2(x.data(), static_cast<int>(x.size()));
}

void gemv(const CMat& a, std::span<const cd> x, std::span<cd> y) {
  check_same(static_cast<std::size_t>(a.cols()), x.size());
  check_same(static_cast<std::size_t>(a.rows()), y.size());
  current().load()->gemv(a.data(), static_cast<int>(a.rows()), static_cast<int>(a.cols()),
                         x.data(), y.data());
}

void gemv_conj_trans(const CMat& a, std::span<const cd> x, std::span<cd> y) {
  check_same(static_cast<std::size_t>(a.rows()), x.size());
  check_same(static_cast<std::size_t>(a.cols()), y.size());
  current().load()->gemv_conj_trans(a.data(), static_cast<int>(a.rows()),
                                    static_cast<int>(a.cols()), x.data(), y.data());
}

}  // namespace hris::kernels
