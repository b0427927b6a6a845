#include <atomic>
#include <cstdlib>
#include <string_view>

#include "hap/simd/kernel_set.hpp"

namespace hap::simd {
namespace {

const KernelSet* initial_selection() noexcept {
  const char* env = std::getenv("HAP_SIMD");
  const std::string_view want = env ? env : "";
  if (want == "scalar") return &scalar_kernels();
  if (const KernelSet* wide = avx2_kernels()) return wide;
  return &scalar_kernels();
}

std::atomic<const KernelSet*>& slot() noexcept {
  static std::atomic<const KernelSet*> current{initial_selection()};
  return current;
}

}  // namespace

const KernelSet& active_kernels() noexcept { return *slot().load(std::memory_order_acquire); }

Backend active_backend() noexcept {
  return &active_kernels() == &scalar_kernels() ? Backend::Scalar : Backend::Avx2;
}

bool select_backend(Backend backend) noexcept {
  const KernelSet* target = backend == Backend::Scalar ? &scalar_kernels() : avx2_kernels();
  if (target == nullptr) return false;
  slot().store(target, std::memory_order_release);
  return true;
}

}  // namespace hap::simd
