// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <string_view>

#include "lidarworld/simd/kernels.hpp"

namespace lidarworld::simd {
namespace {

constexpr Kernels kScalarTable{Isa::kScalar, "scalar", &scalar::intersect4, &scalar::nearest,
                               &scalar::scaled_add};
#if defined(LIDARWORLD_HAVE_AVX2)
constexpr Kernels kAvx2Table{Isa::kAvx2, "avx2", &avx2::intersect4, &avx2::nearest,
                             &avx2::scaled_add};
#endif

const Kernels& select() noexcept {
  const char* forced = std::getenv("LIDARWORLD_SIMD");
  if (forced != nullptr) {
    const std::string_view want(forced);
    if (want == "scalar") return kScalarTable;
    if (want == "avx2") {
      if (const Kernels* k = kernels_for(Isa::kAvx2)) return *k;
      return kScalarTable;
    }
  }
  if (const Kernels* k = kernels_for(Isa::kAvx2)) return *k;
  return kScalarTable;
}

}  // namespace

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(LIDARWORLD_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const Kernels* kernels_for(Isa isa) noexcept {
  if (!cpu_supports(isa)) return nullptr;
  switch (isa) {
    case Isa::kScalar:
      return &kScalarTable;
    case Isa::kAvx2:
#if defined(LIDARWORLD_HAVE_AVX2)
      return &kAvx2Table;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const Kernels& active() noexcept {
  static const Kernels& table = select();
  return table;
}

}  // namespace lidarworld::simd
