// SPDX-License-Identifier: Apache-2.0
#pragma once

// Data-parallel inner loops with a scalar reference implementation and
// ISA-specific variants chosen once at runtime. Every variant performs the
// same floating-point operations in the same order (no FMA contraction), so
// results are bit-identical across variants; tests/unit/simd_test.cpp holds
// them to that.

#include <cstddef>
#include <string_view>

namespace lidarworld::simd {

enum class Isa { kScalar, kAvx2 };

inline constexpr std::size_t kPacketWidth = 4;

/// Four triangles in SoA layout. Unused lanes are zero-filled, which yields a
/// zero determinant and therefore a miss.
struct alignas(32) TrianglePacket {
  double v0x[kPacketWidth], v0y[kPacketWidth], v0z[kPacketWidth];
  double e1x[kPacketWidth], e1y[kPacketWidth], e1z[kPacketWidth];
  double e2x[kPacketWidth], e2y[kPacketWidth], e2z[kPacketWidth];
};

struct Ray {
  double ox, oy, oz;
  double dx, dy, dz;
};

/// Two-sided Moller-Trumbore against four triangles. Writes the hit distance
/// per lane, or +inf when the lane misses or t lies outside (t_min, t_max].
using IntersectPacketFn = void (*)(const Ray& ray, const TrianglePacket& packet, double t_min,
                                   double t_max, double* t_out);

/// Squared distance from q to each of n SoA points; returns the lowest
/// position attaining the minimum and stores that minimum in *d2_out.
/// n must be >= 1.
using NearestFn = std::size_t (*)(const double* q, const double* xs, const double* ys,
                                  const double* zs, std::size_t n, double* d2_out);

/// out[i] = (z[i] + a * s[i]) + b * e[i]. out may alias z.
using ScaledAddFn = void (*)(double* out, const double* z, double a, const double* s, double b,
                             const double* e, std::size_t n);

struct Kernels {
  Isa isa;
  std::string_view name;
  IntersectPacketFn intersect4;
  NearestFn nearest;
  ScaledAddFn scaled_add;
};

bool cpu_supports(Isa isa) noexcept;

/// Table for a specific ISA, or nullptr when the CPU or build lacks it.
const Kernels* kernels_for(Isa isa) noexcept;

/// Best supported table. LIDARWORLD_SIMD=scalar|avx2 in the environment
/// overrides the choice (falls back to scalar if the request is unsupported).
const Kernels& active() noexcept;

namespace scalar {
void intersect4(const Ray& ray, const TrianglePacket& packet, double t_min, double t_max,
                double* t_out);
std::size_t nearest(const double* q, const double* xs, const double* ys, const double* zs,
                    std::size_t n, double* d2_out);
void scaled_add(double* out, const double* z, double a, const double* s, double b,
                const double* e, std::size_t n);
}  // namespace scalar

#if defined(LIDARWORLD_HAVE_AVX2)
namespace avx2 {
void intersect4(const Ray& ray, const TrianglePacket& packet, double t_min, double t_max,
                double* t_out);
std::size_t nearest(const double* q, const double* xs, const double* ys, const double* zs,
                    std::size_t n, double* d2_out);
void scaled_add(double* out, const double* z, double a, const double* s, double b,
                const double* e, std::size_t n);
}  // namespace avx2
#endif

}  // namespace lidarworld::simd
