// SPDX-License-Identifier: Apache-2.0
#include <limits>

#include "lidarworld/simd/kernels.hpp"

namespace lidarworld::simd::scalar {

void intersect4(const Ray& r, const TrianglePacket& p, double t_min, double t_max,
                double* t_out) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kPacketWidth; ++i) {
    t_out[i] = kInf;
    const double px = r.dy * p.e2z[i] - r.dz * p.e2y[i];
    const double py = r.dz * p.e2x[i] - r.dx * p.e2z[i];
    const double pz = r.dx * p.e2y[i] - r.dy * p.e2x[i];
    const double det = p.e1x[i] * px + p.e1y[i] * py + p.e1z[i] * pz;
    if (det == 0.0) continue;
    const double inv = 1.0 / det;
    const double tx = r.ox - p.v0x[i];
    const double ty = r.oy - p.v0y[i];
    const double tz = r.oz - p.v0z[i];
    const double u = (tx * px + ty * py + tz * pz) * inv;
    if (!(u >= 0.0 && u <= 1.0)) continue;
    const double qx = ty * p.e1z[i] - tz * p.e1y[i];
    const double qy = tz * p.e1x[i] - tx * p.e1z[i];
    const double qz = tx * p.e1y[i] - ty * p.e1x[i];
    const double v = (r.dx * qx + r.dy * qy + r.dz * qz) * inv;
    if (!(v >= 0.0 && u + v <= 1.0)) continue;
    const double t = (p.e2x[i] * qx + p.e2y[i] * qy + p.e2z[i] * qz) * inv;
    if (t > t_min && t <= t_max) t_out[i] = t;
  }
}

std::size_t nearest(const double* q, const double* xs, const double* ys, const double* zs,
                    std::size_t n, double* d2_out) {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - q[0];
    const double dy = ys[i] - q[1];
    const double dz = zs[i] - q[2];
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  *d2_out = best_d2;
  return best;
}

void scaled_add(double* out, const double* z, double a, const double* s, double b,
                const double* e, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (z[i] + a * s[i]) + b * e[i];
}

}  // namespace lidarworld::simd::scalar
