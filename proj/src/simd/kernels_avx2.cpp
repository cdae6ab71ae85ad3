// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2 only; callers reach it through the dispatch table.
#include <immintrin.h>

#include <limits>

#include "lidarworld/simd/kernels.hpp"

namespace lidarworld::simd::avx2 {

void intersect4(const Ray& r, const TrianglePacket& p, double t_min, double t_max,
                double* t_out) {
  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d dx = _mm256_set1_pd(r.dx), dy = _mm256_set1_pd(r.dy), dz = _mm256_set1_pd(r.dz);

  const __m256d e1x = _mm256_load_pd(p.e1x), e1y = _mm256_load_pd(p.e1y),
                e1z = _mm256_load_pd(p.e1z);
  const __m256d e2x = _mm256_load_pd(p.e2x), e2y = _mm256_load_pd(p.e2y),
                e2z = _mm256_load_pd(p.e2z);

  const __m256d px = _mm256_sub_pd(_mm256_mul_pd(dy, e2z), _mm256_mul_pd(dz, e2y));
  const __m256d py = _mm256_sub_pd(_mm256_mul_pd(dz, e2x), _mm256_mul_pd(dx, e2z));
  const __m256d pz = _mm256_sub_pd(_mm256_mul_pd(dx, e2y), _mm256_mul_pd(dy, e2x));
  const __m256d det = _mm256_add_pd(
      _mm256_add_pd(_mm256_mul_pd(e1x, px), _mm256_mul_pd(e1y, py)), _mm256_mul_pd(e1z, pz));
  __m256d mask = _mm256_cmp_pd(det, zero, _CMP_NEQ_OQ);
  const __m256d inv = _mm256_div_pd(one, det);

  const __m256d tx = _mm256_sub_pd(_mm256_set1_pd(r.ox), _mm256_load_pd(p.v0x));
  const __m256d ty = _mm256_sub_pd(_mm256_set1_pd(r.oy), _mm256_load_pd(p.v0y));
  const __m256d tz = _mm256_sub_pd(_mm256_set1_pd(r.oz), _mm256_load_pd(p.v0z));
  const __m256d u = _mm256_mul_pd(
      _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(tx, px), _mm256_mul_pd(ty, py)),
                    _mm256_mul_pd(tz, pz)),
      inv);
  mask = _mm256_and_pd(mask, _mm256_cmp_pd(u, zero, _CMP_GE_OQ));
  mask = _mm256_and_pd(mask, _mm256_cmp_pd(u, one, _CMP_LE_OQ));

  const __m256d qx = _mm256_sub_pd(_mm256_mul_pd(ty, e1z), _mm256_mul_pd(tz, e1y));
  const __m256d qy = _mm256_sub_pd(_mm256_mul_pd(tz, e1x), _mm256_mul_pd(tx, e1z));
  const __m256d qz = _mm256_sub_pd(_mm256_mul_pd(tx, e1y), _mm256_mul_pd(ty, e1x));
  const __m256d v = _mm256_mul_pd(
      _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, qx), _mm256_mul_pd(dy, qy)),
                    _mm256_mul_pd(dz, qz)),
      inv);
  mask = _mm256_and_pd(mask, _mm256_cmp_pd(v, zero, _CMP_GE_OQ));
  mask = _mm256_and_pd(mask, _mm256_cmp_pd(_mm256_add_pd(u, v), one, _CMP_LE_OQ));

  const __m256d t = _mm256_mul_pd(
      _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(e2x, qx), _mm256_mul_pd(e2y, qy)),
                    _mm256_mul_pd(e2z, qz)),
      inv);
  mask = _mm256_and_pd(mask, _mm256_cmp_pd(t, _mm256_set1_pd(t_min), _CMP_GT_OQ));
  mask = _mm256_and_pd(mask, _mm256_cmp_pd(t, _mm256_set1_pd(t_max), _CMP_LE_OQ));

  _mm256_storeu_pd(t_out, _mm256_blendv_pd(inf, t, mask));
}

std::size_t nearest(const double* q, const double* xs, const double* ys, const double* zs,
                    std::size_t n, double* d2_out) {
  const __m256d qx = _mm256_set1_pd(q[0]), qy = _mm256_set1_pd(q[1]), qz = _mm256_set1_pd(q[2]);
  __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  // Lane indices kept as doubles so blends stay in one register file; exact
  // for any n below 2^53.
  __m256d best_idx = _mm256_setzero_pd();
  __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const __m256d step = _mm256_set1_pd(4.0);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), qx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), qy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), qz);
    const __m256d d2 = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)), _mm256_mul_pd(dz, dz));
    const __m256d lt = _mm256_cmp_pd(d2, best, _CMP_LT_OQ);
    best = _mm256_blendv_pd(best, d2, lt);
    best_idx = _mm256_blendv_pd(best_idx, idx, lt);
    idx = _mm256_add_pd(idx, step);
  }

  alignas(32) double lane_d2[4];
  alignas(32) double lane_idx[4];
  _mm256_store_pd(lane_d2, best);
  _mm256_store_pd(lane_idx, best_idx);
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best_pos = 0;
  for (int l = 0; l < 4; ++l) {
    const auto pos = static_cast<std::size_t>(lane_idx[l]);
    if (lane_d2[l] < best_d2 || (lane_d2[l] == best_d2 && pos < best_pos)) {
      best_d2 = lane_d2[l];
      best_pos = pos;
    }
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - q[0];
    const double dy = ys[i] - q[1];
    const double dz = zs[i] - q[2];
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < best_d2) {
      best_d2 = d2;
      best_pos = i;
    }
  }
  *d2_out = best_d2;
  return best_pos;
}

void scaled_add(double* out, const double* z, double a, const double* s, double b,
                const double* e, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a), vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d acc = _mm256_add_pd(_mm256_loadu_pd(z + i),
                                      _mm256_mul_pd(va, _mm256_loadu_pd(s + i)));
    _mm256_storeu_pd(out + i, _mm256_add_pd(acc, _mm256_mul_pd(vb, _mm256_loadu_pd(e + i))));
  }
  for (; i < n; ++i) out[i] = (z[i] + a * s[i]) + b * e[i];
}

}  // namespace lidarworld::simd::avx2
