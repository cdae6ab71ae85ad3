// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "lidarworld/diffusion/latent.hpp"
#include "lidarworld/geometry/tsdf.hpp"

namespace lidarworld::diffusion {

/// Maps scene volumes to latents and back.
class Codec {
 public:
  virtual ~Codec() = default;
  virtual Latent encode(const geometry::TsdfVolume& vol) const = 0;
  virtual geometry::TsdfVolume decode(const Latent& z) const = 0;
};

/// Flattens TSDF values into a (nz, ny, nx) latent. decode(encode(v)) == v
/// exactly when v has this codec's voxel size and origin.
class IdentityCodec final : public Codec {
 public:
  IdentityCodec(float voxel_size, std::array<float, 3> origin) : voxel_size_(voxel_size), origin_(origin) {}
  Latent encode(const geometry::TsdfVolume& vol) const override;
  /// Values are clamped to [-1, 1]. Throws InvalidArgument unless the latent has rank 3.
  geometry::TsdfVolume decode(const Latent& z) const override;

 private:
  float voxel_size_;
  std::array<float, 3> origin_;
};

}  // namespace lidarworld::diffusion
