// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/diffusion/codec.hpp"

#include <algorithm>

#include "lidarworld/core/error.hpp"

namespace lidarworld::diffusion {

Latent IdentityCodec::encode(const geometry::TsdfVolume& vol) const {
  const auto& d = vol.dims();
  return Latent({d.nz, d.ny, d.nx}, std::vector<double>(vol.values().begin(), vol.values().end()));
}

geometry::TsdfVolume IdentityCodec::decode(const Latent& z) const {
  if (z.shape.size() != 3) throw InvalidArgument("identity codec expects a rank-3 latent");
  geometry::TsdfVolume vol({z.shape[2], z.shape[1], z.shape[0]}, voxel_size_, origin_);
  std::transform(z.values.begin(), z.values.end(), vol.values().begin(),
                 [](double v) { return static_cast<float>(std::clamp(v, -1.0, 1.0)); });
  return vol;
}

}  // namespace lidarworld::diffusion
