// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace lidarworld::diffusion {

/// Dense real tensor, row-major.
struct Latent {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Latent() = default;
  /// Throws InvalidArgument unless every extent is positive and
  /// values.size() equals their product.
  Latent(std::vector<std::size_t> shape, std::vector<double> values);
  static Latent zeros(std::vector<std::size_t> shape);

  std::size_t size() const { return values.size(); }
  bool same_shape(const Latent& o) const { return shape == o.shape; }
  /// Throws InvalidArgument on a shape mismatch or non-finite values.
  void validate() const;
  bool operator==(const Latent&) const = default;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

// "LATN" container: magic, u32 version, u32 rank, u32 extents[rank], then
// f32 values. Values are stored in single precision, so a round trip returns
// the float-rounded latent and re-writing it reproduces the same bytes.
void write_latent(std::ostream& os, const Latent& z);
Latent read_latent(std::istream& is);
void save_latent(const std::filesystem::path& path, const Latent& z);
Latent load_latent(const std::filesystem::path& path);

}  // namespace lidarworld::diffusion
