// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/diffusion/latent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lidarworld/core/binary_io.hpp"
#include "lidarworld/core/error.hpp"

namespace lidarworld::diffusion {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (const auto e : shape) n *= e;
  return n;
}

Latent::Latent(std::vector<std::size_t> s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  if (shape.empty() || std::any_of(shape.begin(), shape.end(), [](std::size_t e) { return e == 0; }))
    throw InvalidArgument("latent extents must be positive");
  if (shape_product(shape) != values.size()) throw InvalidArgument("latent value count does not match its shape");
}

Latent Latent::zeros(std::vector<std::size_t> s) {
  const std::size_t n = shape_product(s);
  return Latent(std::move(s), std::vector<double>(n, 0.0));
}

void Latent::validate() const {
  if (shape.empty() || std::any_of(shape.begin(), shape.end(), [](std::size_t e) { return e == 0; }))
    throw InvalidArgument("latent extents must be positive");
  if (shape_product(shape) != values.size()) throw InvalidArgument("latent value count does not match its shape");
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); }))
    throw InvalidArgument("latent holds non-finite values");
}

void write_latent(std::ostream& os, const Latent& z) {
  z.validate();
  binio::write_magic(os, "LATN");
  binio::write<std::uint32_t>(os, binio::kContainerVersion);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(z.shape.size()));
  for (const auto e : z.shape) binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(e));
  std::vector<float> data(z.values.begin(), z.values.end());
  if (!std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); }))
    throw InvalidArgument("latent value overflows single precision");
  binio::write_array(os, data.data(), data.size());
  if (!os) throw FormatError("latent write failed");
}

Latent read_latent(std::istream& is) {
  binio::expect_magic(is, "LATN");
  binio::expect_version(is);
  const auto rank = binio::read<std::uint32_t>(is);
  if (rank == 0 || rank > 16) throw FormatError("latent rank out of range");
  std::vector<std::size_t> shape;
  std::uint64_t n = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const auto e = binio::read<std::uint32_t>(is);
    if (e == 0) throw FormatError("latent extents must be positive");
    n *= e;
    if (n > (std::uint64_t{1} << 32)) throw FormatError("latent too large");
    shape.push_back(e);
  }
  std::vector<float> data(n);
  binio::read_array(is, data.data(), data.size());
  Latent z(std::move(shape), std::vector<double>(data.begin(), data.end()));
  try {
    z.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("latent: ") + e.what());
  }
  return z;
}

void save_latent(const std::filesystem::path& path, const Latent& z) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string());
  write_latent(os, z);
}

Latent load_latent(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_latent(is);
}

}  // namespace lidarworld::diffusion
