#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "tenexp/tensor.hpp"

namespace tenexp {

// NPY version 1.0, C order, little-endian float64. Readers also accept
// version 2.0/3.0 headers with the same payload.
DenseTensor read_npy(std::istream& in);
void write_npy(std::ostream& out, const DenseTensor& x);

DenseTensor read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const DenseTensor& x);

// Exactly floor(sr * N) ones at uniformly random positions.
DenseTensor gen_mask(const Shape& shape, double sr, std::uint64_t seed);

// Affine map sending the minimum to 0 and the maximum to 1.
DenseTensor normalize01(const DenseTensor& x);

}  // namespace tenexp
