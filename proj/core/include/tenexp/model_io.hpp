#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tenexp/decompositions.hpp"
#include "tenexp/tensor.hpp"

namespace tenexp {

// Container for fitted or generated factors: the 8-byte magic "TENEXPM1",
// a little-endian uint64 header length, a JSON header describing every
// candidate and array, then one NPY stream per array in header order.
struct ModelArchive {
  std::vector<CandidateDecomposition> candidates;
  std::vector<double> gate_scores;
  std::vector<double> gate_weights;
  std::vector<std::size_t> support;
  std::vector<std::pair<std::string, DenseTensor>> extra_arrays;
};

void save_model(const std::filesystem::path& path, const ModelArchive& archive);
ModelArchive load_model(const std::filesystem::path& path);

}  // namespace tenexp
