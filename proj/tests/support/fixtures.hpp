#pragma once

// On-disk input sets for end-to-end tests.

#include <filesystem>
#include <string>
#include <vector>

namespace fixture {

/// Fresh empty directory under the system temp path.
std::filesystem::path scratch_dir(const std::string& name);

struct Inputs {
  std::filesystem::path plots, covariates, adjacency;
};

/// rows x cols lattice of areas named A01, A02, ... over `years` years starting
/// at 2011, covariates `tcc` and `slope`. Plot counts cycle through 0..4; cells
/// where (area + year) % 7 == 3 hold exactly one plot and cells where
/// (area + year) % 7 == 5 hold three plots of value 0.
Inputs write_inputs(const std::filesystem::path& dir, int rows, int cols, int years, unsigned seed);

/// Same plots and covariates with the edges touching `island` removed.
std::filesystem::path write_adjacency_without(const std::filesystem::path& dir, int rows, int cols,
                                              const std::string& island);

std::string area_name(int j);

/// Splits a CSV text into rows of fields (no quoting).
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace fixture
