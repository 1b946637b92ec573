#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace fixture {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("stsae_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string area_name(int j) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "A%02d", j + 1);
  return buf;
}

namespace {

void write_edges(const fs::path& path, int rows, int cols, const std::string& skip) {
  std::ofstream out(path);
  out << "# rook adjacency\n";
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int j = r * cols + c;
      const auto emit = [&](int k) {
        if (area_name(j) == skip || area_name(k) == skip) return;
        out << area_name(j) << ',' << area_name(k) << '\n';
      };
      if (c + 1 < cols) emit(j + 1);
      if (r + 1 < rows) emit(j + cols);
    }
}

}  // namespace

Inputs write_inputs(const fs::path& dir, int rows, int cols, int years, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> z;
  const int J = rows * cols;
  Inputs in{dir / "plots.csv", dir / "covariates.csv", dir / "adjacency.txt"};
  write_edges(in.adjacency, rows, cols, "");

  std::ofstream cov(in.covariates);
  cov.precision(17);
  cov << "area_id,year,tcc,slope\n";
  std::vector<double> tcc(J);
  for (int j = 0; j < J; ++j) tcc[j] = 40.0 + 15.0 * z(gen);
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < years; ++t) cov << area_name(j) << ',' << 2011 + t << ',' << tcc[j] + t << ',' << 5.0 + z(gen) << '\n';

  std::ofstream plots(in.plots);
  plots.precision(17);
  plots << "area_id,year,value\n";
  for (int t = 0; t < years; ++t)
    for (int j = 0; j < J; ++j) {
      const int key = (j + t) % 7;
      if (key == 5) {
        for (int i = 0; i < 3; ++i) plots << area_name(j) << ',' << 2011 + t << ",0\n";
        continue;
      }
      const int n = key == 3 ? 1 : (j * 3 + t) % 5;
      for (int i = 0; i < n; ++i)
        plots << area_name(j) << ',' << 2011 + t << ',' << std::max(0.0, 20.0 + tcc[j] + 2.0 * t + 15.0 * z(gen)) << '\n';
    }
  return in;
}

fs::path write_adjacency_without(const fs::path& dir, int rows, int cols, const std::string& island) {
  const fs::path p = dir / "adjacency_island.txt";
  write_edges(p, rows, cols, island);
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) f.push_back(cell);
    rows.push_back(f);
  }
  return rows;
}

}  // namespace fixture
