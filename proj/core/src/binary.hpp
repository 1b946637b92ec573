#pragma once

// Little-endian binary helpers shared by the state, draws and checkpoint formats.

#include "stsae/error.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace stsae::binary {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

inline void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
inline void write_i64(std::ostream& out, std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
inline void write_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

inline void write_doubles(std::ostream& out, const double* data, std::size_t n) {
  write_u64(out, n);
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}
inline void write_doubles(std::ostream& out, const std::vector<double>& v) { write_doubles(out, v.data(), v.size()); }
inline void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  write_doubles(out, v.data(), static_cast<std::size_t>(v.size()));
}
inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  write_u64(out, static_cast<std::uint64_t>(m.rows()));
  write_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

inline void check(std::istream& in, const char* what) {
  if (!in) fail(ErrorCode::ParseError, std::string("truncated binary stream while reading ") + what);
}

inline std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  check(in, "integer");
  return v;
}
inline std::int64_t read_i64(std::istream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  check(in, "integer");
  return v;
}
inline double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  check(in, "double");
  return v;
}

inline constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

inline std::vector<double> read_doubles(std::istream& in) {
  const auto n = read_u64(in);
  if (n > kMaxElements) fail(ErrorCode::ParseError, "implausible array length in binary stream");
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  check(in, "array");
  return v;
}
inline Eigen::VectorXd read_vector(std::istream& in) {
  auto v = read_doubles(in);
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}
inline Eigen::MatrixXd read_matrix(std::istream& in) {
  const auto rows = read_u64(in);
  const auto cols = read_u64(in);
  if (rows * cols > kMaxElements) fail(ErrorCode::ParseError, "implausible matrix size in binary stream");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  check(in, "matrix");
  return m;
}

inline void write_magic(std::ostream& out, const char (&magic)[9], std::uint64_t version) {
  out.write(magic, 8);
  write_u64(out, version);
}
inline void expect_magic(std::istream& in, const char (&magic)[9], std::uint64_t version) {
  char buf[8];
  in.read(buf, 8);
  check(in, "header");
  if (std::string(buf, 8) != std::string(magic, 8))
    fail(ErrorCode::ParseError, std::string("bad magic, expected ") + magic);
  const auto v = read_u64(in);
  if (v != version)
    fail(ErrorCode::ParseError, std::string(magic) + " format version " + std::to_string(v) + " is not supported");
}

}  // namespace stsae::binary
