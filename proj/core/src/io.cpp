#include "hubnet/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "hubnet/matrix.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary matrix I/O assumes a little-endian host");

namespace hubnet {

namespace {

constexpr char kMagic[4] = {'H', 'N', 'M', '1'};

[[noreturn]] void io_fail(const std::string& path, const std::string& what) {
  raise(ErrorKind::Io, path + ": " + what);
}

double parse_double(std::string_view token, const std::string& path) {
  double v = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    io_fail(path, "malformed number '" + std::string(token) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const Matrix& x) {
  check_finite(x, "csv output");
  std::ofstream out(path, std::ios::binary);
  if (!out) io_fail(path, "cannot open for writing");
  std::string line;
  for (Index i = 0; i < x.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < x.cols(); ++j) {
      if (j > 0) line += ',';
      line += format_double(x(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) io_fail(path, "write failed");
}

void write_csv(const std::string& path, const Vector& v) {
  write_csv(path, Matrix(v));
}

Matrix read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open for reading");
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Index count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const auto token = rest.substr(0, comma);
      values.push_back(parse_double(token, path));
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols == -1) {
      cols = count;
    } else if (count != cols) {
      io_fail(path, "ragged rows: expected " + std::to_string(cols) +
                        " columns, row " + std::to_string(rows) + " has " +
                        std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) io_fail(path, "empty matrix");
  Matrix x(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      x(i, j) = values[static_cast<std::size_t>(i * cols + j)];
    }
  }
  check_finite(x, path.c_str());
  return x;
}

Vector read_vector_csv(const std::string& path) {
  const Matrix m = read_csv(path);
  if (m.cols() != 1) {
    io_fail(path, "expected a single column, got " + std::to_string(m.cols()));
  }
  return m.col(0);
}

void write_hnm1(const std::string& path, const Matrix& x) {
  check_finite(x, "binary output");
  std::ofstream out(path, std::ios::binary);
  if (!out) io_fail(path, "cannot open for writing");
  out.write(kMagic, 4);
  const auto rows = static_cast<std::uint64_t>(x.rows());
  const auto cols = static_cast<std::uint64_t>(x.cols());
  out.write(reinterpret_cast<const char*>(&rows), 8);
  out.write(reinterpret_cast<const char*>(&cols), 8);
  // File layout is row-major; storage is column-major, so transpose once.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm =
      x;
  out.write(reinterpret_cast<const char*>(rm.data()),
            static_cast<std::streamsize>(sizeof(double) * rows * cols));
  if (!out) io_fail(path, "write failed");
}

Matrix read_hnm1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open for reading");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    io_fail(path, "bad magic, not an HNM1 file");
  }
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 8);
  in.read(reinterpret_cast<char*>(&cols), 8);
  if (!in || rows == 0 || cols == 0 || rows > (1ULL << 32) ||
      cols > (1ULL << 32)) {
    io_fail(path, "implausible header dimensions");
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
      static_cast<Index>(rows), static_cast<Index>(cols));
  in.read(reinterpret_cast<char*>(rm.data()),
          static_cast<std::streamsize>(sizeof(double) * rows * cols));
  if (!in) io_fail(path, "truncated payload");
  Matrix x = rm;
  check_finite(x, path.c_str());
  return x;
}

Matrix read_matrix_auto(const std::string& path) {
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".hnm1") == 0) {
    return read_hnm1(path);
  }
  return read_csv(path);
}

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ZeroVarianceColumn: return "ZeroVarianceColumn";
    case ErrorKind::ZeroColumn: return "ZeroColumn";
    case ErrorKind::NonzeroDiagonal: return "NonzeroDiagonal";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::DegenerateDf: return "DegenerateDf";
    case ErrorKind::AllWeightsInfinite: return "AllWeightsInfinite";
    case ErrorKind::NonBinaryResponse: return "NonBinaryResponse";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace hubnet
