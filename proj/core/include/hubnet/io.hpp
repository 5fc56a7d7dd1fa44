#pragma once

#include <string>

#include "hubnet/types.hpp"

namespace hubnet {

// Headerless CSV of doubles, comma separated, "\n" line endings, values
// printed with "%.17g" so a write/read round trip is exact. All I/O raises
// ErrorKind::Io on filesystem failures and malformed input.
void write_csv(const std::string& path, const Matrix& x);
Matrix read_csv(const std::string& path);

// Vectors are single-column CSVs.
void write_csv(const std::string& path, const Vector& v);
Vector read_vector_csv(const std::string& path);

// Binary matrix format: magic "HNM1", then uint64 rows, uint64 cols, then
// rows*cols float64 values row-major, all little-endian.
void write_hnm1(const std::string& path, const Matrix& x);
Matrix read_hnm1(const std::string& path);

// Reads .csv or .hnm1 by file extension.
Matrix read_matrix_auto(const std::string& path);

// Locale-independent shortest-exact formatting used by all CSV writers.
std::string format_double(double v);

}  // namespace hubnet
