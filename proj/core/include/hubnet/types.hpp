#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hubnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorKind {
  InvalidParameter,
  DimensionMismatch,
  ZeroVarianceColumn,
  ZeroColumn,
  NonzeroDiagonal,
  NotPositiveDefinite,
  DegenerateDf,
  AllWeightsInfinite,
  NonBinaryResponse,
  NoConvergence,
  MissingGroundTruth,
  InvalidSpec,
  Io,
};

std::string_view error_kind_name(ErrorKind kind);

// Single exception type for the whole library. `index` carries the offending
// column/row/observation when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<Index> index = std::nullopt)
      : std::runtime_error(message), kind_(kind), index_(index) {}

  ErrorKind kind() const { return kind_; }
  std::string_view kind_name() const { return error_kind_name(kind_); }
  std::optional<Index> index() const { return index_; }

 private:
  ErrorKind kind_;
  std::optional<Index> index_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message,
                               std::optional<Index> index = std::nullopt) {
  throw Error(kind, message, index);
}

// Root of a deterministic random stream. child(k) derives an independent
// substream, so generation order in one component never shifts another.
struct Seed {
  std::uint64_t value = 0;

  Seed child(std::uint64_t k) const;
  friend bool operator==(const Seed&, const Seed&) = default;
};

}  // namespace hubnet
