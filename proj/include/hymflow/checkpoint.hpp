#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hymflow/bundle.hpp"
#include "hymflow/diagnostics.hpp"
#include "hymflow/geometry.hpp"

namespace hymflow {

enum class CheckpointFailure { corrupt_header, shape_mismatch, unknown_version, io };

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(CheckpointFailure kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  CheckpointFailure kind() const { return kind_; }

 private:
  CheckpointFailure kind_;
};

constexpr std::uint32_t checkpoint_version = 1;

/// A state together with everything needed to diagnose it offline.
struct Checkpoint {
  GridGeometry grid;
  MatrixField g;  ///< metric coefficients
  double t = 0.0;
  ConnectionState connection;     ///< always present
  std::optional<MatrixField> H;   ///< metric-flow states also carry H
  FormField holomorphic_a;        ///< and the fixed holomorphic structure
};

Checkpoint make_checkpoint(const MetricField& metric, const BundleState& state, double t);
Checkpoint make_checkpoint(const MetricField& metric, const ConnectionState& state, double t);

/// The stored metric-flow state, or std::nullopt for connection states.
std::optional<BundleState> bundle_state(const Checkpoint& cp);

/// HYMF file: magic, u32 version, u32 n, u32 N, u32 rank, i64 fluxes
/// (rank x 2), then named blocks of little-endian doubles with real and
/// imaginary parts interleaved. Written to a temporary file, then renamed.
void write_checkpoint(const std::string& path, const Checkpoint& cp);

/// Throws CheckpointError. If `expected` is given, n and N must match it.
Checkpoint read_checkpoint(const std::string& path, const GridGeometry* expected = nullptr);

/// Header row of DiagnosticsRecord field names, then one row per record at
/// 17 significant digits.
std::string format_csv(const std::vector<DiagnosticsRecord>& records);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace hymflow
