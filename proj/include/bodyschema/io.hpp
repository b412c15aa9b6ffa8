#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bodyschema/body_map.hpp"
#include "bodyschema/dpgmm.hpp"
#include "bodyschema/simulation.hpp"

namespace bodyschema {

// Binary tactile log, little-endian:
//   "BSTL" | u32 version | u64 M | u64 T | f64 dt | u32 N | u64 seed |
//   u64 agent fingerprint | u32 flags (bit 0: quantized block present) |
//   f32[M*T] raw (row-major) | u8[M*T] quantized (optional)
inline constexpr std::uint32_t kTactileLogVersion = 1;
void write_tactile_log(const TactileLog& log, const std::filesystem::path& path);
TactileLog read_tactile_log(const std::filesystem::path& path);
// Debug export: one row per sensor. Writes the quantized symbols when
// `quantized` is set, raw pressures otherwise.
void write_tactile_csv(const TactileLog& log, const std::filesystem::path& path, bool quantized = false);

// Matrices: "BSDM" (distance) / "BSBM" (body map) | u32 version | u64 rows |
// u64 cols | f64[rows*cols] row-major; body maps append u64 count | f64[count]
// eigenvalues. CSV: a "rows,cols" header line followed by the rows.
inline constexpr std::uint32_t kMatrixVersion = 1;
void write_distance_matrix(const DistanceMatrix& dist, const std::filesystem::path& path);
DistanceMatrix read_distance_matrix(const std::filesystem::path& path);
void write_body_map(const BodyMap& map, const std::filesystem::path& path);
BodyMap read_body_map(const std::filesystem::path& path);

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

// Chain dump, JSON Lines: a header object, then one object per sample with
// run-length encoded z, pi, means, covariance lower triangles, joints, tree
// edges and the log-joint score.
struct ChainHeader {
  SamplerMode mode = SamplerMode::kDpgmmLj;
  std::uint64_t seed = 0;
  int k_max = 0;
  int dim = 0;
  int points = 0;
  int min_active_count = 2;
};

void write_chain(const ChainHeader& header, const std::vector<ChainSample>& samples, const std::filesystem::path& path);
std::vector<ChainSample> read_chain(const std::filesystem::path& path, ChainHeader* header = nullptr);

}  // namespace bodyschema
