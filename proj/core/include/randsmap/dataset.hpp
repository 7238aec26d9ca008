// Dataset container and on-disk formats.
//
// A DataSet holds ambient observations column-wise in an M x N matrix. The
// binary layout is:
//
//   magic "MDEC" | u32 version = 1 | u64 M | u64 N | u8 mass_flag |
//   row-major little-endian float64 payload (M * N values)
//
// A JSON sidecar (same path with ".json" appended) carries the generator
// metadata and the optional per-point intrinsic coordinates.
//
// Fitted models use a companion container:
//
//   magic "RSMD" | u32 version = 1 | u64 header_bytes | JSON header |
//   for each matrix listed in header["matrices"]: row-major float64 payload
//
// Both formats are little-endian only; loading checks magic and sizes and
// throws IoError on any mismatch.

#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <string>

namespace randsmap {

struct DataSet {
  // Ambient data, one observation per column.
  Eigen::MatrixXd X;
  bool mass_preserving = false;
  // Optional generative parameters, one column per observation (may be 0x0).
  Eigen::MatrixXd intrinsic;
  // Generator record: seed, noise level, domain bounds, and similar.
  nlohmann::json meta = nlohmann::json::object();

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
};

// Throws std::invalid_argument if the matrix contains NaN/Inf or if the
// mass-preserving flag is set while some column sum deviates from 1 by more
// than 1e-12.
void validate_dataset(const DataSet& ds);

void save_dataset(const DataSet& ds, const std::filesystem::path& path);
DataSet load_dataset(const std::filesystem::path& path);

// Plain CSV (one observation per column, no header) for inspection.
void export_csv(const Eigen::MatrixXd& X, const std::filesystem::path& path);

// Model container: arbitrary JSON header plus named float64 matrices.
void save_model(const nlohmann::json& header,
                const std::map<std::string, Eigen::MatrixXd>& matrices,
                const std::filesystem::path& path);
std::pair<nlohmann::json, std::map<std::string, Eigen::MatrixXd>> load_model(
    const std::filesystem::path& path);

}  // namespace randsmap
