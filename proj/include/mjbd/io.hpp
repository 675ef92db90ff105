#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "mjbd/synth.hpp"
#include "mjbd/types.hpp"

namespace mjbd {

/// Optional truth metadata carried in the file header.
struct FileExtras {
    std::optional<std::vector<int>> partition;
    std::optional<std::uint64_t> seed;
    std::optional<double> snr_db;

    bool empty() const { return !partition && !seed && !snr_db; }
};

/// Container format: one JSON header line
///   {"d":...,"dtype":"f64le","extras":{...},"m":...,"magic":"MJBD1"}
/// terminated by a single newline, then m*d*d doubles, little endian,
/// matrices consecutive, each row-major.
void write_matrix_set(const std::filesystem::path& path, const MatrixSet& set,
                      const FileExtras& extras = {});

struct MatrixSetFile {
    MatrixSet set;
    FileExtras extras;
};

MatrixSetFile read_matrix_set(const std::filesystem::path& path);

/// Rectangular single-matrix sidecar (magic "MJBDA1", fields rows/cols),
/// same header + payload scheme, row-major f64le payload.
void write_matrix(const std::filesystem::path& path, const Matrix& A);
Matrix read_matrix(const std::filesystem::path& path);

/// Truth sidecars of a synthesized instance written next to it:
/// <path>.truth.json (tau, seed, snr, kind) and <path>.A (mixing matrix).
void write_truth_sidecar(const std::filesystem::path& instance_path,
                         const PlantedInstance& instance, double snr_db);

struct TruthSidecar {
    Partition partition;
    Matrix A;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    std::string kind;
};

TruthSidecar read_truth_sidecar(const std::filesystem::path& instance_path);

}  // namespace mjbd
