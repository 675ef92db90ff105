#include "mjbd/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

namespace mjbd {

namespace {

using nlohmann::json;

void write_f64le(std::ostream& out, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_f64le(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    double value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
}

json snr_to_json(double snr_db) {
    if (std::isinf(snr_db)) return "inf";
    return snr_db;
}

double snr_from_json(const json& j) {
    if (j.is_string()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

json header_json(const MatrixSet& set, const FileExtras& extras) {
    json header;
    header["magic"] = "MJBD1";
    header["m"] = set.m();
    header["d"] = set.d();
    header["dtype"] = "f64le";
    if (!extras.empty()) {
        json extra;
        if (extras.partition) extra["partition"] = *extras.partition;
        if (extras.seed) extra["seed"] = *extras.seed;
        if (extras.snr_db) extra["snr"] = snr_to_json(*extras.snr_db);
        header["extras"] = extra;
    }
    return header;
}

}  // namespace

void write_matrix_set(const std::filesystem::path& path, const MatrixSet& set,
                      const FileExtras& extras) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("write_matrix_set: cannot open " + path.string());
    }
    out << header_json(set, extras).dump() << '\n';
    for (const Matrix& mat : set) {
        for (int r = 0; r < mat.rows(); ++r) {
            for (int c = 0; c < mat.cols(); ++c) {
                write_f64le(out, mat(r, c));
            }
        }
    }
    if (!out) {
        throw InputError("write_matrix_set: write failed for " + path.string());
    }
}

MatrixSetFile read_matrix_set(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("read_matrix_set: cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError("read_matrix_set: missing header line");
    }
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& err) {
        throw InputError(std::string("read_matrix_set: malformed header: ") + err.what());
    }
    if (!header.contains("magic") || header["magic"] != "MJBD1") {
        throw InputError("read_matrix_set: bad magic");
    }
    if (!header.contains("dtype") || header["dtype"] != "f64le") {
        throw InputError("read_matrix_set: unsupported dtype");
    }
    const int m = header.value("m", 0);
    const int d = header.value("d", 0);
    if (m < 1 || d < 1) {
        throw InputError("read_matrix_set: invalid m or d");
    }

    std::vector<Matrix> matrices;
    matrices.reserve(m);
    for (int i = 0; i < m; ++i) {
        Matrix mat(d, d);
        for (int r = 0; r < d; ++r) {
            for (int c = 0; c < d; ++c) {
                mat(r, c) = read_f64le(in);
            }
        }
        matrices.push_back(std::move(mat));
    }
    if (!in) {
        throw InputError("read_matrix_set: payload truncated");
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw InputError("read_matrix_set: trailing bytes after the payload");
    }

    MatrixSetFile file;
    file.set = MatrixSet(std::move(matrices));
    if (header.contains("extras")) {
        const json& extra = header["extras"];
        if (extra.contains("partition")) {
            file.extras.partition = extra["partition"].get<std::vector<int>>();
        }
        if (extra.contains("seed")) file.extras.seed = extra["seed"].get<std::uint64_t>();
        if (extra.contains("snr")) file.extras.snr_db = snr_from_json(extra["snr"]);
    }
    return file;
}

void write_matrix(const std::filesystem::path& path, const Matrix& A) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("write_matrix: cannot open " + path.string());
    }
    json header;
    header["magic"] = "MJBDA1";
    header["rows"] = A.rows();
    header["cols"] = A.cols();
    header["dtype"] = "f64le";
    out << header.dump() << '\n';
    for (int r = 0; r < A.rows(); ++r) {
        for (int c = 0; c < A.cols(); ++c) {
            write_f64le(out, A(r, c));
        }
    }
    if (!out) {
        throw InputError("write_matrix: write failed for " + path.string());
    }
}

Matrix read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("read_matrix: cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError("read_matrix: missing header line");
    }
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& err) {
        throw InputError(std::string("read_matrix: malformed header: ") + err.what());
    }
    if (!header.contains("magic") || header["magic"] != "MJBDA1") {
        throw InputError("read_matrix: bad magic");
    }
    const int rows = header.value("rows", 0);
    const int cols = header.value("cols", 0);
    if (rows < 1 || cols < 1) {
        throw InputError("read_matrix: invalid shape");
    }
    Matrix A(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            A(r, c) = read_f64le(in);
        }
    }
    if (!in) {
        throw InputError("read_matrix: payload truncated");
    }
    return A;
}

void write_truth_sidecar(const std::filesystem::path& instance_path,
                         const PlantedInstance& instance, double snr_db) {
    json truth;
    truth["kind"] = instance.kind;
    truth["partition"] = instance.partition.parts();
    truth["seed"] = instance.seed;
    truth["snr"] = snr_to_json(snr_db);
    truth["sigma"] = instance.sigma;

    std::filesystem::path json_path = instance_path;
    json_path += ".truth.json";
    std::ofstream out(json_path);
    if (!out) {
        throw InputError("write_truth_sidecar: cannot open " + json_path.string());
    }
    out << truth.dump(2) << '\n';

    std::filesystem::path a_path = instance_path;
    a_path += ".A";
    write_matrix(a_path, instance.truth_A);
}

TruthSidecar read_truth_sidecar(const std::filesystem::path& instance_path) {
    std::filesystem::path json_path = instance_path;
    json_path += ".truth.json";
    std::ifstream in(json_path);
    if (!in) {
        throw InputError("read_truth_sidecar: cannot open " + json_path.string());
    }
    json truth;
    try {
        in >> truth;
    } catch (const json::exception& err) {
        throw InputError(std::string("read_truth_sidecar: malformed JSON: ") + err.what());
    }

    TruthSidecar sidecar;
    sidecar.partition = Partition(truth.at("partition").get<std::vector<int>>());
    sidecar.seed = truth.value("seed", std::uint64_t{0});
    sidecar.snr_db = truth.contains("snr") ? snr_from_json(truth["snr"]) : 0.0;
    sidecar.kind = truth.value("kind", "");

    std::filesystem::path a_path = instance_path;
    a_path += ".A";
    sidecar.A = read_matrix(a_path);
    return sidecar;
}

}  // namespace mjbd
