#include "mjbd/types.hpp"

#include <numeric>
#include <utility>

namespace mjbd {

MatrixSet::MatrixSet(std::vector<Matrix> matrices) : matrices_(std::move(matrices)) {
    if (matrices_.empty()) {
        throw DimensionError("MatrixSet: need at least one matrix");
    }
    d_ = static_cast<int>(matrices_.front().rows());
    if (d_ < 1) {
        throw DimensionError("MatrixSet: matrices must be at least 1x1");
    }
    for (const Matrix& mat : matrices_) {
        if (mat.rows() != d_ || mat.cols() != d_) {
            throw DimensionError("MatrixSet: all matrices must be square with equal dimension");
        }
    }
}

Partition::Partition(std::vector<int> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) {
        throw DimensionError("Partition: need at least one part");
    }
    offsets_.reserve(parts_.size());
    for (int part : parts_) {
        if (part < 1) {
            throw DimensionError("Partition: every part must be a positive integer");
        }
        offsets_.push_back(total_);
        total_ += part;
    }
}

}  // namespace mjbd
