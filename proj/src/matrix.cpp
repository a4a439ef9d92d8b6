#include "crossrsa/matrix.hpp"

#include <string>

#include "crossrsa/error.hpp"

namespace crossrsa {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DataError("Matrix: expected " + std::to_string(rows_ * cols_) + " values, got " +
                    std::to_string(data_.size()));
  }
}

}  // namespace crossrsa
