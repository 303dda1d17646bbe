#pragma once

#include <cstddef>
#include <vector>

namespace taco {

using Vector = std::vector<double>;

// Dense row-major matrix. Deliberately minimal: the model is small enough
// that hand-written loops beat pulling in a linear algebra dependency.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vector v;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

}  // namespace taco
