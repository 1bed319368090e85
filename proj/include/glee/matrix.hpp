#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace glee {

// Dense row-major matrix of 64-bit reals. Vectors are stored as 1xN.
struct RealMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    RealMatrix() = default;
    RealMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const RealMatrix& other) const {
        return rows == other.rows && cols == other.cols;
    }

    void fill(double v) { data.assign(data.size(), v); }

    static RealMatrix identity(std::size_t n);
};

bool all_finite(const RealMatrix& m);

// Throws DimensionError mentioning `ctx` if shapes disagree.
void require_shape(const RealMatrix& m, std::size_t rows, std::size_t cols,
                   const std::string& ctx);

double l2_norm(const double* v, std::size_t n);

// Frobenius dot / norm over the whole matrix.
double dot(const RealMatrix& a, const RealMatrix& b);

double max_abs_diff(const RealMatrix& a, const RealMatrix& b);

}  // namespace glee
