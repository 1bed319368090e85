#include "glee/matrix.hpp"

#include <cmath>

#include "glee/error.hpp"

namespace glee {

RealMatrix RealMatrix::identity(std::size_t n) {
    RealMatrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

bool all_finite(const RealMatrix& m) {
    for (double v : m.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void require_shape(const RealMatrix& m, std::size_t rows, std::size_t cols,
                   const std::string& ctx) {
    if (m.rows != rows || m.cols != cols) {
        throw DimensionError(ctx + ": expected " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", got " +
                             std::to_string(m.rows) + "x" + std::to_string(m.cols));
    }
}

double l2_norm(const double* v, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

double dot(const RealMatrix& a, const RealMatrix& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double max_abs_diff(const RealMatrix& a, const RealMatrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = std::fabs(a.data[i] - b.data[i]);
        if (d > m) m = d;
    }
    return m;
}

}  // namespace glee
