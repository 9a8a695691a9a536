#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "flashgan/error.hpp"

namespace flashgan {

// Dense row-major f64 matrix. Row vectors double as feature rows, so most
// shapes here are (n_items, dim).
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {
        if (r < 0 || c < 0) throw DimensionError("matrix dims must be non-negative");
    }

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    size_t size() const { return a.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    static Matrix zeros_like(const Matrix& m) { return Matrix(m.rows, m.cols); }
};

inline std::string shape_str(const Matrix& m) {
    return "(" + std::to_string(m.rows) + "x" + std::to_string(m.cols) + ")";
}

inline void check_same_shape(const Matrix& x, const Matrix& y, const char* op) {
    if (!x.same_shape(y))
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(x) + " vs " + shape_str(y));
}

inline Matrix matmul(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows)
        throw DimensionError("matmul: inner dims " + shape_str(x) + " vs " + shape_str(y));
    Matrix out(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i) {
        const double* xi = &x.a[static_cast<size_t>(i) * x.cols];
        double* oi = &out.a[static_cast<size_t>(i) * out.cols];
        for (int k = 0; k < x.cols; ++k) {
            const double v = xi[k];
            if (v == 0.0) continue;
            const double* yk = &y.a[static_cast<size_t>(k) * y.cols];
            for (int j = 0; j < y.cols; ++j) oi[j] += v * yk[j];
        }
    }
    return out;
}

inline Matrix transpose(const Matrix& x) {
    Matrix out(x.cols, x.rows);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) out(j, i) = x(i, j);
    return out;
}

inline Matrix add(const Matrix& x, const Matrix& y) {
    check_same_shape(x, y, "add");
    Matrix out = x;
    for (size_t i = 0; i < out.a.size(); ++i) out.a[i] += y.a[i];
    return out;
}

inline void add_in_place(Matrix& x, const Matrix& y) {
    check_same_shape(x, y, "add_in_place");
    for (size_t i = 0; i < x.a.size(); ++i) x.a[i] += y.a[i];
}

inline Matrix scale(const Matrix& x, double s) {
    Matrix out = x;
    for (double& v : out.a) v *= s;
    return out;
}

inline double frobenius_norm(const Matrix& x) {
    double s = 0.0;
    for (double v : x.a) s += v * v;
    return std::sqrt(s);
}

inline bool has_nonfinite(const Matrix& x) {
    for (double v : x.a)
        if (!std::isfinite(v)) return true;
    return false;
}

} // namespace flashgan
