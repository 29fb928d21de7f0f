#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fedtab {

// Minimal row-major dense matrix of doubles.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
};

// out = A (rows x in) * W (in x out_dim) + b, b may be null.
inline Mat linear(const Mat& a, const double* w, const double* b, int out_dim) {
    Mat out(a.rows, out_dim);
    for (int r = 0; r < a.rows; ++r) {
        const double* ar = a.row(r);
        double* orow = out.row(r);
        if (b) {
            for (int c = 0; c < out_dim; ++c) orow[c] = b[c];
        }
        for (int k = 0; k < a.cols; ++k) {
            const double av = ar[k];
            if (av == 0.0) continue;
            const double* wr = w + static_cast<std::size_t>(k) * out_dim;
            for (int c = 0; c < out_dim; ++c) orow[c] += av * wr[c];
        }
    }
    return out;
}

// Accumulates gradients of `linear`: dA += dOut * W^T, dW += A^T * dOut,
// db += column sums of dOut.
inline void linear_backward(const Mat& a, const double* w, const Mat& d_out,
                            Mat& d_a, double* dw, double* db) {
    const int in_dim = a.cols;
    const int out_dim = d_out.cols;
    if (d_a.rows != a.rows || d_a.cols != in_dim)
        throw std::invalid_argument("linear_backward: dA shape mismatch");
    for (int r = 0; r < a.rows; ++r) {
        const double* ar = a.row(r);
        const double* gr = d_out.row(r);
        double* dar = d_a.row(r);
        for (int k = 0; k < in_dim; ++k) {
            const double* wr = w + static_cast<std::size_t>(k) * out_dim;
            double* dwr = dw + static_cast<std::size_t>(k) * out_dim;
            double acc = 0.0;
            for (int c = 0; c < out_dim; ++c) {
                acc += gr[c] * wr[c];
                dwr[c] += ar[k] * gr[c];
            }
            dar[k] += acc;
        }
        for (int c = 0; c < out_dim; ++c) db[c] += gr[c];
    }
}

}  // namespace fedtab
