#pragma once

// Dense row-major double matrix. The single carrier type for weights,
// activations, batches and gradients. All arithmetic is 64-bit.

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace srmoe {

struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // length rows*cols, row-major

    Mat() = default;
    Mat(int r, int c, double fill = 0.0);

    static Mat from(int r, int c, std::initializer_list<double> values);

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    int size() const { return rows * cols; }
    bool empty() const { return rows == 0 || cols == 0; }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const;
    bool all_zero() const;

    void fill(double v);
    void add_scaled(const Mat& o, double s);  // *this += s * o, shapes must match
};

Mat zeros_like(const Mat& m);

// Fills with iid samples; used by initializers.
class Rng;
Mat random_normal(int rows, int cols, double sd, Rng& rng);

}  // namespace srmoe
