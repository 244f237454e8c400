#include "srmoe/mat.hpp"

#include <cmath>
#include <stdexcept>

#include "srmoe/rng.hpp"

namespace srmoe {

Mat::Mat(int r, int c, double fill)
    : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative dimension");
}

Mat Mat::from(int r, int c, std::initializer_list<double> values) {
    Mat m(r, c);
    if (static_cast<int>(values.size()) != r * c)
        throw std::invalid_argument("Mat::from: value count does not match shape");
    std::size_t i = 0;
    for (double v : values) m.data[i++] = v;
    return m;
}

bool Mat::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

bool Mat::all_zero() const {
    for (double v : data)
        if (v != 0.0) return false;
    return true;
}

void Mat::fill(double v) {
    for (double& x : data) x = v;
}

void Mat::add_scaled(const Mat& o, double s) {
    if (!same_shape(o)) throw std::invalid_argument("Mat::add_scaled: shape mismatch");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += s * o.data[i];
}

Mat zeros_like(const Mat& m) { return Mat(m.rows, m.cols); }

Mat random_normal(int rows, int cols, double sd, Rng& rng) {
    Mat m(rows, cols);
    for (double& v : m.data) v = rng.normal(0.0, sd);
    return m;
}

}  // namespace srmoe
