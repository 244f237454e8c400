#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "srmoe/mat.hpp"
#include "srmoe/rng.hpp"

using srmoe::Mat;
using srmoe::Rng;

TEST_CASE("construction zero-fills by default") {
    Mat m(3, 4);
    CHECK(m.rows == 3);
    CHECK(m.cols == 4);
    CHECK(m.size() == 12);
    for (double v : m.data) CHECK(v == 0.0);
    CHECK(m.all_zero());
}

TEST_CASE("from builds row-major from a list") {
    const Mat m = Mat::from(2, 3, {1, 2, 3, 4, 5, 6});
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(0, 2) == 3);
    CHECK(m.at(1, 0) == 4);
    CHECK(m.at(1, 2) == 6);
}

TEST_CASE("row points at contiguous storage") {
    Mat m = Mat::from(2, 2, {1, 2, 3, 4});
    double* r1 = m.row(1);
    r1[0] = 9;
    CHECK(m.at(1, 0) == 9);
}

TEST_CASE("fill and add_scaled") {
    Mat a(2, 2);
    a.fill(1.0);
    const Mat b = Mat::from(2, 2, {1, 2, 3, 4});
    a.add_scaled(b, 0.5);
    CHECK(a.at(0, 0) == doctest::Approx(1.5));
    CHECK(a.at(1, 1) == doctest::Approx(3.0));
}

TEST_CASE("same_shape compares dimensions only") {
    CHECK(Mat(2, 3).same_shape(Mat(2, 3)));
    CHECK_FALSE(Mat(2, 3).same_shape(Mat(3, 2)));
}

TEST_CASE("all_finite flags NaN and infinity") {
    Mat m(2, 2);
    CHECK(m.all_finite());
    m.at(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(m.all_finite());
    m.at(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_FALSE(m.all_finite());
}

TEST_CASE("zeros_like copies shape not contents") {
    const Mat m = Mat::from(2, 2, {1, 2, 3, 4});
    const Mat z = srmoe::zeros_like(m);
    CHECK(z.same_shape(m));
    CHECK(z.all_zero());
}

TEST_CASE("random_normal is seed-deterministic with sane spread") {
    Rng a(5);
    Rng b(5);
    const Mat x = srmoe::random_normal(8, 8, 2.0, a);
    const Mat y = srmoe::random_normal(8, 8, 2.0, b);
    CHECK(x.data == y.data);

    double sq = 0.0;
    for (double v : x.data) sq += v * v;
    const double sd = std::sqrt(sq / x.size());
    CHECK(sd == doctest::Approx(2.0).epsilon(0.35));
}

TEST_CASE("empty matrix is handled") {
    const Mat m(0, 0);
    CHECK(m.empty());
    CHECK(m.size() == 0);
    CHECK(m.all_finite());
}
