#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "srmoe/grad_check.hpp"
#include "srmoe/mat.hpp"
#include "srmoe/ops.hpp"
#include "srmoe/param.hpp"
#include "srmoe/rng.hpp"
#include "srmoe/tape.hpp"

using srmoe::Mat;
using srmoe::NodeId;
using srmoe::Param;
using srmoe::Rng;
using srmoe::Tape;
namespace ops = srmoe::ops;

namespace {

// Reduce an arbitrary node to a scalar through fixed random probe vectors so
// every output coordinate influences the loss with a distinct weight.
NodeId scalarize(Tape& t, NodeId id, int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    Mat left(1, rows), right(cols, 1);
    for (double& v : left.data) v = rng.normal();
    for (double& v : right.data) v = rng.normal();
    return ops::matmul(t, ops::matmul(t, t.constant(left), id), t.constant(right));
}

Mat random_mat(int r, int c, std::uint64_t seed, double sd = 1.0) {
    Rng rng(seed);
    Mat m(r, c);
    for (double& v : m.data) v = rng.normal(0.0, sd);
    return m;
}

}  // namespace

TEST_CASE("leaf gradients accumulate into the param") {
    Param p("p", Mat::from(1, 2, {3.0, -1.0}));
    Tape t;
    const NodeId x = t.leaf(p);
    const NodeId loss = scalarize(t, x, 1, 2, 1);
    t.backward(loss);
    const Mat first = p.grad;
    CHECK_FALSE(first.all_zero());

    // A second backward on the same tape adds the same gradient again.
    t.backward(loss);
    CHECK(p.grad.at(0, 0) == doctest::Approx(2.0 * first.at(0, 0)));
    CHECK(p.grad.at(0, 1) == doctest::Approx(2.0 * first.at(0, 1)));
}

TEST_CASE("backward requires a scalar root") {
    Param p("p", Mat::from(2, 2, {1, 2, 3, 4}));
    Tape t;
    const NodeId x = t.leaf(p);
    CHECK_THROWS(t.backward(x));
}

TEST_CASE("clear resets the tape") {
    Tape t;
    t.constant(Mat(2, 2));
    CHECK(t.size() == 1);
    t.clear();
    CHECK(t.size() == 0);
}

TEST_CASE("add, scale, relu forward and gradients") {
    Param a("a", random_mat(3, 4, 11));
    Param b("b", random_mat(3, 4, 13));
    auto loss = [&]() {
        Tape t;
        const NodeId s = ops::add(t, t.leaf(a), ops::scale(t, t.leaf(b), -2.5));
        const NodeId r = ops::relu(t, s);
        const NodeId out = scalarize(t, r, 3, 4, 17);
        t.backward(out);
        return t.value(out).at(0, 0);
    };
    // Forward spot check: relu(a - 2.5 b).
    {
        Tape t;
        const NodeId s = ops::add(t, t.leaf(a), ops::scale(t, t.leaf(b), -2.5));
        const NodeId r = ops::relu(t, s);
        for (int i = 0; i < 12; ++i) {
            const double want =
                std::max(0.0, a.value.data[static_cast<std::size_t>(i)] -
                                  2.5 * b.value.data[static_cast<std::size_t>(i)]);
            CHECK(t.value(r).data[static_cast<std::size_t>(i)] == doctest::Approx(want));
        }
    }
    const auto res = srmoe::grad_check(loss, {&a, &b});
    CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("matmul gradient") {
    Param a("a", random_mat(4, 3, 19));
    Param b("b", random_mat(3, 5, 23));
    auto loss = [&]() {
        Tape t;
        const NodeId c = ops::matmul(t, t.leaf(a), t.leaf(b));
        const NodeId out = scalarize(t, c, 4, 5, 29);
        t.backward(out);
        return t.value(out).at(0, 0);
    };
    CHECK(srmoe::grad_check(loss, {&a, &b}).max_rel_err < 1e-5);
}

TEST_CASE("linear layer broadcasts the bias and back-propagates") {
    Param x("x", random_mat(5, 3, 31));
    Param w("w", random_mat(3, 4, 37));
    Param b("b", random_mat(1, 4, 41));
    {
        Tape t;
        const NodeId y = ops::linear(t, t.leaf(x), t.leaf(w), t.leaf(b));
        const Mat xw = oracle::naive_matmul(x.value, w.value);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 4; ++j)
                CHECK(t.value(y).at(i, j) == doctest::Approx(xw.at(i, j) + b.value.at(0, j)));
    }
    auto loss = [&]() {
        Tape t;
        const NodeId y = ops::linear(t, t.leaf(x), t.leaf(w), t.leaf(b));
        const NodeId out = scalarize(t, y, 5, 4, 43);
        t.backward(out);
        return t.value(out).at(0, 0);
    };
    CHECK(srmoe::grad_check(loss, {&x, &w, &b}).max_rel_err < 1e-5);
}

TEST_CASE("layer norm normalizes rows then applies the affine pair") {
    Param x("x", random_mat(4, 6, 47, 2.0));
    Param g("g", random_mat(1, 6, 53));
    Param s("s", random_mat(1, 6, 59));
    {
        // With gain 1 and shift 0 each row has mean ~0 and variance ~1.
        Param g1("g1", Mat(1, 6));
        g1.value.fill(1.0);
        Param s0("s0", Mat(1, 6));
        Tape t;
        const NodeId y = ops::layer_norm(t, t.leaf(x), t.leaf(g1), t.leaf(s0), 1e-9);
        for (int i = 0; i < 4; ++i) {
            double mean = 0.0, var = 0.0;
            for (int j = 0; j < 6; ++j) mean += t.value(y).at(i, j);
            mean /= 6.0;
            for (int j = 0; j < 6; ++j) {
                const double dxx = t.value(y).at(i, j) - mean;
                var += dxx * dxx;
            }
            var /= 6.0;
            CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
            CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
    auto loss = [&]() {
        Tape t;
        const NodeId y = ops::layer_norm(t, t.leaf(x), t.leaf(g), t.leaf(s), 1e-5);
        const NodeId out = scalarize(t, y, 4, 6, 61);
        t.backward(out);
        return t.value(out).at(0, 0);
    };
    CHECK(srmoe::grad_check(loss, {&x, &g, &s}).max_rel_err < 1e-5);
}

TEST_CASE("layer norm maps a constant row to the shift") {
    Param x("x", Mat::from(1, 4, {5, 5, 5, 5}));
    Param g("g", Mat(1, 4));
    g.value.fill(1.0);
    Param s("s", Mat(1, 4));
    Tape t;
    const NodeId y = ops::layer_norm(t, t.leaf(x), t.leaf(g), t.leaf(s), 1e-5);
    for (int j = 0; j < 4; ++j) CHECK(t.value(y).at(0, j) == doctest::Approx(0.0));
}

TEST_CASE("softmax rows are distributions and differentiate") {
    Param x("x", random_mat(5, 4, 67, 1.5));
    {
        Tape t;
        const NodeId p = ops::softmax_rows(t, t.leaf(x));
        for (int i = 0; i < 5; ++i) {
            double sum = 0.0;
            for (int j = 0; j < 4; ++j) {
                const double v = t.value(p).at(i, j);
                CHECK(v >= 0.0);
                sum += v;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    auto loss = [&]() {
        Tape t;
        const NodeId p = ops::softmax_rows(t, t.leaf(x));
        const NodeId out = scalarize(t, p, 5, 4, 71);
        t.backward(out);
        return t.value(out).at(0, 0);
    };
    CHECK(srmoe::grad_check(loss, {&x}).max_rel_err < 1e-5);
}

TEST_CASE("cross entropy: uniform logits give ln(K), shifts change nothing") {
    Param x("x", Mat(3, 4));
    const std::vector<int> labels = {0, 2, 3};
    {
        Tape t;
        const NodeId l = ops::softmax_cross_entropy(t, t.leaf(x), labels);
        CHECK(t.value(l).at(0, 0) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    }
    Param y("y", random_mat(3, 4, 73));
    Mat shifted = y.value;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) shifted.at(i, j) += 100.0;  // per-row constant shift
    Param ys("ys", shifted);
    Tape t1, t2;
    const NodeId l1 = ops::softmax_cross_entropy(t1, t1.leaf(y), labels);
    const NodeId l2 = ops::softmax_cross_entropy(t2, t2.leaf(ys), labels);
    CHECK(t1.value(l1).at(0, 0) == doctest::Approx(t2.value(l2).at(0, 0)).epsilon(1e-9));

    auto loss = [&]() {
        Tape t;
        const NodeId l = ops::softmax_cross_entropy(t, t.leaf(y), labels);
        t.backward(l);
        return t.value(l).at(0, 0);
    };
    CHECK(srmoe::grad_check(loss, {&y}).max_rel_err < 1e-5);
}

TEST_CASE("mean of scalars and its gradient") {
    Param a("a", Mat::from(1, 1, {2.0}));
    Param b("b", Mat::from(1, 1, {6.0}));
    Tape t;
    const NodeId m = ops::mean_scalars(t, {t.leaf(a), t.leaf(b)});
    CHECK(t.value(m).at(0, 0) == doctest::Approx(4.0));
    t.backward(m);
    CHECK(a.grad.at(0, 0) == doctest::Approx(0.5));
    CHECK(b.grad.at(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("prototype distances: forward values and gradients") {
    Param z("z", Mat::from(2, 2, {0, 0, 3, 4}));
    Param mu("mu", Mat::from(2, 2, {0, 0, 0, 8}));
    {
        Tape t;
        const NodeId d = ops::proto_distances(t, t.leaf(z), t.leaf(mu));
        CHECK(t.value(d).at(0, 0) == doctest::Approx(0.0));
        CHECK(t.value(d).at(0, 1) == doctest::Approx(8.0));
        CHECK(t.value(d).at(1, 0) == doctest::Approx(5.0));
        CHECK(t.value(d).at(1, 1) == doctest::Approx(5.0));
    }
    Param z2("z2", random_mat(3, 4, 79));
    Param mu2("mu2", random_mat(5, 4, 83));
    auto loss = [&]() {
        Tape t;
        const NodeId d = ops::proto_distances(t, t.leaf(z2), t.leaf(mu2));
        const NodeId out = scalarize(t, d, 3, 5, 89);
        t.backward(out);
        return t.value(out).at(0, 0);
    };
    CHECK(srmoe::grad_check(loss, {&z2, &mu2}).max_rel_err < 1e-5);
}

TEST_CASE("a sample exactly on a prototype keeps gradients finite") {
    Param z("z", Mat::from(1, 2, {1, 1}));
    Param mu("mu", Mat::from(2, 2, {1, 1, 0, 0}));
    Tape t;
    const NodeId d = ops::proto_distances(t, t.leaf(z), t.leaf(mu));
    const NodeId out = scalarize(t, d, 1, 2, 97);
    t.backward(out);
    CHECK(z.grad.all_finite());
    CHECK(mu.grad.all_finite());
}

TEST_CASE("weighted sum combines expert outputs per sample") {
    Param w("w", Mat::from(2, 2, {0.25, 0.75, 1.0, 0.0}));
    Param e0("e0", Mat::from(2, 2, {1, 2, 3, 4}));
    Param e1("e1", Mat::from(2, 2, {10, 20, 30, 40}));
    {
        Tape t;
        const NodeId out = ops::weighted_sum(t, t.leaf(w), {t.leaf(e0), t.leaf(e1)});
        CHECK(t.value(out).at(0, 0) == doctest::Approx(0.25 * 1 + 0.75 * 10));
        CHECK(t.value(out).at(0, 1) == doctest::Approx(0.25 * 2 + 0.75 * 20));
        CHECK(t.value(out).at(1, 0) == doctest::Approx(3.0));
        CHECK(t.value(out).at(1, 1) == doctest::Approx(4.0));
    }
    Param wr("wr", random_mat(3, 4, 101));
    std::vector<Param> items;
    items.reserve(4);
    for (int k = 0; k < 4; ++k)
        items.emplace_back("i" + std::to_string(k), random_mat(3, 5, 103 + static_cast<std::uint64_t>(k)));
    auto loss = [&]() {
        Tape t;
        std::vector<NodeId> ids;
        ids.reserve(4);
        for (auto& p : items) ids.push_back(t.leaf(p));
        const NodeId out = ops::weighted_sum(t, t.leaf(wr), ids);
        const NodeId s = scalarize(t, out, 3, 5, 107);
        t.backward(s);
        return t.value(s).at(0, 0);
    };
    std::vector<Param*> ptrs = {&wr};
    for (auto& p : items) ptrs.push_back(&p);
    CHECK(srmoe::grad_check(loss, ptrs).max_rel_err < 1e-5);
}

TEST_CASE("hard top-1 picks the max, breaks ties low, and blocks gradient") {
    Param w("w", Mat::from(2, 3, {0.2, 0.5, 0.3, 0.4, 0.4, 0.2}));
    Tape t;
    const NodeId h = ops::hard_top1(t, t.leaf(w));
    CHECK(t.value(h).at(0, 0) == 0.0);
    CHECK(t.value(h).at(0, 1) == 1.0);
    CHECK(t.value(h).at(0, 2) == 0.0);
    CHECK(t.value(h).at(1, 0) == 1.0);  // tie between columns 0 and 1 -> 0
    CHECK(t.value(h).at(1, 1) == 0.0);

    const NodeId out = scalarize(t, h, 2, 3, 109);
    t.backward(out);
    CHECK(w.grad.all_zero());
}

TEST_CASE("spatial ops wire their kernels into the tape") {
    const int B = 1, C = 2, H = 6, W = 6;
    Param x("x", random_mat(B, C * H * W, 113));
    Param cw("cw", random_mat(2, C * 3 * 3, 127, 0.5));
    Param cb("cb", random_mat(1, 2, 131, 0.1));

    auto conv_loss = [&]() {
        Tape t;
        const NodeId y = ops::conv2d(t, t.leaf(x), t.leaf(cw), t.leaf(cb), B, C, H, W, 2, 3, 1);
        const NodeId out = scalarize(t, y, B, 2 * 4 * 4, 137);
        t.backward(out);
        return t.value(out).at(0, 0);
    };
    CHECK(srmoe::grad_check(conv_loss, {&x, &cw, &cb}).max_rel_err < 1e-5);

    auto pool_loss = [&]() {
        Tape t;
        const NodeId y = ops::maxpool2d(t, t.leaf(x), B, C, H, W, 2);
        const NodeId out = scalarize(t, y, B, C * 3 * 3, 139);
        t.backward(out);
        return t.value(out).at(0, 0);
    };
    CHECK(srmoe::grad_check(pool_loss, {&x}).max_rel_err < 1e-5);

    auto avg_loss = [&]() {
        Tape t;
        const NodeId y = ops::adaptive_avgpool2d(t, t.leaf(x), B, C, H, W, 4);
        const NodeId out = scalarize(t, y, B, C * 4 * 4, 149);
        t.backward(out);
        return t.value(out).at(0, 0);
    };
    CHECK(srmoe::grad_check(avg_loss, {&x}).max_rel_err < 1e-5);
}

TEST_CASE("gradients are bitwise reproducible") {
    auto run = [](Mat& out_grad) {
        Param x("x", random_mat(4, 4, 151));
        Param w("w", random_mat(4, 4, 157));
        Tape t;
        const NodeId y = ops::relu(t, ops::matmul(t, t.leaf(x), t.leaf(w)));
        const NodeId s = scalarize(t, y, 4, 4, 163);
        t.backward(s);
        out_grad = w.grad;
    };
    Mat g1(0, 0), g2(0, 0);
    run(g1);
    run(g2);
    CHECK(g1.data == g2.data);
}
