// Timing comparison of the parallel kernels against their serial reference
// twins, plus a bitwise agreement check on every timed shape. Run with a
// repeat count as the optional first argument (default 5).

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "srmoe/kernels.hpp"
#include "srmoe/rng.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

double time_best_of(int repeats, const std::function<void()>& fn) {
    double best = 1e300;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = clock_type::now();
        fn();
        const auto t1 = clock_type::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

std::vector<double> random_vec(std::size_t n, srmoe::Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal(0.0, 1.0);
    return v;
}

struct Case {
    std::string name;
    std::size_t out_len;
    std::function<void(double*)> par;
    std::function<void(double*)> ref;
};

void report(const Case& c, int repeats) {
    std::vector<double> out_par(c.out_len), out_ref(c.out_len);
    // Agreement first: the parallel kernel must be bitwise identical.
    c.par(out_par.data());
    c.ref(out_ref.data());
    const bool same = out_par == out_ref;

    const double ms_par = time_best_of(repeats, [&] { c.par(out_par.data()); });
    const double ms_ref = time_best_of(repeats, [&] { c.ref(out_ref.data()); });
    std::printf("%-34s %10.3f %10.3f %8.2fx   %s\n", c.name.c_str(), ms_ref, ms_par,
                ms_ref / ms_par, same ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
    srmoe::Rng rng(12345);

    std::printf("threads: %d, best of %d runs, times in ms\n", omp_get_max_threads(), repeats);
    std::printf("%-34s %10s %10s %9s\n", "kernel", "serial", "parallel", "speedup");

    std::vector<Case> cases;

    {  // Dense products at the widths the routed layers use, batch-heavy.
        const int m = 512, k = 256, n = 256;
        auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
        auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
        cases.push_back({"matmul 512x256x256",
                         static_cast<std::size_t>(m) * n,
                         [=](double* c) { srmoe::kern::matmul(a.data(), b.data(), c, m, k, n); },
                         [=](double* c) { srmoe::kern::ref::matmul(a.data(), b.data(), c, m, k, n); }});
        cases.push_back({"matmul_tn 512x256x256",
                         static_cast<std::size_t>(k) * n,
                         [=](double* c) { srmoe::kern::matmul_tn(a.data(), b.data(), c, m, k, n); },
                         [=](double* c) { srmoe::kern::ref::matmul_tn(a.data(), b.data(), c, m, k, n); }});
        auto bt = random_vec(static_cast<std::size_t>(k) * n, rng);  // [k x n], used transposed
        cases.push_back({"matmul_nt 512x256x256",
                         static_cast<std::size_t>(m) * k,
                         [=](double* c) { srmoe::kern::matmul_nt(a.data(), bt.data(), c, m, k, n); },
                         [=](double* c) { srmoe::kern::ref::matmul_nt(a.data(), bt.data(), c, m, k, n); }});
    }

    {  // Convovler at the stem's working shape, larger batch.
        const int B = 64, C = 8, H = 16, W = 16, OC = 16, K = 3, S = 1;
        const int OH = srmoe::kern::conv_out(H, K, S), OW = srmoe::kern::conv_out(W, K, S);
        auto x = random_vec(static_cast<std::size_t>(B) * C * H * W, rng);
        auto w = random_vec(static_cast<std::size_t>(OC) * C * K * K, rng);
        auto bias = random_vec(static_cast<std::size_t>(OC), rng);
        const std::size_t y_len = static_cast<std::size_t>(B) * OC * OH * OW;
        cases.push_back({"conv2d_fwd 64x8x16x16 -> 16ch",
                         y_len,
                         [=](double* y) {
                             srmoe::kern::conv2d_fwd(x.data(), w.data(), bias.data(), y, B, C, H, W, OC, K, S);
                         },
                         [=](double* y) {
                             srmoe::kern::ref::conv2d_fwd(x.data(), w.data(), bias.data(), y, B, C, H, W, OC, K, S);
                         }});
        auto gy = random_vec(y_len, rng);
        cases.push_back({"conv2d_bwd_input same shape",
                         static_cast<std::size_t>(B) * C * H * W,
                         [=](double* gx) {
                             srmoe::kern::conv2d_bwd_input(w.data(), gy.data(), gx, B, C, H, W, OC, K, S);
                         },
                         [=](double* gx) {
                             srmoe::kern::ref::conv2d_bwd_input(w.data(), gy.data(), gx, B, C, H, W, OC, K, S);
                         }});
        const std::size_t wlen = static_cast<std::size_t>(OC) * C * K * K;
        cases.push_back({"conv2d_bwd_weights same shape",
                         wlen + OC,
                         [=](double* out) {
                             srmoe::kern::conv2d_bwd_weights(x.data(), gy.data(), out, out + wlen, B, C, H, W, OC, K, S);
                         },
                         [=](double* out) {
                             srmoe::kern::ref::conv2d_bwd_weights(x.data(), gy.data(), out, out + wlen, B, C, H, W, OC, K, S);
                         }});
    }

    {  // Pooling over a wide batch.
        const int B = 256, C = 16, H = 14, W = 14, P = 2;
        const int OH = srmoe::kern::pool_out(H, P), OW = srmoe::kern::pool_out(W, P);
        auto x = random_vec(static_cast<std::size_t>(B) * C * H * W, rng);
        const std::size_t y_len = static_cast<std::size_t>(B) * C * OH * OW;
        std::vector<std::int64_t> arg_par(y_len), arg_ref(y_len);
        cases.push_back({"maxpool2d_fwd 256x16x14x14",
                         y_len,
                         [=](double* y) mutable {
                             srmoe::kern::maxpool2d_fwd(x.data(), y, arg_par.data(), B, C, H, W, P);
                         },
                         [=](double* y) mutable {
                             srmoe::kern::ref::maxpool2d_fwd(x.data(), y, arg_ref.data(), B, C, H, W, P);
                         }});
        cases.push_back({"adaptive_avgpool_fwd to 4x4",
                         static_cast<std::size_t>(B) * C * 16,
                         [=](double* y) {
                             srmoe::kern::adaptive_avgpool_fwd(x.data(), y, B, C, H, W, 4);
                         },
                         [=](double* y) {
                             srmoe::kern::ref::adaptive_avgpool_fwd(x.data(), y, B, C, H, W, 4);
                         }});
    }

    for (const Case& c : cases) report(c, repeats);
    return 0;
}
