// GEMM/OpenMP kernels against the serial reference loops, on first-layer
// and dense shapes of the default classifier.
#include <vector>

#include <benchmark/benchmark.h>

#include "boweldet/kernels.hpp"
#include "boweldet/rng.hpp"

namespace k = boweldet::kernels;

namespace {

std::vector<float> random_buffer(std::size_t n, std::uint64_t seed) {
    boweldet::Rng rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

k::ConvGeometry conv_geometry(std::size_t batch) {
    k::ConvGeometry g;
    g.batch = batch;
    g.in_channels = 1;
    g.in_h = 126;
    g.in_w = 64;
    g.filters = 8;
    g.kernel_h = 3;
    g.kernel_w = 3;
    return g;
}

void BM_conv_forward_fast(benchmark::State& state) {
    const auto g = conv_geometry(static_cast<std::size_t>(state.range(0)));
    const auto in = random_buffer(g.batch * g.in_channels * g.in_h * g.in_w, 1);
    const auto w = random_buffer(g.filters * g.patch(), 2);
    const auto b = random_buffer(g.filters, 3);
    std::vector<float> out(g.batch * g.filters * g.positions());
    std::vector<float> cols;
    for (auto _ : state) {
        k::conv2d_forward(g, in, w, b, out, cols);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_conv_forward_serial(benchmark::State& state) {
    const auto g = conv_geometry(static_cast<std::size_t>(state.range(0)));
    const auto in = random_buffer(g.batch * g.in_channels * g.in_h * g.in_w, 1);
    const auto w = random_buffer(g.filters * g.patch(), 2);
    const auto b = random_buffer(g.filters, 3);
    std::vector<float> out(g.batch * g.filters * g.positions());
    for (auto _ : state) {
        k::serial::conv2d_forward(g, in, w, b, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_conv_backward_fast(benchmark::State& state) {
    const auto g = conv_geometry(static_cast<std::size_t>(state.range(0)));
    const auto in = random_buffer(g.batch * g.in_channels * g.in_h * g.in_w, 1);
    const auto w = random_buffer(g.filters * g.patch(), 2);
    const auto b = random_buffer(g.filters, 3);
    const auto gy = random_buffer(g.batch * g.filters * g.positions(), 4);
    std::vector<float> out(gy.size());
    std::vector<float> cols;
    k::conv2d_forward(g, in, w, b, out, cols);
    std::vector<float> gw(w.size()), gb(b.size()), gx(in.size());
    for (auto _ : state) {
        k::conv2d_backward(g, cols, w, gy, gw, gb, gx);
        benchmark::DoNotOptimize(gx.data());
    }
}

void BM_conv_backward_serial(benchmark::State& state) {
    const auto g = conv_geometry(static_cast<std::size_t>(state.range(0)));
    const auto in = random_buffer(g.batch * g.in_channels * g.in_h * g.in_w, 1);
    const auto w = random_buffer(g.filters * g.patch(), 2);
    const auto gy = random_buffer(g.batch * g.filters * g.positions(), 4);
    std::vector<float> gw(w.size()), gb(g.filters), gx(in.size());
    for (auto _ : state) {
        k::serial::conv2d_backward(g, in, w, gy, gw, gb, gx);
        benchmark::DoNotOptimize(gx.data());
    }
}

constexpr std::size_t kDenseIn = 1344;
constexpr std::size_t kDenseOut = 256;

void BM_dense_forward_fast(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto in = random_buffer(n * kDenseIn, 1);
    const auto w = random_buffer(kDenseIn * kDenseOut, 2);
    const auto b = random_buffer(kDenseOut, 3);
    std::vector<float> out(n * kDenseOut);
    for (auto _ : state) {
        k::dense_forward(n, kDenseIn, kDenseOut, in, w, b, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_dense_forward_serial(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto in = random_buffer(n * kDenseIn, 1);
    const auto w = random_buffer(kDenseIn * kDenseOut, 2);
    const auto b = random_buffer(kDenseOut, 3);
    std::vector<float> out(n * kDenseOut);
    for (auto _ : state) {
        k::serial::dense_forward(n, kDenseIn, kDenseOut, in, w, b, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_maxpool_fast(benchmark::State& state) {
    k::PoolGeometry g{static_cast<std::size_t>(state.range(0)) * 8, 124, 62, 2, 2};
    const auto in = random_buffer(g.planes * g.in_h * g.in_w, 1);
    std::vector<float> out(g.planes * g.out_h() * g.out_w());
    std::vector<std::uint32_t> arg(out.size());
    for (auto _ : state) {
        k::maxpool2d_forward(g, in, out, arg);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_maxpool_serial(benchmark::State& state) {
    k::PoolGeometry g{static_cast<std::size_t>(state.range(0)) * 8, 124, 62, 2, 2};
    const auto in = random_buffer(g.planes * g.in_h * g.in_w, 1);
    std::vector<float> out(g.planes * g.out_h() * g.out_w());
    for (auto _ : state) {
        k::serial::maxpool2d_forward(g, in, out);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(BM_conv_forward_fast)->Arg(16)->Arg(64);
BENCHMARK(BM_conv_forward_serial)->Arg(16)->Arg(64);
BENCHMARK(BM_conv_backward_fast)->Arg(16)->Arg(64);
BENCHMARK(BM_conv_backward_serial)->Arg(16)->Arg(64);
BENCHMARK(BM_dense_forward_fast)->Arg(16)->Arg(64);
BENCHMARK(BM_dense_forward_serial)->Arg(16)->Arg(64);
BENCHMARK(BM_maxpool_fast)->Arg(16)->Arg(64);
BENCHMARK(BM_maxpool_serial)->Arg(16)->Arg(64);

BENCHMARK_MAIN();
