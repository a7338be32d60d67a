// Serial-reference vs blocked OpenMP kernels, plus the batch forward/backward
// path the trainer runs per environment step.
#include <benchmark/benchmark.h>
#include <omp.h>

#include "eegrl/kernels.hpp"
#include "eegrl/model.hpp"
#include "eegrl/reference.hpp"
#include "eegrl/rng.hpp"

using namespace eegrl;
using kernels::Padding;

namespace {

Tensor randn(std::vector<int> shape, Rng& rng, double scale = 0.5) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = scale * (2.0 * rng.uniform() - 1.0);
    return t;
}

// Table-row-1 shape: 1x30x128 through 32 kernels of (1,64)
struct ConvCase {
    Tensor in, k, out;
    ConvCase() : in({1, 30, 128}), k({32, 1, 1, 64}), out({32, 30, 128}) {
        Rng rng(1);
        in = randn({1, 30, 128}, rng);
        k = randn({32, 1, 1, 64}, rng, 0.05);
    }
};

void bm_conv2d_reference(benchmark::State& state) {
    ConvCase c;
    for (auto _ : state) {
        ref::conv2d_forward(c.in.ptr(), 1, 30, 128, c.k.ptr(), 32, 1, 64, nullptr,
                            Padding::Same, c.out.ptr());
        benchmark::ClobberMemory();
    }
}
BENCHMARK(bm_conv2d_reference);

void bm_conv2d_serial(benchmark::State& state) {
    ConvCase c;
    kernels::set_parallel(false);
    for (auto _ : state) {
        kernels::conv2d_forward(c.in.ptr(), 1, 30, 128, c.k.ptr(), 32, 1, 64, nullptr,
                                Padding::Same, c.out.ptr());
        benchmark::ClobberMemory();
    }
    kernels::set_parallel(true);
}
BENCHMARK(bm_conv2d_serial);

void bm_conv2d_omp(benchmark::State& state) {
    ConvCase c;
    kernels::set_parallel(true);
    for (auto _ : state) {
        kernels::conv2d_forward(c.in.ptr(), 1, 30, 128, c.k.ptr(), 32, 1, 64, nullptr,
                                Padding::Same, c.out.ptr());
        benchmark::ClobberMemory();
    }
}
BENCHMARK(bm_conv2d_omp);

void bm_backbone_forward(benchmark::State& state) {
    Rng rng(2);
    NetworkConfig cfg;
    cfg.variant = Variant::Dueling;
    QNetwork net(cfg);
    net.init(rng);
    std::array<Tensor, 3> planes{randn({1, 30, 128}, rng), randn({1, 30, 128}, rng),
                                 randn({1, 30, 128}, rng)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.q_of(planes));
    }
}
BENCHMARK(bm_backbone_forward);

void bm_training_sample_fwd_bwd(benchmark::State& state) {
    Rng rng(3);
    NetworkConfig cfg;
    cfg.variant = Variant::Dueling;
    QNetwork net(cfg);
    net.init(rng);
    GradSinks sinks = net.make_sinks();
    std::array<Tensor, 3> planes{randn({1, 30, 128}, rng), randn({1, 30, 128}, rng),
                                 randn({1, 30, 128}, rng)};
    kernels::set_parallel(state.range(0) == 1);
    for (auto _ : state) {
        sinks.zero();
        Tape t(true);
        Node* q = net.action_values(t, net.features(t, planes, &sinks), &sinks);
        Tensor y({1});
        y[0] = -0.5;
        Node* loss = t.squared_error(t.pick(q, 3), y);
        t.backward(loss);
        benchmark::ClobberMemory();
    }
    kernels::set_parallel(true);
}
BENCHMARK(bm_training_sample_fwd_bwd)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
