#include <benchmark/benchmark.h>

#include <memory>

#include "flowjump/corpus.hpp"
#include "flowjump/determinant.hpp"
#include "flowjump/flow.hpp"
#include "flowjump/mollify.hpp"
#include "flowjump/noise.hpp"
#include "flowjump/particles.hpp"
#include "flowjump/rng.hpp"

namespace fj = flowjump;

static void BM_Determinant(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  fj::RandomStream rng(1, 0, fj::Channel::Auxiliary);
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(fj::determinant(m));
}
BENCHMARK(BM_Determinant)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

static void BM_RemainderBound(benchmark::State& state) {
  double alpha = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fj::remainder_bound(8, alpha));
    alpha = alpha < 0.1 ? alpha + 1e-6 : 0.01;
  }
}
BENCHMARK(BM_RemainderBound);

static void BM_PhiloxNormal(benchmark::State& state) {
  fj::RandomStream rng(7, 3, fj::Channel::Brownian);
  for (auto _ : state) benchmark::DoNotOptimize(rng.normal());
}
BENCHMARK(BM_PhiloxNormal);

static void BM_PhiloxUniform(benchmark::State& state) {
  fj::RandomStream rng(7, 3, fj::Channel::Auxiliary);
  for (auto _ : state) benchmark::DoNotOptimize(rng.uniform());
}
BENCHMARK(BM_PhiloxUniform);

static void BM_FlowPath(benchmark::State& state) {
  fj::FieldSpec fs{.dim = 2, .drift = "smooth", .diffusion = "smooth", .jump = "smooth"};
  fs.params = {{"jump_amplitude", 0.1}, {"s0", 0.5}, {"eps", 0.1}};
  const fj::SdeModel model{fj::make_field(fs),
                           fj::LevyMeasureSpec::compound(fj::RatePath::constant(2.0),
                                                         fj::MarkLaw::symmetric(fj::Vec::Unit(2, 0) * 0.5))};
  const auto grid = fj::uniform_grid(0.0, 1.0, static_cast<std::size_t>(state.range(0)));
  const auto noise = fj::sample_noise(grid, model.levy, 5, 0);
  fj::SchemeOptions opts;
  opts.decomposition = true;
  const fj::FlowStepper stepper(model, opts);
  for (auto _ : state) {
    auto s = stepper.init(fj::Vec::Constant(2, 0.2));
    stepper.run(s, noise);
    benchmark::DoNotOptimize(s.det_direct());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FlowPath)->Arg(100)->Arg(1000);

static void BM_MollifiedDrift(benchmark::State& state) {
  fj::FieldSpec fs{.dim = 2, .drift = "unit_radial"};
  fs.alpha = 0.05;
  fs.sobolev_q = 1.5;
  const auto field = fj::make_field(fs);
  const fj::MollifiedDrift drift(field.drift_ptr(), static_cast<int>(state.range(0)), fj::MollifierKernel::Bump);
  fj::RandomStream rng(2, 0, fj::Channel::Auxiliary);
  fj::Vec x(2);
  for (auto _ : state) {
    x << rng.normal(), rng.normal();
    benchmark::DoNotOptimize(drift.gradient(0.0, x));
  }
}
BENCHMARK(BM_MollifiedDrift)->Arg(8)->Arg(64);

static void BM_KdeEvaluation(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  fj::RandomStream rng(4, 0, fj::Channel::Auxiliary);
  std::vector<fj::Vec> particles(n, fj::Vec(2));
  for (auto& p : particles) p << rng.normal(), rng.normal();
  const fj::DensityEstimate u(std::move(particles), fj::default_bandwidth(n, 2), 1.0);
  fj::Vec x(2);
  x << 0.3, -0.2;
  for (auto _ : state) benchmark::DoNotOptimize(u(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KdeEvaluation)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
