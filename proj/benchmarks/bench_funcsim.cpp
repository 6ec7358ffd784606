#include <benchmark/benchmark.h>

#include <random>

#include "p2m/funcsim.hpp"
#include "p2m/imaging.hpp"
#include "p2m/model.hpp"

namespace {

using namespace p2m;

struct Setup {
  FrontEndSpec spec;
  imaging::BayerFrame frame;
  funcsim::QuantizedWeights weights;
  funcsim::FoldedAffine affine;
  funcsim::AdcTransfer transfer;
};

Setup make_setup(int stride, PoolSpec pool) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  FrontEndSpec spec = reference_spec(stride, pool);
  const auto& g = spec.geometry;
  std::uniform_int_distribution<int> code(0, (1 << g.pixel_bit_depth) - 1);
  std::vector<std::uint16_t> codes(static_cast<std::size_t>(g.height * g.width));
  for (auto& c : codes) c = static_cast<std::uint16_t>(code(rng));
  imaging::BayerFrame frame(g.height, g.width, g.pixel_bit_depth, std::move(codes));

  const int co = spec.conv.out_channels, k = spec.conv.kernel;
  funcsim::RealWeights rw{co, k, std::vector<double>(static_cast<std::size_t>(co) * 3 * k * k)};
  for (auto& v : rw.values) v = w(rng);
  auto q = funcsim::quantize_weights(rw, spec.conv.magnitude_bits());
  funcsim::BnParams bn;
  for (int c = 0; c < co; ++c) {
    bn.gamma.push_back(1.0);
    bn.beta.push_back(0.0);
    bn.mean.push_back(0.0);
    bn.var.push_back(1.0);
    bn.eps.push_back(1e-5);
  }
  auto affine = funcsim::fold_bn(bn);
  const double input_max = (1 << g.pixel_bit_depth) - 1.0;
  funcsim::AdcTransfer transfer{funcsim::analytic_full_scale(q, affine, input_max), spec.activation_bits};
  return {spec, std::move(frame), std::move(q), std::move(affine), transfer};
}

void BM_FrontEnd(benchmark::State& state) {
  const auto s = make_setup(static_cast<int>(state.range(0)), PoolSpec::max(2));
  for (auto _ : state) {
    auto r = funcsim::run_front_end(s.frame, s.spec, s.weights, s.affine, s.transfer);
    benchmark::DoNotOptimize(r.output);
  }
  state.SetItemsProcessed(state.iterations() * s.spec.geometry.height * s.spec.geometry.width);
}
BENCHMARK(BM_FrontEnd)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Demosaic(benchmark::State& state) {
  const auto s = make_setup(2, PoolSpec::max(2));
  for (auto _ : state) benchmark::DoNotOptimize(imaging::demosaic(s.frame, s.spec.demosaic_mode));
}
BENCHMARK(BM_Demosaic)->Unit(benchmark::kMillisecond);

void BM_CdsAccumulate(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const std::size_t n = 3 * 7 * 7;
  std::vector<double> px(n);
  std::vector<std::int32_t> lv(n);
  for (std::size_t i = 0; i < n; ++i) {
    px[i] = static_cast<double>(rng() % 4096);
    lv[i] = static_cast<std::int32_t>(rng() % 31) - 15;
  }
  for (auto _ : state) benchmark::DoNotOptimize(funcsim::cds_accumulate(px, lv));
}
BENCHMARK(BM_CdsAccumulate);

}  // namespace
