// Parallel kernels against their serial reference builds.
#include <benchmark/benchmark.h>

#include "stegcost/conv.hpp"
#include "stegcost/costs.hpp"
#include "stegcost/parallel.hpp"
#include "stegcost/steganalysis.hpp"
#include "stegcost/synthetic.hpp"

namespace {

using namespace stegcost;

RealMap cover_map(int side) { return RealMap::from_image(synthetic_image(side, side, 42)); }

void BM_conv_parallel(benchmark::State& st) {
  const RealMap src = cover_map(static_cast<int>(st.range(0)));
  const Kernel k = gaussian_kernel(3.0);
  for (auto _ : st) benchmark::DoNotOptimize(conv2_mirror(src, k));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(src.size()));
}

void BM_conv_reference(benchmark::State& st) {
  const RealMap src = cover_map(static_cast<int>(st.range(0)));
  const Kernel k = gaussian_kernel(3.0);
  for (auto _ : st) benchmark::DoNotOptimize(reference::conv2_mirror(src, k));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(src.size()));
}

void BM_wow_cost(benchmark::State& st) {
  const GrayImage img = synthetic_image(static_cast<int>(st.range(0)), static_cast<int>(st.range(0)), 7);
  for (auto _ : st) benchmark::DoNotOptimize(wow_cost(img));
}

void BM_features(benchmark::State& st) {
  const auto imgs = synthetic_corpus(16, static_cast<int>(st.range(0)), static_cast<int>(st.range(0)), 3);
  for (auto _ : st) benchmark::DoNotOptimize(extract_features(imgs));
}

}  // namespace

BENCHMARK(BM_conv_parallel)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_conv_reference)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_wow_cost)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_features)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
