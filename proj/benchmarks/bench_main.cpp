#include "bsmps/block_mps.hpp"
#include "bsmps/coeffs.hpp"
#include "bsmps/mpo.hpp"
#include "bsmps/solvers.hpp"
#include "bsmps/symbolic.hpp"

#include <benchmark/benchmark.h>

using namespace bsmps;

namespace {

/// Matrix-free application of the compressed Hamiltonian to a random state.
void BM_ApplyHamiltonian(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  Rng rng(1);
  const SymMPO h = sym_compress(sym_hamiltonian(random_onebody(K, rng), random_twobody(K, rng, -1, true)));
  const BlockMPS x = random_block_mps(K, K / 2, SizeRule::constant(4), rng);
  for (auto _ : state) benchmark::DoNotOptimize(apply_sym(h, x));
}
BENCHMARK(BM_ApplyHamiltonian)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

/// Symbolic versus dense rank compression of the two-particle operator.
void BM_SymbolicCompress(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  Rng rng(2);
  const SymMPO d = sym_from_twobody(random_twobody(K, rng));
  for (auto _ : state) benchmark::DoNotOptimize(sym_compress(d));
}
BENCHMARK(BM_SymbolicCompress)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_DenseCompress(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  Rng rng(2);
  const FullMPO d = build_D(random_twobody(K, rng));
  for (auto _ : state) benchmark::DoNotOptimize(mpo_compress(d));
}
BENCHMARK(BM_DenseCompress)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

/// Block TT-SVD against the full-format TT-SVD of the same tensor.
void BM_TtSvdBlock(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  Rng rng(3);
  const BlockMPS x = random_block_mps(K, K / 2, SizeRule::constant(8), rng);
  for (auto _ : state) benchmark::DoNotOptimize(tt_svd_block(x));
}
BENCHMARK(BM_TtSvdBlock)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_TtSvdFull(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  Rng rng(3);
  const FullMPS x = to_full(random_block_mps(K, K / 2, SizeRule::constant(8), rng));
  for (auto _ : state) benchmark::DoNotOptimize(tt_svd(x));
}
BENCHMARK(BM_TtSvdFull)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

/// One forward-backward two-site sweep on a random Hamiltonian.
void BM_DmrgSweep(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  Rng rng(4);
  const SymMPO h = sym_compress(sym_hamiltonian(random_onebody(K, rng), random_twobody(K, rng, -1, true)));
  const BlockMPS x = random_block_mps(K, K / 2, SizeRule::constant(2), rng);
  SolverConfig cfg;
  cfg.max_iter = 1;
  for (auto _ : state) benchmark::DoNotOptimize(dmrg_two_site(h, x, cfg));
}
BENCHMARK(BM_DmrgSweep)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
