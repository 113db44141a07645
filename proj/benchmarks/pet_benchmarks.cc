#include <random>

#include <benchmark/benchmark.h>

#include "pet/analysis.h"
#include "pet/synthetic.h"
#include "pet/training.h"
#include "pet/transducer.h"

namespace pet {
namespace {

struct Fixture {
  SyntheticDataset data;
  ModelParams model;

  explicit Fixture(const char *features) {
    SyntheticTaskSpec spec;
    data = GenerateDataset(spec, 16);
    ModelDims dims;
    dims.input_dim = spec.feature_dim;
    model = InitModel(data.lexicon, data.vocab, ParseFeatureString(features), dims, 1);
  }
};

Eigen::MatrixXd RandomLogProbs(int rows, int cols, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
    const double max = m.row(r).maxCoeff();
    m.row(r).array() -= max + std::log((m.row(r).array() - max).exp().sum());
  }
  return m;
}

void BM_LatticeLoss(benchmark::State &state) {
  const int T = static_cast<int>(state.range(0)), U = T / 3, V = 61;
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd lp = RandomLogProbs(T * (U + 1), V, rng);
  TokenSequence y(U);
  for (int u = 0; u < U; ++u) y[u] = u % (V - 1);
  for (auto _ : state) {
    Lattice lattice(lp, y, T);
    benchmark::DoNotOptimize(TransducerLoss(lattice).loss);
  }
}
BENCHMARK(BM_LatticeLoss)->Arg(12)->Arg(30)->Arg(90);

void BM_LossAndGradient(benchmark::State &state, const char *features) {
  Fixture f(features);
  ModelParams grads = f.model.ZerosLike();
  const Utterance &u = f.data.utterances[0];
  for (auto _ : state) benchmark::DoNotOptimize(LossAndGradient(f.model, u.x, u.y, &grads));
}
BENCHMARK_CAPTURE(BM_LossAndGradient, W, "W");
BENCHMARK_CAPTURE(BM_LossAndGradient, V, "V");
BENCHMARK_CAPTURE(BM_LossAndGradient, PCVW_PCVW, "PCVW-PCVW");

void BM_BatchGradient(benchmark::State &state) {
  Fixture f("CV-CVW");
  ModelParams grads = f.model.ZerosLike();
  for (auto _ : state) {
    benchmark::DoNotOptimize(BatchGradient(f.model, f.data.utterances, grads));
  }
}
BENCHMARK(BM_BatchGradient)->Unit(benchmark::kMillisecond);

void BM_GreedyDecode(benchmark::State &state, bool fold) {
  Fixture f("PCV-PW");
  const ModelParams m = fold ? FoldModel(f.model) : f.model;
  const Utterance &u = f.data.utterances[0];
  for (auto _ : state) benchmark::DoNotOptimize(GreedyDecode(m, u.x));
}
BENCHMARK_CAPTURE(BM_GreedyDecode, unfolded, false);
BENCHMARK_CAPTURE(BM_GreedyDecode, folded, true);

void BM_Align(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> sym(0, 9);
  std::vector<int> ref(n), hyp(n);
  for (int &v : ref) v = sym(rng);
  for (int &v : hyp) v = sym(rng);
  for (auto _ : state) benchmark::DoNotOptimize(Align(ref, hyp).errors());
}
BENCHMARK(BM_Align)->Arg(12)->Arg(100);

}  // namespace
}  // namespace pet

BENCHMARK_MAIN();
