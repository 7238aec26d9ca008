// Microbenchmarks for the hot paths: feature evaluation, ridge fits, the
// encoder eigendecomposition and Nystrom extension, one solver step of each
// PDE, and a single neighbor-decoder solve.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <cstdint>

#include "randsmap/decoders.hpp"
#include "randsmap/dmap.hpp"
#include "randsmap/pdesolvers.hpp"
#include "randsmap/prng.hpp"
#include "randsmap/randfeat.hpp"
#include "randsmap/synthdata.hpp"

namespace {

using namespace randsmap;

// Column-stochastic random matrix, the shape of mass-preserving snapshots.
Eigen::MatrixXd simplex_data(Eigen::Index m, Eigen::Index n,
                             std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::MatrixXd X(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) X(i, j) = rng.uniform(0.0, 1.0);
    X.col(j) /= X.col(j).sum();
  }
  return X;
}

Eigen::MatrixXd latent_cloud(Eigen::Index d, Eigen::Index n,
                             std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::MatrixXd Y(d, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) Y(i, j) = rng.normal();
  }
  return Y;
}

void feature_matrix_rff(benchmark::State& state) {
  const Eigen::Index P = state.range(0);
  const Eigen::MatrixXd Y = latent_cloud(2, 512, 1);
  const FeatureMap map = sample_rff(2, P, 0.5, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(feature_matrix(map, Y));
  }
}

void induced_kernel_rff(benchmark::State& state) {
  const Eigen::MatrixXd Y = latent_cloud(2, 256, 1);
  const FeatureMap map = sample_rff(2, state.range(0), 0.5, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(induced_kernel(map, Y));
  }
}

void rfnn_fit_primal(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::MatrixXd X = simplex_data(400, n, 3);
  const Eigen::MatrixXd Y = latent_cloud(2, n, 4);
  const FeatureMap map = sample_rff(2, n / 2, 0.5, 5);
  const Eigen::MatrixXd Phi = feature_matrix(map, Y);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rfnn_fit(Phi, X, 1e-3));
  }
}

void randsmap_fit_svd(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::MatrixXd X = simplex_data(400, n, 3);
  const Eigen::MatrixXd Y = latent_cloud(2, n, 4);
  const FeatureMap map = sample_rff(2, n, 0.5, 5);
  const Eigen::MatrixXd Phi = feature_matrix(map, Y);
  for (auto _ : state) {
    benchmark::DoNotOptimize(randsmap_fit(Phi, X, 1e-3));
  }
}

void encoder_fit(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const DataSet ds = gen_swiss_roll(static_cast<std::size_t>(n), 0.05, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dm_fit(ds.X, 1.0, 0.12, 2));
  }
}

void encoder_nystrom(benchmark::State& state) {
  const DataSet train = gen_swiss_roll(512, 0.05, 7);
  const DataSet query = gen_swiss_roll(static_cast<std::size_t>(
                                           state.range(0)),
                                       0.05, 8);
  const DmModel dm = dm_fit(train.X, 1.0, 0.12, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dm_encode(dm, query.X));
  }
}

void lwr_single_step(benchmark::State& state) {
  Lwr1dConfig cfg;
  cfg.m_cells = static_cast<std::size_t>(state.range(0));
  const double dx = (cfg.x_hi - cfg.x_lo) / static_cast<double>(cfg.m_cells);
  cfg.dt = 0.2 * dx / cfg.v_max;
  CounterRng rng(9);
  Eigen::VectorXd rho(cfg.m_cells);
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    rho[i] = rng.uniform(0.2, 0.8);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(lwr_step(rho, cfg));
  }
}

void hughes_eikonal_sweep(benchmark::State& state) {
  Hughes2dConfig cfg;
  CounterRng rng(9);
  Eigen::MatrixXd rho(cfg.nx, cfg.ny);
  for (Eigen::Index j = 0; j < rho.cols(); ++j) {
    for (Eigen::Index i = 0; i < rho.rows(); ++i) {
      rho(i, j) = rng.uniform(0.0, 2.0);
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(hughes_eikonal(rho, cfg));
  }
}

void knn_single_decode(benchmark::State& state) {
  const DataSet train = gen_swiss_roll(512, 0.05, 7);
  const DataSet query = gen_swiss_roll(4, 0.05, 8);
  const DmModel dm = dm_fit(train.X, 1.0, 0.12, 2);
  const Eigen::MatrixXd Y_train = dm_train_embedding(dm);
  const Eigen::MatrixXd Y_star = dm_encode(dm, query.X);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        knn_decode(dm, Y_train, train.X, Y_star.col(0), 6));
  }
}

void ddm_full_fit(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::MatrixXd X = simplex_data(400, n, 3);
  const Eigen::MatrixXd Y = latent_cloud(2, n, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ddm_fit(Y, X, 0.4));
  }
}

}  // namespace

BENCHMARK(feature_matrix_rff)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(induced_kernel_rff)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(rfnn_fit_primal)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(randsmap_fit_svd)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(encoder_fit)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(encoder_nystrom)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(lwr_single_step)->Arg(400)->Arg(1600)->Unit(benchmark::kMicrosecond);
BENCHMARK(hughes_eikonal_sweep)->Unit(benchmark::kMillisecond);
BENCHMARK(knn_single_decode)->Unit(benchmark::kMillisecond);
BENCHMARK(ddm_full_fit)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
