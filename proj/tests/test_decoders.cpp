#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "randsmap/decoders.hpp"
#include "randsmap/dmap.hpp"
#include "randsmap/errors.hpp"
#include "randsmap/prng.hpp"
#include "randsmap/randfeat.hpp"
#include "randsmap/synthdata.hpp"

using namespace randsmap;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              std::uint64_t seed) {
  CounterRng rng(seed, 0);
  Eigen::MatrixXd A(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) A(i, j) = rng.normal();
  }
  return A;
}

// Strictly positive matrix with unit column sums.
Eigen::MatrixXd mass_matrix(Eigen::Index rows, Eigen::Index cols,
                            std::uint64_t seed) {
  Eigen::MatrixXd X = random_matrix(rows, cols, seed).cwiseAbs();
  X.array() += 0.1;
  for (Eigen::Index j = 0; j < cols; ++j) X.col(j) /= X.col(j).sum();
  return X;
}

// Regular grid of latent points, well spread for benign conditioning.
Eigen::MatrixXd grid_latents(Eigen::Index nx, Eigen::Index ny) {
  Eigen::MatrixXd Y(2, nx * ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j) {
      Y(0, i * ny + j) = -2.0 + 4.0 * static_cast<double>(i) /
                                    static_cast<double>(nx - 1);
      Y(1, i * ny + j) = -1.5 + 3.0 * static_cast<double>(j) /
                                    static_cast<double>(ny - 1);
    }
  }
  return Y;
}

double max_conservation_error(const Eigen::MatrixXd& X_hat) {
  return (X_hat.colwise().sum().array() - 1.0).abs().maxCoeff();
}

}  // namespace

TEST_CASE("rfnn: square invertible system interpolates at lambda = 0") {
  const Eigen::MatrixXd Y = grid_latents(3, 3);
  const FeatureMap map = sample_rff(2, 8, 2.5, 31);
  const Eigen::MatrixXd Phi = feature_matrix(map, Y);
  REQUIRE(Phi.rows() == 9);
  REQUIRE(Phi.cols() == 9);
  const Eigen::MatrixXd X = random_matrix(6, 9, 2);

  RidgeDecoder model = rfnn_fit(Phi, X, 0.0);
  bind_map(model, map);
  const Reconstruction rec = decode(model, map, Y);
  CHECK((rec.X_hat - X).norm() <= 1e-8 * X.norm());
}

TEST_CASE("rfnn: square invertible fit conserves mass at lambda = 0") {
  // Any invertible matrix whose first column is the constant feature: the
  // interpolation property forces unit column sums on the training set.
  const Eigen::Index n = 9;
  Eigen::MatrixXd Phi(n, n);
  Phi.col(0).setOnes();
  Phi.rightCols(n - 1) = random_matrix(n, n - 1, 17);
  const Eigen::MatrixXd X = mass_matrix(5, n, 3);

  const RidgeDecoder model = rfnn_fit(Phi, X, 0.0);
  const Eigen::MatrixXd X_hat = model.A.transpose() * Phi.transpose();
  CHECK(max_conservation_error(X_hat) <= 1e-10);

  // A rank-deficient system without the constant direction in its range
  // loses the interpolation argument and with it the conservation.
  const Eigen::MatrixXd U2 = random_matrix(8, 2, 23);
  const Eigen::MatrixXd V2 = random_matrix(5, 2, 24);
  const Eigen::MatrixXd Phi_low = U2 * V2.transpose();
  const Eigen::MatrixXd X2 = mass_matrix(4, 8, 25);
  const RidgeDecoder low = rfnn_fit_svd(Phi_low, X2, 0.0);
  const Eigen::MatrixXd X2_hat = low.A.transpose() * Phi_low.transpose();
  CHECK(max_conservation_error(X2_hat) > 1e-6);
}

TEST_CASE("rfnn: primal, dual, and SVD routes agree") {
  const Eigen::MatrixXd X_fat = random_matrix(4, 10, 5);
  const Eigen::MatrixXd Y_fat = random_matrix(2, 10, 6);
  const FeatureMap map_fat = sample_rff(2, 14, 1.2, 7);
  const Eigen::MatrixXd Phi_fat = feature_matrix(map_fat, Y_fat);  // 10 x 15

  const Eigen::MatrixXd X_tall = random_matrix(4, 25, 8);
  const Eigen::MatrixXd Y_tall = random_matrix(2, 25, 9);
  const FeatureMap map_tall = sample_rff(2, 14, 1.2, 10);
  const Eigen::MatrixXd Phi_tall = feature_matrix(map_tall, Y_tall);  // 25x15

  for (double lambda : {1e-3, 1e-6}) {
    // Overparameterized problem: the library takes the dual route; solve
    // the primal normal equations directly as the oracle.
    {
      const RidgeDecoder dual = rfnn_fit(Phi_fat, X_fat, lambda);
      Eigen::MatrixXd G = Phi_fat.transpose() * Phi_fat;
      G.diagonal().array() += lambda;
      const Eigen::MatrixXd A_primal =
          G.ldlt().solve(Phi_fat.transpose() * X_fat.transpose());
      CHECK((dual.A - A_primal).norm() <= 1e-8 * A_primal.norm());

      const RidgeDecoder svd = rfnn_fit_svd(Phi_fat, X_fat, lambda);
      CHECK((svd.A - A_primal).norm() <= 1e-8 * A_primal.norm());
    }
    // Overdetermined problem: the library takes the primal route; solve
    // the dual form directly as the oracle.
    {
      const RidgeDecoder primal = rfnn_fit(Phi_tall, X_tall, lambda);
      Eigen::MatrixXd G = Phi_tall * Phi_tall.transpose();
      G.diagonal().array() += lambda;
      const Eigen::MatrixXd A_dual =
          Phi_tall.transpose() * G.ldlt().solve(X_tall.transpose());
      CHECK((primal.A - A_dual).norm() <= 1e-8 * A_dual.norm());

      const RidgeDecoder svd = rfnn_fit_svd(Phi_tall, X_tall, lambda);
      CHECK((svd.A - primal.A).norm() <= 1e-8 * primal.A.norm());
    }
  }
}

TEST_CASE("rfnn: heavy regularization shrinks the coefficients to zero") {
  const Eigen::MatrixXd Phi = random_matrix(12, 6, 13);
  const Eigen::MatrixXd X = random_matrix(3, 12, 14);
  const RidgeDecoder model = rfnn_fit(Phi, X, 1e12);
  CHECK(model.A.norm() <= 1e-9);
}

TEST_CASE("rfnn: rank-one system has a closed-form ridge solution") {
  const Eigen::VectorXd u = random_matrix(6, 1, 41);
  const Eigen::VectorXd v = random_matrix(4, 1, 42);
  const Eigen::MatrixXd Phi = u * v.transpose();
  const Eigen::MatrixXd X = random_matrix(3, 6, 43);
  const double lambda = 1e-2;

  const RidgeDecoder model = rfnn_fit(Phi, X, lambda);
  const Eigen::MatrixXd A_hand =
      v * (u.transpose() * X.transpose()) /
      (u.squaredNorm() * v.squaredNorm() + lambda);
  CHECK((model.A - A_hand).norm() <= 1e-12 * A_hand.norm());

  CHECK_THROWS_AS(rfnn_fit(Phi, X, 0.0), NumericalError);
}

TEST_CASE("rfnn: lambda = 0 SVD route returns the minimum-norm solution") {
  const Eigen::MatrixXd Phi = random_matrix(6, 10, 51);  // full row rank
  const Eigen::MatrixXd X = random_matrix(3, 6, 52);
  const RidgeDecoder model = rfnn_fit_svd(Phi, X, 0.0);

  // Interpolates...
  CHECK((Phi * model.A - X.transpose()).norm() <= 1e-8 * X.norm());

  // ...and any null-space perturbation with the same fit is strictly longer.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Phi, Eigen::ComputeFullV);
  const Eigen::VectorXd null_dir = svd.matrixV().col(9);
  CHECK((Phi * null_dir).norm() <= 1e-10);
  const Eigen::MatrixXd A_other =
      model.A + 0.5 * null_dir * Eigen::RowVector3d(1.0, -2.0, 0.7);
  CHECK((Phi * A_other - X.transpose()).norm() <= 1e-8 * X.norm());
  CHECK(A_other.norm() > model.A.norm() + 0.1);
}

TEST_CASE("rfnn: matches the kernel-ridge route on bias-free features") {
  const Eigen::MatrixXd Y = random_matrix(2, 12, 61);
  const Eigen::MatrixXd Y_star = random_matrix(2, 4, 62);
  const Eigen::MatrixXd X = random_matrix(5, 12, 63);
  const FeatureMap map = sample_rff(2, 30, 1.0, 21);
  const double lambda = 1e-3;

  const Eigen::MatrixXd Phi = feature_matrix(map, Y).rightCols(30);
  const Eigen::MatrixXd Phi_star =
      feature_matrix(map, Y_star).rightCols(30);
  const RidgeDecoder model = rfnn_fit(Phi, X, lambda);
  const Eigen::MatrixXd route_weights = model.A.transpose() *
                                        Phi_star.transpose();

  Eigen::MatrixXd K = induced_kernel(map, Y);
  const Eigen::MatrixXd K_star = Phi_star * Phi.transpose();
  K.diagonal().array() += lambda;
  const Eigen::MatrixXd route_kernel =
      X * K.ldlt().solve(K_star.transpose());
  CHECK((route_weights - route_kernel).norm() <=
        1e-6 * route_kernel.norm());
}

TEST_CASE("randsmap: agrees with the dense constrained-system oracle") {
  const Eigen::MatrixXd Y = random_matrix(2, 6, 71);
  const FeatureMap map = sample_rff(2, 8, 1.2, 72);
  const Eigen::MatrixXd Phi = feature_matrix(map, Y);  // 6 x 9
  const Eigen::MatrixXd X = mass_matrix(5, 6, 73);
  const double lambda = 1e-3;
  const Eigen::Index n = 6, p1 = 9, M = 5;

  // Brute force: solve the stationarity system in (A 1_M, mu) and recover
  // the full coefficient matrix from the multiplier.
  Eigen::MatrixXd H = Phi.transpose() * Phi;
  H.diagonal().array() += lambda;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(p1 + n, p1 + n);
  B.topLeftCorner(p1, p1) = H;
  B.topRightCorner(p1, n) = static_cast<double>(M) * Phi.transpose();
  B.bottomLeftCorner(n, p1) = Phi;
  Eigen::VectorXd rhs(p1 + n);
  rhs.head(p1) =
      Phi.transpose() * X.transpose() * Eigen::VectorXd::Ones(M);
  rhs.tail(n).setOnes();
  const Eigen::VectorXd sol = Eigen::FullPivLU<Eigen::MatrixXd>(B).solve(rhs);
  const Eigen::VectorXd mu = sol.tail(n);

  const Eigen::MatrixXd A_oracle = H.ldlt().solve(
      Phi.transpose() *
      (X.transpose() -
       mu * Eigen::RowVectorXd::Ones(M)));
  // The oracle satisfies the constraint it was built from.
  CHECK((Phi * A_oracle * Eigen::VectorXd::Ones(M) -
         Eigen::VectorXd::Ones(n))
            .norm() <= 1e-8);
  CHECK((A_oracle * Eigen::VectorXd::Ones(M) - sol.head(p1)).norm() <= 1e-8);

  const RidgeDecoder model = randsmap_fit(Phi, X, lambda);
  CHECK((model.A - A_oracle).norm() <= 1e-8 * A_oracle.norm());
}

TEST_CASE("randsmap: full-column-rank fit conserves on any latent batch") {
  const Eigen::MatrixXd Y = grid_latents(8, 5);  // 40 training points
  const FeatureMap map = sample_rff(2, 25, 2.5, 81);
  const Eigen::MatrixXd Phi = feature_matrix(map, Y);  // 40 x 26, tall
  const Eigen::MatrixXd X = mass_matrix(8, 40, 82);

  RidgeDecoder model = randsmap_fit(Phi, X, 1e-3);
  bind_map(model, map);
  REQUIRE(model.trunc_rank == 26);  // no numeric truncation

  const auto [res, sig_next] = conservation_residual(model);
  CHECK(sig_next == 0.0);
  CHECK(res <= 1e-12);

  const Reconstruction train_rec = decode(model, map, Y);
  const double bound =
      model.sigma_next + 100.0 * 2.220446049250313e-16 * 40.0;
  CHECK(train_rec.conservation.maxCoeff() <= bound);

  const Eigen::MatrixXd Y_star = random_matrix(2, 15, 83);
  const Reconstruction rec = decode(model, map, Y_star);
  CHECK(rec.X_hat.rows() == 8);
  CHECK(rec.X_hat.cols() == 15);
  CHECK(rec.conservation.maxCoeff() <= bound);
  CHECK((rec.conservation -
         (rec.X_hat.colwise().sum().array() - 1.0).abs().matrix().transpose())
            .cwiseAbs()
            .maxCoeff() <= 1e-15);
}

TEST_CASE("randsmap: lambda = 0 reduces to the pseudo-inverse solution") {
  const Eigen::MatrixXd Y = grid_latents(3, 3);
  const FeatureMap map = sample_rff(2, 8, 2.5, 31);
  const Eigen::MatrixXd Phi = feature_matrix(map, Y);  // square
  const Eigen::MatrixXd X = mass_matrix(5, 9, 91);

  const RidgeDecoder cons = randsmap_fit(Phi, X, 0.0);
  const RidgeDecoder plain = rfnn_fit_svd(Phi, X, 0.0);
  CHECK((cons.A - plain.A).norm() <= 1e-10 * plain.A.norm());
}

TEST_CASE("randsmap: truncation keeps the residual under the omitted value") {
  const Eigen::MatrixXd Y = grid_latents(5, 4);
  const FeatureMap map = sample_rff(2, 12, 2.0, 101);
  const Eigen::MatrixXd Phi = feature_matrix(map, Y);
  const Eigen::MatrixXd X = mass_matrix(6, 20, 102);

  // Forcing the cut right below the top singular value keeps only rank 1.
  const RidgeDecoder model = randsmap_fit(Phi, X, 1e-3, 0.999);
  CHECK(model.trunc_rank == 1);
  const auto [res, sig_next] = conservation_residual(model);
  CHECK(sig_next > 0.0);
  CHECK(res <= sig_next + 1e-12);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Phi);
  CHECK(sig_next == doctest::Approx(svd.singularValues()[1]).epsilon(1e-12));
}

TEST_CASE("randsmap: rejects data that does not sum to one") {
  const Eigen::MatrixXd Phi = random_matrix(6, 4, 111);
  Eigen::MatrixXd X = mass_matrix(5, 6, 112);
  X(0, 2) += 0.5;
  CHECK_THROWS_AS(randsmap_fit(Phi, X, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(randsmap_fit(Phi, mass_matrix(5, 6, 112), 1e-3, 0.0),
                  std::invalid_argument);
}

TEST_CASE("decode: empty batches, bound maps, and mismatch rejection") {
  const Eigen::MatrixXd Y = grid_latents(3, 3);
  const FeatureMap map = sample_rff(2, 8, 2.5, 31);
  const Eigen::MatrixXd Phi = feature_matrix(map, Y);
  const Eigen::MatrixXd X = mass_matrix(5, 9, 121);
  RidgeDecoder model = randsmap_fit(Phi, X, 1e-3);
  bind_map(model, map);

  const Reconstruction empty = decode(model, map, Eigen::MatrixXd(2, 0));
  CHECK(empty.X_hat.rows() == 5);
  CHECK(empty.X_hat.cols() == 0);
  CHECK(empty.conservation.size() == 0);

  const FeatureMap other_seed = sample_rff(2, 8, 2.5, 32);
  CHECK_THROWS_AS(decode(model, other_seed, Y), NumericalError);
  const FeatureMap other_kind = sample_msrff(2, 8, 2, 2.5, 31);
  CHECK_THROWS_AS(decode(model, other_kind, Y), NumericalError);
  const FeatureMap other_p = sample_rff(2, 10, 2.5, 31);
  CHECK_THROWS_AS(decode(model, other_p, Y), std::invalid_argument);
}

TEST_CASE("ddm: no-truncation fit reconstructs the training set") {
  const Eigen::MatrixXd Y = random_matrix(2, 6, 131);
  const Eigen::MatrixXd X = random_matrix(5, 6, 132);
  const DdmDecoder model = ddm_fit(Y, X, 0.3);
  REQUIRE(model.lam_r.size() == 6);
  const Reconstruction rec = ddm_decode(model, Y);
  CHECK((rec.X_hat - X).norm() <= 1e-6 * X.norm());
}

TEST_CASE("ddm: matches the direct formula on a four-point instance") {
  Eigen::MatrixXd Y(2, 4);
  Y << 0.0, 1.0, 0.2, -0.8,
       0.0, 0.3, 1.1, 0.5;
  const Eigen::MatrixXd X = random_matrix(3, 4, 141);
  const double w2 = 0.7;
  const DdmDecoder model = ddm_fit(Y, X, w2);
  REQUIRE(model.lam_r.size() == 4);

  // Direct route: epsilon2 from the definition, K inverted by pivoted LU
  // instead of the eigendecomposition.
  const double eps2 = w2 * median_pairwise_distance(Y);
  CHECK(model.epsilon2 == doctest::Approx(eps2).epsilon(1e-14));
  const Eigen::MatrixXd K = gaussian_kernel(Y, Y, eps2);
  Eigen::MatrixXd Y_star(2, 2);
  Y_star << 0.4, -0.2,
            0.5, 0.1;
  const Eigen::MatrixXd K_star = gaussian_kernel(Y_star, Y, eps2);
  const Eigen::MatrixXd X_oracle =
      X * Eigen::FullPivLU<Eigen::MatrixXd>(K).solve(K_star.transpose());

  const Reconstruction rec = ddm_decode(model, Y_star);
  CHECK((rec.X_hat - X_oracle).norm() <= 1e-10 * X_oracle.norm());
}

TEST_CASE("ddm: distant queries decay to zero and batches keep their shape") {
  const Eigen::MatrixXd Y = random_matrix(2, 10, 151);
  const Eigen::MatrixXd X = mass_matrix(4, 10, 152);
  const DdmDecoder model = ddm_fit(Y, X, 0.5);

  Eigen::MatrixXd far(2, 1);
  far << 1000.0, 1000.0;
  const Reconstruction rec_far = ddm_decode(model, far);
  CHECK(rec_far.X_hat.norm() <= 1e-12);
  // A zero column is maximally non-conservative: |sum - 1| = 1.
  CHECK(rec_far.conservation[0] == doctest::Approx(1.0).epsilon(1e-12));

  const Eigen::MatrixXd batch = random_matrix(2, 7, 153);
  CHECK(ddm_decode(model, batch).X_hat.cols() == 7);
  CHECK(ddm_decode(model, batch).X_hat.rows() == 4);

  CHECK_THROWS_AS(ddm_fit(Y, mass_matrix(4, 9, 154), 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(ddm_fit(Y, X, 0.0), std::invalid_argument);
}

TEST_CASE("knn: querying a training latent concentrates on that sample") {
  const DataSet ds = gen_swiss_roll(300, 0.0, 7);
  const DmModel dm = dm_fit(ds.X, 1.0, 0.12, 2);
  const Eigen::MatrixXd Y = dm_train_embedding(dm);

  // Use a hull-extremal latent: for an interior point every convex blend of
  // its neighbors that encodes back to the same spot is a valid minimizer,
  // so only an extreme point forces the weights onto one sample.
  Eigen::Index i = 0;
  Y.row(0).maxCoeff(&i);
  const KnnResult res = knn_decode(dm, Y, ds.X, Y.col(i), 6);
  Eigen::Index pos = -1;
  for (std::size_t j = 0; j < res.neighbors.size(); ++j) {
    if (res.neighbors[j] == i) pos = static_cast<Eigen::Index>(j);
  }
  REQUIRE(pos >= 0);
  CHECK(res.alpha[pos] >= 0.95);
  CHECK((res.x_hat - ds.X.col(i)).norm() <= 0.05 * ds.X.col(i).norm());
}

TEST_CASE("knn: weights live on the simplex and preserve mass") {
  const Eigen::MatrixXd X = mass_matrix(6, 40, 161);
  const DmModel dm = dm_fit(X, 1.0, 0.8, 2);
  const Eigen::MatrixXd Y = dm_train_embedding(dm);

  const Eigen::VectorXd y_star = 0.5 * (Y.col(3) + Y.col(11));
  const KnnResult res = knn_decode(dm, Y, X, y_star, 5);
  CHECK(res.alpha.minCoeff() >= -1e-12);
  CHECK(std::abs(res.alpha.sum() - 1.0) <= 1e-12);
  CHECK(std::abs(res.x_hat.sum() - 1.0) <= 1e-12);
  CHECK(res.alpha.size() == 5);
  CHECK(res.neighbors.size() == 5);

  CHECK_THROWS_AS(knn_decode(dm, Y, X, y_star, 41), std::invalid_argument);
  CHECK_THROWS_AS(knn_decode(dm, Y, X, y_star, 0), std::invalid_argument);
}

TEST_CASE("knn: single neighbor returns that training column exactly") {
  const Eigen::MatrixXd X = mass_matrix(5, 20, 171);
  const DmModel dm = dm_fit(X, 1.0, 0.8, 2);
  const Eigen::MatrixXd Y = dm_train_embedding(dm);
  const KnnResult res = knn_decode(dm, Y, X, Y.col(4), 1);
  REQUIRE(res.neighbors.size() == 1);
  CHECK(res.neighbors[0] == 4);
  CHECK(res.alpha[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((res.x_hat - X.col(4)).norm() <= 1e-15);
}

TEST_CASE("knn: analytic gradient matches central finite differences") {
  const DataSet ds = gen_swiss_roll(150, 0.0, 9);
  const DmModel dm = dm_fit(ds.X, 1.0, 0.12, 2);
  const Eigen::MatrixXd Y = dm_train_embedding(dm);
  const Eigen::Index k = 5;
  const Eigen::MatrixXd X_S = ds.X.leftCols(k);

  CounterRng rng(33, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd alpha(k);
    for (Eigen::Index j = 0; j < k; ++j) alpha[j] = 0.05 + rng.uniform();
    alpha /= alpha.sum();
    Eigen::VectorXd y_star(2);
    y_star << Y(0, rng.below(150)), Y(1, rng.below(150));

    Eigen::VectorXd grad(k);
    knn_objective(dm, X_S, y_star, alpha, &grad);

    Eigen::VectorXd fd(k);
    const double h = 1e-6;
    for (Eigen::Index j = 0; j < k; ++j) {
      Eigen::VectorXd ap = alpha, am = alpha;
      ap[j] += h;
      am[j] -= h;
      fd[j] = (knn_objective(dm, X_S, y_star, ap) -
               knn_objective(dm, X_S, y_star, am)) /
              (2.0 * h);
    }
    CHECK((grad - fd).norm() <= 1e-5 * std::max(fd.norm(), 1e-8));
  }
}

TEST_CASE("pod: basis is mass-orthogonal and reconstructions conserve") {
  const Eigen::MatrixXd X = mass_matrix(6, 12, 181);
  const PodDecoder model = pod_fit(X, 3);
  CHECK((Eigen::RowVectorXd::Ones(6) * model.U_d).cwiseAbs().maxCoeff() <=
        1e-10);
  const Reconstruction rec = pod_decode(model, X);
  CHECK(max_conservation_error(rec.X_hat) <= 1e-12);
  CHECK((rec.conservation.array() <= 1e-12).all());
}

TEST_CASE("pod: full basis reproduces the training data") {
  const Eigen::MatrixXd X = random_matrix(5, 8, 191);
  const PodDecoder model = pod_fit(X, 5);
  const Reconstruction rec = pod_decode(model, X);
  CHECK((rec.X_hat - X).norm() <= 1e-10 * X.norm());
}

TEST_CASE("pod: dropped singular direction accounts for the whole error") {
  const Eigen::Index M = 8, N = 12;
  Eigen::HouseholderQR<Eigen::MatrixXd> qru(random_matrix(M, 2, 201));
  const Eigen::MatrixXd U =
      qru.householderQ() * Eigen::MatrixXd::Identity(M, 2);
  Eigen::MatrixXd V0 = random_matrix(N, 2, 202);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(N);
  V0 -= ones * (ones.transpose() * V0) / static_cast<double>(N);
  Eigen::HouseholderQR<Eigen::MatrixXd> qrv(V0);
  const Eigen::MatrixXd V =
      qrv.householderQ() * Eigen::MatrixXd::Identity(N, 2);

  const Eigen::VectorXd mean = random_matrix(M, 1, 203);
  const Eigen::MatrixXd X = mean * Eigen::RowVectorXd::Ones(N) +
                            5.0 * U.col(0) * V.col(0).transpose() +
                            2.0 * U.col(1) * V.col(1).transpose();

  const PodDecoder model = pod_fit(X, 1);
  const Reconstruction rec = pod_decode(model, X);
  CHECK((rec.X_hat - X).norm() == doctest::Approx(2.0).epsilon(1e-10));

  CHECK_THROWS_AS(pod_fit(X, 3), std::invalid_argument);
  CHECK_THROWS_AS(pod_decode(model, Eigen::MatrixXd::Zero(5, 2)),
                  std::invalid_argument);
}
