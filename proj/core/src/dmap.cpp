#include "randsmap/dmap.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "randsmap/errors.hpp"

namespace randsmap {

namespace {

// Squared distances via the Gram expansion; clamped at zero because the
// expansion can go marginally negative for near-coincident points.
Eigen::MatrixXd pairwise_sq_dist(const Eigen::MatrixXd& A,
                                 const Eigen::MatrixXd& B) {
  const Eigen::VectorXd sq_a = A.colwise().squaredNorm();
  const Eigen::VectorXd sq_b = B.colwise().squaredNorm();
  Eigen::MatrixXd d2 = (-2.0 * A.transpose() * B).rowwise() +
                       sq_b.transpose();
  d2.colwise() += sq_a;
  return d2.cwiseMax(0.0);
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]);
    if (mag > best) {
      best = mag;
      arg = i;
    }
  }
  if (v[arg] < 0.0) v = -v;
}

}  // namespace

double median_pairwise_distance(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.cols();
  if (n < 2) {
    throw std::invalid_argument(
        "median_pairwise_distance: need at least 2 points");
  }
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dist.push_back((X.col(i) - X.col(j)).norm());
    }
  }
  // Lower median: element at index (count - 1) / 2 of the sorted list.
  const std::size_t mid = (dist.size() - 1) / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<long>(mid),
                   dist.end());
  return dist[mid];
}

Eigen::MatrixXd gaussian_kernel(const Eigen::MatrixXd& X_a,
                                const Eigen::MatrixXd& X_b, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("gaussian_kernel: epsilon must be positive");
  }
  if (X_a.rows() != X_b.rows()) {
    throw std::invalid_argument("gaussian_kernel: row counts differ");
  }
  Eigen::MatrixXd K =
      (-pairwise_sq_dist(X_a, X_b) / (epsilon * epsilon)).array().exp();
  if (&X_a == &X_b) {
    K = 0.5 * (K + K.transpose()).eval();
    K.diagonal().setOnes();
  }
  return K;
}

DmModel dm_fit(const Eigen::MatrixXd& X_train, double alpha, double w1,
               Eigen::Index d) {
  const Eigen::Index n = X_train.cols();
  if (d < 1) throw std::invalid_argument("dm_fit: need d >= 1");
  if (n < d + 2) throw std::invalid_argument("dm_fit: need N >= d + 2");
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("dm_fit: alpha must be in [0, 1]");
  }
  if (!(w1 > 0.0)) throw std::invalid_argument("dm_fit: w1 must be positive");
  if (!X_train.allFinite()) {
    throw NumericalError("dm_fit: non-finite training data");
  }

  DmModel model;
  model.X_train = X_train;
  model.alpha = alpha;
  model.w1 = w1;
  model.d = d;
  model.epsilon1 = w1 * median_pairwise_distance(X_train);
  if (!(model.epsilon1 > 0.0)) {
    throw NumericalError("dm_fit: degenerate bandwidth (duplicate data)");
  }

  const Eigen::MatrixXd K = gaussian_kernel(X_train, X_train, model.epsilon1);
  model.deg1 = K.rowwise().sum();
  const Eigen::ArrayXd da = model.deg1.array().pow(alpha);
  Eigen::MatrixXd Ka = K.array().colwise() / da;
  Ka.array().rowwise() /= da.transpose();
  model.deg1a = Ka.rowwise().sum();

  // Symmetric conjugate of the row-stochastic T = D_a^-1 Ka shares its
  // spectrum; right eigenvectors of T are D_a^-1/2 times those of S.
  const Eigen::ArrayXd sqrt_da = model.deg1a.array().sqrt();
  Eigen::MatrixXd S = Ka.array().colwise() / sqrt_da;
  S.array().rowwise() /= sqrt_da.transpose();
  S = 0.5 * (S + S.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("dm_fit: eigendecomposition failed");
  }
  // Eigenvalues come out ascending; the top pair is the trivial one.
  model.xi.resize(d);
  model.V.resize(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::Index src = n - 2 - j;
    model.xi[j] = eig.eigenvalues()[src];
    Eigen::VectorXd v =
        eig.eigenvectors().col(src).array() / sqrt_da;
    v.normalize();
    fix_sign(v);
    model.V.col(j) = v;
  }
  const double next = eig.eigenvalues()[n - 2 - d];
  model.gap_warning = model.xi[d - 1] - next < 1e-12;
  return model;
}

Eigen::MatrixXd dm_train_embedding(const DmModel& model) {
  // Coordinates use eigenfunction normalization (entries at unit rms, so the
  // trivial mode is the constant function 1), hence the sqrt(N) on top of the
  // stored unit-norm columns. This keeps the embedding scale independent of
  // the training set size, so decoder hyperparameter ranges transfer across N.
  const double scale = std::sqrt(static_cast<double>(model.V.rows()));
  return scale * (model.xi.asDiagonal() * model.V.transpose());
}

Eigen::MatrixXd dm_encode(const DmModel& model,
                          const Eigen::MatrixXd& X_new) {
  if (X_new.rows() != model.X_train.rows()) {
    throw std::invalid_argument("dm_encode: row count mismatch");
  }
  if (!X_new.allFinite()) {
    throw NumericalError("dm_encode: non-finite query data");
  }
  const Eigen::MatrixXd K =
      gaussian_kernel(X_new, model.X_train, model.epsilon1);
  const Eigen::ArrayXd da_train = model.deg1.array().pow(model.alpha);
  // Same eigenfunction normalization as dm_train_embedding, so Nystroem
  // coordinates of a training point reproduce its training embedding.
  const double scale = std::sqrt(static_cast<double>(model.V.rows()));
  Eigen::MatrixXd Y(model.d, X_new.cols());
  for (Eigen::Index c = 0; c < X_new.cols(); ++c) {
    if ((K.row(c).array() < 1e-300).all()) {
      throw NumericalError("dm_encode: isolated query point");
    }
    const double deg_self = K.row(c).sum();
    Eigen::ArrayXd ka = K.row(c).transpose().array() /
                        (std::pow(deg_self, model.alpha) * da_train);
    ka /= ka.sum();
    Y.col(c) = scale * (model.V.transpose() * ka.matrix());
  }
  return Y;
}

}  // namespace randsmap
