#include "randsmap/decoders.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "randsmap/errors.hpp"

namespace randsmap {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_fit_args(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& X,
                    double lambda) {
  if (Phi.rows() != X.cols()) {
    throw std::invalid_argument(
        "fit: feature rows must match data columns (one row per point)");
  }
  if (Phi.rows() == 0 || Phi.cols() == 0) {
    throw std::invalid_argument("fit: empty feature matrix");
  }
  if (lambda < 0.0) {
    throw std::invalid_argument("fit: lambda must be nonnegative");
  }
  if (!Phi.allFinite() || !X.allFinite()) {
    throw NumericalError("fit: non-finite inputs");
  }
}

// Cholesky solve of (G + lambda I) Z = B with a rank guard for lambda = 0:
// a trailing pivot collapsing relative to the largest one means G is
// numerically singular and the unregularized problem has no unique solution.
Eigen::MatrixXd spd_solve(Eigen::MatrixXd G, double lambda,
                          const Eigen::MatrixXd& B) {
  G.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("fit: system is rank deficient at lambda = 0");
  }
  if (lambda == 0.0) {
    const auto diag = llt.matrixLLT().diagonal();
    const double lo = diag.minCoeff(), hi = diag.maxCoeff();
    if (!(lo > std::sqrt(static_cast<double>(G.rows()) * kEps) * hi)) {
      throw NumericalError("fit: system is rank deficient at lambda = 0");
    }
  }
  return llt.solve(B);
}

}  // namespace

void bind_map(RidgeDecoder& model, const FeatureMap& map) {
  if (model.A.rows() != map.P + 1) {
    throw std::invalid_argument(
        "bind_map: coefficient rows do not match feature count");
  }
  model.has_map_id = true;
  model.map_kind = map.kind;
  model.map_seed = map.seed;
  model.map_P = map.P;
  model.map_d = map.d;
}

RidgeDecoder rfnn_fit(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& X,
                      double lambda) {
  check_fit_args(Phi, X, lambda);
  const Eigen::Index n = Phi.rows();
  const Eigen::Index p1 = Phi.cols();
  RidgeDecoder model;
  model.kind = DecoderKind::Rfnn;
  model.lambda = lambda;
  if (n >= p1) {
    model.A = spd_solve(Phi.transpose() * Phi, lambda,
                        Phi.transpose() * X.transpose());
  } else {
    model.A = Phi.transpose() *
              spd_solve(Phi * Phi.transpose(), lambda, X.transpose());
  }
  return model;
}

RidgeDecoder rfnn_fit_svd(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& X,
                          double lambda) {
  check_fit_args(Phi, X, lambda);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Phi,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff =
      static_cast<double>(std::max(Phi.rows(), Phi.cols())) * kEps * s[0];
  Eigen::Index r = 0;
  while (r < s.size() && s[r] > cutoff) ++r;
  if (r == 0) throw NumericalError("rfnn_fit_svd: zero feature matrix");

  Eigen::VectorXd filter(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    filter[i] = lambda == 0.0 ? 1.0 / s[i] : s[i] / (s[i] * s[i] + lambda);
  }
  RidgeDecoder model;
  model.kind = DecoderKind::Rfnn;
  model.lambda = lambda;
  model.A = svd.matrixV().leftCols(r) * filter.asDiagonal() *
            (svd.matrixU().leftCols(r).transpose() * X.transpose());
  return model;
}

RidgeDecoder randsmap_fit(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& X,
                          double lambda, double delta_S) {
  check_fit_args(Phi, X, lambda);
  if (!(delta_S > 0.0)) {
    throw std::invalid_argument("randsmap_fit: delta_S must be positive");
  }
  const Eigen::VectorXd col_sums = X.colwise().sum();
  if ((col_sums.array() - 1.0).abs().maxCoeff() > 1e-10) {
    throw std::invalid_argument(
        "randsmap_fit: data columns must sum to 1 (mass-preserving input)");
  }
  const Eigen::Index n = Phi.rows();
  const auto m = static_cast<double>(X.rows());

  Eigen::BDCSVD<Eigen::MatrixXd> svd(Phi,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::Index r = 0;
  while (r < s.size() && s[r] > delta_S * s[0]) ++r;
  if (r == 0) throw NumericalError("randsmap_fit: zero feature matrix");

  RidgeDecoder model;
  model.kind = DecoderKind::Randsmap;
  model.lambda = lambda;
  model.trunc_rank = r;
  model.sigma_next = r < s.size() ? s[r] : 0.0;
  model.U_r = svd.matrixU().leftCols(r);

  // Mean shift that enforces unit column sums: the multiplier term
  // (1/M) [I - U_r (I + lambda S_r^-2) U_r^T] 1_n folded into the target.
  const Eigen::VectorXd ut1 = model.U_r.transpose() * Eigen::VectorXd::Ones(n);
  Eigen::VectorXd scaled = ut1;
  if (lambda != 0.0) {
    for (Eigen::Index i = 0; i < r; ++i) {
      scaled[i] *= 1.0 + lambda / (s[i] * s[i]);
    }
  }
  const Eigen::VectorXd shift =
      (Eigen::VectorXd::Ones(n) - model.U_r * scaled) / m;

  Eigen::VectorXd filter(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    filter[i] = lambda == 0.0 ? 1.0 / s[i] : s[i] / (s[i] * s[i] + lambda);
  }
  // U_r^T (X^T - shift 1_M^T), assembled without forming the n x M shift.
  Eigen::MatrixXd projected = model.U_r.transpose() * X.transpose();
  projected.colwise() -= model.U_r.transpose() * shift;
  model.A = svd.matrixV().leftCols(r) * filter.asDiagonal() * projected;
  return model;
}

std::pair<double, double> conservation_residual(const RidgeDecoder& model) {
  if (model.kind != DecoderKind::Randsmap || model.U_r.size() == 0) {
    throw std::invalid_argument(
        "conservation_residual: needs a mass-preserving fit");
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(model.U_r.rows());
  const Eigen::VectorXd e = ones - model.U_r * (model.U_r.transpose() * ones);
  return {e.norm(), model.sigma_next};
}

Reconstruction decode(const RidgeDecoder& model, const FeatureMap& map,
                      const Eigen::MatrixXd& Y_star) {
  if (model.A.rows() != map.P + 1) {
    throw std::invalid_argument("decode: feature count mismatch");
  }
  if (model.has_map_id &&
      (map.kind != model.map_kind || map.seed != model.map_seed ||
       map.P != model.map_P || map.d != model.map_d)) {
    throw NumericalError(
        "decode: feature-map mismatch (map differs from the fit-time stamp)");
  }
  Reconstruction rec;
  rec.X_hat = (feature_matrix(map, Y_star) * model.A).transpose();
  rec.conservation = (rec.X_hat.colwise().sum().array() - 1.0).abs();
  return rec;
}

DdmDecoder ddm_fit(const Eigen::MatrixXd& Y_train,
                   const Eigen::MatrixXd& X_train, double w2) {
  const Eigen::Index n = Y_train.cols();
  if (n < 2) throw std::invalid_argument("ddm_fit: need at least 2 points");
  if (X_train.cols() != n) {
    throw std::invalid_argument("ddm_fit: latent/ambient column mismatch");
  }
  if (!(w2 > 0.0)) throw std::invalid_argument("ddm_fit: w2 must be positive");

  DdmDecoder model;
  model.Y_train = Y_train;
  model.w2 = w2;
  model.epsilon2 = w2 * median_pairwise_distance(Y_train);
  if (!(model.epsilon2 > 0.0)) {
    throw NumericalError("ddm_fit: degenerate latent bandwidth");
  }
  const Eigen::MatrixXd K =
      gaussian_kernel(Y_train, Y_train, model.epsilon2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("ddm_fit: eigendecomposition failed");
  }
  // K is positive semidefinite, so its spectral norm is the top eigenvalue;
  // eigenvalues below the numeric-noise level N ||K|| eps ||K|| carry no
  // signal and destabilize the inverse.
  const double lam_max = eig.eigenvalues()[n - 1];
  const double threshold =
      static_cast<double>(n) * lam_max * std::pow(2.0, -53) * lam_max;
  Eigen::Index r = 0;
  while (r < n && eig.eigenvalues()[n - 1 - r] > threshold) ++r;
  if (r == 0) throw NumericalError("ddm_fit: degenerate kernel");

  model.lam_r.resize(r);
  model.V_r.resize(n, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    model.lam_r[j] = eig.eigenvalues()[n - 1 - j];
    model.V_r.col(j) = eig.eigenvectors().col(n - 1 - j);
  }
  model.C = X_train * model.V_r *
            model.lam_r.cwiseInverse().asDiagonal() * model.V_r.transpose();
  return model;
}

Reconstruction ddm_decode(const DdmDecoder& model,
                          const Eigen::MatrixXd& Y_star) {
  const Eigen::MatrixXd K_star =
      gaussian_kernel(Y_star, model.Y_train, model.epsilon2);
  Reconstruction rec;
  rec.X_hat = model.C * K_star.transpose();
  rec.conservation = (rec.X_hat.colwise().sum().array() - 1.0).abs();
  return rec;
}

double knn_objective(const DmModel& dm_model, const Eigen::MatrixXd& X_S,
                     const Eigen::VectorXd& y_star,
                     const Eigen::VectorXd& alpha, Eigen::VectorXd* grad) {
  const Eigen::Index n = dm_model.X_train.cols();
  if (X_S.rows() != dm_model.X_train.rows() || X_S.cols() != alpha.size() ||
      y_star.size() != dm_model.V.cols()) {
    throw std::invalid_argument("knn_objective: shape mismatch");
  }
  const double eps2 = dm_model.epsilon1 * dm_model.epsilon1;
  const double a = dm_model.alpha;
  const Eigen::VectorXd z = X_S * alpha;

  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k[i] = std::exp(-(z - dm_model.X_train.col(i)).squaredNorm() / eps2);
  }
  const double deg = k.sum();
  if (!(deg > 0.0)) {
    throw NumericalError("knn_objective: query isolated from training set");
  }
  const Eigen::ArrayXd da_train = dm_model.deg1.array().pow(a);
  const double da_self = std::pow(deg, a);
  const Eigen::ArrayXd ka = k.array() / (da_self * da_train);
  const double ka_sum = ka.sum();
  const Eigen::VectorXd t = (ka / ka_sum).matrix();
  // Same sqrt(N) eigenfunction scaling as dm_encode, so the objective is the
  // squared latent distance between y* and the encoded blend.
  const double scale = std::sqrt(static_cast<double>(n));
  const Eigen::VectorXd e = y_star - scale * (dm_model.V.transpose() * t);
  const double value = e.squaredNorm();

  if (grad != nullptr) {
    // Chain rule through the Nystrom extension. With u = scale * V e,
    // dg = -2 u . dT; T = ka / sum(ka) and ka depends on z through the
    // kernel row and the query degree.
    const Eigen::VectorXd u = scale * (dm_model.V * e);
    const double ut = u.dot(t);
    const Eigen::ArrayXd w = (-2.0 / ka_sum) * (u.array() - ut);
    // d ka_i = ka_i / k_i dk_i - (a / deg) ka_i * sum_j dk_j.
    const Eigen::ArrayXd c1 = w / (da_self * da_train);
    const double c2 = -(a / deg) * (w * ka).sum();
    const Eigen::ArrayXd q = (c1 + c2) * k.array();
    // dk_i/dz = -2 k_i (z - x_i) / eps^2.
    const Eigen::VectorXd grad_z =
        (-2.0 / eps2) * (q.sum() * z - dm_model.X_train * q.matrix());
    *grad = X_S.transpose() * grad_z;
  }
  return value;
}

namespace {

// Euclidean projection onto the probability simplex (sorting algorithm).
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index k = v.size();
  std::vector<double> u(v.data(), v.data() + k);
  std::sort(u.begin(), u.end(), std::greater<>());
  double running = 0.0;
  double tau = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    running += u[static_cast<std::size_t>(j)];
    const double cand = (1.0 - running) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] + cand > 0.0) tau = cand;
  }
  return (v.array() + tau).max(0.0);
}

}  // namespace

KnnResult knn_decode(const DmModel& dm_model, const Eigen::MatrixXd& Y_train,
                     const Eigen::MatrixXd& X_train,
                     const Eigen::VectorXd& y_star, Eigen::Index k,
                     double tol) {
  const Eigen::Index n = Y_train.cols();
  if (k < 1 || k > n) {
    throw std::invalid_argument("knn_decode: need 1 <= k <= N");
  }
  if (X_train.cols() != n) {
    throw std::invalid_argument("knn_decode: latent/ambient column mismatch");
  }
  if (y_star.size() != Y_train.rows()) {
    throw std::invalid_argument("knn_decode: latent dimension mismatch");
  }

  // Nearest neighbors by latent distance, ties resolved by lower index.
  std::vector<std::pair<double, Eigen::Index>> order(
      static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    order[static_cast<std::size_t>(i)] = {
        (Y_train.col(i) - y_star).squaredNorm(), i};
  }
  std::partial_sort(order.begin(), order.begin() + k, order.end());

  KnnResult res;
  res.neighbors.resize(static_cast<std::size_t>(k));
  Eigen::MatrixXd X_S(X_train.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    res.neighbors[static_cast<std::size_t>(j)] =
        order[static_cast<std::size_t>(j)].second;
    X_S.col(j) = X_train.col(order[static_cast<std::size_t>(j)].second);
  }

  Eigen::VectorXd alpha =
      Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  Eigen::VectorXd grad(k);
  double value = knn_objective(dm_model, X_S, y_star, alpha, &grad);
  double step = 1.0;
  res.converged = false;
  constexpr int kMaxIters = 500;
  for (int it = 0; it < kMaxIters; ++it) {
    // Backtracking proximal-gradient step with the standard quadratic
    // sufficient-decrease condition.
    step = std::min(step * 2.0, 1e8);
    Eigen::VectorXd next;
    double next_value = 0.0;
    for (int half = 0; half < 80; ++half) {
      next = project_simplex(alpha - step * grad);
      next_value = knn_objective(dm_model, X_S, y_star, next, nullptr);
      const Eigen::VectorXd diff = next - alpha;
      if (next_value <=
          value + grad.dot(diff) + diff.squaredNorm() / (2.0 * step)) {
        break;
      }
      step *= 0.5;
    }
    const double mapping_norm = (alpha - next).norm() / step;
    alpha = next;
    value = next_value;
    knn_objective(dm_model, X_S, y_star, alpha, &grad);
    if (mapping_norm <= tol) {
      res.converged = true;
      break;
    }
  }
  res.alpha = alpha;
  res.x_hat = X_S * alpha;
  return res;
}

PodDecoder pod_fit(const Eigen::MatrixXd& X_train, Eigen::Index d) {
  const Eigen::Index n = X_train.cols();
  if (d < 1) throw std::invalid_argument("pod_fit: need d >= 1");
  if (n < 1) throw std::invalid_argument("pod_fit: empty training set");
  if (!X_train.allFinite()) {
    throw NumericalError("pod_fit: non-finite training data");
  }
  PodDecoder model;
  model.mean = X_train.rowwise().mean();
  Eigen::MatrixXd centered = X_train.colwise() - model.mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  model.svals = svd.singularValues();
  const double cutoff = static_cast<double>(std::max(X_train.rows(), n)) *
                        kEps * model.svals[0];
  Eigen::Index rank = 0;
  while (rank < model.svals.size() && model.svals[rank] > cutoff) ++rank;
  if (d > rank) {
    throw std::invalid_argument(
        "pod_fit: d exceeds the rank of the centered data");
  }
  model.U_d = svd.matrixU().leftCols(d);
  return model;
}

Reconstruction pod_decode(const PodDecoder& model,
                          const Eigen::MatrixXd& X_star) {
  if (X_star.rows() != model.U_d.rows()) {
    throw std::invalid_argument("pod_decode: ambient dimension mismatch");
  }
  const Eigen::MatrixXd centered = X_star.colwise() - model.mean;
  Reconstruction rec;
  rec.X_hat =
      (model.U_d * (model.U_d.transpose() * centered)).colwise() + model.mean;
  rec.conservation = (rec.X_hat.colwise().sum().array() - 1.0).abs();
  return rec;
}

}  // namespace randsmap
