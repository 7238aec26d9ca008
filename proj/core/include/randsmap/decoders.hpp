// The five decoders mapping latent coordinates back to ambient fields:
// ridge-regressed random-feature networks (unconstrained, and the
// mass-preserving closed form), the double-kernel reconstruction on latent
// coordinates, convex k-nearest-neighbor interpolation, and the linear
// projection baseline.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "randsmap/dmap.hpp"
#include "randsmap/randfeat.hpp"

namespace randsmap {

enum class DecoderKind { Rfnn, Randsmap, Ddm, Knn, Pod };

struct Reconstruction {
  Eigen::MatrixXd X_hat;         // M x L reconstructed fields
  Eigen::VectorXd conservation;  // per column |sum - 1|; meaningful when the
                                 // source data is mass-preserving
};

// Coefficients of a random-feature decoder, x_hat = A^T phi(y).
struct RidgeDecoder {
  DecoderKind kind = DecoderKind::Rfnn;
  Eigen::MatrixXd A;  // (P+1) x M
  double lambda = 0.0;
  // Mass-preserving fit only: retained rank of the feature matrix, the
  // first omitted singular value, and the retained left singular block
  // (n x trunc_rank) for the conservation residual.
  Eigen::Index trunc_rank = 0;
  double sigma_next = 0.0;
  Eigen::MatrixXd U_r;
  // Identity of the feature map used at fit time, stamped by bind_map();
  // decode() rejects a map that does not match.
  bool has_map_id = false;
  FeatureKind map_kind = FeatureKind::Rff;
  std::uint64_t map_seed = 0;
  Eigen::Index map_P = 0;
  Eigen::Index map_d = 0;
};

// Records the feature map's identity on the model so decode() can verify
// the caller passes the same map the coefficients were fitted with.
void bind_map(RidgeDecoder& model, const FeatureMap& map);

// Ridge regression of X^T on the feature matrix: primal normal equations
// (Phi^T Phi + lambda I)^-1 Phi^T X^T when n >= P+1, the dual form
// Phi^T (Phi Phi^T + lambda I)^-1 X^T otherwise, both by Cholesky
// factorization. Throws NumericalError when lambda = 0 and the system is
// rank deficient.
RidgeDecoder rfnn_fit(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& X,
                      double lambda);

// Same estimator through the SVD filter A = V_r (S_r^2 + lambda I)^-1 S_r
// U_r^T X^T over the numeric rank r; lambda = 0 gives the minimum-norm
// pseudo-inverse solution.
RidgeDecoder rfnn_fit_svd(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& X,
                          double lambda);

// Mass-preserving closed form. The feature matrix is truncated at
// sigma_i > delta_S sigma_1 and the coefficients solve the ridge problem
// constrained to reproduce unit column sums on the training set:
//   A = V_r (S_r^2 + lambda I)^-1 S_r U_r^T
//       (X^T - (1/M) [I - U_r (I + lambda S_r^-2) U_r^T] 1_n 1_M^T).
// Requires every column of X to sum to 1 within 1e-10 and delta_S > 0.
RidgeDecoder randsmap_fit(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& X,
                          double lambda, double delta_S = 1e-8);

// Conservation residual of a mass-preserving fit: the norm of
// e = (I - U_r U_r^T) 1_n together with the stored first omitted singular
// value; the residual is bounded by that singular value.
std::pair<double, double> conservation_residual(const RidgeDecoder& model);

// Reconstructs the d x L latent block: X_hat = A^T phi(Y_star)^T. The map
// must match the fit-time stamp.
Reconstruction decode(const RidgeDecoder& model, const FeatureMap& map,
                      const Eigen::MatrixXd& Y_star);

// Double-kernel reconstruction operating on latent coordinates.
struct DdmDecoder {
  Eigen::MatrixXd Y_train;  // d x N latent training coordinates
  double epsilon2 = 0.0;    // w2 * median pairwise latent distance
  double w2 = 0.0;
  Eigen::VectorXd lam_r;    // retained kernel eigenvalues, descending
  Eigen::MatrixXd V_r;      // N x r matching eigenvectors
  Eigen::MatrixXd C;        // M x N, X_train V_r Lam_r^-1 V_r^T
};

// Fits the latent-kernel reconstruction: epsilon2 from the median pairwise
// latent distance, eigendecomposition of the latent Gaussian kernel,
// eigenvalues retained above the numeric-noise threshold
// N ||K||_2^2 2^-53, and the reconstruction operator precomputed.
// Not mass-preserving.
DdmDecoder ddm_fit(const Eigen::MatrixXd& Y_train,
                   const Eigen::MatrixXd& X_train, double w2);

Reconstruction ddm_decode(const DdmDecoder& model,
                          const Eigen::MatrixXd& Y_star);

struct KnnResult {
  Eigen::VectorXd x_hat;               // convex combination of neighbors
  Eigen::VectorXd alpha;               // simplex weights, audit trail
  std::vector<Eigen::Index> neighbors; // training indices used
  bool converged = true;
};

// Objective of the k-NN decoder at fixed neighbor block X_S (M x k):
// g(alpha) = || y_star - encode(X_S alpha) ||^2 through the Nystrom
// extension of dm_model. Writes the analytic gradient when grad is
// non-null. Exposed for gradient verification.
double knn_objective(const DmModel& dm_model, const Eigen::MatrixXd& X_S,
                     const Eigen::VectorXd& y_star,
                     const Eigen::VectorXd& alpha,
                     Eigen::VectorXd* grad = nullptr);

// Convex interpolation decoder: picks the k nearest training latents to
// y_star (ties by lowest index), minimizes g over the probability simplex
// by projected gradient with backtracking, and returns the combination
// x_hat = X_S alpha. Stops at gradient-mapping norm <= tol or 500
// iterations; on non-convergence the best iterate is returned with
// converged = false. Exactly mass-preserving on mass-preserving data.
KnnResult knn_decode(const DmModel& dm_model, const Eigen::MatrixXd& Y_train,
                     const Eigen::MatrixXd& X_train,
                     const Eigen::VectorXd& y_star, Eigen::Index k,
                     double tol = 1e-8);

// Linear projection baseline on column-centered data.
struct PodDecoder {
  Eigen::MatrixXd U_d;    // M x d leading left singular vectors
  Eigen::VectorXd mean;   // column mean of the training data
  Eigen::VectorXd svals;  // all singular values of the centered data
};

// Requires d at most the numeric rank of the centered training matrix.
PodDecoder pod_fit(const Eigen::MatrixXd& X_train, Eigen::Index d);

// Projects ambient columns onto the basis and restores the mean:
// X_hat = U_d U_d^T (X_star - mean 1^T) + mean 1^T.
Reconstruction pod_decode(const PodDecoder& model,
                          const Eigen::MatrixXd& X_star);

}  // namespace randsmap
