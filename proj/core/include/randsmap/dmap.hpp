// Diffusion-Maps encoder: alpha-normalized Markov kernel on the training
// snapshots, spectral embedding through the symmetric conjugate of the
// transition matrix, and Nystrom out-of-sample extension.

#pragma once

#include <Eigen/Core>

namespace randsmap {

struct DmModel {
  // Training snapshots, one column per point; kept for the Nystrom kernel.
  Eigen::MatrixXd X_train;
  double epsilon1 = 0.0;  // kernel bandwidth, w1 * median pairwise distance
  double alpha = 0.0;     // density-normalization exponent in [0, 1]
  double w1 = 0.0;        // bandwidth multiplier
  Eigen::Index d = 0;     // embedding dimension
  // Leading nontrivial eigenvalues of the transition matrix, descending,
  // and the matching right eigenvectors (N x d, unit columns, sign fixed so
  // the largest-magnitude component is positive).
  Eigen::VectorXd xi;
  Eigen::MatrixXd V;
  Eigen::VectorXd deg1;   // row degrees of the raw kernel
  Eigen::VectorXd deg1a;  // row degrees of the alpha-normalized kernel
  // Set when the spectral gap below the retained block is degenerate
  // (xi_d and the next eigenvalue agree within 1e-12).
  bool gap_warning = false;
};

// Median of all N(N-1)/2 pairwise Euclidean distances between columns;
// the lower median for even counts. Throws std::invalid_argument for N < 2.
double median_pairwise_distance(const Eigen::MatrixXd& X);

// K_ij = exp(-||a_i - b_j||^2 / epsilon^2) for columns a_i of X_a and b_j
// of X_b. When X_a and X_b are the same object the result is explicitly
// symmetrized with a unit diagonal. Throws std::invalid_argument for
// epsilon <= 0 or mismatched row counts.
Eigen::MatrixXd gaussian_kernel(const Eigen::MatrixXd& X_a,
                                const Eigen::MatrixXd& X_b, double epsilon);

// Fits the embedding: epsilon1 = w1 * median pairwise distance, kernel
// K^(a) = D^-alpha K D^-alpha, transition matrix T = D_a^-1 K^(a),
// eigenpairs of T through the symmetric conjugate D_a^1/2 T D_a^-1/2, the
// trivial pair (eigenvalue 1, constant eigenvector) dropped, the next d
// pairs retained. Requires N >= d + 2 columns.
DmModel dm_fit(const Eigen::MatrixXd& X_train, double alpha, double w1,
               Eigen::Index d);

// Embedding coordinates of the training points, d x N with
// y_i = sqrt(N) * (xi_1 v_1i, ..., xi_d v_di). The sqrt(N) factor puts the
// eigenvectors at unit root-mean-square entries (the normalization under
// which the trivial mode is the constant function 1), so coordinate
// magnitudes do not shrink as the training set grows.
Eigen::MatrixXd dm_train_embedding(const DmModel& model);

// Nystrom extension: kernel row from each new point to the training
// points, alpha-normalized against the stored training degrees and the new
// point's own degree, row-normalized to transition probabilities, then
// projected onto the stored eigenvectors with the same sqrt(N) scaling as
// dm_train_embedding. Training points reproduce their training coordinates.
// Returns d x L for L query columns. Throws NumericalError when a query
// point is isolated (every kernel entry below 1e-300).
Eigen::MatrixXd dm_encode(const DmModel& model, const Eigen::MatrixXd& X_new);

}  // namespace randsmap
