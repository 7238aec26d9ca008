// Random-feature families for the decoders: random Fourier features with a
// single Gaussian scale, the multi-scale variant that draws its scales from
// a uniform hyperprior, and randomly centered sigmoid ridge functions.
// Also provides the induced-kernel estimator and the closed-form kernels
// and concentration bounds they approximate.

#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace randsmap {

enum class FeatureKind { Rff, MsRff, Sigmoid };

struct FeatureMap {
  FeatureKind kind = FeatureKind::Rff;
  Eigen::Index d = 0;  // input dimension
  Eigen::Index P = 0;  // feature count (bias column excluded)
  Eigen::MatrixXd W;   // P x d frequencies or weights
  Eigen::VectorXd b;   // P phases or biases
  // MsRff only: the Q sampled scales, block q owning rows
  // [q P/Q, (q+1) P/Q).
  Eigen::VectorXd scales;
  // Sampling parameters; with kind and seed they regenerate W and b.
  double sigma_w = 0.0;
  double sigma_ub = 0.0;
  Eigen::Index Q = 0;
  double c = 0.0;
  std::uint64_t seed = 0;
};

// Fourier map: W rows i.i.d. N(0, sigma_w^2 I_d), phases U[0, 2 pi).
// Draw order: the P x d weight entries row by row, then the P phases.
FeatureMap sample_rff(Eigen::Index d, Eigen::Index P, double sigma_w,
                      std::uint64_t seed);

// Multi-scale Fourier map: Q scales sigma_q ~ U[0.001, sigma_ub) drawn
// first, then per scale P/Q weight rows N(0, sigma_q^2 I_d) followed by
// P/Q phases. Q must divide P.
FeatureMap sample_msrff(Eigen::Index d, Eigen::Index P, Eigen::Index Q,
                        double sigma_ub, std::uint64_t seed);

// Sigmoid map: weight rows U[-c, c)^d drawn first, then centers mu_k
// uniform in the per-component bounding box of the training embedding;
// biases b_k = -w_k . mu_k place each inflection point at mu_k.
FeatureMap sample_sigmoid(const Eigen::MatrixXd& Y_train, Eigen::Index P,
                          double c, std::uint64_t seed);

// Feature matrix for the d x m query block Y, one row per point: column 0
// is the constant 1 (output bias), column k >= 1 holds
// sqrt(2/P) cos(w_k . y + b_k) for the Fourier kinds and
// 1 / (1 + exp(-(w_k . y + b_k))) for the sigmoid kind.
Eigen::MatrixXd feature_matrix(const FeatureMap& map,
                               const Eigen::MatrixXd& Y);

// Gram matrix of the non-bias feature columns, m x m. For the Fourier
// kinds this is the Monte-Carlo estimate of the closed-form kernels below.
Eigen::MatrixXd induced_kernel(const FeatureMap& map,
                               const Eigen::MatrixXd& Y);

// Closed-form shift-invariant kernel exp(-sigma_w^2 ||y_i - y_j||^2 / 2)
// that the single-scale Fourier map approximates in expectation.
Eigen::MatrixXd gauss_shift_kernel(const Eigen::MatrixXd& Y, double sigma_w);

// Scale average (1/Q) sum_q exp(-sigma_q^2 ||y_i - y_j||^2 / 2) that the
// multi-scale map approximates conditional on its recorded scales.
Eigen::MatrixXd msrff_expected_kernel(const Eigen::MatrixXd& Y,
                                      const Eigen::VectorXd& scales);

// Matrix Bernstein tail bounds on E ||K_est - K_expected||_2 for n points:
// single-scale with the expected kernel's spectral norm, and multi-scale
// with c_max = max_q ||K_sigma_q||_2 over the per-scale kernels.
double rff_bernstein_bound(Eigen::Index n, Eigen::Index P, double norm_kbar);
double msrff_bernstein_bound(Eigen::Index n, Eigen::Index P, Eigen::Index Q,
                             double c_max);

}  // namespace randsmap
