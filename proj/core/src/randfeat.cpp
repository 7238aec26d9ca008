#include "randsmap/randfeat.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "randsmap/errors.hpp"
#include "randsmap/prng.hpp"

namespace randsmap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_query(const FeatureMap& map, const Eigen::MatrixXd& Y) {
  if (Y.rows() != map.d) {
    throw std::invalid_argument("feature_matrix: query dimension mismatch");
  }
  if (!Y.allFinite()) {
    throw NumericalError("feature_matrix: non-finite query");
  }
}

}  // namespace

FeatureMap sample_rff(Eigen::Index d, Eigen::Index P, double sigma_w,
                      std::uint64_t seed) {
  if (d < 1 || P < 1) throw std::invalid_argument("sample_rff: need d, P >= 1");
  if (!(sigma_w > 0.0)) {
    throw std::invalid_argument("sample_rff: sigma_w must be positive");
  }
  FeatureMap map;
  map.kind = FeatureKind::Rff;
  map.d = d;
  map.P = P;
  map.sigma_w = sigma_w;
  map.seed = seed;
  CounterRng rng(seed);
  map.W.resize(P, d);
  for (Eigen::Index k = 0; k < P; ++k) {
    for (Eigen::Index j = 0; j < d; ++j) map.W(k, j) = rng.normal(0.0, sigma_w);
  }
  map.b.resize(P);
  for (Eigen::Index k = 0; k < P; ++k) map.b[k] = rng.uniform(0.0, kTwoPi);
  return map;
}

FeatureMap sample_msrff(Eigen::Index d, Eigen::Index P, Eigen::Index Q,
                        double sigma_ub, std::uint64_t seed) {
  if (d < 1 || P < 1 || Q < 1) {
    throw std::invalid_argument("sample_msrff: need d, P, Q >= 1");
  }
  if (P % Q != 0) {
    throw std::invalid_argument("sample_msrff: Q must divide P");
  }
  if (!(sigma_ub > 0.001)) {
    throw std::invalid_argument("sample_msrff: sigma_ub must exceed 0.001");
  }
  FeatureMap map;
  map.kind = FeatureKind::MsRff;
  map.d = d;
  map.P = P;
  map.Q = Q;
  map.sigma_ub = sigma_ub;
  map.seed = seed;
  CounterRng rng(seed);
  map.scales.resize(Q);
  for (Eigen::Index q = 0; q < Q; ++q) {
    map.scales[q] = rng.uniform(0.001, sigma_ub);
  }
  const Eigen::Index L = P / Q;
  map.W.resize(P, d);
  map.b.resize(P);
  for (Eigen::Index q = 0; q < Q; ++q) {
    for (Eigen::Index l = 0; l < L; ++l) {
      for (Eigen::Index j = 0; j < d; ++j) {
        map.W(q * L + l, j) = rng.normal(0.0, map.scales[q]);
      }
    }
    for (Eigen::Index l = 0; l < L; ++l) {
      map.b[q * L + l] = rng.uniform(0.0, kTwoPi);
    }
  }
  return map;
}

FeatureMap sample_sigmoid(const Eigen::MatrixXd& Y_train, Eigen::Index P,
                          double c, std::uint64_t seed) {
  if (P < 1) throw std::invalid_argument("sample_sigmoid: need P >= 1");
  if (!(c > 0.0)) {
    throw std::invalid_argument("sample_sigmoid: c must be positive");
  }
  if (Y_train.cols() < 1 || Y_train.rows() < 1) {
    throw std::invalid_argument("sample_sigmoid: empty training embedding");
  }
  const Eigen::Index d = Y_train.rows();
  const Eigen::VectorXd lo = Y_train.rowwise().minCoeff();
  const Eigen::VectorXd hi = Y_train.rowwise().maxCoeff();
  if ((hi - lo).maxCoeff() <= 0.0) {
    throw std::invalid_argument(
        "sample_sigmoid: degenerate training bounding box");
  }
  FeatureMap map;
  map.kind = FeatureKind::Sigmoid;
  map.d = d;
  map.P = P;
  map.c = c;
  map.seed = seed;
  CounterRng rng(seed);
  map.W.resize(P, d);
  for (Eigen::Index k = 0; k < P; ++k) {
    for (Eigen::Index j = 0; j < d; ++j) map.W(k, j) = rng.uniform(-c, c);
  }
  map.b.resize(P);
  Eigen::VectorXd center(d);
  for (Eigen::Index k = 0; k < P; ++k) {
    for (Eigen::Index j = 0; j < d; ++j) {
      center[j] = rng.uniform(lo[j], hi[j]);
    }
    map.b[k] = -map.W.row(k).dot(center);
  }
  return map;
}

Eigen::MatrixXd feature_matrix(const FeatureMap& map,
                               const Eigen::MatrixXd& Y) {
  check_query(map, Y);
  const Eigen::Index m = Y.cols();
  Eigen::MatrixXd phi(m, map.P + 1);
  phi.col(0).setOnes();
  Eigen::MatrixXd z = (map.W * Y).transpose();  // m x P, entries w_k . y
  z.rowwise() += map.b.transpose();
  if (map.kind == FeatureKind::Sigmoid) {
    phi.rightCols(map.P) = (1.0 + (-z.array()).exp()).inverse();
  } else {
    const double amp = std::sqrt(2.0 / static_cast<double>(map.P));
    phi.rightCols(map.P) = amp * z.array().cos();
  }
  return phi;
}

Eigen::MatrixXd induced_kernel(const FeatureMap& map,
                               const Eigen::MatrixXd& Y) {
  const Eigen::MatrixXd phi = feature_matrix(map, Y);
  const auto tilde = phi.rightCols(map.P);
  Eigen::MatrixXd K = tilde * tilde.transpose();
  return 0.5 * (K + K.transpose()).eval();
}

Eigen::MatrixXd gauss_shift_kernel(const Eigen::MatrixXd& Y, double sigma_w) {
  const Eigen::Index m = Y.cols();
  Eigen::MatrixXd K(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double sq = (Y.col(i) - Y.col(j)).squaredNorm();
      K(i, j) = K(j, i) = std::exp(-0.5 * sigma_w * sigma_w * sq);
    }
  }
  return K;
}

Eigen::MatrixXd msrff_expected_kernel(const Eigen::MatrixXd& Y,
                                      const Eigen::VectorXd& scales) {
  if (scales.size() < 1) {
    throw std::invalid_argument("msrff_expected_kernel: no scales");
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(Y.cols(), Y.cols());
  for (Eigen::Index q = 0; q < scales.size(); ++q) {
    K += gauss_shift_kernel(Y, scales[q]);
  }
  return K / static_cast<double>(scales.size());
}

double rff_bernstein_bound(Eigen::Index n, Eigen::Index P, double norm_kbar) {
  const double nn = static_cast<double>(n);
  const double pp = static_cast<double>(P);
  const double log2n = std::log(2.0 * nn);
  return 2.0 * std::sqrt(nn * norm_kbar * log2n / pp) +
         4.0 * nn * log2n / (3.0 * pp);
}

double msrff_bernstein_bound(Eigen::Index n, Eigen::Index P, Eigen::Index Q,
                             double c_max) {
  const double nn = static_cast<double>(n);
  const double pp = static_cast<double>(P);
  const double qq = static_cast<double>(Q);
  const double log2n = std::log(2.0 * nn);
  return 2.0 * std::sqrt(nn * c_max * qq * log2n / pp) +
         4.0 * nn * qq * log2n / (3.0 * pp);
}

}  // namespace randsmap
