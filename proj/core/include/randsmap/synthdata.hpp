// Synthetic benchmark generators: Swiss roll, 20-D S-curve, rotated images,
// and deterministic train/validation/test splits.
//
// Every generator is a pure function of its parameters and seed. The draw
// order per observation is documented next to each sampler so that streams
// stay reproducible.

#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "randsmap/dataset.hpp"
#include "randsmap/prng.hpp"

namespace randsmap {

// Noise-free Swiss roll surface point for parameters (theta, z):
//   x1 = (theta + 0.1 z) sin(theta) / 4
//   x2 = (theta + 0.1 z) cos(theta) / 4
//   x3 = z
Eigen::Vector3d swiss_roll_point(double theta, double z);

// Samples theta ~ U[pi, 4pi), z ~ U[-5, 5) per point, then adds independent
// N(0, sigma^2) noise to each of the three coordinates. Draw order per
// point: theta, z, eta1, eta2, eta3 (noise drawn even when sigma = 0).
// intrinsic rows: (theta, z).
DataSet gen_swiss_roll(std::size_t n, double noise_sigma, std::uint64_t seed);

// Noise-free 3-D S-curve point for parameters (theta, w):
//   z1 = sin(theta), z2 = w, z3 = sign(theta) (cos(theta) - 1)
Eigen::Vector3d scurve_point(double theta, double w);

// 20x3 matrix with orthonormal columns: the left singular vectors of a
// seeded standard Gaussian 20x3 matrix, each column sign-flipped so its
// largest-magnitude entry is positive.
Eigen::MatrixXd scurve_embedding(std::uint64_t seed);

// Samples theta ~ U[-3pi/2, 3pi/2), w ~ U[0, 1), adds N(0, sigma^2) noise to
// the three intermediate coordinates, then projects to 20 dimensions with
// scurve_embedding(seed). The embedding draws from stream 1 of the seed and
// the points from stream 0, in per-point order theta, w, eta1, eta2, eta3.
// intrinsic rows: (theta, w).
DataSet gen_scurve_20d(std::size_t n, double noise_sigma, std::uint64_t seed);

// Grayscale image, indexed (row, col).
using Image = Eigen::MatrixXd;

// Rotates the image content by theta radians about the image center using
// inverse-mapped bilinear interpolation with zero padding outside the
// support. No normalization is applied here.
Image rotate_image(const Image& base, double theta);

// n_angles rotations with theta_i = 2 pi i / n_angles, each normalized to
// unit total intensity and flattened column-wise (row index fastest).
// The seed is recorded in the metadata only; the angle grid is
// deterministic. intrinsic row: theta_i.
DataSet gen_rotated_images(const Image& base, std::size_t n_angles,
                           std::uint64_t seed);

// Deterministic asymmetric multi-ellipse phantom with intensities in [0, 1]
// and maximum exactly 1. Contains an off-axis L-shaped feature so that no
// rotation maps the image onto itself.
Image gen_phantom(std::size_t size);

struct SplitSpec {
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
};

struct Split {
  DataSet train, val, test;
};

// Disjoint uniformly random subsets determined solely by spec.seed (seeded
// Fisher-Yates permutation, then prefix slices). Counts may sum to less
// than N; the remainder is unused. Metadata and intrinsic columns follow
// their observations.
Split split(const DataSet& ds, const SplitSpec& spec);

}  // namespace randsmap
