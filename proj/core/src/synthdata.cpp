#include "randsmap/synthdata.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "randsmap/errors.hpp"

namespace randsmap {

namespace {

constexpr double kPi = std::numbers::pi;

// Flip each column so its largest-magnitude entry is positive; ties broken
// by the lowest row index.
void canonicalize_column_signs(Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index imax = 0;
    m.col(j).cwiseAbs().maxCoeff(&imax);
    if (m(imax, j) < 0) m.col(j) = -m.col(j);
  }
}

}  // namespace

Eigen::Vector3d swiss_roll_point(double theta, double z) {
  const double r = theta + 0.1 * z;
  return {r * std::sin(theta) / 4.0, r * std::cos(theta) / 4.0, z};
}

DataSet gen_swiss_roll(std::size_t n, double noise_sigma, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_swiss_roll: n must be positive");
  if (noise_sigma < 0)
    throw std::invalid_argument("gen_swiss_roll: noise_sigma must be >= 0");

  CounterRng rng(seed);
  DataSet ds;
  ds.X.resize(3, static_cast<Eigen::Index>(n));
  ds.intrinsic.resize(2, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < ds.X.cols(); ++i) {
    const double theta = rng.uniform(kPi, 4.0 * kPi);
    const double z = rng.uniform(-5.0, 5.0);
    Eigen::Vector3d x = swiss_roll_point(theta, z);
    for (int c = 0; c < 3; ++c) x[c] += noise_sigma * rng.normal();
    ds.X.col(i) = x;
    ds.intrinsic.col(i) << theta, z;
  }
  ds.mass_preserving = false;
  ds.meta = {{"generator", "swiss_roll"},
             {"n", n},
             {"noise_sigma", noise_sigma},
             {"seed", seed},
             {"theta_range", {kPi, 4.0 * kPi}},
             {"z_range", {-5.0, 5.0}}};
  return ds;
}

Eigen::Vector3d scurve_point(double theta, double w) {
  const double s = theta < 0 ? -1.0 : 1.0;
  return {std::sin(theta), w, s * (std::cos(theta) - 1.0)};
}

Eigen::MatrixXd scurve_embedding(std::uint64_t seed) {
  // Stream 1 of the seed; the point sampler uses stream 0.
  CounterRng rng(seed, 1);
  Eigen::MatrixXd g(20, 3);
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU);
  Eigen::MatrixXd r = svd.matrixU();
  canonicalize_column_signs(r);
  return r;
}

DataSet gen_scurve_20d(std::size_t n, double noise_sigma, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_scurve_20d: n must be positive");
  if (noise_sigma < 0)
    throw std::invalid_argument("gen_scurve_20d: noise_sigma must be >= 0");

  const Eigen::MatrixXd r = scurve_embedding(seed);
  CounterRng rng(seed);

  DataSet ds;
  ds.X.resize(20, static_cast<Eigen::Index>(n));
  ds.intrinsic.resize(2, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < ds.X.cols(); ++i) {
    const double theta = rng.uniform(-1.5 * kPi, 1.5 * kPi);
    const double w = rng.uniform(0.0, 1.0);
    Eigen::Vector3d z = scurve_point(theta, w);
    for (int c = 0; c < 3; ++c) z[c] += noise_sigma * rng.normal();
    ds.X.col(i) = r * z;
    ds.intrinsic.col(i) << theta, w;
  }
  ds.mass_preserving = false;
  ds.meta = {{"generator", "scurve_20d"},
             {"n", n},
             {"noise_sigma", noise_sigma},
             {"seed", seed}};
  return ds;
}

Image rotate_image(const Image& base, double theta) {
  const Eigen::Index h = base.rows();
  const Eigen::Index w = base.cols();
  const double cr = 0.5 * static_cast<double>(h - 1);
  const double cc = 0.5 * static_cast<double>(w - 1);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);

  Image out = Image::Zero(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      // Inverse map: rotate the output pixel back into the source frame.
      const double dr = static_cast<double>(r) - cr;
      const double dc = static_cast<double>(c) - cc;
      const double sr = cr + ct * dr + st * dc;
      const double sc = cc - st * dr + ct * dc;
      const auto r0 = static_cast<Eigen::Index>(std::floor(sr));
      const auto c0 = static_cast<Eigen::Index>(std::floor(sc));
      const double fr = sr - static_cast<double>(r0);
      const double fc = sc - static_cast<double>(c0);
      auto sample = [&](Eigen::Index rr, Eigen::Index cc2) -> double {
        if (rr < 0 || rr >= h || cc2 < 0 || cc2 >= w) return 0.0;
        return base(rr, cc2);
      };
      out(r, c) = (1 - fr) * (1 - fc) * sample(r0, c0) +
                  (1 - fr) * fc * sample(r0, c0 + 1) +
                  fr * (1 - fc) * sample(r0 + 1, c0) +
                  fr * fc * sample(r0 + 1, c0 + 1);
    }
  }
  return out;
}

DataSet gen_rotated_images(const Image& base, std::size_t n_angles,
                           std::uint64_t seed) {
  if (n_angles < 1)
    throw std::invalid_argument("gen_rotated_images: n_angles must be positive");
  if (base.size() == 0 || (base.array() < 0).any())
    throw std::invalid_argument("gen_rotated_images: base must be nonnegative");
  if (base.sum() <= 0)
    throw std::invalid_argument("gen_rotated_images: base image is all zero");

  const Eigen::Index m = base.size();
  DataSet ds;
  ds.X.resize(m, static_cast<Eigen::Index>(n_angles));
  ds.intrinsic.resize(1, static_cast<Eigen::Index>(n_angles));
  for (Eigen::Index i = 0; i < ds.X.cols(); ++i) {
    const double theta =
        2.0 * kPi * static_cast<double>(i) / static_cast<double>(n_angles);
    Image rot = rotate_image(base, theta);
    const double total = rot.sum();
    if (total <= 0)
      throw NumericalError("gen_rotated_images: rotated image lost all mass");
    rot /= total;
    // Column-major flatten: row index fastest.
    ds.X.col(i) = Eigen::Map<const Eigen::VectorXd>(rot.data(), rot.size());
    ds.intrinsic(0, i) = theta;
  }
  ds.mass_preserving = true;
  ds.meta = {{"generator", "rotated_images"},
             {"height", base.rows()},
             {"width", base.cols()},
             {"n_angles", n_angles},
             {"seed", seed}};
  return ds;
}

Image gen_phantom(std::size_t size) {
  if (size < 16)
    throw std::invalid_argument("gen_phantom: size must be at least 16");
  const auto s = static_cast<double>(size);
  Image img = Image::Zero(static_cast<Eigen::Index>(size),
                          static_cast<Eigen::Index>(size));

  struct Ellipse {
    double cr, cc, ar, ac, angle, value;
  };
  // Centers/axes in units of the image size. The small ellipses sit off the
  // diagonal axes and the bar below is L-shaped, so no rotation by any angle
  // reproduces the image.
  const Ellipse ellipses[] = {
      {0.50, 0.48, 0.40, 0.30, 0.26, 0.50},
      {0.42, 0.58, 0.14, 0.09, -0.60, 0.25},
      {0.64, 0.38, 0.08, 0.12, 0.90, 0.20},
      {0.33, 0.36, 0.05, 0.05, 0.00, 0.30},
  };
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const double y = static_cast<double>(r) / s;
      const double x = static_cast<double>(c) / s;
      double v = 0.0;
      for (const Ellipse& e : ellipses) {
        const double dy = y - e.cr;
        const double dx = x - e.cc;
        const double u = std::cos(e.angle) * dy + std::sin(e.angle) * dx;
        const double w = -std::sin(e.angle) * dy + std::cos(e.angle) * dx;
        const double q = (u / e.ar) * (u / e.ar) + (w / e.ac) * (w / e.ac);
        if (q <= 1.0) v += e.value;
      }
      // L-shaped corner feature in the lower-right region.
      const bool in_vertical = y >= 0.68 && y <= 0.84 && x >= 0.70 && x <= 0.74;
      const bool in_horizontal =
          y >= 0.80 && y <= 0.84 && x >= 0.70 && x <= 0.82;
      if (in_vertical || in_horizontal) v += 0.45;
      img(r, c) = v;
    }
  }
  img /= img.maxCoeff();
  return img;
}

Split split(const DataSet& ds, const SplitSpec& spec) {
  const auto n = static_cast<std::size_t>(ds.X.cols());
  if (spec.n_train + spec.n_val + spec.n_test > n)
    throw std::invalid_argument("split: counts exceed the number of columns");

  CounterRng rng(spec.seed);
  const std::vector<std::size_t> perm = random_permutation(n, rng);

  auto take = [&](std::size_t offset, std::size_t count) {
    DataSet part;
    part.X.resize(ds.X.rows(), static_cast<Eigen::Index>(count));
    if (ds.intrinsic.size() > 0)
      part.intrinsic.resize(ds.intrinsic.rows(),
                            static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
      const auto src = static_cast<Eigen::Index>(perm[offset + i]);
      part.X.col(static_cast<Eigen::Index>(i)) = ds.X.col(src);
      if (ds.intrinsic.size() > 0)
        part.intrinsic.col(static_cast<Eigen::Index>(i)) = ds.intrinsic.col(src);
    }
    part.mass_preserving = ds.mass_preserving;
    part.meta = ds.meta;
    part.meta["split_seed"] = spec.seed;
    return part;
  };

  Split out;
  out.train = take(0, spec.n_train);
  out.train.meta["split"] = "train";
  out.val = take(spec.n_train, spec.n_val);
  out.val.meta["split"] = "val";
  out.test = take(spec.n_train + spec.n_val, spec.n_test);
  out.test.meta["split"] = "test";
  return out;
}

}  // namespace randsmap
