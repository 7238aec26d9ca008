#include "randsmap/pdesolvers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "randsmap/errors.hpp"
#include "randsmap/prng.hpp"

namespace randsmap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_density_range(double rho, double rho_max) {
  const double tol = 1e-9 * rho_max;
  if (!(rho >= -tol && rho <= rho_max + tol)) {
    throw NumericalError("density outside [0, rho_max]: " +
                         std::to_string(rho));
  }
}

// Van Leer slope: harmonic mean of the one-sided differences, zero at
// extrema and sign changes.
double van_leer_slope(double a, double b) {
  const double ab = a * b;
  return ab > 0.0 ? 2.0 * ab / (a + b) : 0.0;
}

// Sorted distinct step indices drawn uniformly from {0, ..., n_steps}.
std::vector<std::size_t> draw_snapshot_steps(CounterRng& rng,
                                             std::size_t n_steps,
                                             std::size_t count) {
  std::set<std::size_t> picked;
  while (picked.size() < count) {
    picked.insert(static_cast<std::size_t>(rng.below(n_steps + 1)));
  }
  return {picked.begin(), picked.end()};
}

}  // namespace

double lwr_flux(double rho, double v_max, double rho_max) {
  return v_max * rho * (1.0 - rho / rho_max);
}

double lwr_godunov_flux(double rho_l, double rho_r, double v_max,
                        double rho_max) {
  check_density_range(rho_l, rho_max);
  check_density_range(rho_r, rho_max);
  const double f_l = lwr_flux(rho_l, v_max, rho_max);
  const double f_r = lwr_flux(rho_r, v_max, rho_max);
  if (rho_l <= rho_r) return std::min(f_l, f_r);
  const double rho_c = 0.5 * rho_max;
  if (rho_r <= rho_c && rho_c <= rho_l) {
    return lwr_flux(rho_c, v_max, rho_max);
  }
  return std::max(f_l, f_r);
}

double lwr_roe_flux(double rho_l, double rho_r, double v_max,
                    double rho_max) {
  check_density_range(rho_l, rho_max);
  check_density_range(rho_r, rho_max);
  const double f_l = lwr_flux(rho_l, v_max, rho_max);
  const double f_r = lwr_flux(rho_r, v_max, rho_max);
  const double lam_l = v_max * (1.0 - 2.0 * rho_l / rho_max);
  const double lam_r = v_max * (1.0 - 2.0 * rho_r / rho_max);
  const double a =
      rho_l == rho_r ? lam_l : (f_l - f_r) / (rho_l - rho_r);
  // Harten entropy fix: widen |a| inside a transonic rarefaction fan so the
  // flux does not lock onto an expansion shock.
  double abs_a = std::abs(a);
  const double delta = std::max({0.0, a - lam_l, lam_r - a});
  if (abs_a < delta) abs_a = 0.5 * (a * a / delta + delta);
  return 0.5 * (f_l + f_r) - 0.5 * abs_a * (rho_r - rho_l);
}

Eigen::VectorXd lwr_step(const Eigen::VectorXd& rho, const Lwr1dConfig& cfg) {
  const auto m = static_cast<std::size_t>(rho.size());
  if (m < 2) throw std::invalid_argument("lwr_step: need at least 2 cells");
  if (!(cfg.rho_max > 0.0) || !(cfg.dt > 0.0) || !(cfg.x_hi > cfg.x_lo)) {
    throw std::invalid_argument("lwr_step: invalid configuration");
  }
  if (!rho.allFinite()) throw NumericalError("lwr_step: non-finite state");
  const double dx = (cfg.x_hi - cfg.x_lo) / static_cast<double>(m);
  // Max characteristic speed of the concave flux is v_max, at rho = 0.
  if (cfg.v_max * cfg.dt / dx > 0.9 + 1e-12) {
    throw StabilityError("lwr_step: CFL number exceeds 0.9");
  }

  Eigen::VectorXd slope(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t im1 = (i + m - 1) % m;
    const std::size_t ip1 = (i + 1) % m;
    slope[i] = van_leer_slope(rho[i] - rho[im1], rho[ip1] - rho[i]);
  }

  // face_flux[i] is the flux through the interface between cells i and i+1.
  Eigen::VectorXd face_flux(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t ip1 = (i + 1) % m;
    const double left = rho[i] + 0.5 * slope[i];
    const double right = rho[ip1] - 0.5 * slope[ip1];
    face_flux[i] = cfg.flux == LwrFlux::Roe
                       ? lwr_roe_flux(left, right, cfg.v_max, cfg.rho_max)
                       : lwr_godunov_flux(left, right, cfg.v_max,
                                          cfg.rho_max);
  }

  const double c = cfg.dt / dx;
  Eigen::VectorXd out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t im1 = (i + m - 1) % m;
    out[i] = rho[i] - c * (face_flux[i] - face_flux[im1]);
  }
  return out;
}

DataSet lwr_generate(const Lwr1dConfig& cfg, std::size_t n_traj,
                     std::size_t snaps_per_traj) {
  if (n_traj == 0 || snaps_per_traj == 0) {
    throw std::invalid_argument("lwr_generate: need n_traj, snaps >= 1");
  }
  if (cfg.m_cells < 2) {
    throw std::invalid_argument("lwr_generate: need at least 2 cells");
  }
  if (!(cfg.t_end > 0.0) || !(cfg.dt > 0.0)) {
    throw std::invalid_argument("lwr_generate: need positive dt, t_end");
  }
  const auto n_steps =
      static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt));
  if (snaps_per_traj > n_steps + 1) {
    throw std::invalid_argument(
        "lwr_generate: more snapshots than time steps");
  }

  const auto m = cfg.m_cells;
  const double dx = (cfg.x_hi - cfg.x_lo) / static_cast<double>(m);
  const std::size_t n_cols = n_traj * snaps_per_traj;

  DataSet ds;
  ds.X.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n_cols));
  ds.intrinsic.resize(2, static_cast<Eigen::Index>(n_cols));
  ds.mass_preserving = true;

  for (std::size_t t = 0; t < n_traj; ++t) {
    CounterRng rng(cfg.seed, t);
    const double a = rng.uniform(0.5, 1.5);
    const double w = rng.uniform(0.2, 0.8);
    const double x_c = rng.uniform(-3.0, 3.0);

    Eigen::VectorXd rho(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double x = cfg.x_lo + (static_cast<double>(i) + 0.5) * dx;
      const double bump = a * std::exp(-(x - x_c) * (x - x_c) / (2 * w * w));
      // The noise draw happens even at sigma = 0 so the stream layout does
      // not depend on the noise level.
      rho[i] = std::max(0.0, bump + cfg.noise_sigma * rng.normal());
    }
    const double total = rho.sum();
    if (!(total > 0.0)) {
      throw NumericalError("lwr_generate: initial condition has no mass");
    }
    rho /= total;

    const auto steps = draw_snapshot_steps(rng, n_steps, snaps_per_traj);
    std::size_t next = 0;
    std::size_t col = t * snaps_per_traj;
    if (steps[next] == 0) {
      ds.X.col(static_cast<Eigen::Index>(col)) = rho;
      ds.intrinsic(0, static_cast<Eigen::Index>(col)) =
          static_cast<double>(t);
      ds.intrinsic(1, static_cast<Eigen::Index>(col)) = 0.0;
      ++next;
      ++col;
    }
    for (std::size_t k = 1; k <= steps.back() && next < steps.size(); ++k) {
      rho = lwr_step(rho, cfg);
      if (k == steps[next]) {
        ds.X.col(static_cast<Eigen::Index>(col)) = rho;
        ds.intrinsic(0, static_cast<Eigen::Index>(col)) =
            static_cast<double>(t);
        ds.intrinsic(1, static_cast<Eigen::Index>(col)) =
            static_cast<double>(k) * cfg.dt;
        ++next;
        ++col;
      }
    }
  }

  ds.meta = {{"generator", "lwr1d"},
             {"m_cells", cfg.m_cells},
             {"x_lo", cfg.x_lo},
             {"x_hi", cfg.x_hi},
             {"v_max", cfg.v_max},
             {"rho_max", cfg.rho_max},
             {"dt", cfg.dt},
             {"t_end", cfg.t_end},
             {"noise_sigma", cfg.noise_sigma},
             {"seed", cfg.seed},
             {"flux", cfg.flux == LwrFlux::Roe ? "roe" : "godunov"},
             {"n_traj", n_traj},
             {"snaps_per_traj", snaps_per_traj}};
  return ds;
}

namespace {

struct HughesGrid {
  std::size_t nx, ny;
  double dx, dy;
  // true where the cell center falls inside the obstacle rectangle.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> obs;
};

HughesGrid make_grid(const Hughes2dConfig& cfg) {
  if (cfg.nx < 2 || cfg.ny < 2) {
    throw std::invalid_argument("hughes: need at least a 2x2 grid");
  }
  if (!(cfg.x_hi > cfg.x_lo) || !(cfg.y_hi > cfg.y_lo)) {
    throw std::invalid_argument("hughes: empty domain");
  }
  HughesGrid g;
  g.nx = cfg.nx;
  g.ny = cfg.ny;
  g.dx = (cfg.x_hi - cfg.x_lo) / static_cast<double>(cfg.nx);
  g.dy = (cfg.y_hi - cfg.y_lo) / static_cast<double>(cfg.ny);
  // The sweeping update below assumes square cells.
  if (std::abs(g.dx - g.dy) > 1e-12 * g.dx) {
    throw std::invalid_argument("hughes: grid cells must be square");
  }
  g.obs.setConstant(static_cast<Eigen::Index>(g.nx),
                    static_cast<Eigen::Index>(g.ny), false);
  const bool have_obstacle =
      cfg.obs_x1 > cfg.obs_x0 && cfg.obs_y1 > cfg.obs_y0;
  if (have_obstacle) {
    if (!(cfg.obs_x0 > cfg.x_lo && cfg.obs_x1 < cfg.x_hi &&
          cfg.obs_y0 > cfg.y_lo && cfg.obs_y1 < cfg.y_hi)) {
      throw std::invalid_argument(
          "hughes: obstacle must lie strictly inside the domain");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double x = cfg.x_lo + (static_cast<double>(i) + 0.5) * g.dx;
      if (x < cfg.obs_x0 || x > cfg.obs_x1) continue;
      for (std::size_t j = 0; j < g.ny; ++j) {
        const double y = cfg.y_lo + (static_cast<double>(j) + 0.5) * g.dy;
        if (y < cfg.obs_y0 || y > cfg.obs_y1) continue;
        g.obs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            true;
        ++hits;
      }
    }
    if (hits == 0) {
      throw std::invalid_argument(
          "hughes: obstacle covers no cell centers");
    }
  }
  return g;
}

void check_field_dims(const Eigen::MatrixXd& f, const HughesGrid& g,
                      const char* what) {
  if (f.rows() != static_cast<Eigen::Index>(g.nx) ||
      f.cols() != static_cast<Eigen::Index>(g.ny)) {
    throw std::invalid_argument(std::string("hughes: ") + what +
                                " has wrong dimensions");
  }
}

}  // namespace

Eigen::MatrixXd hughes_eikonal(const Eigen::MatrixXd& rho,
                               const Hughes2dConfig& cfg) {
  const HughesGrid g = make_grid(cfg);
  check_field_dims(rho, g, "density");
  if (!rho.allFinite()) {
    throw NumericalError("hughes_eikonal: non-finite density");
  }
  const auto nx = static_cast<Eigen::Index>(g.nx);
  const auto ny = static_cast<Eigen::Index>(g.ny);
  const double h = g.dx;

  // Slowness 1 / max(f(rho), eps); the floor keeps jammed cells finite.
  Eigen::MatrixXd slow(nx, ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j) {
      const double f = cfg.v_max * (1.0 - rho(i, j) / cfg.rho_max);
      slow(i, j) = 1.0 / std::max(f, cfg.eps_speed);
    }
  }

  Eigen::MatrixXd phi = Eigen::MatrixXd::Constant(nx, ny, kInf);
  // Walking target: the right edge. Pin the last column at the distance
  // from the cell center to the edge at local slowness, so phi extrapolates
  // to zero on the edge itself.
  for (Eigen::Index j = 0; j < ny; ++j) {
    if (!g.obs(nx - 1, j)) phi(nx - 1, j) = slow(nx - 1, j) * 0.5 * h;
  }

  const auto neighbor = [&](Eigen::Index i, Eigen::Index j) -> double {
    if (i < 0 || i >= nx || j < 0 || j >= ny) return kInf;
    return phi(i, j);
  };
  const auto update_cell = [&](Eigen::Index i, Eigen::Index j) -> double {
    if (g.obs(i, j) || i == nx - 1) return 0.0;
    const double a = std::min(neighbor(i - 1, j), neighbor(i + 1, j));
    const double b = std::min(neighbor(i, j - 1), neighbor(i, j + 1));
    if (std::min(a, b) == kInf) return 0.0;
    const double r = slow(i, j);
    const double cand =
        std::abs(a - b) >= r * h
            ? std::min(a, b) + r * h
            : 0.5 * (a + b + std::sqrt(2 * r * r * h * h -
                                       (a - b) * (a - b)));
    if (cand < phi(i, j)) {
      const double delta = std::isfinite(phi(i, j)) ? phi(i, j) - cand : kInf;
      phi(i, j) = cand;
      return delta;
    }
    return 0.0;
  };

  const std::size_t max_passes = 10000;
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    double max_delta = 0.0;
    for (int sweep = 0; sweep < 4; ++sweep) {
      const bool i_up = sweep < 2;
      const bool j_up = sweep % 2 == 0;
      for (Eigen::Index ii = 0; ii < nx; ++ii) {
        const Eigen::Index i = i_up ? ii : nx - 1 - ii;
        for (Eigen::Index jj = 0; jj < ny; ++jj) {
          const Eigen::Index j = j_up ? jj : ny - 1 - jj;
          max_delta = std::max(max_delta, update_cell(i, j));
        }
      }
    }
    if (max_delta < cfg.eikonal_tol) return phi;
  }
  throw NumericalError("hughes_eikonal: fast sweeping did not converge");
}

Eigen::MatrixXd hughes_step(const Eigen::MatrixXd& rho,
                            const Eigen::MatrixXd& phi,
                            const Hughes2dConfig& cfg) {
  const HughesGrid g = make_grid(cfg);
  check_field_dims(rho, g, "density");
  check_field_dims(phi, g, "potential");
  if (!rho.allFinite()) {
    throw NumericalError("hughes_step: non-finite density");
  }
  if (cfg.v_max * cfg.dt / g.dx > 0.45 + 1e-12 ||
      cfg.v_max * cfg.dt / g.dy > 0.45 + 1e-12) {
    throw StabilityError("hughes_step: CFL number exceeds 0.45");
  }
  const auto nx = static_cast<Eigen::Index>(g.nx);
  const auto ny = static_cast<Eigen::Index>(g.ny);

  // Cell-centered unit descent directions of phi. Neighbors are usable only
  // when they exist, are not obstacle cells, and hold a finite potential;
  // with one usable side the difference is one-sided, with none the cell
  // does not move.
  Eigen::MatrixXd dirx = Eigen::MatrixXd::Zero(nx, ny);
  Eigen::MatrixXd diry = Eigen::MatrixXd::Zero(nx, ny);
  const auto usable = [&](Eigen::Index i, Eigen::Index j) {
    return i >= 0 && i < nx && j >= 0 && j < ny && !g.obs(i, j) &&
           std::isfinite(phi(i, j));
  };
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j) {
      if (g.obs(i, j) || !std::isfinite(phi(i, j))) continue;
      const bool w = usable(i - 1, j), e = usable(i + 1, j);
      const bool s = usable(i, j - 1), n = usable(i, j + 1);
      double gx = 0.0, gy = 0.0;
      if (w && e) {
        gx = (phi(i + 1, j) - phi(i - 1, j)) / (2 * g.dx);
      } else if (e) {
        gx = (phi(i + 1, j) - phi(i, j)) / g.dx;
      } else if (w) {
        gx = (phi(i, j) - phi(i - 1, j)) / g.dx;
      }
      if (s && n) {
        gy = (phi(i, j + 1) - phi(i, j - 1)) / (2 * g.dy);
      } else if (n) {
        gy = (phi(i, j + 1) - phi(i, j)) / g.dy;
      } else if (s) {
        gy = (phi(i, j) - phi(i, j - 1)) / g.dy;
      }
      const double norm = std::hypot(gx, gy);
      if (norm > 0.0) {
        dirx(i, j) = -gx / norm;
        diry(i, j) = -gy / norm;
      }
    }
  }

  // Signed upwind flux through a face whose outward speed factor is theta:
  // for theta < 0 the Riemann problem is the mirror image.
  const auto face_flux = [&](double theta, double rho_l,
                             double rho_r) -> double {
    if (theta == 0.0) return 0.0;
    return theta >= 0.0
               ? theta * lwr_godunov_flux(rho_l, rho_r, cfg.v_max,
                                          cfg.rho_max)
               : theta * lwr_godunov_flux(rho_r, rho_l, cfg.v_max,
                                          cfg.rho_max);
  };

  // fx(i, j): flux through the face between cells (i, j) and (i+1 mod nx, j);
  // the transport is periodic across the x seam.
  Eigen::MatrixXd fx = Eigen::MatrixXd::Zero(nx, ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    const Eigen::Index ip1 = (i + 1) % nx;
    for (Eigen::Index j = 0; j < ny; ++j) {
      if (g.obs(i, j) || g.obs(ip1, j)) continue;
      const double theta = 0.5 * (dirx(i, j) + dirx(ip1, j));
      fx(i, j) = face_flux(theta, rho(i, j), rho(ip1, j));
    }
  }
  // fy(i, j): flux through the face between cells (i, j) and (i, j+1);
  // the top and bottom walls carry no flux.
  Eigen::MatrixXd fy = Eigen::MatrixXd::Zero(nx, ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j + 1 < ny; ++j) {
      if (g.obs(i, j) || g.obs(i, j + 1)) continue;
      const double theta = 0.5 * (diry(i, j) + diry(i, j + 1));
      fy(i, j) = face_flux(theta, rho(i, j), rho(i, j + 1));
    }
  }

  const double cx = cfg.dt / g.dx;
  const double cy = cfg.dt / g.dy;
  Eigen::MatrixXd out(nx, ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    const Eigen::Index im1 = (i + nx - 1) % nx;
    for (Eigen::Index j = 0; j < ny; ++j) {
      const double fy_below = j > 0 ? fy(i, j - 1) : 0.0;
      out(i, j) = rho(i, j) - cx * (fx(i, j) - fx(im1, j)) -
                  cy * (fy(i, j) - fy_below);
    }
  }
  return out;
}

DataSet hughes_generate(const Hughes2dConfig& cfg, std::size_t n_traj,
                        std::size_t snaps_per_traj) {
  if (n_traj == 0 || snaps_per_traj == 0) {
    throw std::invalid_argument("hughes_generate: need n_traj, snaps >= 1");
  }
  if (!(cfg.t_end > 0.0) || !(cfg.dt > 0.0)) {
    throw std::invalid_argument("hughes_generate: need positive dt, t_end");
  }
  const HughesGrid g = make_grid(cfg);
  const auto n_steps =
      static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt));
  if (snaps_per_traj > n_steps + 1) {
    throw std::invalid_argument(
        "hughes_generate: more snapshots than time steps");
  }
  const auto nx = static_cast<Eigen::Index>(g.nx);
  const auto ny = static_cast<Eigen::Index>(g.ny);
  const std::size_t m = g.nx * g.ny;
  const std::size_t n_cols = n_traj * snaps_per_traj;

  DataSet ds;
  ds.X.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n_cols));
  ds.intrinsic.resize(2, static_cast<Eigen::Index>(n_cols));
  ds.mass_preserving = true;

  for (std::size_t t = 0; t < n_traj; ++t) {
    CounterRng rng(cfg.seed, t);
    const double a = rng.uniform(1.2, 2.1);
    const double w_x = rng.uniform(1.6, 2.0);
    const double w_y = rng.uniform(1.6, 2.0);
    const double x_c = rng.uniform(1.5, 3.5);
    const double y_c = rng.uniform(1.5, 3.5);

    Eigen::MatrixXd rho(nx, ny);
    for (Eigen::Index i = 0; i < nx; ++i) {
      const double x = cfg.x_lo + (static_cast<double>(i) + 0.5) * g.dx;
      for (Eigen::Index j = 0; j < ny; ++j) {
        const double y = cfg.y_lo + (static_cast<double>(j) + 0.5) * g.dy;
        rho(i, j) = g.obs(i, j)
                        ? 0.0
                        : a * std::exp(-(x - x_c) * (x - x_c) /
                                           (2 * w_x * w_x) -
                                       (y - y_c) * (y - y_c) /
                                           (2 * w_y * w_y));
      }
    }
    const double total = rho.sum();
    if (!(total > 0.0)) {
      throw NumericalError("hughes_generate: initial condition has no mass");
    }
    rho /= total;

    const auto steps = draw_snapshot_steps(rng, n_steps, snaps_per_traj);
    std::size_t next = 0;
    std::size_t col = t * snaps_per_traj;
    const auto record = [&](std::size_t k) {
      ds.X.col(static_cast<Eigen::Index>(col)) =
          Eigen::Map<const Eigen::VectorXd>(rho.data(),
                                            static_cast<Eigen::Index>(m));
      ds.intrinsic(0, static_cast<Eigen::Index>(col)) =
          static_cast<double>(t);
      ds.intrinsic(1, static_cast<Eigen::Index>(col)) =
          static_cast<double>(k) * cfg.dt;
      ++next;
      ++col;
    };
    if (steps[next] == 0) record(0);
    for (std::size_t k = 1; k <= steps.back() && next < steps.size(); ++k) {
      const Eigen::MatrixXd phi = hughes_eikonal(rho, cfg);
      rho = hughes_step(rho, phi, cfg);
      if (k == steps[next]) record(k);
    }
  }

  ds.meta = {{"generator", "hughes2d"},
             {"nx", cfg.nx},
             {"ny", cfg.ny},
             {"x_lo", cfg.x_lo},
             {"x_hi", cfg.x_hi},
             {"y_lo", cfg.y_lo},
             {"y_hi", cfg.y_hi},
             {"obs_x0", cfg.obs_x0},
             {"obs_x1", cfg.obs_x1},
             {"obs_y0", cfg.obs_y0},
             {"obs_y1", cfg.obs_y1},
             {"v_max", cfg.v_max},
             {"rho_max", cfg.rho_max},
             {"dt", cfg.dt},
             {"t_end", cfg.t_end},
             {"seed", cfg.seed},
             {"n_traj", n_traj},
             {"snaps_per_traj", snaps_per_traj}};
  return ds;
}

}  // namespace randsmap
