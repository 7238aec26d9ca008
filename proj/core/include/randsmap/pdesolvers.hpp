// Conservative finite-volume solvers for the LWR 1-D traffic model and the
// Hughes 2-D pedestrian model. Both schemes are written in flux form so the
// total mass telescopes exactly; datasets produced here carry the
// sum-to-one invariant to round-off.

#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "randsmap/dataset.hpp"

namespace randsmap {

enum class LwrFlux {
  // Exact Godunov flux of the concave flux function (default).
  Godunov,
  // Roe flux with a Harten entropy fix, kept for cross-checking.
  Roe,
};

struct Lwr1dConfig {
  std::size_t m_cells = 400;
  double x_lo = -5.0, x_hi = 5.0;
  double v_max = 2.0;
  double rho_max = 1.0;
  double dt = 0.005;
  double t_end = 20.0;
  // Initial condition: rho(0, x) = a exp(-(x - x_c)^2 / (2 w^2)) with
  // a ~ U[0.5,1.5), w ~ U[0.2,0.8), x_c ~ U[-3,3), plus N(0, sigma^2) noise,
  // clipped at zero and normalized so the cell values sum to 1.
  double noise_sigma = 0.02;
  std::uint64_t seed = 0;
  LwrFlux flux = LwrFlux::Godunov;
};

// Flux function f(rho) = v_max rho (1 - rho / rho_max).
double lwr_flux(double rho, double v_max, double rho_max);

// Exact Godunov interface flux: min of f over [rho_l, rho_r] when
// rho_l <= rho_r, max of f over [rho_r, rho_l] otherwise (the maximum sits
// at rho_max / 2 when the interval contains it).
double lwr_godunov_flux(double rho_l, double rho_r, double v_max,
                        double rho_max);

// Roe flux with Harten entropy fix, for comparison against the exact flux.
double lwr_roe_flux(double rho_l, double rho_r, double v_max, double rho_max);

// One conservative step on a periodic domain: piecewise-linear MUSCL
// reconstruction with the van Leer slope limiter and single-stage (Euler)
// time update. Throws StabilityError when v_max dt / dx > 0.9 and
// NumericalError when the state leaves [0, rho_max].
Eigen::VectorXd lwr_step(const Eigen::VectorXd& rho, const Lwr1dConfig& cfg);

// Integrates n_traj random initial conditions to t_end and selects
// snaps_per_traj distinct snapshots uniformly at random (including t = 0)
// from each trajectory. Trajectory t draws from stream t of cfg.seed, in
// order a, w, x_c, the per-cell noise, then the snapshot indices.
// intrinsic rows: (trajectory index, snapshot time).
DataSet lwr_generate(const Lwr1dConfig& cfg, std::size_t n_traj,
                     std::size_t snaps_per_traj);

struct Hughes2dConfig {
  std::size_t nx = 200, ny = 50;
  double x_lo = 0.0, x_hi = 20.0;
  double y_lo = 0.0, y_hi = 5.0;
  // Axis-aligned obstacle; cells whose centers fall inside are removed from
  // the flow (zero flux across their faces, excluded from the eikonal
  // solve). A degenerate rectangle (obs_x1 <= obs_x0 or obs_y1 <= obs_y0)
  // disables the obstacle; a non-degenerate one must lie strictly inside the
  // domain and cover at least one cell center.
  double obs_x0 = 10.0, obs_x1 = 11.0;
  double obs_y0 = 2.0, obs_y1 = 3.0;
  double v_max = 1.0;
  double rho_max = 5.0;
  double dt = 0.025;
  double t_end = 70.0;
  // Initial condition: rho(0,x,y) = a exp(-(x-x_c)^2/(2 w_x^2)
  //                                       -(y-y_c)^2/(2 w_y^2))
  // with a ~ U[1.2,2.1), w_x,w_y ~ U[1.6,2), x_c,y_c ~ U[1.5,3.5),
  // normalized so the cell values sum to 1.
  std::uint64_t seed = 0;
  // Walking-speed floor for the eikonal right-hand side where
  // f(rho) = v_max (1 - rho / rho_max) approaches zero.
  double eps_speed = 1e-10;
  double eikonal_tol = 1e-8;
};

// Fields are nx x ny matrices indexed (ix, iy); flattening is column-major
// (x index fastest), matching DataSet columns of length nx * ny.

// Solves || grad phi || = 1 / max(f(rho), eps_speed) by Gauss-Seidel fast
// sweeping over the four sweep orderings until the sup-norm update drops
// below cfg.eikonal_tol.
//
// Boundary convention: the walking target is the right edge x = x_hi. The
// last cell column is pinned at phi = slowness * dx / 2 (the distance from
// the cell center to the edge at local slowness) and the solve treats the
// domain as a box; only the density transport is periodic in x. Obstacle
// cells hold +infinity and are never updated.
Eigen::MatrixXd hughes_eikonal(const Eigen::MatrixXd& rho,
                               const Hughes2dConfig& cfg);

// One conservative upwind Godunov step of
//   d rho / dt = d/dx (rho f phi_x / ||grad phi||)
//              + d/dy (rho f phi_y / ||grad phi||)
// using face directions averaged from the cell-centered unit descent
// directions of phi. Periodic in x, zero-flux at the top and bottom walls
// and across obstacle faces. Throws StabilityError when
// v_max dt / dx > 0.45 in either direction.
Eigen::MatrixXd hughes_step(const Eigen::MatrixXd& rho,
                            const Eigen::MatrixXd& phi,
                            const Hughes2dConfig& cfg);

// Integrates n_traj random initial conditions, recomputing phi every step,
// and selects snaps_per_traj random snapshots per trajectory as in
// lwr_generate. Trajectory t draws from stream t of cfg.seed in order
// a, w_x, w_y, x_c, y_c, then the snapshot indices.
// intrinsic rows: (trajectory index, snapshot time).
DataSet hughes_generate(const Hughes2dConfig& cfg, std::size_t n_traj,
                        std::size_t snaps_per_traj);

}  // namespace randsmap
