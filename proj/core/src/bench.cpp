#include "randsmap/bench.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "randsmap/errors.hpp"
#include "randsmap/pdesolvers.hpp"
#include "randsmap/synthdata.hpp"

namespace randsmap {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

double spectral_norm(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("spectral_norm: eigendecomposition failed");
  }
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

// Runs fn(0..count-1) across up to n_jobs threads. Indices are handed out
// by an atomic counter and every result slot is owned by its index, so the
// outcome is independent of scheduling. The first exception wins and is
// rethrown after all workers drain.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t n_jobs, Fn&& fn) {
  if (n_jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    }
  };
  const std::size_t workers = std::min(n_jobs, count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

FeatureMap make_map(FeatureKind feature, Eigen::Index P, Eigen::Index Q,
                    double value, std::uint64_t seed,
                    const Eigen::MatrixXd& Y_train) {
  switch (feature) {
    case FeatureKind::Rff:
      return sample_rff(Y_train.rows(), P, value, seed);
    case FeatureKind::MsRff:
      return sample_msrff(Y_train.rows(), P, Q, value, seed);
    case FeatureKind::Sigmoid:
      return sample_sigmoid(Y_train, P, value, seed);
  }
  throw std::invalid_argument("make_map: unknown feature kind");
}

}  // namespace

EvalReport errors(const Eigen::MatrixXd& X_true, const Eigen::MatrixXd& X_hat,
                  bool mass_flag) {
  if (X_true.rows() != X_hat.rows() || X_true.cols() != X_hat.cols()) {
    throw std::invalid_argument("errors: shape mismatch between truth and "
                                "reconstruction");
  }
  const Eigen::Index L = X_true.cols();
  EvalReport rep;
  rep.e2.resize(L);
  rep.einf.resize(L);
  if (mass_flag) rep.econ.resize(L);
  for (Eigen::Index i = 0; i < L; ++i) {
    const double n2 = X_true.col(i).norm();
    if (n2 == 0.0) {
      throw NumericalError("errors: truth column " + std::to_string(i) +
                           " has zero norm, relative error undefined");
    }
    const double ninf = X_true.col(i).lpNorm<Eigen::Infinity>();
    const Eigen::VectorXd diff = X_hat.col(i) - X_true.col(i);
    rep.e2[i] = diff.norm() / n2;
    rep.einf[i] = diff.lpNorm<Eigen::Infinity>() / ninf;
    if (mass_flag) rep.econ[i] = std::abs(X_hat.col(i).sum() - 1.0);
  }
  return rep;
}

double mean_of(const Eigen::VectorXd& v) {
  if (v.size() == 0) {
    throw std::invalid_argument("mean_of: empty vector");
  }
  return v.mean();
}

double percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("percentile_nearest_rank: empty sample");
  }
  if (!(p >= 0.0 && p <= 100.0)) {
    throw std::invalid_argument("percentile_nearest_rank: p outside [0,100]");
  }
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::max<std::size_t>(rank, 1);
  rank = std::min(rank, values.size());
  return values[rank - 1];
}

std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  if (count == 0) {
    throw std::invalid_argument("linear_grid: count must be positive");
  }
  if (!(hi >= lo)) {
    throw std::invalid_argument("linear_grid: hi < lo");
  }
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = lo + step * static_cast<double>(i);
  }
  grid.back() = hi;
  return grid;
}

std::vector<double> integer_grid(double lo, double hi, std::size_t count) {
  std::vector<double> grid = linear_grid(lo, hi, count);
  for (double& v : grid) v = std::round(v);
  return grid;
}

TuneResult tune(const std::vector<double>& grid,
                const std::function<double(double)>& score) {
  if (grid.empty()) {
    throw std::invalid_argument("tune: empty grid");
  }
  TuneResult result;
  result.grid = grid;
  result.val_errors.assign(grid.size(), kNan);
  bool found = false;
  double best_err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double err = kNan;
    try {
      err = score(grid[i]);
    } catch (const NumericalError&) {
      continue;
    } catch (const std::invalid_argument&) {
      continue;
    }
    if (std::isnan(err)) continue;
    result.val_errors[i] = err;
    const bool better =
        !found || err < best_err ||
        (err == best_err && grid[i] < result.best);
    if (better) {
      found = true;
      best_err = err;
      result.best = grid[i];
      result.best_index = i;
    }
  }
  if (!found) {
    throw NumericalError("tune: every grid value failed to fit");
  }
  return result;
}

TuneResult tune_decoder(const TuneTask& task, const std::vector<double>& grid,
                        const DmModel& dm, const Eigen::MatrixXd& X_train,
                        const Eigen::MatrixXd& X_val) {
  const Eigen::MatrixXd Ytr = dm_train_embedding(dm);
  const Eigen::MatrixXd Yvl = dm_encode(dm, X_val);
  const Eigen::Index n = X_train.cols();
  const Eigen::Index P = task.P > 0 ? task.P : n;

  std::function<double(double)> score;
  switch (task.kind) {
    case DecoderKind::Rfnn:
    case DecoderKind::Randsmap:
      score = [&, P](double value) {
        const FeatureMap map =
            make_map(task.feature, P, task.Q, value, task.seed, Ytr);
        const Eigen::MatrixXd Phi = feature_matrix(map, Ytr);
        RidgeDecoder model = task.kind == DecoderKind::Randsmap
                                 ? randsmap_fit(Phi, X_train, task.lambda)
                                 : rfnn_fit(Phi, X_train, task.lambda);
        bind_map(model, map);
        const Reconstruction rec = decode(model, map, Yvl);
        return mean_of(errors(X_val, rec.X_hat, false).e2);
      };
      break;
    case DecoderKind::Ddm:
      score = [&](double w2) {
        const DdmDecoder model = ddm_fit(Ytr, X_train, w2);
        const Reconstruction rec = ddm_decode(model, Yvl);
        return mean_of(errors(X_val, rec.X_hat, false).e2);
      };
      break;
    case DecoderKind::Knn: {
      Eigen::Index n_score = Yvl.cols();
      if (task.knn_val_cap > 0) {
        n_score = std::min<Eigen::Index>(
            n_score, static_cast<Eigen::Index>(task.knn_val_cap));
      }
      score = [&, n_score](double k) {
        Eigen::MatrixXd X_hat(X_val.rows(), n_score);
        for (Eigen::Index i = 0; i < n_score; ++i) {
          X_hat.col(i) = knn_decode(dm, Ytr, X_train, Yvl.col(i),
                                    static_cast<Eigen::Index>(std::llround(k)))
                             .x_hat;
        }
        return mean_of(errors(X_val.leftCols(n_score), X_hat, false).e2);
      };
      break;
    }
    case DecoderKind::Pod:
      throw std::invalid_argument(
          "tune_decoder: the projection baseline has no tuned hyperparameter");
  }
  return tune(grid, score);
}

std::map<std::string, RunStats> repeat_runs(
    const std::function<Metrics(std::uint64_t)>& pipeline, std::size_t n_runs,
    std::uint64_t base_seed, std::size_t n_jobs) {
  if (n_runs == 0) {
    throw std::invalid_argument("repeat_runs: n_runs must be positive");
  }
  std::vector<Metrics> results(n_runs);
  parallel_for(n_runs, n_jobs, [&](std::size_t i) {
    results[i] = pipeline(base_seed + i);
  });

  const Metrics& first = results.front();
  for (const Metrics& run : results) {
    if (run.size() != first.size() ||
        !std::equal(run.begin(), run.end(), first.begin(),
                    [](const auto& a, const auto& b) {
                      return a.first == b.first;
                    })) {
      throw std::invalid_argument(
          "repeat_runs: runs reported different metric names");
    }
  }

  std::map<std::string, RunStats> agg;
  for (const auto& [name, unused] : first) {
    (void)unused;
    std::vector<double> vals;
    vals.reserve(n_runs);
    for (const Metrics& run : results) vals.push_back(run.at(name));
    RunStats st;
    st.median = percentile_nearest_rank(vals, 50.0);
    st.p5 = percentile_nearest_rank(vals, 5.0);
    st.p95 = percentile_nearest_rank(vals, 95.0);
    agg.emplace(name, st);
  }
  return agg;
}

KernelBoundTable kernel_bound_check(FeatureKind kind, double param,
                                    Eigen::Index Q,
                                    const Eigen::MatrixXd& points,
                                    const std::vector<Eigen::Index>& P_list,
                                    std::size_t n_seeds,
                                    std::uint64_t base_seed,
                                    std::size_t n_jobs) {
  if (kind == FeatureKind::Sigmoid) {
    throw std::invalid_argument(
        "kernel_bound_check: the sigmoid family has no closed-form kernel");
  }
  const Eigen::Index n = points.cols();
  if (n < 2) {
    throw std::invalid_argument("kernel_bound_check: need at least 2 points");
  }
  if (P_list.empty() || n_seeds == 0) {
    throw std::invalid_argument(
        "kernel_bound_check: P_list and n_seeds must be nonempty");
  }

  Eigen::MatrixXd Kbar_rff;
  double norm_kbar_rff = 0.0;
  if (kind == FeatureKind::Rff) {
    Kbar_rff = gauss_shift_kernel(points, param);
    norm_kbar_rff = spectral_norm(Kbar_rff);
  }

  KernelBoundTable table;
  table.rows.reserve(P_list.size());
  for (Eigen::Index P : P_list) {
    std::vector<double> errs(n_seeds), bounds(n_seeds);
    parallel_for(n_seeds, n_jobs, [&](std::size_t s) {
      const std::uint64_t seed = base_seed + s;
      if (kind == FeatureKind::Rff) {
        const FeatureMap map = sample_rff(points.rows(), P, param, seed);
        errs[s] = spectral_norm(induced_kernel(map, points) - Kbar_rff);
        bounds[s] = rff_bernstein_bound(n, P, norm_kbar_rff);
      } else {
        const FeatureMap map =
            sample_msrff(points.rows(), P, Q, param, seed);
        const Eigen::MatrixXd Kbar =
            msrff_expected_kernel(points, map.scales);
        errs[s] = spectral_norm(induced_kernel(map, points) - Kbar);
        double c_max = 0.0;
        for (Eigen::Index q = 0; q < map.scales.size(); ++q) {
          c_max = std::max(
              c_max,
              spectral_norm(gauss_shift_kernel(points, map.scales[q])));
        }
        bounds[s] = msrff_bernstein_bound(n, P, Q, c_max);
      }
    });
    KernelBoundRow row;
    row.P = P;
    row.median_error = percentile_nearest_rank(errs, 50.0);
    row.median_bound = percentile_nearest_rank(bounds, 50.0);
    std::size_t within = 0;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      if (errs[s] <= bounds[s]) ++within;
    }
    row.frac_within =
        static_cast<double>(within) / static_cast<double>(n_seeds);
    table.rows.push_back(row);
  }

  std::vector<KernelBoundRow> by_p = table.rows;
  std::sort(by_p.begin(), by_p.end(),
            [](const KernelBoundRow& a, const KernelBoundRow& b) {
              return a.P < b.P;
            });
  table.median_monotone = true;
  for (std::size_t i = 1; i < by_p.size(); ++i) {
    if (by_p[i].median_error > by_p[i - 1].median_error) {
      table.median_monotone = false;
      break;
    }
  }
  return table;
}

namespace {

// Per-benchmark encoder settings and tuning ranges. Each range is searched
// with a 10-value grid; the neighbor count uses whole numbers.
struct BenchParams {
  double alpha = 0.0;
  double w1 = 0.0;
  Eigen::Index d = 0;
  double sw_lo = 0.0, sw_hi = 0.0;  // Fourier frequency scale sigma_w
  double ub_lo = 0.0, ub_hi = 0.0;  // multi-scale upper bound sigma_ub
  double c_lo = 0.0, c_hi = 0.0;    // sigmoid weight range half-width c
  double w2_lo = 0.0, w2_hi = 0.0;  // latent-kernel bandwidth factor w2
  double k_lo = 0.0, k_hi = 0.0;    // neighbor count k
};

BenchParams params_for(const std::string& id) {
  if (id == "swiss") {
    return {1.0, 0.12, 2, 0.1, 1.0, 1.0, 10.0, 1.0, 20.0, 0.3, 0.9, 2, 11};
  }
  if (id == "scurve") {
    return {1.0, 0.2, 2, 0.1, 1.0, 2.0, 10.0, 5.0, 18.0, 0.3, 0.9, 2, 11};
  }
  if (id == "lwr") {
    return {0.0, 1.0, 2, 0.1, 1.0, 2.0, 15.0, 1.0, 20.0, 0.2, 1.0, 2, 11};
  }
  if (id == "mri") {
    return {1.0, 0.5, 2, 0.02, 0.1, 35.0, 65.0, 45.0, 120.0, 0.2, 1.0, 2, 11};
  }
  if (id == "hughes") {
    return {1.0, 0.4, 10, 0.2, 1.0, 1.0, 10.0, 1.0, 20.0, 0.1, 1.0, 2, 18};
  }
  throw std::invalid_argument("reproduce_table: unknown benchmark id '" + id +
                              "'");
}

std::size_t scaled(std::size_t paper_count, double scale) {
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(paper_count) * scale));
}

// Builds the benchmark dataset and the split sizes. At scale s the paper's
// trajectory / point counts and split sizes are multiplied by s with the
// per-trajectory snapshot counts kept fixed, so the splits stay consistent
// with the total. Desk mode uses a small fixed geometry instead.
DataSet make_dataset(const std::string& id, const ReproduceOptions& opt,
                     SplitSpec& spec) {
  spec.seed = opt.seed + 1;
  if (id == "swiss" || id == "scurve") {
    const std::size_t total = opt.desk ? 2000 : scaled(10000, opt.scale);
    const std::size_t n_tr = opt.desk ? 500 : scaled(1000, opt.scale);
    if (total <= 2 * n_tr || n_tr < 4) {
      throw std::invalid_argument("reproduce_table: scale too small");
    }
    spec.n_train = n_tr;
    spec.n_val = n_tr;
    spec.n_test = total - 2 * n_tr;
    return id == "swiss" ? gen_swiss_roll(total, 0.05, opt.seed)
                         : gen_scurve_20d(total, 0.01, opt.seed);
  }
  if (id == "lwr") {
    Lwr1dConfig cfg;
    cfg.seed = opt.seed;
    const std::size_t n_traj = opt.desk ? 14 : scaled(100, opt.scale);
    const std::size_t snaps = opt.desk ? 50 : 120;
    const std::size_t n_tr = opt.desk ? 500 : scaled(2000, opt.scale);
    const std::size_t n_vl = opt.desk ? 100 : n_tr;
    const std::size_t n_ts =
        opt.desk ? 100 : n_traj * snaps - n_tr - n_vl;
    if (n_traj < 2 || n_tr < 4 || n_traj * snaps < n_tr + n_vl + 1) {
      throw std::invalid_argument("reproduce_table: scale too small");
    }
    spec.n_train = n_tr;
    spec.n_val = n_vl;
    spec.n_test = n_ts;
    return lwr_generate(cfg, n_traj, snaps);
  }
  if (id == "mri") {
    const Image base = gen_phantom(opt.desk ? 64 : 128);
    const std::size_t n_angles = opt.desk ? 600 : scaled(3600, opt.scale);
    const std::size_t n_tr = opt.desk ? 150 : scaled(720, opt.scale);
    if (n_tr < 4 || n_angles < 2 * n_tr + 1) {
      throw std::invalid_argument("reproduce_table: scale too small");
    }
    spec.n_train = n_tr;
    spec.n_val = n_tr;
    spec.n_test = n_angles - 2 * n_tr;
    if (opt.desk) spec.n_test = 300;
    return gen_rotated_images(base, n_angles, opt.seed);
  }
  if (id == "hughes") {
    Hughes2dConfig cfg;
    cfg.seed = opt.seed;
    const std::size_t n_traj = opt.desk ? 8 : scaled(80, opt.scale);
    const std::size_t snaps = opt.desk ? 60 : 375;
    const std::size_t n_tr = opt.desk ? 360 : scaled(5000, opt.scale);
    const std::size_t n_vl = opt.desk ? 60 : n_tr;
    const std::size_t n_ts =
        opt.desk ? 60 : n_traj * snaps - n_tr - n_vl;
    if (n_traj < 2 || n_tr < 12 || n_traj * snaps < n_tr + n_vl + 1) {
      throw std::invalid_argument("reproduce_table: scale too small");
    }
    spec.n_train = n_tr;
    spec.n_val = n_vl;
    spec.n_test = n_ts;
    return hughes_generate(cfg, n_traj, snaps);
  }
  throw std::invalid_argument("reproduce_table: unknown benchmark id '" + id +
                              "'");
}

struct RosterEntry {
  std::string name;
  DecoderKind kind;
  FeatureKind feature;  // meaningful for the ridge decoders only
};

std::vector<RosterEntry> roster_for(bool mass_preserving) {
  if (mass_preserving) {
    return {{"randsmap-rff", DecoderKind::Randsmap, FeatureKind::Rff},
            {"randsmap-msrff", DecoderKind::Randsmap, FeatureKind::MsRff},
            {"randsmap-sig", DecoderKind::Randsmap, FeatureKind::Sigmoid},
            {"rfnn-sig", DecoderKind::Rfnn, FeatureKind::Sigmoid},
            {"ddm", DecoderKind::Ddm, FeatureKind::Rff},
            {"knn", DecoderKind::Knn, FeatureKind::Rff}};
  }
  return {{"rfnn-rff", DecoderKind::Rfnn, FeatureKind::Rff},
          {"rfnn-msrff", DecoderKind::Rfnn, FeatureKind::MsRff},
          {"rfnn-sig", DecoderKind::Rfnn, FeatureKind::Sigmoid},
          {"ddm", DecoderKind::Ddm, FeatureKind::Rff},
          {"knn", DecoderKind::Knn, FeatureKind::Rff}};
}

std::vector<double> grid_for(const RosterEntry& entry, const BenchParams& p) {
  switch (entry.kind) {
    case DecoderKind::Rfnn:
    case DecoderKind::Randsmap:
      switch (entry.feature) {
        case FeatureKind::Rff:
          return linear_grid(p.sw_lo, p.sw_hi, 10);
        case FeatureKind::MsRff:
          return linear_grid(p.ub_lo, p.ub_hi, 10);
        case FeatureKind::Sigmoid:
          return linear_grid(p.c_lo, p.c_hi, 10);
      }
      break;
    case DecoderKind::Ddm:
      return linear_grid(p.w2_lo, p.w2_hi, 10);
    case DecoderKind::Knn:
      return integer_grid(p.k_lo, p.k_hi, 10);
    case DecoderKind::Pod:
      break;
  }
  throw std::invalid_argument("grid_for: unsupported decoder");
}

void write_points_csv(const std::filesystem::path& path,
                      const EvalReport& rep, bool mass) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << std::setprecision(12) << std::scientific;
  out << "index,e2,einf" << (mass ? ",econ" : "") << "\n";
  for (Eigen::Index i = 0; i < rep.e2.size(); ++i) {
    out << i << ',' << rep.e2[i] << ',' << rep.einf[i];
    if (mass) out << ',' << rep.econ[i];
    out << "\n";
  }
  if (!out) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<DecoderRow>& rows) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << std::setprecision(12) << std::scientific;
  out << "decoder,P,hyperparameter,train_e2,train_einf,train_econ,"
         "test_e2,test_einf,test_econ,fit_time_s,infer_time_s\n";
  auto cell = [&out](double v) {
    out << ',';
    if (!std::isnan(v)) out << v;
  };
  for (const DecoderRow& r : rows) {
    out << r.decoder << ',' << r.P << ',' << r.hyperparameter;
    cell(r.train_e2);
    cell(r.train_einf);
    cell(r.train_econ);
    cell(r.test_e2);
    cell(r.test_einf);
    cell(r.test_econ);
    cell(r.fit_time);
    cell(r.infer_time);
    out << "\n";
  }
  if (!out) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

}  // namespace

std::vector<DecoderRow> reproduce_table(const std::string& benchmark_id,
                                        const ReproduceOptions& opt,
                                        const std::filesystem::path& out_dir) {
  const BenchParams p = params_for(benchmark_id);
  SplitSpec sspec;
  const DataSet full = make_dataset(benchmark_id, opt, sspec);
  const Split sp = split(full, sspec);
  const bool mass = full.mass_preserving;

  const auto t_dm = std::chrono::steady_clock::now();
  const DmModel dm = dm_fit(sp.train.X, p.alpha, p.w1, p.d);
  const Eigen::MatrixXd Ytr = dm_train_embedding(dm);
  const double dm_time = seconds_since(t_dm);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + out_dir.string() +
                  "': " + ec.message());
  }

  const std::vector<RosterEntry> roster = roster_for(mass);
  std::vector<DecoderRow> rows;
  rows.reserve(roster.size());

  for (std::size_t idx = 0; idx < roster.size(); ++idx) {
    const RosterEntry& entry = roster[idx];
    TuneTask task;
    task.kind = entry.kind;
    task.feature = entry.feature;
    task.Q = opt.msrff_q;
    task.lambda = opt.lambda;
    task.seed = opt.seed + 100 + idx;
    task.knn_val_cap = opt.knn_val_cap;
    const std::vector<double> grid = grid_for(entry, p);

    DecoderRow row;
    row.decoder = entry.name;
    row.train_econ = kNan;
    row.test_econ = kNan;

    const auto t_fit = std::chrono::steady_clock::now();
    const TuneResult tuned =
        tune_decoder(task, grid, dm, sp.train.X, sp.val.X);
    row.hyperparameter = tuned.best;

    EvalReport rep_tr, rep_ts;
    if (entry.kind == DecoderKind::Rfnn ||
        entry.kind == DecoderKind::Randsmap) {
      row.P = sp.train.X.cols();
      const FeatureMap map = make_map(entry.feature, row.P, task.Q,
                                      tuned.best, task.seed, Ytr);
      const Eigen::MatrixXd Phi = feature_matrix(map, Ytr);
      RidgeDecoder model =
          entry.kind == DecoderKind::Randsmap
              ? randsmap_fit(Phi, sp.train.X, task.lambda)
              : rfnn_fit(Phi, sp.train.X, task.lambda);
      bind_map(model, map);
      row.fit_time = dm_time + seconds_since(t_fit);

      rep_tr = errors(sp.train.X, decode(model, map, Ytr).X_hat, mass);

      const auto t_inf = std::chrono::steady_clock::now();
      const Eigen::MatrixXd Yts = dm_encode(dm, sp.test.X);
      const Reconstruction rec = decode(model, map, Yts);
      row.infer_time = seconds_since(t_inf);
      rep_ts = errors(sp.test.X, rec.X_hat, mass);
    } else if (entry.kind == DecoderKind::Ddm) {
      const DdmDecoder model = ddm_fit(Ytr, sp.train.X, tuned.best);
      row.fit_time = dm_time + seconds_since(t_fit);

      rep_tr = errors(sp.train.X, ddm_decode(model, Ytr).X_hat, mass);

      const auto t_inf = std::chrono::steady_clock::now();
      const Eigen::MatrixXd Yts = dm_encode(dm, sp.test.X);
      const Reconstruction rec = ddm_decode(model, Yts);
      row.infer_time = seconds_since(t_inf);
      rep_ts = errors(sp.test.X, rec.X_hat, mass);
    } else {
      const auto k = static_cast<Eigen::Index>(std::llround(tuned.best));
      row.fit_time = dm_time + seconds_since(t_fit);

      Eigen::Index n_tr_eval = sp.train.X.cols();
      if (opt.knn_train_cap > 0) {
        n_tr_eval = std::min<Eigen::Index>(
            n_tr_eval, static_cast<Eigen::Index>(opt.knn_train_cap));
      }
      Eigen::MatrixXd X_hat_tr(sp.train.X.rows(), n_tr_eval);
      for (Eigen::Index i = 0; i < n_tr_eval; ++i) {
        X_hat_tr.col(i) =
            knn_decode(dm, Ytr, sp.train.X, Ytr.col(i), k).x_hat;
      }
      rep_tr = errors(sp.train.X.leftCols(n_tr_eval), X_hat_tr, mass);

      Eigen::Index n_ts_eval = sp.test.X.cols();
      if (opt.knn_test_cap > 0) {
        n_ts_eval = std::min<Eigen::Index>(
            n_ts_eval, static_cast<Eigen::Index>(opt.knn_test_cap));
      }
      const auto t_inf = std::chrono::steady_clock::now();
      const Eigen::MatrixXd Yts =
          dm_encode(dm, sp.test.X.leftCols(n_ts_eval));
      Eigen::MatrixXd X_hat_ts(sp.test.X.rows(), n_ts_eval);
      for (Eigen::Index i = 0; i < n_ts_eval; ++i) {
        X_hat_ts.col(i) =
            knn_decode(dm, Ytr, sp.train.X, Yts.col(i), k).x_hat;
      }
      row.infer_time = seconds_since(t_inf);
      rep_ts = errors(sp.test.X.leftCols(n_ts_eval), X_hat_ts, mass);
    }

    row.train_e2 = mean_of(rep_tr.e2);
    row.train_einf = mean_of(rep_tr.einf);
    row.test_e2 = mean_of(rep_ts.e2);
    row.test_einf = mean_of(rep_ts.einf);
    if (mass) {
      row.train_econ = mean_of(rep_tr.econ);
      row.test_econ = mean_of(rep_ts.econ);
    }

    write_points_csv(out_dir / (benchmark_id + "_" + entry.name +
                                "_train.csv"),
                     rep_tr, mass);
    write_points_csv(out_dir / (benchmark_id + "_" + entry.name +
                                "_test.csv"),
                     rep_ts, mass);
    rows.push_back(std::move(row));
  }

  write_summary_csv(out_dir / (benchmark_id + "_summary.csv"), rows);
  return rows;
}

}  // namespace randsmap
