// Command-line front end: gen / encode / fit / decode / eval / tune / repro /
// kernel_bench subcommands chaining the library into reproducible pipelines.
//
// Exit codes: 0 success, 2 invalid arguments or preconditions, 3 generation
// failure (gen only), 4 missing or corrupt input files, 5 numerical failure.
// Every command accepts --config FILE with a flat JSON object; flags given on
// the command line override config values, and unknown config keys are
// rejected. When a command takes --seed and neither the flag nor the config
// sets it, the RANDSMAP_SEED environment variable is used as a fallback.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "randsmap/bench.hpp"
#include "randsmap/dataset.hpp"
#include "randsmap/decoders.hpp"
#include "randsmap/dmap.hpp"
#include "randsmap/errors.hpp"
#include "randsmap/pdesolvers.hpp"
#include "randsmap/prng.hpp"
#include "randsmap/randfeat.hpp"
#include "randsmap/synthdata.hpp"

namespace {

using nlohmann::json;
using namespace randsmap;

// ---------------------------------------------------------------------------
// Config merge: flags registered here can also be set from the --config JSON
// object, with explicit command-line flags taking precedence.

class ConfigBinder {
 public:
  void add(const std::string& key, CLI::Option* opt,
           std::function<void(const json&)> set) {
    entries_[key] = {opt, std::move(set)};
  }

  // Applies cfg to every registered key the command line left untouched.
  void apply(const json& cfg) {
    if (!cfg.is_object()) {
      throw std::invalid_argument("config: top level must be a JSON object");
    }
    for (const auto& [key, value] : cfg.items()) {
      auto it = entries_.find(key);
      if (it == entries_.end()) {
        throw std::invalid_argument("config: unknown key '" + key + "'");
      }
      if (it->second.opt->count() > 0) continue;
      try {
        it->second.set(value);
      } catch (const json::exception&) {
        throw std::invalid_argument("config: bad value for key '" + key +
                                    "'");
      }
      applied_.insert(key);
    }
  }

  bool set_by_config(const std::string& key) const {
    return applied_.count(key) > 0;
  }

 private:
  struct Entry {
    CLI::Option* opt = nullptr;
    std::function<void(const json&)> set;
  };
  std::map<std::string, Entry> entries_;
  std::set<std::string> applied_;
};

std::string strip_dashes(const std::string& flag) {
  std::size_t i = 0;
  while (i < flag.size() && flag[i] == '-') ++i;
  return flag.substr(i);
}

template <typename T>
CLI::Option* bind_opt(CLI::App& cmd, ConfigBinder& binder, const std::string& flag,
                  T& var, const std::string& help) {
  CLI::Option* opt = cmd.add_option(flag, var, help)->capture_default_str();
  binder.add(strip_dashes(flag), opt,
             [&var](const json& v) { var = v.get<T>(); });
  return opt;
}

CLI::Option* bind_flag(CLI::App& cmd, ConfigBinder& binder,
                       const std::string& flag, bool& var,
                       const std::string& help) {
  CLI::Option* opt = cmd.add_flag(flag, var, help);
  binder.add(strip_dashes(flag), opt,
             [&var](const json& v) { var = v.get<bool>(); });
  return opt;
}

json load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path.string() + "'");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw IoError("config '" + path.string() + "': " + e.what());
  }
}

// Seed resolution order: --seed flag, config key, RANDSMAP_SEED, default.
std::uint64_t resolve_seed(std::uint64_t current, const CLI::Option* seed_opt,
                           const ConfigBinder& binder) {
  if (seed_opt->count() > 0 || binder.set_by_config("seed")) return current;
  const char* env = std::getenv("RANDSMAP_SEED");
  if (env == nullptr || *env == '\0') return current;
  std::uint64_t value = 0;
  const char* end = env + std::string_view(env).size();
  auto [ptr, ec] = std::from_chars(env, end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument(
        "RANDSMAP_SEED: not an unsigned integer: '" + std::string(env) + "'");
  }
  return value;
}

// ---------------------------------------------------------------------------
// Container helpers.

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::MatrixXd as_column(const Eigen::VectorXd& v) {
  return v;  // implicit N x 1
}

const Eigen::MatrixXd& need_matrix(
    const std::map<std::string, Eigen::MatrixXd>& mats,
    const std::string& name, const std::filesystem::path& path) {
  auto it = mats.find(name);
  if (it == mats.end()) {
    throw IoError("'" + path.string() + "': missing matrix '" + name + "'");
  }
  return it->second;
}

template <typename T>
T need_field(const json& header, const std::string& name,
             const std::filesystem::path& path) {
  if (!header.contains(name)) {
    throw IoError("'" + path.string() + "': missing header field '" + name +
                  "'");
  }
  try {
    return header.at(name).get<T>();
  } catch (const json::exception&) {
    throw IoError("'" + path.string() + "': bad header field '" + name + "'");
  }
}

void check_container(const json& header, const std::string& expected,
                     const std::filesystem::path& path) {
  if (need_field<std::string>(header, "container", path) != expected) {
    throw IoError("'" + path.string() + "': expected a " + expected +
                  " container");
  }
}

void save_dm(const DmModel& dm, const std::filesystem::path& path) {
  json header;
  header["container"] = "dm";
  header["epsilon1"] = dm.epsilon1;
  header["alpha"] = dm.alpha;
  header["w1"] = dm.w1;
  header["d"] = dm.d;
  header["xi"] = vector_to_json(dm.xi);
  header["gap_warning"] = dm.gap_warning;
  save_model(header,
             {{"X_train", dm.X_train},
              {"V", dm.V},
              {"deg1", as_column(dm.deg1)},
              {"deg1a", as_column(dm.deg1a)}},
             path);
}

DmModel load_dm(const std::filesystem::path& path) {
  auto [header, mats] = load_model(path);
  check_container(header, "dm", path);
  DmModel dm;
  dm.epsilon1 = need_field<double>(header, "epsilon1", path);
  dm.alpha = need_field<double>(header, "alpha", path);
  dm.w1 = need_field<double>(header, "w1", path);
  dm.d = need_field<Eigen::Index>(header, "d", path);
  dm.gap_warning = need_field<bool>(header, "gap_warning", path);
  const auto xi = need_field<std::vector<double>>(header, "xi", path);
  dm.xi = Eigen::Map<const Eigen::VectorXd>(xi.data(),
                                            static_cast<Eigen::Index>(
                                                xi.size()));
  dm.X_train = need_matrix(mats, "X_train", path);
  dm.V = need_matrix(mats, "V", path);
  dm.deg1 = need_matrix(mats, "deg1", path);
  dm.deg1a = need_matrix(mats, "deg1a", path);
  if (dm.V.rows() != dm.X_train.cols() || dm.V.cols() != dm.d ||
      dm.xi.size() != dm.d) {
    throw IoError("'" + path.string() + "': inconsistent dm container");
  }
  return dm;
}

// ---------------------------------------------------------------------------
// Decoder identifiers.

struct DecoderId {
  std::string name;           // canonical flag value
  DecoderKind kind = DecoderKind::Rfnn;
  FeatureKind feature = FeatureKind::Rff;
  bool is_ridge = false;
};

DecoderId parse_decoder(const std::string& name) {
  static const std::map<std::string, DecoderId> table = {
      {"rfnn-rff", {"rfnn-rff", DecoderKind::Rfnn, FeatureKind::Rff, true}},
      {"rfnn-msrff",
       {"rfnn-msrff", DecoderKind::Rfnn, FeatureKind::MsRff, true}},
      {"rfnn-sig",
       {"rfnn-sig", DecoderKind::Rfnn, FeatureKind::Sigmoid, true}},
      {"randsmap-rff",
       {"randsmap-rff", DecoderKind::Randsmap, FeatureKind::Rff, true}},
      {"randsmap-msrff",
       {"randsmap-msrff", DecoderKind::Randsmap, FeatureKind::MsRff, true}},
      {"randsmap-sig",
       {"randsmap-sig", DecoderKind::Randsmap, FeatureKind::Sigmoid, true}},
      {"ddm", {"ddm", DecoderKind::Ddm, FeatureKind::Rff, false}},
      {"knn", {"knn", DecoderKind::Knn, FeatureKind::Rff, false}},
      {"pod", {"pod", DecoderKind::Pod, FeatureKind::Rff, false}},
  };
  auto it = table.find(name);
  if (it == table.end()) {
    throw std::invalid_argument("unknown decoder '" + name + "'");
  }
  return it->second;
}

std::string feature_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Rff: return "rff";
    case FeatureKind::MsRff: return "msrff";
    case FeatureKind::Sigmoid: return "sigmoid";
  }
  return "rff";
}

FeatureKind parse_feature(const std::string& name) {
  if (name == "rff") return FeatureKind::Rff;
  if (name == "msrff") return FeatureKind::MsRff;
  if (name == "sigmoid") return FeatureKind::Sigmoid;
  throw std::invalid_argument("unknown feature kind '" + name + "'");
}

// Feature count: a positive integer, or N / N/2 / N/4 relative to the
// training count, matching the paper tables' P column.
Eigen::Index parse_features(const std::string& text, Eigen::Index n_train) {
  if (text == "N") return n_train;
  if (text == "N/2") return n_train / 2;
  if (text == "N/4") return n_train / 4;
  Eigen::Index value = 0;
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 1) {
    throw std::invalid_argument("--features: expected N, N/2, N/4, or a "
                                "positive integer, got '" + text + "'");
  }
  return value;
}

// ---------------------------------------------------------------------------
// gen

struct GenParams {
  std::string benchmark;
  std::string out;
  std::size_t n = 1000;
  double noise = -1.0;  // -1 selects the benchmark's canonical level
  std::size_t size = 64;
  std::size_t angles = 600;
  std::size_t traj = 10;
  std::size_t snaps = 50;
  std::size_t cells = 400;
  std::size_t nx = 200, ny = 50;
  double dt = -1.0;    // -1 selects the solver default
  double t_end = -1.0;
  double v_max = -1.0;
  double rho_max = -1.0;
  std::string flux = "godunov";
  std::uint64_t seed = 0;
  std::size_t split_train = 0, split_val = 0, split_test = 0;
  std::uint64_t split_seed = 0;
  std::string export_csv_path;
};

void run_gen(const GenParams& p) {
  DataSet ds;
  if (p.benchmark == "swiss") {
    ds = gen_swiss_roll(p.n, p.noise < 0.0 ? 0.05 : p.noise, p.seed);
  } else if (p.benchmark == "scurve") {
    ds = gen_scurve_20d(p.n, p.noise < 0.0 ? 0.01 : p.noise, p.seed);
  } else if (p.benchmark == "mri") {
    ds = gen_rotated_images(gen_phantom(p.size), p.angles, p.seed);
  } else if (p.benchmark == "lwr") {
    Lwr1dConfig cfg;
    cfg.m_cells = p.cells;
    if (p.noise >= 0.0) cfg.noise_sigma = p.noise;
    if (p.dt > 0.0) cfg.dt = p.dt;
    if (p.t_end > 0.0) cfg.t_end = p.t_end;
    if (p.v_max > 0.0) cfg.v_max = p.v_max;
    if (p.rho_max > 0.0) cfg.rho_max = p.rho_max;
    if (p.flux == "godunov") {
      cfg.flux = LwrFlux::Godunov;
    } else if (p.flux == "roe") {
      cfg.flux = LwrFlux::Roe;
    } else {
      throw std::invalid_argument("--flux: expected godunov or roe");
    }
    cfg.seed = p.seed;
    ds = lwr_generate(cfg, p.traj, p.snaps);
  } else if (p.benchmark == "hughes") {
    Hughes2dConfig cfg;
    cfg.nx = p.nx;
    cfg.ny = p.ny;
    if (p.dt > 0.0) cfg.dt = p.dt;
    if (p.t_end > 0.0) cfg.t_end = p.t_end;
    if (p.v_max > 0.0) cfg.v_max = p.v_max;
    if (p.rho_max > 0.0) cfg.rho_max = p.rho_max;
    cfg.seed = p.seed;
    ds = hughes_generate(cfg, p.traj, p.snaps);
  } else {
    throw std::invalid_argument("unknown benchmark '" + p.benchmark + "'");
  }

  const std::filesystem::path out(p.out);
  save_dataset(ds, out);
  std::cout << "wrote " << out.string() << ": M=" << ds.rows()
            << " N=" << ds.cols()
            << " mass=" << (ds.mass_preserving ? "yes" : "no");
  if (ds.mass_preserving) {
    const double drift =
        (ds.X.colwise().sum().array() - 1.0).abs().maxCoeff();
    std::cout << " mass-drift=" << std::scientific << std::setprecision(3)
              << drift;
  }
  std::cout << "\n";

  if (!p.export_csv_path.empty()) {
    export_csv(ds.X, p.export_csv_path);
  }

  if (p.split_train + p.split_val + p.split_test > 0) {
    const Split parts =
        split(ds, {p.split_train, p.split_val, p.split_test, p.split_seed});
    const std::string ext = out.extension().string();
    const auto side = [&](const char* tag) {
      std::filesystem::path q = out;
      q.replace_extension();
      q += std::string(".") + tag + ext;
      return q;
    };
    save_dataset(parts.train, side("train"));
    save_dataset(parts.val, side("val"));
    save_dataset(parts.test, side("test"));
    std::cout << "split " << parts.train.cols() << "/" << parts.val.cols()
              << "/" << parts.test.cols() << " (seed " << p.split_seed
              << ")\n";
  }
}

// ---------------------------------------------------------------------------
// encode

struct EncodeParams {
  std::string data;
  std::string out;
  double alpha = 1.0;
  double w1 = 1.0;
  Eigen::Index dim = 2;
};

void run_encode(const EncodeParams& p) {
  const DataSet ds = load_dataset(p.data);
  const DmModel dm = dm_fit(ds.X, p.alpha, p.w1, p.dim);
  save_dm(dm, p.out);
  std::cout << "wrote " << p.out << ": d=" << dm.d << " epsilon1="
            << std::scientific << std::setprecision(6) << dm.epsilon1
            << " xi=[";
  for (Eigen::Index i = 0; i < dm.xi.size(); ++i) {
    std::cout << (i > 0 ? " " : "") << std::setprecision(6) << dm.xi[i];
  }
  std::cout << "]" << (dm.gap_warning ? " (degenerate trailing gap)" : "")
            << "\n";
}

// ---------------------------------------------------------------------------
// fit

struct FitParams {
  std::string decoder;
  std::string encoder;
  std::string train;  // pod only; other decoders use the encoder's data
  std::string out;
  std::string features = "N";
  double lambda = 1e-3;
  double delta_s = 1e-8;
  double sigma_w = 0.3;
  double sigma_ub = 6.0;
  Eigen::Index q = 10;
  double c = 8.0;
  double w2 = 0.4;
  Eigen::Index k = 6;
  double tol = 1e-8;
  Eigen::Index pod_dim = 2;
  std::uint64_t seed = 0;
};

void run_fit(const FitParams& p) {
  const DecoderId id = parse_decoder(p.decoder);
  json header;
  header["container"] = "decoder";
  header["decoder"] = id.name;
  std::map<std::string, Eigen::MatrixXd> mats;

  if (id.kind == DecoderKind::Pod) {
    if (p.train.empty()) {
      throw std::invalid_argument("fit: pod requires --train");
    }
    const DataSet train = load_dataset(p.train);
    const PodDecoder model = pod_fit(train.X, p.pod_dim);
    header["d"] = p.pod_dim;
    mats["U_d"] = model.U_d;
    mats["mean"] = as_column(model.mean);
    mats["svals"] = as_column(model.svals);
    save_model(header, mats, p.out);
    std::cout << "wrote " << p.out << ": pod d=" << p.pod_dim << "\n";
    return;
  }

  if (p.encoder.empty()) {
    throw std::invalid_argument("fit: --encoder is required for " + id.name);
  }
  const DmModel dm = load_dm(p.encoder);
  const Eigen::MatrixXd Y_train = dm_train_embedding(dm);
  const Eigen::MatrixXd& X_train = dm.X_train;
  const Eigen::Index n = Y_train.cols();

  if (id.kind == DecoderKind::Ddm) {
    const DdmDecoder model = ddm_fit(Y_train, X_train, p.w2);
    header["w2"] = p.w2;
    header["epsilon2"] = model.epsilon2;
    header["rank"] = model.lam_r.size();
    mats["Y_train"] = model.Y_train;
    mats["lam_r"] = as_column(model.lam_r);
    mats["V_r"] = model.V_r;
    mats["C"] = model.C;
    save_model(header, mats, p.out);
    std::cout << "wrote " << p.out << ": ddm w2=" << p.w2
              << " rank=" << model.lam_r.size() << "\n";
    return;
  }

  if (id.kind == DecoderKind::Knn) {
    if (p.k < 1 || p.k > n) {
      throw std::invalid_argument("fit: need 1 <= k <= N");
    }
    header["k"] = p.k;
    header["tol"] = p.tol;
    save_model(header, mats, p.out);
    std::cout << "wrote " << p.out << ": knn k=" << p.k << "\n";
    return;
  }

  // Ridge decoders: sample the feature map, fit, and record everything
  // needed to rebuild the map at decode time.
  const Eigen::Index P = parse_features(p.features, n);
  FeatureMap map;
  if (id.feature == FeatureKind::Rff) {
    map = sample_rff(dm.d, P, p.sigma_w, p.seed);
    header["sigma_w"] = p.sigma_w;
  } else if (id.feature == FeatureKind::MsRff) {
    map = sample_msrff(dm.d, P, p.q, p.sigma_ub, p.seed);
    header["sigma_ub"] = p.sigma_ub;
    header["q"] = p.q;
  } else {
    map = sample_sigmoid(Y_train, P, p.c, p.seed);
    header["c"] = p.c;
    mats["W"] = map.W;
    mats["b"] = as_column(map.b);
  }
  const Eigen::MatrixXd Phi = feature_matrix(map, Y_train);

  RidgeDecoder model;
  if (id.kind == DecoderKind::Randsmap) {
    model = randsmap_fit(Phi, X_train, p.lambda, p.delta_s);
    header["delta_s"] = p.delta_s;
    mats["U_r"] = model.U_r;
  } else {
    model = rfnn_fit(Phi, X_train, p.lambda);
  }
  bind_map(model, map);

  header["kind"] = id.kind == DecoderKind::Randsmap ? "randsmap" : "rfnn";
  header["feature"] = feature_name(id.feature);
  header["P"] = P;
  header["d"] = dm.d;
  header["lambda"] = p.lambda;
  header["seed"] = p.seed;
  header["map_seed"] = map.seed;
  header["trunc_rank"] = model.trunc_rank;
  header["sigma_next"] = model.sigma_next;
  mats["A"] = model.A;
  save_model(header, mats, p.out);

  std::cout << "wrote " << p.out << ": " << id.name << " P=" << P
            << " lambda=" << p.lambda;
  if (id.kind == DecoderKind::Randsmap) {
    const auto [residual, sigma_next] = conservation_residual(model);
    std::cout << std::scientific << std::setprecision(3)
              << " conservation-residual=" << residual
              << " sigma_next=" << sigma_next;
  }
  std::cout << "\n";
}

// ---------------------------------------------------------------------------
// decode

struct DecodeParams {
  std::string model;
  std::string encoder;
  std::string latent;
  std::string data;
  std::string out;
};

FeatureMap rebuild_map(const json& header,
                       const std::map<std::string, Eigen::MatrixXd>& mats,
                       const std::filesystem::path& path) {
  const FeatureKind kind =
      parse_feature(need_field<std::string>(header, "feature", path));
  const Eigen::Index d = need_field<Eigen::Index>(header, "d", path);
  const Eigen::Index P = need_field<Eigen::Index>(header, "P", path);
  const std::uint64_t seed = need_field<std::uint64_t>(header, "seed", path);
  if (kind == FeatureKind::Rff) {
    return sample_rff(d, P, need_field<double>(header, "sigma_w", path),
                      seed);
  }
  if (kind == FeatureKind::MsRff) {
    return sample_msrff(d, P, need_field<Eigen::Index>(header, "q", path),
                        need_field<double>(header, "sigma_ub", path), seed);
  }
  FeatureMap map;
  map.kind = FeatureKind::Sigmoid;
  map.d = d;
  map.P = P;
  map.W = need_matrix(mats, "W", path);
  map.b = need_matrix(mats, "b", path);
  map.c = need_field<double>(header, "c", path);
  map.seed = seed;
  return map;
}

void run_decode(const DecodeParams& p) {
  auto [header, mats] = load_model(p.model);
  check_container(header, "decoder", p.model);
  const DecoderId id =
      parse_decoder(need_field<std::string>(header, "decoder", p.model));

  // Query coordinates: either a latent file, or ambient data pushed through
  // the encoder. The pod baseline reconstructs from ambient data directly.
  Eigen::MatrixXd Y_star;
  Eigen::MatrixXd X_star;
  DmModel dm;
  bool have_dm = false;
  if (!p.encoder.empty()) {
    dm = load_dm(p.encoder);
    have_dm = true;
  }
  if (id.kind == DecoderKind::Pod) {
    if (p.data.empty()) {
      throw std::invalid_argument("decode: pod requires --data");
    }
    X_star = load_dataset(p.data).X;
  } else if (!p.latent.empty()) {
    Y_star = load_dataset(p.latent).X;
  } else if (!p.data.empty()) {
    if (!have_dm) {
      throw std::invalid_argument("decode: --data requires --encoder");
    }
    Y_star = dm_encode(dm, load_dataset(p.data).X);
  } else {
    throw std::invalid_argument("decode: need --latent or --data");
  }

  Reconstruction rec;
  if (id.is_ridge) {
    RidgeDecoder model;
    model.kind = need_field<std::string>(header, "kind", p.model) == "randsmap"
                     ? DecoderKind::Randsmap
                     : DecoderKind::Rfnn;
    model.A = need_matrix(mats, "A", p.model);
    model.lambda = need_field<double>(header, "lambda", p.model);
    if (model.kind == DecoderKind::Randsmap) {
      model.trunc_rank = need_field<Eigen::Index>(header, "trunc_rank",
                                                  p.model);
      model.sigma_next = need_field<double>(header, "sigma_next", p.model);
      model.U_r = need_matrix(mats, "U_r", p.model);
    }
    const FeatureMap map = rebuild_map(header, mats, p.model);
    model.has_map_id = true;
    model.map_kind = map.kind;
    model.map_seed = need_field<std::uint64_t>(header, "map_seed", p.model);
    model.map_P = map.P;
    model.map_d = map.d;
    rec = decode(model, map, Y_star);
  } else if (id.kind == DecoderKind::Ddm) {
    DdmDecoder model;
    model.Y_train = need_matrix(mats, "Y_train", p.model);
    model.epsilon2 = need_field<double>(header, "epsilon2", p.model);
    model.w2 = need_field<double>(header, "w2", p.model);
    model.lam_r = need_matrix(mats, "lam_r", p.model);
    model.V_r = need_matrix(mats, "V_r", p.model);
    model.C = need_matrix(mats, "C", p.model);
    rec = ddm_decode(model, Y_star);
  } else if (id.kind == DecoderKind::Knn) {
    if (!have_dm) {
      throw std::invalid_argument("decode: knn requires --encoder");
    }
    const Eigen::Index k = need_field<Eigen::Index>(header, "k", p.model);
    const double tol = need_field<double>(header, "tol", p.model);
    const Eigen::MatrixXd Y_train = dm_train_embedding(dm);
    rec.X_hat.resize(dm.X_train.rows(), Y_star.cols());
    for (Eigen::Index i = 0; i < Y_star.cols(); ++i) {
      rec.X_hat.col(i) =
          knn_decode(dm, Y_train, dm.X_train, Y_star.col(i), k, tol).x_hat;
    }
    rec.conservation =
        (rec.X_hat.colwise().sum().array() - 1.0).abs().matrix();
  } else {
    PodDecoder model;
    model.U_d = need_matrix(mats, "U_d", p.model);
    model.mean = need_matrix(mats, "mean", p.model);
    model.svals = need_matrix(mats, "svals", p.model);
    rec = pod_decode(model, X_star);
  }

  DataSet out;
  out.X = rec.X_hat;
  out.mass_preserving = false;
  out.meta = json{{"decoder", id.name}};
  save_dataset(out, p.out);
  std::cout << "wrote " << p.out << ": M=" << rec.X_hat.rows()
            << " L=" << rec.X_hat.cols();
  if (rec.conservation.size() > 0) {
    std::cout << std::scientific << std::setprecision(3)
              << " mean-conservation=" << rec.conservation.mean();
  }
  std::cout << "\n";
}

// ---------------------------------------------------------------------------
// eval

struct EvalParams {
  std::string truth;
  std::string recon;
  std::string out;
};

void run_eval(const EvalParams& p) {
  const DataSet truth = load_dataset(p.truth);
  const DataSet recon = load_dataset(p.recon);
  const EvalReport rep = errors(truth.X, recon.X, truth.mass_preserving);

  std::cout << std::scientific << std::setprecision(6)
            << "mean e2=" << mean_of(rep.e2)
            << " mean einf=" << mean_of(rep.einf);
  if (rep.econ.size() > 0) {
    std::cout << " mean econ=" << mean_of(rep.econ)
              << " max econ=" << rep.econ.maxCoeff();
  }
  std::cout << " (" << rep.e2.size() << " points)\n";

  if (!p.out.empty()) {
    std::ofstream os(p.out);
    if (!os) throw IoError("cannot open '" + p.out + "' for writing");
    os << std::setprecision(12) << std::scientific;
    const bool mass = rep.econ.size() > 0;
    os << "index,e2,einf" << (mass ? ",econ" : "") << "\n";
    for (Eigen::Index i = 0; i < rep.e2.size(); ++i) {
      os << i << ',' << rep.e2[i] << ',' << rep.einf[i];
      if (mass) os << ',' << rep.econ[i];
      os << "\n";
    }
    if (!os) throw IoError("write failed for '" + p.out + "'");
  }
}

// ---------------------------------------------------------------------------
// tune

struct TuneParams {
  std::string decoder;
  std::string encoder;
  std::string val;
  std::string out;
  std::string features = "N";
  double grid_lo = 0.0;
  double grid_hi = 0.0;
  std::size_t grid_count = 10;
  double lambda = 1e-3;
  Eigen::Index q = 10;
  std::size_t knn_val_cap = 0;
  std::uint64_t seed = 0;
};

void run_tune(const TuneParams& p) {
  const DecoderId id = parse_decoder(p.decoder);
  if (id.kind == DecoderKind::Pod) {
    throw std::invalid_argument("tune: pod has no tunable hyperparameter");
  }
  const DmModel dm = load_dm(p.encoder);
  const DataSet val = load_dataset(p.val);
  if (!(p.grid_hi > p.grid_lo)) {
    throw std::invalid_argument("tune: need --grid-lo < --grid-hi");
  }

  TuneTask task;
  task.kind = id.kind;
  task.feature = id.feature;
  task.P = id.is_ridge
               ? parse_features(p.features, dm.X_train.cols())
               : 0;
  task.Q = p.q;
  task.lambda = p.lambda;
  task.seed = p.seed;
  task.knn_val_cap = p.knn_val_cap;

  const std::vector<double> grid =
      id.kind == DecoderKind::Knn
          ? integer_grid(p.grid_lo, p.grid_hi, p.grid_count)
          : linear_grid(p.grid_lo, p.grid_hi, p.grid_count);
  const TuneResult res = tune_decoder(task, grid, dm, dm.X_train, val.X);

  std::cout << std::scientific << std::setprecision(6);
  for (std::size_t i = 0; i < res.grid.size(); ++i) {
    std::cout << "  " << res.grid[i] << "  val-e2 ";
    if (std::isnan(res.val_errors[i])) {
      std::cout << "failed";
    } else {
      std::cout << res.val_errors[i];
    }
    std::cout << (i == res.best_index ? "  <- best" : "") << "\n";
  }
  std::cout << "best " << res.best << "\n";

  if (!p.out.empty()) {
    json report;
    report["decoder"] = id.name;
    report["grid"] = res.grid;
    report["val_errors"] = res.val_errors;
    report["best"] = res.best;
    report["best_index"] = res.best_index;
    std::ofstream os(p.out);
    if (!os) throw IoError("cannot open '" + p.out + "' for writing");
    os << report.dump(2) << "\n";
    if (!os) throw IoError("write failed for '" + p.out + "'");
  }
}

// ---------------------------------------------------------------------------
// repro

struct ReproParams {
  std::string benchmark;
  std::string out;
  double scale = 1.0;
  bool desk = false;
  std::uint64_t seed = 0;
  double lambda = 1e-3;
  Eigen::Index q = 10;
  std::size_t knn_train_cap = 500;
  std::size_t knn_val_cap = 200;
  std::size_t knn_test_cap = 500;
};

void run_repro(const ReproParams& p) {
  ReproduceOptions opt;
  opt.scale = p.scale;
  opt.desk = p.desk;
  opt.seed = p.seed;
  opt.lambda = p.lambda;
  opt.msrff_q = p.q;
  opt.knn_train_cap = p.knn_train_cap;
  opt.knn_val_cap = p.knn_val_cap;
  opt.knn_test_cap = p.knn_test_cap;

  const std::vector<DecoderRow> rows =
      reproduce_table(p.benchmark, opt, p.out);

  std::cout << std::left << std::setw(16) << "decoder" << std::right
            << std::setw(6) << "P" << std::setw(12) << "hyper"
            << std::setw(12) << "train_e2" << std::setw(12) << "test_e2"
            << std::setw(12) << "train_econ" << std::setw(12) << "test_econ"
            << std::setw(10) << "fit_s" << std::setw(10) << "infer_s"
            << "\n";
  for (const DecoderRow& r : rows) {
    const auto cell = [](double v) {
      if (std::isnan(v)) return std::string("-");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3e", v);
      return std::string(buf);
    };
    std::cout << std::left << std::setw(16) << r.decoder << std::right
              << std::setw(6) << r.P << std::setw(12)
              << cell(r.hyperparameter) << std::setw(12) << cell(r.train_e2)
              << std::setw(12) << cell(r.test_e2) << std::setw(12)
              << cell(r.train_econ) << std::setw(12) << cell(r.test_econ)
              << std::setw(10) << cell(r.fit_time) << std::setw(10)
              << cell(r.infer_time) << "\n";
  }
  std::cout << "wrote CSVs under " << p.out << "\n";
}

// ---------------------------------------------------------------------------
// kernel_bench

struct KernelBenchParams {
  std::string kind = "rff";
  double param = 1.0;
  Eigen::Index q = 10;
  std::string points;
  std::size_t n = 40;
  Eigen::Index dim = 2;
  double spread = 1.0;
  std::uint64_t cloud_seed = 0;
  std::vector<Eigen::Index> p_list = {512, 8192};
  std::size_t seeds = 20;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out;
};

void run_kernel_bench(const KernelBenchParams& p) {
  FeatureKind kind;
  if (p.kind == "rff") {
    kind = FeatureKind::Rff;
  } else if (p.kind == "msrff") {
    kind = FeatureKind::MsRff;
  } else {
    throw std::invalid_argument(
        "kernel_bench: --kind must be rff or msrff (sigmoid has no "
        "closed-form kernel)");
  }

  Eigen::MatrixXd pts;
  if (!p.points.empty()) {
    pts = load_dataset(p.points).X;
  } else {
    CounterRng rng(p.cloud_seed);
    pts.resize(p.dim, static_cast<Eigen::Index>(p.n));
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        pts(i, j) = p.spread * rng.normal();
      }
    }
  }

  const KernelBoundTable table = kernel_bound_check(
      kind, p.param, p.q, pts, p.p_list, p.seeds, p.seed, p.jobs);

  std::cout << std::setw(8) << "P" << std::setw(16) << "median_err"
            << std::setw(16) << "median_bound" << std::setw(14)
            << "frac_within" << "\n"
            << std::scientific << std::setprecision(6);
  for (const KernelBoundRow& row : table.rows) {
    std::cout << std::setw(8) << row.P << std::setw(16) << row.median_error
              << std::setw(16) << row.median_bound << std::setw(14)
              << std::setprecision(3) << row.frac_within
              << std::setprecision(6) << "\n";
  }
  std::cout << "median error monotone in P: "
            << (table.median_monotone ? "yes" : "no") << "\n";

  if (!p.out.empty()) {
    std::ofstream os(p.out);
    if (!os) throw IoError("cannot open '" + p.out + "' for writing");
    os << std::setprecision(12) << std::scientific;
    os << "P,median_error,median_bound,frac_within\n";
    for (const KernelBoundRow& row : table.rows) {
      os << row.P << ',' << row.median_error << ',' << row.median_bound
         << ',' << row.frac_within << "\n";
    }
    if (!os) throw IoError("write failed for '" + p.out + "'");
  }
}

// ---------------------------------------------------------------------------

struct Command {
  CLI::App* app = nullptr;
  ConfigBinder binder;
  std::string config_path;
  bool is_gen = false;
  std::function<void()> run;
};

int dispatch(Command& cmd) {
  try {
    if (!cmd.config_path.empty()) {
      cmd.binder.apply(load_config(cmd.config_path));
    }
    cmd.run();
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cmd.is_gen ? 3 : 5;
  } catch (const json::exception& e) {
    std::cerr << "error: corrupt input: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mass-preserving random-feature decoders for the manifold "
               "pre-image problem"};
  app.require_subcommand(1);

  GenParams gen;
  EncodeParams encode;
  FitParams fit;
  DecodeParams decode_p;
  EvalParams eval;
  TuneParams tune_p;
  ReproParams repro;
  KernelBenchParams kb;

  Command cmd_gen, cmd_encode, cmd_fit, cmd_decode, cmd_eval, cmd_tune,
      cmd_repro, cmd_kb;

  const auto add_config = [](CLI::App* sub, Command& cmd) {
    sub->add_option("--config", cmd.config_path,
                    "JSON config file; flags override its values");
  };

  // gen -----------------------------------------------------------------
  {
    CLI::App* sub = app.add_subcommand(
        "gen", "Generate a benchmark dataset (swiss, scurve, mri, lwr, "
               "hughes)");
    cmd_gen.app = sub;
    cmd_gen.is_gen = true;
    ConfigBinder& b = cmd_gen.binder;
    bind_opt(*sub, b, "--benchmark", gen.benchmark,
         "Benchmark id: swiss | scurve | mri | lwr | hughes")->required();
    bind_opt(*sub, b, "--out", gen.out, "Output dataset file")->required();
    bind_opt(*sub, b, "--n", gen.n, "Point count (swiss, scurve)");
    bind_opt(*sub, b, "--noise", gen.noise,
         "Noise sigma; -1 = canonical (swiss 0.05, scurve 0.01, lwr 0.02)");
    bind_opt(*sub, b, "--size", gen.size, "Phantom image side (mri)");
    bind_opt(*sub, b, "--angles", gen.angles, "Rotation count (mri)");
    bind_opt(*sub, b, "--traj", gen.traj, "Trajectory count (lwr, hughes)");
    bind_opt(*sub, b, "--snaps", gen.snaps, "Snapshots per trajectory");
    bind_opt(*sub, b, "--cells", gen.cells, "Cell count (lwr)");
    bind_opt(*sub, b, "--nx", gen.nx, "Cells in x (hughes)");
    bind_opt(*sub, b, "--ny", gen.ny, "Cells in y (hughes)");
    bind_opt(*sub, b, "--dt", gen.dt, "Time step; -1 = solver default");
    bind_opt(*sub, b, "--t-end", gen.t_end, "Final time; -1 = solver default");
    bind_opt(*sub, b, "--v-max", gen.v_max, "Max speed; -1 = solver default");
    bind_opt(*sub, b, "--rho-max", gen.rho_max,
         "Max density; -1 = solver default");
    bind_opt(*sub, b, "--flux", gen.flux, "LWR flux: godunov | roe");
    CLI::Option* seed = bind_opt(*sub, b, "--seed", gen.seed, "Generator seed");
    bind_opt(*sub, b, "--split-train", gen.split_train,
         "Also write a train split of this size");
    bind_opt(*sub, b, "--split-val", gen.split_val, "Validation split size");
    bind_opt(*sub, b, "--split-test", gen.split_test, "Test split size");
    bind_opt(*sub, b, "--split-seed", gen.split_seed, "Split permutation seed");
    bind_opt(*sub, b, "--export-csv", gen.export_csv_path,
         "Also dump the raw matrix as CSV");
    add_config(sub, cmd_gen);
    cmd_gen.run = [&, seed] {
      gen.seed = resolve_seed(gen.seed, seed, cmd_gen.binder);
      run_gen(gen);
    };
  }

  // encode ----------------------------------------------------------------
  {
    CLI::App* sub = app.add_subcommand(
        "encode", "Fit the Diffusion-Maps encoder on a dataset");
    cmd_encode.app = sub;
    ConfigBinder& b = cmd_encode.binder;
    bind_opt(*sub, b, "--data", encode.data, "Training dataset file")->required();
    bind_opt(*sub, b, "--out", encode.out, "Output encoder file")->required();
    bind_opt(*sub, b, "--alpha", encode.alpha,
         "Density-normalization exponent in [0, 1]");
    bind_opt(*sub, b, "--w1", encode.w1, "Bandwidth multiplier");
    bind_opt(*sub, b, "--dim", encode.dim, "Embedding dimension");
    add_config(sub, cmd_encode);
    cmd_encode.run = [&] { run_encode(encode); };
  }

  // fit ---------------------------------------------------------------------
  {
    CLI::App* sub = app.add_subcommand(
        "fit", "Fit a decoder against a fitted encoder");
    cmd_fit.app = sub;
    ConfigBinder& b = cmd_fit.binder;
    bind_opt(*sub, b, "--decoder", fit.decoder,
         "rfnn-rff | rfnn-msrff | rfnn-sig | randsmap-rff | randsmap-msrff "
         "| randsmap-sig | ddm | knn | pod")->required();
    bind_opt(*sub, b, "--encoder", fit.encoder,
         "Encoder file (required except for pod); supplies the training "
         "data and latent coordinates");
    bind_opt(*sub, b, "--train", fit.train, "Training dataset (pod only)");
    bind_opt(*sub, b, "--out", fit.out, "Output model file")->required();
    bind_opt(*sub, b, "--features", fit.features,
         "Feature count: N, N/2, N/4, or a positive integer");
    bind_opt(*sub, b, "--lambda", fit.lambda, "Ridge parameter");
    bind_opt(*sub, b, "--delta-s", fit.delta_s,
         "Relative singular-value truncation (randsmap)");
    bind_opt(*sub, b, "--sigma-w", fit.sigma_w, "Fourier scale (rff)");
    bind_opt(*sub, b, "--sigma-ub", fit.sigma_ub, "Scale upper bound (msrff)");
    bind_opt(*sub, b, "--q", fit.q, "Scale count (msrff)");
    bind_opt(*sub, b, "--c", fit.c, "Weight range (sig)");
    bind_opt(*sub, b, "--w2", fit.w2, "Latent bandwidth multiplier (ddm)");
    bind_opt(*sub, b, "--k", fit.k, "Neighbor count (knn)");
    bind_opt(*sub, b, "--tol", fit.tol, "Gradient-mapping tolerance (knn)");
    bind_opt(*sub, b, "--pod-dim", fit.pod_dim, "Basis size (pod)");
    CLI::Option* seed =
        bind_opt(*sub, b, "--seed", fit.seed, "Feature-map seed");
    add_config(sub, cmd_fit);
    cmd_fit.run = [&, seed] {
      fit.seed = resolve_seed(fit.seed, seed, cmd_fit.binder);
      run_fit(fit);
    };
  }

  // decode ------------------------------------------------------------------
  {
    CLI::App* sub = app.add_subcommand(
        "decode", "Reconstruct ambient fields from latent coordinates");
    cmd_decode.app = sub;
    ConfigBinder& b = cmd_decode.binder;
    bind_opt(*sub, b, "--model", decode_p.model, "Decoder model file")
        ->required();
    bind_opt(*sub, b, "--encoder", decode_p.encoder,
         "Encoder file (needed for --data and for knn)");
    bind_opt(*sub, b, "--latent", decode_p.latent,
         "Latent coordinates as a dataset file (d x L)");
    bind_opt(*sub, b, "--data", decode_p.data,
         "Ambient dataset to encode first (pod reconstructs it directly)");
    bind_opt(*sub, b, "--out", decode_p.out, "Output reconstruction file")
        ->required();
    add_config(sub, cmd_decode);
    cmd_decode.run = [&] { run_decode(decode_p); };
  }

  // eval ----------------------------------------------------------------
  {
    CLI::App* sub = app.add_subcommand(
        "eval", "Per-point reconstruction errors against a truth dataset");
    cmd_eval.app = sub;
    ConfigBinder& b = cmd_eval.binder;
    bind_opt(*sub, b, "--truth", eval.truth, "Ground-truth dataset")->required();
    bind_opt(*sub, b, "--recon", eval.recon, "Reconstruction dataset")
        ->required();
    bind_opt(*sub, b, "--out", eval.out,
         "Per-point CSV report (index,e2,einf[,econ])");
    add_config(sub, cmd_eval);
    cmd_eval.run = [&] { run_eval(eval); };
  }

  // tune ----------------------------------------------------------------
  {
    CLI::App* sub = app.add_subcommand(
        "tune", "Grid-search one decoder hyperparameter on a validation set");
    cmd_tune.app = sub;
    ConfigBinder& b = cmd_tune.binder;
    bind_opt(*sub, b, "--decoder", tune_p.decoder,
         "Decoder id (pod is not tunable)")->required();
    bind_opt(*sub, b, "--encoder", tune_p.encoder, "Encoder file")->required();
    bind_opt(*sub, b, "--val", tune_p.val, "Validation dataset")->required();
    bind_opt(*sub, b, "--grid-lo", tune_p.grid_lo, "Grid lower end")->required();
    bind_opt(*sub, b, "--grid-hi", tune_p.grid_hi, "Grid upper end")->required();
    bind_opt(*sub, b, "--grid-count", tune_p.grid_count, "Grid size");
    bind_opt(*sub, b, "--features", tune_p.features,
         "Feature count: N, N/2, N/4, or a positive integer");
    bind_opt(*sub, b, "--lambda", tune_p.lambda, "Ridge parameter");
    bind_opt(*sub, b, "--q", tune_p.q, "Scale count (msrff)");
    bind_opt(*sub, b, "--knn-val-cap", tune_p.knn_val_cap,
         "Validation points scored by knn; 0 = all");
    bind_opt(*sub, b, "--out", tune_p.out, "JSON result file");
    CLI::Option* seed =
        bind_opt(*sub, b, "--seed", tune_p.seed, "Feature-map seed");
    add_config(sub, cmd_tune);
    cmd_tune.run = [&, seed] {
      tune_p.seed = resolve_seed(tune_p.seed, seed, cmd_tune.binder);
      run_tune(tune_p);
    };
  }

  // repro -----------------------------------------------------------------
  {
    CLI::App* sub = app.add_subcommand(
        "repro", "Run the full benchmark pipeline and write the result CSVs");
    cmd_repro.app = sub;
    ConfigBinder& b = cmd_repro.binder;
    bind_opt(*sub, b, "--benchmark", repro.benchmark,
         "swiss | scurve | lwr | mri | hughes")->required();
    bind_opt(*sub, b, "--out", repro.out, "Output directory")->required();
    CLI::Option* scale =
        bind_opt(*sub, b, "--scale", repro.scale,
             "Multiplier on the paper's point counts");
    bind_flag(*sub, b, "--desk", repro.desk,
              "Use the small fixed desk geometry")->excludes(scale);
    bind_opt(*sub, b, "--lambda", repro.lambda, "Ridge parameter");
    bind_opt(*sub, b, "--q", repro.q, "Scale count (msrff)");
    bind_opt(*sub, b, "--knn-train-cap", repro.knn_train_cap,
         "Training points evaluated by knn; 0 = all");
    bind_opt(*sub, b, "--knn-val-cap", repro.knn_val_cap,
         "Validation points scored by knn; 0 = all");
    bind_opt(*sub, b, "--knn-test-cap", repro.knn_test_cap,
         "Test points evaluated by knn; 0 = all");
    CLI::Option* seed =
        bind_opt(*sub, b, "--seed", repro.seed, "Pipeline base seed");
    add_config(sub, cmd_repro);
    cmd_repro.run = [&, seed] {
      repro.seed = resolve_seed(repro.seed, seed, cmd_repro.binder);
      run_repro(repro);
    };
  }

  // kernel_bench ---------------------------------------------------------
  {
    CLI::App* sub = app.add_subcommand(
        "kernel_bench",
        "Induced-kernel concentration against the Bernstein bound");
    cmd_kb.app = sub;
    ConfigBinder& b = cmd_kb.binder;
    bind_opt(*sub, b, "--kind", kb.kind, "Feature kind: rff | msrff");
    bind_opt(*sub, b, "--param", kb.param, "sigma_w (rff) or sigma_ub (msrff)");
    bind_opt(*sub, b, "--q", kb.q, "Scale count (msrff)");
    bind_opt(*sub, b, "--points", kb.points,
         "Latent points as a dataset file; omit for a Gaussian cloud");
    bind_opt(*sub, b, "--n", kb.n, "Cloud point count");
    bind_opt(*sub, b, "--dim", kb.dim, "Cloud dimension");
    bind_opt(*sub, b, "--spread", kb.spread, "Cloud standard deviation");
    bind_opt(*sub, b, "--cloud-seed", kb.cloud_seed, "Cloud seed");
    bind_opt(*sub, b, "--p-list", kb.p_list, "Feature counts to test");
    bind_opt(*sub, b, "--seeds", kb.seeds, "Seeds per feature count");
    CLI::Option* seed = bind_opt(*sub, b, "--seed", kb.seed, "Base seed");
    bind_opt(*sub, b, "--jobs", kb.jobs, "Worker threads across seeds");
    bind_opt(*sub, b, "--out", kb.out, "CSV result file");
    add_config(sub, cmd_kb);
    cmd_kb.run = [&, seed] {
      kb.seed = resolve_seed(kb.seed, seed, cmd_kb.binder);
      run_kernel_bench(kb);
    };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (Command* cmd : {&cmd_gen, &cmd_encode, &cmd_fit, &cmd_decode,
                       &cmd_eval, &cmd_tune, &cmd_repro, &cmd_kb}) {
    if (cmd->app->parsed()) return dispatch(*cmd);
  }
  return 2;
}
