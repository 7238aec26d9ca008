// End-to-end checks of the command-line binary: exit codes, config
// merging, environment seed fallback, idempotent outputs, and the
// consistency of the two latent-input routes of `decode`.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "randsmap/dataset.hpp"
#include "randsmap/dmap.hpp"
#include "randsmap/synthdata.hpp"

using namespace randsmap;
namespace fs = std::filesystem;

namespace {

// Scratch directory shared by all cases; contents are rebuilt on demand and
// removed when the binary exits.
struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / "randsmap_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path operator/(const std::string& name) const { return dir / name; }
};

Scratch& scratch() {
  static Scratch s;
  return s;
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(RANDSMAP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return std::string(std::istreambuf_iterator<char>(is), {});
}

// Generates the shared small swiss-roll fixture once: dataset, splits, and
// a fitted encoder on the training split.
void make_fixture() {
  static bool done = false;
  if (done) return;
  const Scratch& s = scratch();
  REQUIRE(run_cli("gen --benchmark swiss --n 200 --seed 7 --out " +
                  (s / "sw.bin").string() +
                  " --split-train 100 --split-val 40 --split-test 60 "
                  "--split-seed 3") == 0);
  REQUIRE(run_cli("encode --data " + (s / "sw.train.bin").string() +
                  " --alpha 1.0 --w1 0.12 --dim 2 --out " +
                  (s / "enc.bin").string()) == 0);
  done = true;
}

}  // namespace

TEST_CASE("cli: help and argument errors") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("gen --help") == 0);
  CHECK(run_cli("") == 2);                       // missing subcommand
  CHECK(run_cli("gen --out x.bin") == 2);        // missing --benchmark
  CHECK(run_cli("frobnicate") == 2);             // unknown subcommand
  CHECK(run_cli("gen --benchmark nope --out " +
                (scratch() / "x.bin").string()) == 2);
}

TEST_CASE("cli: gen writes identical bytes for identical arguments") {
  const Scratch& s = scratch();
  CHECK(run_cli("gen --benchmark scurve --n 50 --seed 9 --out " +
                (s / "a.bin").string()) == 0);
  CHECK(run_cli("gen --benchmark scurve --n 50 --seed 9 --out " +
                (s / "b.bin").string()) == 0);
  CHECK(slurp(s / "a.bin") == slurp(s / "b.bin"));
  const DataSet ds = load_dataset(s / "a.bin");
  CHECK(ds.rows() == 20);
  CHECK(ds.cols() == 50);
}

TEST_CASE("cli: generation failure exits 3") {
  // CFL is violated on the first LWR step at this time step.
  CHECK(run_cli("gen --benchmark lwr --traj 1 --snaps 3 --dt 0.2 --out " +
                (scratch() / "bad_lwr.bin").string()) == 3);
}

TEST_CASE("cli: missing input exits 4") {
  const Scratch& s = scratch();
  CHECK(run_cli("encode --data " + (s / "no_such.bin").string() +
                " --out " + (s / "x.bin").string()) == 4);
  CHECK(run_cli("eval --truth " + (s / "no_such.bin").string() +
                " --recon " + (s / "no_such.bin").string()) == 4);
}

TEST_CASE("cli: config merge, precedence, and unknown keys") {
  make_fixture();
  const Scratch& s = scratch();

  std::ofstream(s / "bad.json") << "{\"w1\": 0.2, \"bogus\": 1}\n";
  CHECK(run_cli("encode --data " + (s / "sw.train.bin").string() +
                " --config " + (s / "bad.json").string() + " --out " +
                (s / "x.bin").string()) == 2);

  // The flag wins over the config value; the config fills the rest.
  std::ofstream(s / "cfg.json") << "{\"w1\": 0.2, \"dim\": 2}\n";
  CHECK(run_cli("encode --data " + (s / "sw.train.bin").string() +
                " --config " + (s / "cfg.json").string() +
                " --w1 0.12 --out " + (s / "enc_cfg.bin").string()) == 0);
  const auto [header, mats] = load_model(s / "enc_cfg.bin");
  CHECK(header.at("w1").get<double>() == 0.12);
  CHECK(header.at("d").get<int>() == 2);

  // Identical to the flag-only encoder from the fixture.
  CHECK(slurp(s / "enc_cfg.bin") == slurp(s / "enc.bin"));
}

TEST_CASE("cli: RANDSMAP_SEED is the fallback seed") {
  const Scratch& s = scratch();
  REQUIRE(setenv("RANDSMAP_SEED", "9", 1) == 0);
  CHECK(run_cli("gen --benchmark scurve --n 50 --out " +
                (s / "env.bin").string()) == 0);
  // An explicit flag still wins.
  CHECK(run_cli("gen --benchmark scurve --n 50 --seed 11 --out " +
                (s / "flag.bin").string()) == 0);
  REQUIRE(setenv("RANDSMAP_SEED", "junk", 1) == 0);
  CHECK(run_cli("gen --benchmark scurve --n 50 --out " +
                (s / "junk.bin").string()) == 2);
  REQUIRE(unsetenv("RANDSMAP_SEED") == 0);
  CHECK(run_cli("gen --benchmark scurve --n 50 --seed 9 --out " +
                (s / "seed9.bin").string()) == 0);
  CHECK(run_cli("gen --benchmark scurve --n 50 --seed 11 --out " +
                (s / "seed11.bin").string()) == 0);
  CHECK(slurp(s / "env.bin") == slurp(s / "seed9.bin"));
  CHECK(slurp(s / "flag.bin") == slurp(s / "seed11.bin"));
}

TEST_CASE("cli: fit, decode, and eval round trip") {
  make_fixture();
  const Scratch& s = scratch();
  REQUIRE(run_cli("fit --decoder rfnn-sig --encoder " +
                  (s / "enc.bin").string() +
                  " --features N --c 8 --seed 5 --out " +
                  (s / "dec.bin").string()) == 0);

  // Refitting writes identical bytes.
  REQUIRE(run_cli("fit --decoder rfnn-sig --encoder " +
                  (s / "enc.bin").string() +
                  " --features N --c 8 --seed 5 --out " +
                  (s / "dec2.bin").string()) == 0);
  CHECK(slurp(s / "dec.bin") == slurp(s / "dec2.bin"));

  REQUIRE(run_cli("decode --model " + (s / "dec.bin").string() +
                  " --encoder " + (s / "enc.bin").string() + " --data " +
                  (s / "sw.test.bin").string() + " --out " +
                  (s / "rec.bin").string()) == 0);
  const DataSet rec = load_dataset(s / "rec.bin");
  CHECK(rec.rows() == 3);
  CHECK(rec.cols() == 60);

  CHECK(run_cli("eval --truth " + (s / "sw.test.bin").string() +
                " --recon " + (s / "rec.bin").string() + " --out " +
                (s / "err.csv").string()) == 0);
  std::ifstream csv(s / "err.csv");
  std::string header_line;
  std::getline(csv, header_line);
  CHECK(header_line == "index,e2,einf");
  std::size_t rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 60);
}

TEST_CASE("cli: latent-file route matches the encode-on-the-fly route") {
  make_fixture();
  const Scratch& s = scratch();

  // Rebuild the encoder's latent view of the test data with the library and
  // feed it back through --latent; the reconstruction must match --data.
  const DataSet train = load_dataset(s / "sw.train.bin");
  const DataSet test = load_dataset(s / "sw.test.bin");
  const DmModel dm = dm_fit(train.X, 1.0, 0.12, 2);
  DataSet latent;
  latent.X = dm_encode(dm, test.X);
  save_dataset(latent, s / "latent.bin");

  REQUIRE(run_cli("decode --model " + (s / "dec.bin").string() +
                  " --encoder " + (s / "enc.bin").string() + " --data " +
                  (s / "sw.test.bin").string() + " --out " +
                  (s / "rec_data.bin").string()) == 0);
  REQUIRE(run_cli("decode --model " + (s / "dec.bin").string() +
                  " --latent " + (s / "latent.bin").string() + " --out " +
                  (s / "rec_latent.bin").string()) == 0);
  CHECK(slurp(s / "rec_data.bin") == slurp(s / "rec_latent.bin"));
}

TEST_CASE("cli: tampered feature-map stamp exits 5") {
  make_fixture();
  const Scratch& s = scratch();
  std::string bytes = slurp(s / "dec.bin");
  const std::string key = "\"map_seed\":5";
  const auto pos = bytes.find(key);
  REQUIRE(pos != std::string::npos);
  bytes[pos + key.size() - 1] = '6';
  std::ofstream(s / "dec_tampered.bin", std::ios::binary) << bytes;

  CHECK(run_cli("decode --model " + (s / "dec_tampered.bin").string() +
                " --encoder " + (s / "enc.bin").string() + " --data " +
                (s / "sw.test.bin").string() + " --out " +
                (s / "rec_bad.bin").string()) == 5);
}

TEST_CASE("cli: nonparametric decoders round trip") {
  make_fixture();
  const Scratch& s = scratch();
  REQUIRE(run_cli("fit --decoder knn --encoder " + (s / "enc.bin").string() +
                  " --k 4 --out " + (s / "knn.bin").string()) == 0);
  // knn decode needs the encoder for the training data; without it the
  // arguments are invalid.
  CHECK(run_cli("decode --model " + (s / "knn.bin").string() + " --data " +
                (s / "sw.val.bin").string() + " --out " +
                (s / "x.bin").string()) == 2);
  REQUIRE(run_cli("decode --model " + (s / "knn.bin").string() +
                  " --encoder " + (s / "enc.bin").string() + " --data " +
                  (s / "sw.val.bin").string() + " --out " +
                  (s / "rec_knn.bin").string()) == 0);
  CHECK(load_dataset(s / "rec_knn.bin").cols() == 40);

  REQUIRE(run_cli("fit --decoder pod --train " +
                  (s / "sw.train.bin").string() + " --pod-dim 2 --out " +
                  (s / "pod.bin").string()) == 0);
  REQUIRE(run_cli("decode --model " + (s / "pod.bin").string() + " --data " +
                  (s / "sw.test.bin").string() + " --out " +
                  (s / "rec_pod.bin").string()) == 0);
  CHECK(load_dataset(s / "rec_pod.bin").cols() == 60);
}

TEST_CASE("cli: tune reports a grid and kernel_bench writes its table") {
  make_fixture();
  const Scratch& s = scratch();
  CHECK(run_cli("tune --decoder rfnn-sig --encoder " +
                (s / "enc.bin").string() + " --val " +
                (s / "sw.val.bin").string() +
                " --grid-lo 4 --grid-hi 12 --grid-count 3 --seed 5 --out " +
                (s / "tune.json").string()) == 0);
  std::ifstream tf(s / "tune.json");
  nlohmann::json tj;
  tf >> tj;
  CHECK(tj.at("grid").size() == 3);
  CHECK(tj.at("val_errors").size() == 3);

  CHECK(run_cli("kernel_bench --kind rff --param 0.7 --n 10 --dim 2 "
                "--p-list 64 --p-list 256 --seeds 3 --seed 3 --out " +
                (s / "kb.csv").string()) == 0);
  std::ifstream kb(s / "kb.csv");
  std::string line;
  std::getline(kb, line);
  CHECK(line == "P,median_error,median_bound,frac_within");
  std::size_t rows = 0;
  for (; std::getline(kb, line);) ++rows;
  CHECK(rows == 2);
}
