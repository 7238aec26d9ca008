#include "randsmap/dataset.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "randsmap/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian only");

namespace randsmap {

namespace {

constexpr char kDataMagic[4] = {'M', 'D', 'E', 'C'};
constexpr char kModelMagic[4] = {'R', 'S', 'M', 'D'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::filesystem::path& path) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw IoError("truncated file: " + path.string());
  return value;
}

// The payload is row-major; Eigen matrices are column-major. Copy through a
// transposed row-major view so the file layout is independent of Eigen
// storage options.
void write_matrix_payload(std::ostream& os, const Eigen::MatrixXd& m) {
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor buf = m;
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(sizeof(double) * buf.size()));
}

Eigen::MatrixXd read_matrix_payload(std::istream& is, Eigen::Index rows,
                                    Eigen::Index cols,
                                    const std::filesystem::path& path) {
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor buf(rows, cols);
  is.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(sizeof(double) * buf.size()));
  if (!is) throw IoError("truncated payload: " + path.string());
  return buf;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) return Eigen::MatrixXd(0, 0);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jj = 0; jj < cols; ++jj)
      m(i, jj) = j.at(static_cast<std::size_t>(i))
                     .at(static_cast<std::size_t>(jj))
                     .get<double>();
  return m;
}

}  // namespace

void validate_dataset(const DataSet& ds) {
  if (!ds.X.allFinite())
    throw std::invalid_argument("dataset contains NaN or Inf entries");
  if (ds.mass_preserving) {
    for (Eigen::Index j = 0; j < ds.X.cols(); ++j) {
      const double s = ds.X.col(j).sum();
      if (std::abs(s - 1.0) > 1e-12)
        throw std::invalid_argument(
            "mass-preserving dataset has a column summing to " +
            std::to_string(s));
    }
  }
}

void save_dataset(const DataSet& ds, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(kDataMagic, 4);
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint64_t>(ds.X.rows()));
  write_pod(os, static_cast<std::uint64_t>(ds.X.cols()));
  write_pod(os, static_cast<std::uint8_t>(ds.mass_preserving ? 1 : 0));
  write_matrix_payload(os, ds.X);
  if (!os) throw IoError("write failed: " + path.string());

  nlohmann::json side;
  side["meta"] = ds.meta;
  side["mass_preserving"] = ds.mass_preserving;
  if (ds.intrinsic.size() > 0) side["intrinsic"] = matrix_to_json(ds.intrinsic);
  std::ofstream js(path.string() + ".json");
  if (!js) throw IoError("cannot open for writing: " + path.string() + ".json");
  js << side.dump(2) << '\n';
}

DataSet load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kDataMagic, 4) != 0)
    throw IoError("not a dataset file: " + path.string());
  const auto version = read_pod<std::uint32_t>(is, path);
  if (version != kVersion)
    throw IoError("unsupported dataset version in " + path.string());
  const auto m = read_pod<std::uint64_t>(is, path);
  const auto n = read_pod<std::uint64_t>(is, path);
  const auto flag = read_pod<std::uint8_t>(is, path);

  DataSet ds;
  ds.X = read_matrix_payload(is, static_cast<Eigen::Index>(m),
                             static_cast<Eigen::Index>(n), path);
  ds.mass_preserving = flag != 0;

  const std::filesystem::path side = path.string() + ".json";
  if (std::filesystem::exists(side)) {
    std::ifstream js(side);
    nlohmann::json j;
    try {
      js >> j;
    } catch (const nlohmann::json::exception& e) {
      throw IoError("corrupt sidecar " + side.string() + ": " + e.what());
    }
    if (j.contains("meta")) ds.meta = j["meta"];
    if (j.contains("intrinsic")) ds.intrinsic = matrix_from_json(j["intrinsic"]);
  }
  return ds;
}

void export_csv(const Eigen::MatrixXd& X, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.precision(17);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (j) os << ',';
      os << X(i, j);
    }
    os << '\n';
  }
}

void save_model(const nlohmann::json& header,
                const std::map<std::string, Eigen::MatrixXd>& matrices,
                const std::filesystem::path& path) {
  nlohmann::json full = header;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [name, m] : matrices) {
    list.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  }
  full["matrices"] = list;
  const std::string header_str = full.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(kModelMagic, 4);
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint64_t>(header_str.size()));
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [name, m] : matrices) write_matrix_payload(os, m);
  if (!os) throw IoError("write failed: " + path.string());
}

std::pair<nlohmann::json, std::map<std::string, Eigen::MatrixXd>> load_model(
    const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kModelMagic, 4) != 0)
    throw IoError("not a model file: " + path.string());
  const auto version = read_pod<std::uint32_t>(is, path);
  if (version != kVersion)
    throw IoError("unsupported model version in " + path.string());
  const auto header_bytes = read_pod<std::uint64_t>(is, path);
  std::string header_str(header_bytes, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(header_bytes));
  if (!is) throw IoError("truncated header: " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt model header " + path.string() + ": " + e.what());
  }
  std::map<std::string, Eigen::MatrixXd> matrices;
  for (const auto& entry : header.at("matrices")) {
    const auto name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    matrices[name] = read_matrix_payload(is, rows, cols, path);
  }
  return {header, matrices};
}

}  // namespace randsmap
