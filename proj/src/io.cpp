#include "bodyschema/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bodyschema/errors.hpp"

namespace bodyschema {

static_assert(std::endian::native == std::endian::little, "binary artifact formats assume a little-endian host");

namespace {

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw FormatError("cannot write " + path.string());
  }
  template <typename T>
  void put(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }
  void finish() {
    out_.flush();
    if (!out_) throw FormatError("short write to " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw FormatError("cannot open " + path.string());
  }
  template <typename T>
  T get() {
    T v{};
    bytes(&v, sizeof(T));
    return v;
  }
  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError(path_.string() + " is truncated");
  }
  void expect_magic(const char* magic, std::uint32_t version, const char* what) {
    char buf[4];
    bytes(buf, 4);
    if (std::memcmp(buf, magic, 4) != 0) {
      throw FormatError(path_.string() + " is not a " + what + " file (expected magic '" + magic + "')");
    }
    const auto v = get<std::uint32_t>();
    if (v != version) {
      throw FormatError(path_.string() + ": " + what + " format version " + std::to_string(v) + ", expected " +
                        std::to_string(version));
    }
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

}  // namespace

void write_tactile_log(const TactileLog& log, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.bytes("BSTL", 4);
  w.put(kTactileLogVersion);
  w.put(static_cast<std::uint64_t>(log.raw.rows()));
  w.put(static_cast<std::uint64_t>(log.raw.cols()));
  w.put(log.dt);
  w.put(static_cast<std::uint32_t>(log.quantized ? log.n_levels : 0));
  w.put(log.seed);
  w.put(log.agent_fingerprint);
  w.put(static_cast<std::uint32_t>(log.quantized ? 1 : 0));
  w.bytes(log.raw.data(), static_cast<std::size_t>(log.raw.size()) * sizeof(float));
  if (log.quantized) w.bytes(log.quantized->data(), static_cast<std::size_t>(log.quantized->size()));
  w.finish();
}

TactileLog read_tactile_log(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic("BSTL", kTactileLogVersion, "tactile log");
  TactileLog log;
  const auto m = r.get<std::uint64_t>();
  const auto t = r.get<std::uint64_t>();
  log.dt = r.get<double>();
  const auto n_levels = r.get<std::uint32_t>();
  log.seed = r.get<std::uint64_t>();
  log.agent_fingerprint = r.get<std::uint64_t>();
  const auto flags = r.get<std::uint32_t>();
  log.raw.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t));
  r.bytes(log.raw.data(), m * t * sizeof(float));
  if (flags & 1u) {
    LevelMatrix q(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t));
    r.bytes(q.data(), m * t);
    log.n_levels = static_cast<int>(n_levels);
    log.quantized = std::move(q);
  }
  return log;
}

void write_tactile_csv(const TactileLog& log, const std::filesystem::path& path, bool quantized) {
  if (quantized && !log.quantized) throw ValidationError("tactile log has no quantized data");
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(9);
  const Eigen::Index m = log.sensors();
  const Eigen::Index t = quantized ? log.quantized->cols() : log.raw.cols();
  out << m << ',' << t << '\n';
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < t; ++k) {
      if (k > 0) out << ',';
      if (quantized) {
        out << static_cast<int>((*log.quantized)(i, k));
      } else {
        out << log.raw(i, k);
      }
    }
    out << '\n';
  }
}

namespace {

void write_matrix_block(BinaryWriter& w, const Eigen::MatrixXd& m) {
  w.put(static_cast<std::uint64_t>(m.rows()));
  w.put(static_cast<std::uint64_t>(m.cols()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  w.bytes(rm.data(), static_cast<std::size_t>(rm.size()) * sizeof(double));
}

Eigen::MatrixXd read_matrix_block(BinaryReader& r) {
  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(static_cast<Eigen::Index>(rows),
                                                                            static_cast<Eigen::Index>(cols));
  r.bytes(rm.data(), rows * cols * sizeof(double));
  return rm;
}

}  // namespace

void write_distance_matrix(const DistanceMatrix& dist, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.bytes("BSDM", 4);
  w.put(kMatrixVersion);
  write_matrix_block(w, dist.values);
  w.finish();
}

DistanceMatrix read_distance_matrix(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic("BSDM", kMatrixVersion, "distance matrix");
  return {read_matrix_block(r)};
}

void write_body_map(const BodyMap& map, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.bytes("BSBM", 4);
  w.put(kMatrixVersion);
  write_matrix_block(w, map.points);
  w.put(static_cast<std::uint64_t>(map.eigen_spectrum.size()));
  w.bytes(map.eigen_spectrum.data(), static_cast<std::size_t>(map.eigen_spectrum.size()) * sizeof(double));
  w.finish();
}

BodyMap read_body_map(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic("BSBM", kMatrixVersion, "body map");
  BodyMap map;
  map.points = read_matrix_block(r);
  map.dim = static_cast<int>(map.points.cols());
  const auto count = r.get<std::uint64_t>();
  map.eigen_spectrum.resize(static_cast<Eigen::Index>(count));
  r.bytes(map.eigen_spectrum.data(), count * sizeof(double));
  return map;
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(17);
  out << m.rows() << ',' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  Eigen::Index rows = 0, cols = 0;
  char comma = 0;
  if (!std::getline(in, line)) throw FormatError(path.string() + " is empty");
  std::istringstream header(line);
  if (!(header >> rows >> comma >> cols) || comma != ',') throw FormatError(path.string() + ": missing 'rows,cols' header");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw FormatError(path.string() + " is truncated");
    std::istringstream row(line);
    std::string cell;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!std::getline(row, cell, ',')) throw FormatError(path.string() + ": short row " + std::to_string(i));
      m(i, j) = std::stod(cell);
    }
  }
  return m;
}

namespace {

using nlohmann::json;

json encode_rle(const std::vector<int>& z) {
  json runs = json::array();
  for (std::size_t i = 0; i < z.size();) {
    std::size_t j = i;
    while (j < z.size() && z[j] == z[i]) ++j;
    runs.push_back({z[i], j - i});
    i = j;
  }
  return runs;
}

std::vector<int> decode_rle(const json& runs) {
  std::vector<int> z;
  for (const auto& run : runs) z.insert(z.end(), run.at(1).get<std::size_t>(), run.at(0).get<int>());
  return z;
}

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd to_vec(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

void write_chain(const ChainHeader& header, const std::vector<ChainSample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << json{{"format", "bodyschema-chain"},
              {"version", 1},
              {"mode", to_string(header.mode)},
              {"seed", header.seed},
              {"k_max", header.k_max},
              {"dim", header.dim},
              {"points", header.points},
              {"min_active_count", header.min_active_count},
              {"samples", samples.size()}}
             .dump()
      << '\n';
  for (const auto& s : samples) {
    const auto& st = s.state;
    json mu = json::array(), sigma = json::array(), joints = json::object(), edges = json::array();
    for (const auto& c : st.components) {
      mu.push_back(vec(c.mean));
      std::vector<double> lower;
      for (Eigen::Index r = 0; r < c.covariance.rows(); ++r) {
        for (Eigen::Index col = 0; col <= r; ++col) lower.push_back(c.covariance(r, col));
      }
      sigma.push_back(lower);
    }
    for (const auto& [child, q] : st.joints) joints[std::to_string(child)] = vec(q);
    for (const auto& [child, parent] : st.tree.edges()) edges.push_back({child, parent});
    out << json{{"iteration", s.iteration},
                {"log_joint", s.log_joint},
                {"z", encode_rle(st.z)},
                {"pi", vec(st.pi)},
                {"mu", mu},
                {"sigma_lower", sigma},
                {"joints", joints},
                {"tree", {{"active", st.tree.active}, {"root", st.tree.empty() ? -1 : st.tree.root()}, {"edges", edges}}}}
               .dump()
        << '\n';
  }
  if (!out) throw FormatError("short write to " + path.string());
}

std::vector<ChainSample> read_chain(const std::filesystem::path& path, ChainHeader* header_out) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + " is empty");
  std::vector<ChainSample> samples;
  try {
    const auto head = json::parse(line);
    if (head.value("format", "") != "bodyschema-chain" || head.value("version", 0) != 1) {
      throw FormatError(path.string() + " is not a bodyschema-chain version 1 dump");
    }
    ChainHeader header;
    header.mode = parse_sampler_mode(head.at("mode").get<std::string>());
    header.seed = head.at("seed").get<std::uint64_t>();
    header.k_max = head.at("k_max").get<int>();
    header.dim = head.at("dim").get<int>();
    header.points = head.at("points").get<int>();
    header.min_active_count = head.value("min_active_count", 2);
    if (header_out) *header_out = header;

    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = json::parse(line);
      ChainSample s;
      s.iteration = j.at("iteration").get<int>();
      s.log_joint = j.at("log_joint").get<double>();
      auto& st = s.state;
      st.z = decode_rle(j.at("z"));
      st.pi = to_vec(j.at("pi"));
      const auto& mu = j.at("mu");
      const auto& sigma = j.at("sigma_lower");
      for (std::size_t k = 0; k < mu.size(); ++k) {
        const Eigen::VectorXd mean = to_vec(mu[k]);
        const auto lower = sigma[k].get<std::vector<double>>();
        const Eigen::Index d = mean.size();
        Eigen::MatrixXd cov(d, d);
        std::size_t idx = 0;
        for (Eigen::Index r = 0; r < d; ++r) {
          for (Eigen::Index c = 0; c <= r; ++c) cov(r, c) = cov(c, r) = lower.at(idx++);
        }
        st.components.push_back(Component::from_covariance(mean, cov));
      }
      for (const auto& [key, q] : j.at("joints").items()) st.joints[std::stoi(key)] = to_vec(q);
      const auto& tree = j.at("tree");
      st.tree.active = tree.at("active").get<std::vector<int>>();
      if (!st.tree.active.empty() || header.mode == SamplerMode::kDpgmmLj) {
        st.tree.parent.assign(st.components.size(), TreeStructure::kAbsent);
        for (int k : st.tree.active) st.tree.parent[k] = TreeStructure::kRoot;
        for (const auto& e : tree.at("edges")) st.tree.parent[e.at(0).get<int>()] = e.at(1).get<int>();
      }
      samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed chain dump (" + e.what() + ")");
  }
  return samples;
}

}  // namespace bodyschema
