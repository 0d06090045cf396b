#include "fbsnet/params_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fbsnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void append_f64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t swapped = 0;
    for (int i = 0; i < 8; ++i) swapped |= ((bits >> (8 * i)) & 0xffu) << (8 * (7 - i));
    bits = swapped;
  }
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.append(buf, 8);
}

class Reader {
 public:
  Reader(std::string bytes, fs::path path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  double next() {
    if (pos_ + 8 > bytes_.size()) throw IoError("truncated payload: " + path_.string());
    std::uint64_t bits = 0;
    std::memcpy(&bits, bytes_.data() + pos_, 8);
    pos_ += 8;
    if constexpr (std::endian::native == std::endian::big) {
      std::uint64_t swapped = 0;
      for (int i = 0; i < 8; ++i) swapped |= ((bits >> (8 * i)) & 0xffu) << (8 * (7 - i));
      bits = swapped;
    }
    return std::bit_cast<double>(bits);
  }

  Mat matrix(Eigen::Index rows, Eigen::Index cols) {
    Mat A(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) A(i, j) = next();
    }
    return A;
  }

  Vec vector(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = next();
    return v;
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) throw IoError("payload has trailing bytes: " + path_.string());
  }

 private:
  std::string bytes_;
  fs::path path_;
  std::size_t pos_ = 0;
};

void append_matrix(std::string& out, const Mat& A) {
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) append_f64(out, A(i, j));
  }
}

void append_vector(std::string& out, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) append_f64(out, v(i));
}

template <typename Layers>
std::string layers_payload(const Layers& p) {
  std::string out;
  out.reserve(8 * (p.A.size() * static_cast<std::size_t>(p.rows() * p.cols()) + 2 * p.A.size()));
  for (const auto& A : p.A) append_matrix(out, A);
  for (double a : p.alpha) append_f64(out, a);
  for (double l : p.lambda) append_f64(out, l);
  return out;
}

void write_pair(const fs::path& path, const std::string& payload, json header,
                const json& extra) {
  header["format"] = kFormatName;
  header["version"] = kFormatVersion;
  header["payload"] = path.filename().string();
  header["payload_doubles"] = payload.size() / 8;
  for (const auto& [k, v] : extra.items()) header[k] = v;
  write_file_atomic(path, payload);
  write_file_atomic(header_path(path), header.dump(2) + "\n");
}

json checked_header(const fs::path& path, const char* type) {
  json h = read_header(path);
  if (h.value("format", "") != kFormatName) {
    throw IoError("unknown format in " + header_path(path).string());
  }
  if (h.value("version", 0) != kFormatVersion) {
    throw IoError("unsupported format version in " + header_path(path).string());
  }
  if (h.value("type", "") != type) {
    throw IoError(header_path(path).string() + " holds a '" + h.value("type", "") +
                  "', expected '" + type + "'");
  }
  return h;
}

template <typename Layers>
Layers read_layers(const fs::path& path, const json& h, const char* count_key) {
  Layers p;
  p.T = h.at("T").get<double>();
  const auto count = h.at(count_key).get<std::size_t>();
  const auto m = h.at("m").get<Eigen::Index>();
  const auto n = h.at("n").get<Eigen::Index>();
  Reader r(read_file(path), path);
  for (std::size_t k = 0; k < count; ++k) p.A.push_back(r.matrix(m, n));
  for (std::size_t k = 0; k < count; ++k) p.alpha.push_back(r.next());
  for (std::size_t k = 0; k < count; ++k) p.lambda.push_back(r.next());
  r.expect_end();
  p.validate();
  return p;
}

}  // namespace

fs::path header_path(const fs::path& payload) {
  fs::path h = payload;
  h += ".json";
  return h;
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_header(const fs::path& path) {
  const fs::path h = header_path(path);
  try {
    return json::parse(read_file(h));
  } catch (const json::parse_error& e) {
    throw IoError("malformed header " + h.string() + ": " + e.what());
  }
}

void save_params(const NetworkParams& p, const fs::path& path, const json& extra) {
  p.validate();
  json h{{"type", "network_params"}, {"T", p.T}, {"N", p.depth()}, {"m", p.rows()}, {"n", p.cols()}};
  write_pair(path, layers_payload(p), std::move(h), extra);
}

NetworkParams load_params(const fs::path& path) {
  const json h = checked_header(path, "network_params");
  return read_layers<NetworkParams>(path, h, "N");
}

void save_control(const Control& u, const fs::path& path, const json& extra) {
  u.validate();
  json h{{"type", "control"}, {"T", u.T}, {"M", u.grid()}, {"m", u.rows()}, {"n", u.cols()}};
  write_pair(path, layers_payload(u), std::move(h), extra);
}

Control load_control(const fs::path& path) {
  const json h = checked_header(path, "control");
  return read_layers<Control>(path, h, "M");
}

void save_dataset(const Dataset& d, const fs::path& path, const json& extra) {
  d.validate();
  std::string payload;
  for (const auto& v : d.b) append_vector(payload, v);
  for (const auto& v : d.y) append_vector(payload, v);
  for (const auto& v : d.x0) append_vector(payload, v);
  const bool has_A = d.meta.A_true.size() > 0;
  if (has_A) append_matrix(payload, d.meta.A_true);
  json h{{"type", "dataset"},
         {"m", d.m},
         {"n", d.n},
         {"train", d.train_count},
         {"val", d.val_count},
         {"has_A_true", has_A},
         {"sparsity", d.meta.sparsity},
         {"noise_sigma", d.meta.noise_sigma},
         {"seed", d.meta.seed}};
  write_pair(path, payload, std::move(h), extra);
}

Dataset load_dataset(const fs::path& path) {
  const json h = checked_header(path, "dataset");
  Dataset d;
  d.m = h.at("m").get<Eigen::Index>();
  d.n = h.at("n").get<Eigen::Index>();
  d.train_count = h.at("train").get<std::size_t>();
  d.val_count = h.at("val").get<std::size_t>();
  d.meta.sparsity = h.at("sparsity").get<double>();
  d.meta.noise_sigma = h.at("noise_sigma").get<double>();
  d.meta.seed = h.at("seed").get<std::uint64_t>();
  const std::size_t total = d.train_count + d.val_count;
  Reader r(read_file(path), path);
  for (std::size_t j = 0; j < total; ++j) d.b.push_back(r.vector(d.m));
  for (std::size_t j = 0; j < total; ++j) d.y.push_back(r.vector(d.n));
  for (std::size_t j = 0; j < total; ++j) d.x0.push_back(r.vector(d.n));
  if (h.value("has_A_true", false)) d.meta.A_true = r.matrix(d.m, d.n);
  r.expect_end();
  d.validate();
  return d;
}

}  // namespace fbsnet
