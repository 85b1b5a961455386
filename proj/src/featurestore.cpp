#include "hgr/featurestore.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_map>

#include "hgr/rng.hpp"

namespace hgr {
namespace {

constexpr char kMagic[4] = {'H', 'G', 'R', 'F'};
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::vector<char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::span<const char> bytes, std::size_t at) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::vector<char> encode_features(const FeatureMatrix& m) {
  if (m.rows() > 0xFFFFFFFFLL || m.dim() > 0xFFFFFFFFLL) {
    fail(ErrorCode::InvalidInput, "feature matrix too large for the file format");
  }
  std::vector<char> out(kMagic, kMagic + 4);
  const auto rows = static_cast<std::size_t>(m.rows());
  const auto dim = static_cast<std::size_t>(m.dim());
  out.reserve(kHeaderBytes + rows * (8 + 4 * dim));
  put_u32(out, kFeatureFileVersion);
  put_u32(out, static_cast<std::uint32_t>(rows));
  put_u32(out, static_cast<std::uint32_t>(dim));
  for (std::size_t r = 0; r < rows; ++r) {
    put_u64(out, m.owners[r]);
    for (std::size_t k = 0; k < dim; ++k) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m.values(r, k))));
    }
  }
  return out;
}

FeatureMatrix decode_features(std::span<const char> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::BadMagic, "not a feature file (bad magic)");
  }
  if (bytes.size() < kHeaderBytes) fail(ErrorCode::TruncatedFile, "feature file header truncated");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kFeatureFileVersion) {
    fail(ErrorCode::VersionUnsupported, "unsupported feature file version " + std::to_string(version));
  }
  const std::size_t rows = get_le<std::uint32_t>(bytes, 8);
  const std::size_t dim = get_le<std::uint32_t>(bytes, 12);
  const std::size_t row_bytes = 8 + 4 * dim;
  const std::size_t need = kHeaderBytes + rows * row_bytes;
  if (bytes.size() < need) {
    fail(ErrorCode::TruncatedFile, "feature file declares " + std::to_string(rows) + " rows but holds " +
                                       std::to_string((bytes.size() - kHeaderBytes) / row_bytes));
  }
  if (bytes.size() > need) fail(ErrorCode::DimMismatch, "feature file has trailing bytes beyond declared rows x dim");

  std::vector<std::uint64_t> owners(rows);
  RowMatrixXd values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  std::size_t at = kHeaderBytes;
  for (std::size_t r = 0; r < rows; ++r) {
    owners[r] = get_le<std::uint64_t>(bytes, at);
    at += 8;
    for (std::size_t k = 0; k < dim; ++k, at += 4) {
      values(r, k) = std::bit_cast<float>(get_le<std::uint32_t>(bytes, at));
    }
  }
  auto sorted = owners;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail(ErrorCode::InvalidInput, "feature file has duplicate owner ids");
  }
  return FeatureMatrix(std::move(owners), std::move(values));
}

FeatureMatrix read_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_features(bytes);
}

void write_features(const FeatureMatrix& m, const std::string& path) {
  const auto bytes = encode_features(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path + "'");
}

void validate_dataset(const HierarchyDag& dag, const Dataset& data) {
  if (static_cast<Eigen::Index>(data.labels.size()) != data.images.rows()) {
    fail(ErrorCode::DimMismatch, "label count does not match image rows");
  }
  for (NodeId c : data.labels) {
    if (!dag.contains(c)) fail(ErrorCode::UnknownNode, "label refers to unknown class");
    if (c == dag.root()) fail(ErrorCode::InvalidInput, "images cannot be labelled with the root");
  }
}

Dataset subset(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out;
  out.images.values.resize(static_cast<Eigen::Index>(rows.size()), data.images.dim());
  out.images.owners.reserve(rows.size());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.images.values.row(static_cast<Eigen::Index>(i)) = data.images.values.row(r);
    out.images.owners.push_back(data.images.owners[rows[i]]);
    out.labels.push_back(data.labels[rows[i]]);
  }
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (!a.empty() && !b.empty() && a.images.dim() != b.images.dim()) {
    fail(ErrorCode::DimMismatch, "cannot concatenate datasets of different dim");
  }
  const Eigen::Index dim = a.empty() ? b.images.dim() : a.images.dim();
  Dataset out;
  out.images.values.resize(a.images.rows() + b.images.rows(), dim);
  if (a.images.rows() > 0) out.images.values.topRows(a.images.rows()) = a.images.values;
  if (b.images.rows() > 0) out.images.values.bottomRows(b.images.rows()) = b.images.values;
  out.images.owners = a.images.owners;
  out.images.owners.insert(out.images.owners.end(), b.images.owners.begin(), b.images.owners.end());
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

void write_labels(const std::string& path, const HierarchyDag& dag, const Dataset& data) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.images.owners[i] << '\t' << dag.name(data.labels[i]) << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path + "'");
}

Dataset read_dataset(const std::string& features_path, const std::string& labels_path,
                     const HierarchyDag& dag) {
  Dataset data;
  data.images = l2_normalize(read_features(features_path));

  std::unordered_map<std::uint64_t, NodeId> label_of;
  std::ifstream in(labels_path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + labels_path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      fail(ErrorCode::InvalidInput, labels_path + ":" + std::to_string(line_no) + ": expected image-id<TAB>class");
    }
    std::uint64_t id = 0;
    try {
      id = std::stoull(line.substr(0, tab));
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidInput, labels_path + ":" + std::to_string(line_no) + ": bad image id");
    }
    if (!label_of.emplace(id, dag.id_of(line.substr(tab + 1))).second) {
      fail(ErrorCode::InvalidInput, "duplicate label for image " + std::to_string(id));
    }
  }
  data.labels.reserve(data.images.owners.size());
  for (std::uint64_t owner : data.images.owners) {
    auto it = label_of.find(owner);
    if (it == label_of.end()) fail(ErrorCode::InvalidInput, "image " + std::to_string(owner) + " has no label");
    data.labels.push_back(it->second);
  }
  validate_dataset(dag, data);
  return data;
}

FeatureMatrix random_class_table(std::size_t node_count, Eigen::Index dim, std::uint64_t seed) {
  if (dim <= 0) fail(ErrorCode::InvalidInput, "embedding dim must be positive");
  const double sigma = 1.0 / std::sqrt(static_cast<double>(dim));
  RowMatrixXd values(static_cast<Eigen::Index>(node_count), dim);
  std::vector<std::uint64_t> owners(node_count);
  for (std::size_t c = 0; c < node_count; ++c) {
    CounterRng rng(derive_key({seed, 0xC1A55ULL, c}));
    for (Eigen::Index k = 0; k < dim; ++k) values(static_cast<Eigen::Index>(c), k) = sigma * rng.gaussian();
    owners[c] = c;
  }
  return l2_normalize(FeatureMatrix(std::move(owners), std::move(values)));
}

}  // namespace hgr
