#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hgr/error.hpp"
#include "hgr/hierarchy.hpp"

namespace hgr {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RowMatrixXd = RowMatrix<double>;

/// Feature vectors stored row-wise, each tagged with its owner id
/// (an image id or a class id).
template <typename Scalar>
struct BasicFeatureMatrix {
  std::vector<std::uint64_t> owners;
  RowMatrix<Scalar> values;

  BasicFeatureMatrix() = default;
  BasicFeatureMatrix(std::vector<std::uint64_t> owner_ids, RowMatrix<Scalar> rows)
      : owners(std::move(owner_ids)), values(std::move(rows)) {
    if (static_cast<Eigen::Index>(owners.size()) != values.rows()) {
      fail(ErrorCode::DimMismatch, "owner count does not match row count");
    }
  }

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }
  auto row(Eigen::Index i) { return values.row(i); }
  auto row(Eigen::Index i) const { return values.row(i); }
};

using FeatureMatrix = BasicFeatureMatrix<double>;

/// Scales every row to unit L2 norm; a zero row raises ZeroVector.
template <typename Scalar>
BasicFeatureMatrix<Scalar> l2_normalize(BasicFeatureMatrix<Scalar> m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Scalar norm = m.values.row(i).norm();
    if (!(norm > Scalar(0))) {
      fail(ErrorCode::ZeroVector, "zero vector for owner " + std::to_string(m.owners[i]));
    }
    m.values.row(i) /= norm;
  }
  return m;
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_sim(const Eigen::MatrixBase<DerivedA>& a,
                                     const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::DimMismatch, "cosine_sim on vectors of dim " + std::to_string(a.size()) +
                                     " and " + std::to_string(b.size()));
  }
  return a.reshaped().dot(b.reshaped());
}

// Binary layout: "HGRF", u32 version = 1, u32 rows, u32 dim, then per row a
// u64 owner id and dim float32 values. Everything little-endian.
inline constexpr std::uint32_t kFeatureFileVersion = 1;

FeatureMatrix read_features(const std::string& path);
void write_features(const FeatureMatrix& m, const std::string& path);
std::vector<char> encode_features(const FeatureMatrix& m);
FeatureMatrix decode_features(std::span<const char> bytes);

/// Training or test images: one feature row and one class label per image.
struct Dataset {
  FeatureMatrix images;
  std::vector<NodeId> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
};

/// Labels must be non-root classes of `dag` and align with the image rows.
void validate_dataset(const HierarchyDag& dag, const Dataset& data);

Dataset subset(const Dataset& data, std::span<const std::size_t> rows);
Dataset concat(const Dataset& a, const Dataset& b);

// Labels file: `image-id<TAB>class-name` per line, rows in image order.
void write_labels(const std::string& path, const HierarchyDag& dag, const Dataset& data);
Dataset read_dataset(const std::string& features_path, const std::string& labels_path,
                     const HierarchyDag& dag);

/// Random class table: isotropic gaussian rows with sigma 1/sqrt(dim), then
/// normalized. One row per node, owner id equal to the node id.
FeatureMatrix random_class_table(std::size_t node_count, Eigen::Index dim, std::uint64_t seed);

}  // namespace hgr
