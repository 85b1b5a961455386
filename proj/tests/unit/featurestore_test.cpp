#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "hgr/featurestore.hpp"
#include "hgr/rng.hpp"

using namespace hgr;

namespace {

FeatureMatrix one_row(std::initializer_list<double> v) {
  RowMatrixXd m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) m(0, k++) = x;
  return FeatureMatrix({0}, m);
}

// Values representable in float32 so a round-trip can be exact.
FeatureMatrix float_matrix(Eigen::Index rows, Eigen::Index dim, std::uint64_t seed) {
  CounterRng rng(seed);
  RowMatrixXd m(rows, dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.gaussian());
  std::vector<std::uint64_t> owners;
  for (Eigen::Index i = 0; i < rows; ++i) owners.push_back(1000 + 7 * static_cast<std::uint64_t>(i));
  return FeatureMatrix(owners, m);
}

ErrorCode decode_error(const std::vector<char>& bytes) {
  try {
    decode_features(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Usage;
}

}  // namespace

TEST_CASE("l2_normalize") {
  auto a = l2_normalize(one_row({3, 4}));
  CHECK(a.values(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(a.values(0, 1) == doctest::Approx(0.8).epsilon(1e-15));

  auto b = l2_normalize(one_row({1, 1, 1, 1}));
  for (int k = 0; k < 4; ++k) CHECK(b.values(0, k) == 0.5);

  auto u = l2_normalize(one_row({0, 1, 0}));
  CHECK(u.values == one_row({0, 1, 0}).values);

  auto m = l2_normalize(float_matrix(20, 7, 3));
  auto again = l2_normalize(m);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    CHECK(std::abs(m.values.row(i).norm() - 1.0) < 1e-6);
    CHECK((again.values.row(i) - m.values.row(i)).cwiseAbs().maxCoeff() < 1e-15);
  }

  try {
    l2_normalize(one_row({0, 0}));
    FAIL("zero vector accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVector);
  }
}

TEST_CASE("cosine_sim") {
  Eigen::Vector2d a(0.6, 0.8), b(0.8, 0.6);
  CHECK(cosine_sim(a, b) == doctest::Approx(0.96).epsilon(1e-15));
  CHECK(cosine_sim(a, a) == doctest::Approx(1.0));
  CHECK(cosine_sim(Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY()) == 0.0);
  CHECK(cosine_sim(a, b) == cosine_sim(b, a));
  CHECK_THROWS_AS(cosine_sim(Eigen::VectorXd::Unit(2, 0), Eigen::VectorXd::Unit(3, 0)), Error);

  const auto m = l2_normalize(float_matrix(50, 5, 11));
  for (Eigen::Index i = 0; i + 1 < m.rows(); ++i) {
    const double s = cosine_sim(m.values.row(i), m.values.row(i + 1));
    CHECK(s <= 1.0 + 1e-9);
    CHECK(s >= -1.0 - 1e-9);
  }
}

TEST_CASE("feature file round-trip is bit exact") {
  const auto m = float_matrix(3, 4, 5);
  const auto path = std::filesystem::temp_directory_path() / "hgr_featurestore_test.hgrf";
  write_features(m, path.string());
  const auto r = read_features(path.string());
  CHECK(r.owners == m.owners);
  CHECK(r.values == m.values);

  std::ifstream in(path, std::ios::binary);
  const std::vector<char> on_disk{std::istreambuf_iterator<char>(in), {}};
  CHECK(on_disk == encode_features(r));
  CHECK(on_disk.size() == 16 + 3 * (8 + 4 * 4));
  CHECK(std::string(on_disk.begin(), on_disk.begin() + 4) == "HGRF");
  std::filesystem::remove(path);
}

TEST_CASE("feature file header and body checks") {
  const auto good = encode_features(float_matrix(10, 4, 9));

  auto magic = good;
  magic[0] = 'X';
  CHECK(decode_error(magic) == ErrorCode::BadMagic);

  // Header claims 10 rows; drop the last one.
  std::vector<char> nine(good.begin(), good.end() - (8 + 4 * 4));
  CHECK(decode_error(nine) == ErrorCode::TruncatedFile);
  CHECK(decode_error(std::vector<char>(good.begin(), good.begin() + 10)) == ErrorCode::TruncatedFile);

  auto version = good;
  version[4] = 2;
  CHECK(decode_error(version) == ErrorCode::VersionUnsupported);

  auto trailing = good;
  trailing.push_back(0);
  CHECK(decode_error(trailing) == ErrorCode::DimMismatch);
}

TEST_CASE("random class table") {
  const auto t = random_class_table(12, 8, 4);
  CHECK(t.rows() == 12);
  for (Eigen::Index i = 0; i < t.rows(); ++i) CHECK(std::abs(t.values.row(i).norm() - 1.0) < 1e-12);
  CHECK(t.values == random_class_table(12, 8, 4).values);
  CHECK(t.values != random_class_table(12, 8, 5).values);
}
