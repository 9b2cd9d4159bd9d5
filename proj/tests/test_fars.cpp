#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "helpers.hpp"
#include "triform/error.hpp"
#include "triform/fars.hpp"
#include "triform/synth.hpp"

using namespace triform;
using namespace triform::fars;
using doctest::Approx;

namespace {

// Projector onto the top-k eigenvectors of the centroid scatter matrix.
Eigen::MatrixXd scatter_projector(const Eigen::MatrixXd& X, const std::vector<int>& groups, int k) {
  const auto C = geometry::centroids(X, groups);
  const Eigen::MatrixXd Cm = C.rowwise() - C.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Cm.transpose() * Cm);
  const Eigen::MatrixXd V = es.eigenvectors().rightCols(k);
  return V * V.transpose();
}

synth::Planted small_planted(std::uint64_t seed, int L = 2) {
  synth::PlantedSpec spec;
  spec.D = 48;
  spec.L = L;
  spec.seed = seed;
  return synth::generate_planted(spec, synth::planted_labels());
}

}  // namespace

TEST_CASE("concept-centroid PCA against an eigendecomposition") {
  const auto labels = synth::planted_labels();
  const auto X = testing::gaussian(324, 30, 2);
  const auto b = extract_fars_layer(X, labels, 10, 4);
  CHECK(b.k() == 10);
  CHECK(b.layer == 4);
  CHECK(b.method == Method::concept_centroid_pca);
  check_orthonormal(b.B, 1e-10);
  const Eigen::MatrixXd P = b.B.transpose() * b.B;
  CHECK((P - scatter_projector(X, labels.concept_ids(), 10)).cwiseAbs().maxCoeff() < 1e-8);
  // Explained variance: descending, partial sum below 1.
  double total = 0;
  for (std::size_t i = 0; i < b.explained_variance.size(); ++i) {
    if (i) CHECK(b.explained_variance[i] <= b.explained_variance[i - 1]);
    total += b.explained_variance[i];
  }
  CHECK(total < 1.0);
  CHECK(extract_fars_layer(X, labels, 17).explained_variance.size() == 17);
  double full = 0;
  for (double v : extract_fars_layer(X, labels, 17).explained_variance) full += v;
  CHECK(full == Approx(1.0));
  // Each row's largest-magnitude entry is positive.
  for (int r = 0; r < b.k(); ++r) {
    Eigen::Index i;
    b.B.row(r).cwiseAbs().maxCoeff(&i);
    CHECK(b.B(r, i) > 0);
  }
  // Centering is the mean of the centroids.
  const auto C = geometry::centroids(X, labels.concept_ids());
  CHECK((b.centering - C.colwise().mean().transpose()).norm() < 1e-12);
}

TEST_CASE("centroid PCA domain checks") {
  const auto labels = synth::planted_labels();
  const auto X = testing::gaussian(324, 30, 3);
  CHECK_THROWS_AS(extract_fars_layer(X, labels, 18), InvalidArgument);
  CHECK_THROWS_AS(extract_fars_layer(X, labels, 0), InvalidArgument);
  CHECK_THROWS_AS(extract_form_control_layer(X, labels, 6), InvalidArgument);
  CHECK(extract_form_control_layer(X, labels).k() == 5);
  // Centroids spanning only 3 dimensions.
  Eigen::MatrixXd low = Eigen::MatrixXd::Zero(324, 30);
  low.leftCols(3) = X.leftCols(3);
  CHECK_THROWS_AS(extract_fars_layer(low, labels, 5), ContractViolation);
  // Only four concepts present.
  std::vector<int> four;
  for (int i = 0; i < 324; ++i)
    if (labels.rows[static_cast<std::size_t>(i)].concept_id <= 4) four.push_back(i);
  Eigen::MatrixXd Xf(static_cast<Eigen::Index>(four.size()), 30);
  for (std::size_t i = 0; i < four.size(); ++i) Xf.row(static_cast<Eigen::Index>(i)) = X.row(four[i]);
  CHECK_THROWS_AS(extract_fars_layer(Xf, labels.subset(four), 4), ContractViolation);
}

TEST_CASE("other bases") {
  const auto r = random_basis(64, 10, 5);
  check_orthonormal(r.B, 1e-12);
  CHECK(r.B == random_basis(64, 10, 5).B);
  CHECK(r.B != random_basis(64, 10, 6).B);
  CHECK(*r.seed == 5);
  CHECK_THROWS_AS(random_basis(4, 5, 0), InvalidArgument);

  const auto X = testing::gaussian(100, 20, 7);
  const auto v = variance_pca_basis(X, 6);
  check_orthonormal(v.B);
  const Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Xc.transpose() * Xc);
  const Eigen::MatrixXd V = es.eigenvectors().rightCols(6);
  CHECK((v.B.transpose() * v.B - V * V.transpose()).cwiseAbs().maxCoeff() < 1e-8);

  const auto t = truncate(v, 3);
  CHECK(t.B == v.B.topRows(3));
  CHECK(identity_basis(7).B == Eigen::MatrixXd::Identity(7, 7));
  CHECK(empty_basis(7).k() == 0);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 3);
  bad(1, 2) = 0.1;
  CHECK_THROWS_AS(check_orthonormal(bad), ContractViolation);
}

TEST_CASE("patch and ablate") {
  const auto hs = testing::gaussian(32, 1, 1).col(0).eval();
  const auto ht = testing::gaussian(32, 1, 2).col(0).eval();
  const auto b = random_basis(32, 6, 3);
  const Eigen::VectorXd p = subspace_patch(hs, ht, b);
  // Inside the subspace p agrees with the source, outside with the target.
  CHECK((b.B * p - b.B * hs).norm() < 1e-12);
  const Eigen::MatrixXd Pperp = Eigen::MatrixXd::Identity(32, 32) - b.B.transpose() * b.B;
  CHECK((Pperp * p - Pperp * ht).norm() < 1e-12);
  CHECK((subspace_patch(hs, ht, identity_basis(32)) - hs).norm() < 1e-12);
  CHECK((subspace_patch(hs, ht, empty_basis(32)) - ht).norm() < 1e-12);
  CHECK((b.B * subspace_ablate(hs, b)).norm() < 1e-12);
  CHECK_THROWS_AS(subspace_patch(hs, ht.head(5), b), ContractViolation);

  Eigen::MatrixXd X = testing::gaussian(3, 32, 4);
  auto c = b;
  c.centering = Eigen::VectorXd::Ones(32);
  const Eigen::MatrixXd expect = (X.rowwise() - Eigen::RowVectorXd::Ones(32)) * b.B.transpose();
  CHECK((project(X, c) - expect).norm() < 1e-12);
}

TEST_CASE("output metrics") {
  const std::array<std::int64_t, 10> a = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const std::array<std::int64_t, 10> b = {9, 8, 7, 100, 101, 102, 103, 104, 105, 106};
  CHECK(top10_overlap(a, a) == 1.0);
  CHECK(top10_overlap(a, b) == Approx(0.3));
  const std::array<std::int64_t, 10> dup = {0, 0, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK_THROWS_AS(top10_overlap(a, dup), InvalidArgument);

  const std::vector<double> p = {0.5, 0.5, 0.0};
  const std::vector<double> q = {0.25, 0.25, 0.5};
  CHECK(kl_divergence(p, q) == Approx(std::log(2.0)));
  CHECK(kl_divergence(q, q) == 0.0);
  CHECK_THROWS_AS(kl_divergence(q, p), ContractViolation);
  CHECK_THROWS_AS(kl_divergence(std::vector<double>{0.5, 0.6}, std::vector<double>{0.5, 0.5}), InvalidArgument);
  const auto f = floor_and_renormalize(p);
  CHECK(f[2] > 0.0);
  CHECK(f[0] + f[1] + f[2] == Approx(1.0));
  CHECK(kl_divergence(q, f) > 0.0);
}

TEST_CASE("basis files round trip") {
  const auto dir = testing::scratch_dir("basis");
  const auto X = testing::gaussian(324, 24, 9);
  auto b = extract_fars_layer(X, synth::planted_labels(), 10, 3);
  b.model_id = "m";
  write_basis(b, dir / "fars_L03");
  const auto r = read_basis(dir / "fars_L03");
  CHECK(r.k() == 10);
  CHECK(r.dim() == 24);
  CHECK(r.layer == 3);
  CHECK(r.method == Method::concept_centroid_pca);
  CHECK(r.model_id == "m");
  CHECK((r.B - b.B).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((r.centering - b.centering).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(r.explained_variance == b.explained_variance);

  // Corrupting the centering vector breaks its digest.
  auto bytes = store::read_file(dir / "fars_L03.center.f32");
  bytes[0] = static_cast<char>(bytes[0] ^ 0x55);
  store::atomic_write(dir / "fars_L03.center.f32", bytes);
  CHECK_THROWS_AS(read_basis(dir / "fars_L03"), FormatError);
  CHECK_THROWS(read_basis(dir / "missing"));
}

TEST_CASE("sweep and best layer") {
  synth::PlantedSpec spec;
  spec.D = 48;
  spec.L = 4;
  spec.seed = 8;
  spec.concept_profile = synth::LayerProfile::only(2);
  const auto p = synth::generate_planted(spec, synth::planted_labels());
  CHECK(best_fars_layer(p.tensor, synth::planted_labels(), 10) == 2);
  const auto rows = dimensionality_sweep(p.tensor, synth::planted_labels(), {1, 5, 10, 17});
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].explained_variance >= rows[i - 1].explained_variance);
  CHECK(rows[2].best_layer == 2);
  CHECK(rows[3].explained_variance == Approx(1.0));
}

TEST_CASE("leave-K-out splits are keyed") {
  const auto p = small_planted(3);
  const auto labels = synth::planted_labels();
  const auto a = leave_k_out(p.tensor, labels, 0, 6, 4, 11);
  const auto b = leave_k_out(p.tensor, labels, 0, 6, 4, 11);
  CHECK(a.heldout_rsa == b.heldout_rsa);
  CHECK(a.heldout_rsa.size() == 4);
  CHECK(a.K == 6);
  CHECK_THROWS_AS(leave_k_out(p.tensor, labels, 0, 18, 4, 11), InvalidArgument);
  CHECK_THROWS_AS(leave_k_out(p.tensor, labels, 0, 1, 4, 11), InvalidArgument);
}

TEST_CASE("cross-model alignment") {
  const auto P = testing::gaussian(324, 10, 1);
  const auto labels = synth::planted_labels();
  ModelProjection a{"a", "sha256:x", P, geometry::centroids(P, labels.concept_ids())};
  const Eigen::MatrixXd Q = 2.0 * P;
  ModelProjection b{"b", "sha256:x", Q, geometry::centroids(Q, labels.concept_ids())};
  const auto r = cross_model_alignment({a, b});
  CHECK(r.cca(0, 1) == Approx(1.0));
  CHECK(r.cca(1, 0) == Approx(1.0));
  CHECK(r.centroid_rsa(0, 1) == Approx(1.0));
  b.stimulus_digest = "sha256:y";
  CHECK_THROWS_AS(cross_model_alignment({a, b}), ContractViolation);
}
