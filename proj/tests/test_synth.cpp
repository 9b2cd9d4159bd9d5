#include "doctest.h"
#include "helpers.hpp"
#include "triform/error.hpp"
#include "triform/synth.hpp"

using namespace triform;
using namespace triform::synth;
using doctest::Approx;

TEST_CASE("planted labels") {
  const auto l = planted_labels();
  REQUIRE(l.size() == 324);
  CHECK(store::canonical_order(l) == [] {
    std::vector<int> v(324);
    for (int i = 0; i < 324; ++i) v[static_cast<std::size_t>(i)] = i;
    return v;
  }());
}

TEST_CASE("layer profiles") {
  CHECK(LayerProfile::constant().at(7) == 1.0);
  CHECK(LayerProfile::only(3).at(3) == 1.0);
  CHECK(LayerProfile::only(3).at(2) == 0.0);
  const auto b = LayerProfile::bump(4, 2);
  CHECK(b.at(4) == Approx(1.0));
  CHECK(b.at(6) == Approx(std::exp(-0.5)));
}

TEST_CASE("planted structure") {
  PlantedSpec spec;
  spec.D = 64;
  spec.L = 2;
  spec.sigma = 0.0;
  spec.seed = 3;
  const auto labels = planted_labels();
  const auto p = generate_planted(spec, labels);
  CHECK(p.tensor.n_stimuli == 324);
  CHECK(p.tensor.hidden_dim == 64);
  fars::check_orthonormal(p.truth.concept_basis);
  fars::check_orthonormal(p.truth.form_basis);
  // Concept and form subspaces are orthogonal.
  CHECK((p.truth.concept_basis * p.truth.form_basis.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  // Whitened codes: centered, mean squared norm 1.
  CHECK(p.truth.concept_codes.colwise().mean().norm() < 1e-10);
  CHECK(p.truth.concept_codes.rowwise().squaredNorm().mean() == Approx(1.0));
  CHECK(p.truth.form_codes.rowwise().squaredNorm().mean() == Approx(1.0));
  // Without noise, a row is exactly concept code + form code in their subspaces.
  const auto X = store::slice_layer(p.tensor, 0);
  const auto& r = labels.rows[100];
  const Eigen::VectorXd expect =
      p.truth.concept_basis.transpose() * p.truth.concept_codes.row(r.concept_id - 1).transpose() +
      p.truth.form_basis.transpose() * p.truth.form_codes.row(form_index(r.form)).transpose();
  CHECK((X.row(100).transpose() - expect).cwiseAbs().maxCoeff() < 1e-5);
  // Deterministic.
  CHECK(generate_planted(spec, labels).tensor.data == p.tensor.data);
}

TEST_CASE("shared code seed gives one concept geometry") {
  PlantedSpec a;
  a.D = 40;
  a.L = 1;
  a.seed = 1;
  a.code_seed = 9;
  auto b = a;
  b.seed = 2;
  const auto labels = planted_labels();
  const auto pa = generate_planted(a, labels);
  const auto pb = generate_planted(b, labels);
  CHECK(pa.truth.concept_codes == pb.truth.concept_codes);
  CHECK(pa.truth.concept_basis != pb.truth.concept_basis);
}

TEST_CASE("planted input checks") {
  auto labels = planted_labels();
  labels.rows.pop_back();
  CHECK_THROWS_AS(generate_planted(PlantedSpec{}, labels), ContractViolation);
  PlantedSpec spec;
  spec.D = 12;
  CHECK_THROWS_AS(generate_planted(spec, planted_labels()), InvalidArgument);
}

TEST_CASE("principal angles") {
  const auto Q = testing::random_orthogonal(20, 4);
  const Eigen::MatrixXd A = Q.leftCols(3).transpose();
  CHECK(principal_angles(A, A).maxCoeff() < 1e-6);
  const Eigen::MatrixXd B = Q.middleCols(3, 3).transpose();
  for (int i = 0; i < 3; ++i) CHECK(principal_angles(A, B)(i) == Approx(std::acos(0.0)));
  // One direction rotated by 30 degrees.
  Eigen::MatrixXd C = A;
  C.row(2) = std::cos(M_PI / 6) * A.row(2) + std::sin(M_PI / 6) * Q.col(7).transpose();
  const auto ang = principal_angles(A, C);
  CHECK(ang(2) == Approx(M_PI / 6));
  CHECK(ang(0) == Approx(0.0).epsilon(1e-6));
}

TEST_CASE("synthetic readout") {
  PlantedSpec spec;
  spec.D = 64;
  spec.L = 1;
  const auto p = generate_planted(spec, planted_labels());
  ReadoutSpec rs;
  rs.vocab = 50;
  SyntheticReadout ro(p.truth, 64, rs);
  const Eigen::VectorXd h = testing::gaussian(64, 1, 1).col(0);
  const auto top = ro.top10(h);
  const auto logits = ro.logits(h);
  for (std::size_t i = 1; i < 10; ++i) CHECK(logits(top[i - 1]) >= logits(top[i]));
  const auto s = ro.softmax(h);
  double total = 0;
  for (double v : s) total += v;
  CHECK(total == Approx(1.0));
  CHECK(s[static_cast<std::size_t>(top[0])] == Approx(*std::max_element(s.begin(), s.end())));
}
