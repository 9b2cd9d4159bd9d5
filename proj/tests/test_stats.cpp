#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "triform/error.hpp"
#include "triform/stats.hpp"

using namespace triform;
using namespace triform::stats;
using doctest::Approx;

TEST_CASE("average ranks with ties") {
  const std::vector<double> x = {10, 20, 10, 30, 20, 20};
  CHECK(average_ranks(x) == std::vector<double>{1.5, 4, 1.5, 6, 4, 4});
}

TEST_CASE("pearson and spearman by hand") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> y = {2, 4, 5, 4, 5};
  // mean x 3, mean y 4; sxy = 6, sxx = 10, syy = 6
  CHECK(pearson(x, y) == Approx(6.0 / std::sqrt(60.0)));
  // ranks of y: 1, 2.5, 4.5, 2.5, 4.5
  const std::vector<double> ry = {1, 2.5, 4.5, 2.5, 4.5};
  CHECK(spearman(x, y) == Approx(pearson(x, ry)));
  const std::vector<double> cube = {1, 8, 27, 64, 125};
  CHECK(spearman(x, cube) == Approx(1.0));
  const std::vector<double> flat = {3, 3, 3, 3, 3};
  CHECK_THROWS_AS(pearson(x, flat), UndefinedResult);
  CHECK_THROWS_AS(spearman(flat, x), UndefinedResult);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), ContractViolation);
}

TEST_CASE("upper triangle order") {
  Eigen::Matrix3d m;
  m << 0, 1, 2, 1, 0, 3, 2, 3, 0;
  CHECK(upper_triangle(m) == std::vector<double>{1, 2, 3});
}

TEST_CASE("permutation p-value formula") {
  CHECK(permutation_p_value(0, 1000) == Approx(1.0 / 1001.0));
  CHECK(permutation_p_value(1000, 1000) == Approx(1.0));
  CHECK(permutation_p_value(9, 99) == Approx(0.1));
}

TEST_CASE("permutation test") {
  const int n = 12;
  const auto X = testing::gaussian(n, 4, 3);
  Eigen::MatrixXd D(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) D(i, j) = (X.row(i) - X.row(j)).norm();
  SUBCASE("identical RDMs reach the minimum p") {
    const auto r = permutation_rsa(D, D, 500, 1);
    CHECK(r.observed_rho == Approx(1.0));
    CHECK(r.exceedances == 0);
    CHECK(r.p_value == Approx(1.0 / 501.0));
  }
  SUBCASE("same seed, same answer") {
    const auto Y = testing::gaussian(n, 4, 4);
    Eigen::MatrixXd E(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) E(i, j) = (Y.row(i) - Y.row(j)).norm();
    const auto a = permutation_rsa(D, E, 200, 9);
    const auto b = permutation_rsa(D, E, 200, 9);
    CHECK(a.exceedances == b.exceedances);
    CHECK(a.observed_rho == Approx(spearman(upper_triangle(D), upper_triangle(E))));
  }
  CHECK_THROWS_AS(permutation_rsa(D, D, 50, 0), InvalidArgument);
  Eigen::MatrixXd asym = D;
  asym(0, 1) += 1;
  CHECK_THROWS_AS(permutation_rsa(asym, D, 200, 0), ContractViolation);
}

TEST_CASE("BH-FDR worked example") {
  // Sorted: .001 .008 .039 .041 .042 .06 .074 .205; thresholds k*.05/8.
  const std::vector<double> p = {0.041, 0.001, 0.205, 0.039, 0.008, 0.074, 0.042, 0.06};
  const auto r = bh_fdr(p, 0.05);
  CHECK(r == std::vector<bool>{false, true, false, false, true, false, false, false});
  // Step-up: rank 2 fails its own threshold but rank 3 passes.
  const std::vector<double> q = {0.01, 0.045, 0.04};  // thresholds .0167 .0333 .05
  CHECK(bh_fdr(q, 0.05) == std::vector<bool>{true, true, true});
  CHECK(bh_fdr(std::vector<double>{}, 0.05).empty());
  CHECK_THROWS_AS(bh_fdr(std::vector<double>{0.0}, 0.05), InvalidArgument);
}

TEST_CASE("percentile interpolates between order statistics") {
  CHECK(percentile({1, 2, 3, 4}, 50) == Approx(2.5));
  CHECK(percentile({5, 1, 3}, 0) == Approx(1));
  CHECK(percentile({5, 1, 3}, 100) == Approx(5));
  CHECK(percentile({0, 10}, 90) == Approx(9));
}

TEST_CASE("block bootstrap") {
  std::vector<double> v;
  std::vector<int> g;
  for (int c = 0; c < 18; ++c)
    for (int i = 0; i < 5; ++i) {
      v.push_back(c * 0.1 + i * 0.01);
      g.push_back(c);
    }
  const auto a = block_bootstrap_ci(v, g, 2000, 5);
  const auto b = block_bootstrap_ci(v, g, 2000, 5);
  CHECK(a.lo == b.lo);
  CHECK(a.hi == b.hi);
  CHECK(a.lo < mean(v));
  CHECK(a.hi > mean(v));
  // Constant groups collapse the interval.
  std::vector<double> same(v.size(), 0.7);
  const auto c = block_bootstrap_ci(same, g, 100, 1);
  CHECK(c.lo == Approx(0.7));
  CHECK(c.hi == Approx(0.7));
}

TEST_CASE("entropy of a neuron over forms") {
  // Two neurons, six forms, one stimulus per form.
  store::ActivationTensor t("e", 6, 1, 2);
  std::vector<int> forms(6);
  for (int f = 0; f < 6; ++f) {
    forms[static_cast<std::size_t>(f)] = f;
    t.at(f, 0, 0) = 1.0f;                         // uniform
    t.at(f, 0, 1) = f == 2 ? -4.0f : 0.0f;        // one form only
  }
  const auto p = entropy_profile(t, forms);
  CHECK(p.H(0, 0) == Approx(std::log(6.0)));
  CHECK(p.H(0, 1) == Approx(0.0));
  // Mixed: |values| 1,1,2,0,0,0 -> p = .25,.25,.5
  for (int f = 0; f < 6; ++f) t.at(f, 0, 1) = std::array<float, 6>{1, -1, 2, 0, 0, 0}[static_cast<std::size_t>(f)];
  const double h = -(0.25 * std::log(0.25) * 2 + 0.5 * std::log(0.5));
  CHECK(entropy_profile(t, forms).H(0, 1) == Approx(h));
  std::vector<int> missing = {0, 0, 1, 2, 3, 4};
  CHECK_THROWS_AS(entropy_profile(t, missing), InvalidArgument);
}

TEST_CASE("agnostic fraction is strict") {
  EntropyProfile p;
  p.form_count = 6;
  p.H.resize(2, 5);
  p.H << 0, 1, 2, 3, 4, 5, 6, 7, 8, 9;
  // 90th percentile of 0..9 is 8.1: only 9 exceeds.
  const auto f = agnostic_fraction(p, 90);
  CHECK(f[0] == Approx(0.0));
  CHECK(f[1] == Approx(0.2));
  CHECK_THROWS_AS(agnostic_fraction(p, 100), InvalidArgument);
}

TEST_CASE("mean and sd") {
  const std::vector<double> x = {2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(mean(x) == Approx(5));
  CHECK(sample_sd(x) == Approx(std::sqrt(32.0 / 7.0)));
  CHECK(sample_sd(std::vector<double>{1}) == 0.0);
}
