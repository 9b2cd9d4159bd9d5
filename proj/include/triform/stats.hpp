#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "triform/store.hpp"

namespace triform::stats {

// Ranks starting at 1; ties receive the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> x);

// Throw ContractViolation on length mismatch and UndefinedResult when either
// input is constant.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

// Strict upper triangle in row-major order (i < j).
std::vector<double> upper_triangle(const Eigen::MatrixXd& m);

struct PermutationResult {
  double observed_rho = 0.0;
  double p_value = 1.0;
  int n_permutations = 0;
  std::uint64_t seed = 0;
  int exceedances = 0;  // permuted rho >= observed
};

double permutation_p_value(int exceedances, int n_permutations);

// One-sided test. Permutation i uses a generator keyed by (seed, i).
PermutationResult permutation_rsa(const Eigen::MatrixXd& emp, const Eigen::MatrixXd& theo, int n_perm,
                                  std::uint64_t seed);

std::vector<bool> bh_fdr(std::span<const double> p_values, double alpha);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Linear interpolation between order statistics, q in [0, 100].
double percentile(std::vector<double> values, double q);

// Resample i draws groups from a generator keyed by (seed, i).
Interval block_bootstrap_ci(std::span<const double> values, std::span<const int> groups, int n_resamples,
                            std::uint64_t seed, double level = 0.95);

struct EntropyProfile {
  Eigen::MatrixXd H;  // L x D, nats
  int form_count = 0;
};

EntropyProfile entropy_profile(const store::ActivationTensor& tensor, std::span<const int> form_labels,
                               int form_count = kFormCount);

// Per-layer fraction of neurons whose entropy strictly exceeds the given
// percentile of all L*D entropies pooled.
std::vector<double> agnostic_fraction(const EntropyProfile& profile, double percentile_value);

double mean(std::span<const double> x);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_sd(std::span<const double> x);

}  // namespace triform::stats
