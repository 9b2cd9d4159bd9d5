#include "triform/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "triform/error.hpp"
#include "triform/rng.hpp"

namespace triform::stats {

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ContractViolation(fmt::format("length mismatch: {} vs {}", x.size(), y.size()));
  if (x.size() < 2) throw InvalidArgument("correlation needs at least 2 values");
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i] - mx, b = y[i] - my;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedResult("correlation undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ContractViolation(fmt::format("length mismatch: {} vs {}", x.size(), y.size()));
  if (x.size() < 3) throw InvalidArgument("spearman needs at least 3 values");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pearson(rx, ry);
}

std::vector<double> upper_triangle(const Eigen::MatrixXd& m) {
  std::vector<double> v;
  const auto n = m.rows();
  v.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) v.push_back(m(i, j));
  return v;
}

double permutation_p_value(int exceedances, int n_permutations) {
  return (static_cast<double>(exceedances) + 1.0) / (static_cast<double>(n_permutations) + 1.0);
}

namespace {

void check_rdm(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw ContractViolation(fmt::format("{} RDM is not square", what));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m(i, i) != 0.0) throw ContractViolation(fmt::format("{} RDM has nonzero diagonal at {}", what, i));
    for (Eigen::Index j = i + 1; j < m.rows(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * (1.0 + std::abs(m(i, j))))
        throw ContractViolation(fmt::format("{} RDM is not symmetric at ({}, {})", what, i, j));
  }
}

}  // namespace

PermutationResult permutation_rsa(const Eigen::MatrixXd& emp, const Eigen::MatrixXd& theo, int n_perm,
                                  std::uint64_t seed) {
  check_rdm(emp, "empirical");
  check_rdm(theo, "theoretical");
  if (emp.rows() != theo.rows())
    throw ContractViolation(fmt::format("RDM dimension mismatch: {} vs {}", emp.rows(), theo.rows()));
  if (emp.rows() < 3) throw InvalidArgument("RDMs need at least 3 stimuli");
  if (n_perm < 100) throw InvalidArgument(fmt::format("n_perm must be >= 100, got {}", n_perm));

  const int n = static_cast<int>(emp.rows());
  const auto re = average_ranks(upper_triangle(emp));
  const auto rt_vec = average_ranks(upper_triangle(theo));

  // A simultaneous row/column permutation of a symmetric matrix only
  // permutes its upper-triangle multiset, so the theoretical ranks can be
  // computed once and looked up through the permutation.
  Eigen::MatrixXd rt = Eigen::MatrixXd::Zero(n, n);
  {
    std::size_t k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) rt(i, j) = rt(j, i) = rt_vec[k++];
  }
  const double m = static_cast<double>(re.size());
  const double mean_rank = (m + 1.0) / 2.0;
  double sse = 0, sst = 0;
  for (std::size_t k = 0; k < re.size(); ++k) {
    sse += (re[k] - mean_rank) * (re[k] - mean_rank);
    sst += (rt_vec[k] - mean_rank) * (rt_vec[k] - mean_rank);
  }
  if (sse == 0.0 || sst == 0.0) throw UndefinedResult("RSA undefined: an RDM upper triangle is constant");
  const double denom = std::sqrt(sse * sst);

  auto rho_under = [&](const std::vector<int>& p) {
    double s = 0.0;
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) {
      const int pi = p[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < n; ++j) s += re[k++] * rt(pi, p[static_cast<std::size_t>(j)]);
    }
    return (s - m * mean_rank * mean_rank) / denom;
  };

  std::vector<int> identity(static_cast<std::size_t>(n));
  std::iota(identity.begin(), identity.end(), 0);
  PermutationResult res;
  res.observed_rho = std::clamp(rho_under(identity), -1.0, 1.0);
  res.n_permutations = n_perm;
  res.seed = seed;
  // Tolerance absorbs summation-order rounding so that permutations that
  // reproduce the observed pairing count as exceedances.
  const double tol = 1e-12;
  for (int i = 0; i < n_perm; ++i) {
    KeyedRng rng{seed, static_cast<std::uint64_t>(i)};
    const auto p = rng.permutation(n);
    if (rho_under(p) >= res.observed_rho - tol) ++res.exceedances;
  }
  res.p_value = permutation_p_value(res.exceedances, n_perm);
  return res;
}

std::vector<bool> bh_fdr(std::span<const double> p, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument(fmt::format("alpha must be in (0, 1), got {}", alpha));
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!(p[i] > 0.0 && p[i] <= 1.0))
      throw InvalidArgument(fmt::format("p-value {} at index {} outside (0, 1]", p[i], i));
  const std::size_t m = p.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  double cutoff = -1.0;
  for (std::size_t k = m; k >= 1; --k) {
    const double thr = static_cast<double>(k) * alpha / static_cast<double>(m);
    if (p[idx[k - 1]] <= thr) {
      cutoff = p[idx[k - 1]];
      break;
    }
  }
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < m; ++i) reject[i] = p[i] <= cutoff;
  return reject;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw InvalidArgument("percentile of an empty set");
  if (!(q >= 0.0 && q <= 100.0)) throw InvalidArgument(fmt::format("percentile {} outside [0, 100]", q));
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

Interval block_bootstrap_ci(std::span<const double> values, std::span<const int> groups, int n_resamples,
                            std::uint64_t seed, double level) {
  if (values.empty()) throw InvalidArgument("block_bootstrap_ci: empty input");
  if (values.size() != groups.size())
    throw ContractViolation(fmt::format("{} values but {} group labels", values.size(), groups.size()));
  if (n_resamples < 1) throw InvalidArgument("n_resamples must be positive");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("CI level must be in (0, 1)");

  std::map<int, std::pair<double, int>> acc;  // group -> (sum, count)
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& a = acc[groups[i]];
    a.first += values[i];
    a.second += 1;
  }
  std::vector<std::pair<double, int>> g;
  g.reserve(acc.size());
  for (const auto& [label, sc] : acc) g.push_back(sc);

  std::vector<double> means(static_cast<std::size_t>(n_resamples));
  for (int b = 0; b < n_resamples; ++b) {
    KeyedRng rng{seed, static_cast<std::uint64_t>(b)};
    double s = 0.0;
    long c = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const auto& pick = g[rng.below(g.size())];
      s += pick.first;
      c += pick.second;
    }
    means[static_cast<std::size_t>(b)] = s / static_cast<double>(c);
  }
  const double tail = (1.0 - level) / 2.0 * 100.0;
  return {percentile(means, tail), percentile(means, 100.0 - tail)};
}

EntropyProfile entropy_profile(const store::ActivationTensor& t, std::span<const int> form_labels, int F) {
  store::validate_tensor(t);
  if (form_labels.size() != static_cast<std::size_t>(t.n_stimuli))
    throw ContractViolation(fmt::format("{} form labels for N={}", form_labels.size(), t.n_stimuli));
  if (F < 2) throw InvalidArgument("form_count must be >= 2");
  std::vector<int> counts(static_cast<std::size_t>(F), 0);
  for (int f : form_labels) {
    if (f < 0 || f >= F) throw InvalidArgument(fmt::format("form label {} outside [0, {})", f, F));
    ++counts[static_cast<std::size_t>(f)];
  }
  std::vector<std::string> missing;
  for (int f = 0; f < F; ++f)
    if (counts[static_cast<std::size_t>(f)] == 0) missing.push_back(std::to_string(f));
  if (!missing.empty())
    throw InvalidArgument(fmt::format("entropy_profile: missing form(s) {}", fmt::join(missing, ", ")));

  const int L = t.n_layers, D = t.hidden_dim;
  const double logF = std::log(static_cast<double>(F));
  EntropyProfile prof;
  prof.form_count = F;
  prof.H.resize(L, D);
  Eigen::MatrixXd sums(F, D);
  for (int l = 0; l < L; ++l) {
    sums.setZero();
    for (int n = 0; n < t.n_stimuli; ++n) {
      const float* row = &t.data[t.index(n, l, 0)];
      auto s = sums.row(form_labels[static_cast<std::size_t>(n)]);
      for (int d = 0; d < D; ++d) s(d) += std::abs(static_cast<double>(row[d]));
    }
    for (int f = 0; f < F; ++f) sums.row(f) /= static_cast<double>(counts[static_cast<std::size_t>(f)]);
    for (int d = 0; d < D; ++d) {
      const double total = sums.col(d).sum();
      if (total <= 0.0) {
        prof.H(l, d) = logF;  // dead neuron: treated as form-indifferent
        continue;
      }
      double h = 0.0;
      for (int f = 0; f < F; ++f) {
        const double p = sums(f, d) / total;
        if (p > 0.0) h -= p * std::log(p);
      }
      prof.H(l, d) = std::clamp(h, 0.0, logF);
    }
  }
  return prof;
}

std::vector<double> agnostic_fraction(const EntropyProfile& profile, double pct) {
  if (!(pct > 0.0 && pct < 100.0)) throw InvalidArgument(fmt::format("percentile {} outside (0, 100)", pct));
  const auto& H = profile.H;
  std::vector<double> all(H.data(), H.data() + H.size());
  const double thr = percentile(all, pct);
  std::vector<double> frac(static_cast<std::size_t>(H.rows()));
  for (Eigen::Index l = 0; l < H.rows(); ++l)
    frac[static_cast<std::size_t>(l)] =
        static_cast<double>((H.row(l).array() > thr).count()) / static_cast<double>(H.cols());
  return frac;
}

double mean(std::span<const double> x) {
  if (x.empty()) throw InvalidArgument("mean of an empty set");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

}  // namespace triform::stats
