#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>

#include "triform/rng.hpp"
#include "triform/store.hpp"
#include "triform/synth.hpp"

namespace testing {

inline Eigen::MatrixXd gaussian(int rows, int cols, std::uint64_t seed) {
  triform::KeyedRng rng{seed, 0x7465737400ULL};
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

inline Eigen::MatrixXd random_orthogonal(int n, std::uint64_t seed) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(n, n, seed));
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("triform_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline triform::store::ActivationTensor tensor_from(const Eigen::MatrixXd& X, const std::string& id = "t") {
  triform::store::ActivationTensor t(id, static_cast<int>(X.rows()), 1, static_cast<int>(X.cols()));
  for (int n = 0; n < X.rows(); ++n)
    for (int d = 0; d < X.cols(); ++d) t.at(n, 0, d) = static_cast<float>(X(n, d));
  return t;
}

}  // namespace testing
