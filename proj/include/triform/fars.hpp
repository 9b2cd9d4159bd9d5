#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triform/geometry.hpp"
#include "triform/store.hpp"

namespace triform::fars {

enum class Method { concept_centroid_pca, form_centroid_pca, variance_pca, random_qr, identity, empty };
std::string_view to_string(Method m);
Method parse_method(std::string_view s);

inline constexpr int kMaxConceptK = kConceptCount - 1;  // 17
inline constexpr int kMaxFormK = kFormCount - 1;        // 5

struct SubspaceBasis {
  Eigen::MatrixXd B;  // k x D, orthonormal rows
  int layer = -1;
  Method method = Method::empty;
  Eigen::VectorXd centering;  // D
  std::optional<std::uint64_t> seed;
  std::vector<double> explained_variance;  // per component, PCA methods
  std::string model_id;

  int k() const { return static_cast<int>(B.rows()); }
  int dim() const { return static_cast<int>(B.cols()); }
};

// Throws ContractViolation if max |B B' - I| >= tol.
void check_orthonormal(const Eigen::MatrixXd& B, double tol = 1e-6);

// PCA over group centroids (centered by their own mean), top-k rows.
// cap bounds k; ContractViolation when fewer than k+1 distinct centroids.
SubspaceBasis centroid_pca(const Eigen::MatrixXd& X, const std::vector<int>& groups, int k, int cap, Method method,
                           int layer = -1);

SubspaceBasis extract_fars_layer(const Eigen::MatrixXd& X, const LabelTable& labels, int k, int layer = -1);
std::vector<SubspaceBasis> extract_fars(const store::ActivationTensor& tensor, const LabelTable& labels, int k);

SubspaceBasis extract_form_control_layer(const Eigen::MatrixXd& X, const LabelTable& labels, int k = kMaxFormK,
                                         int layer = -1);
std::vector<SubspaceBasis> extract_form_control(const store::ActivationTensor& tensor, const LabelTable& labels,
                                                int k = kMaxFormK);

SubspaceBasis random_basis(int D, int k, std::uint64_t seed);
SubspaceBasis variance_pca_basis(const Eigen::MatrixXd& X, int k, int layer = -1);
SubspaceBasis identity_basis(int D);
SubspaceBasis empty_basis(int D);
// First k rows of a PCA basis (nested subspaces).
SubspaceBasis truncate(const SubspaceBasis& b, int k);

Eigen::MatrixXd project(const Eigen::MatrixXd& X, const SubspaceBasis& basis);
Eigen::VectorXd subspace_patch(const Eigen::VectorXd& h_src, const Eigen::VectorXd& h_tgt, const SubspaceBasis& basis);
Eigen::VectorXd subspace_ablate(const Eigen::VectorXd& h, const SubspaceBasis& basis);

double top10_overlap(std::span<const std::int64_t> a, std::span<const std::int64_t> b);
double kl_divergence(std::span<const double> p, std::span<const double> q);
std::vector<double> floor_and_renormalize(std::span<const double> p, double eps = 1e-10);

// Concept/form RSA of the projected stimuli (Euclidean RDM in the subspace)
// and mean off-diagonal probe accuracy on projected coordinates.
struct SubspaceMetrics {
  double rsa_concept = 0.0;
  double rsa_form = 0.0;
  double probe = 0.0;
};
SubspaceMetrics subspace_metrics(const Eigen::MatrixXd& X, const LabelTable& labels, const SubspaceBasis& basis,
                                 double ridge_alpha, bool with_probe = true);
// Spearman of the projected-space Euclidean RDM against a binary RDM.
double subspace_rsa(const Eigen::MatrixXd& projected, const geometry::Rdm& theo);

struct SweepRow {
  int k = 0;
  int best_layer = 0;
  double rsa_concept = 0.0;
  double rsa_form = 0.0;
  double probe = 0.0;
  double explained_variance = 0.0;  // cumulative at the best layer
};

std::vector<SweepRow> dimensionality_sweep(const store::ActivationTensor& tensor, const LabelTable& labels,
                                           const std::vector<int>& ks, double ridge_alpha = 0.1);

// Layer maximizing in-subspace concept RSA for FARS of size k.
int best_fars_layer(const store::ActivationTensor& tensor, const LabelTable& labels, int k);

struct HoldoutResult {
  int K = 0;
  int layer = 0;
  int k = 0;
  std::vector<double> heldout_rsa, insample_rsa, probe;
  double heldout_mean = 0, heldout_sd = 0, insample_mean = 0, insample_sd = 0, probe_mean = 0, probe_sd = 0;
};

// Split s holds out the first K concepts of a permutation keyed by
// (seed, K, s). FARS (k capped at n_train - 1) comes from the remaining
// concepts; the in-sample reference uses all concepts, evaluated on the
// same held-out stimuli.
HoldoutResult leave_k_out(const store::ActivationTensor& tensor, const LabelTable& labels, int layer, int K,
                          int n_splits, std::uint64_t seed, int k = 10, double ridge_alpha = 0.1);

struct ModelProjection {
  std::string model_id;
  std::string stimulus_digest;
  Eigen::MatrixXd projections;  // N x k
  Eigen::MatrixXd centroids;    // 18 x k
};

struct AlignmentResult {
  std::vector<std::string> model_ids;
  Eigen::MatrixXd cca;
  Eigen::MatrixXd centroid_rsa;
  std::vector<std::string> notes;
};

AlignmentResult cross_model_alignment(const std::vector<ModelProjection>& models);

// Basis files: <base>.basis.json, <base>.basis.f32 (k x D), <base>.center.f32 (D).
void write_basis(const SubspaceBasis& basis, const std::filesystem::path& base);
SubspaceBasis read_basis(const std::filesystem::path& base, double orthonormal_tol = 1e-4);

}  // namespace triform::fars
