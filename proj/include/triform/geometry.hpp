#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "triform/bench.hpp"
#include "triform/stats.hpp"
#include "triform/store.hpp"

namespace triform::geometry {

enum class RdmKind { empirical, conceptual, form, bias, language_type };
enum class Metric { correlation, euclidean, binary };

std::string_view to_string(RdmKind k);
std::string_view to_string(Metric m);

struct Rdm {
  Eigen::MatrixXd matrix;
  RdmKind kind = RdmKind::empirical;
  Metric metric = Metric::correlation;
};

// Throws UndefinedResult listing constant rows when metric is correlation.
Rdm empirical_rdm(const Eigen::MatrixXd& X, Metric metric = Metric::correlation);

// The four theoretical kinds in reporting order.
inline constexpr std::array<RdmKind, 4> kTheoryKinds = {RdmKind::conceptual, RdmKind::form, RdmKind::bias,
                                                        RdmKind::language_type};

struct TheoreticalRdms {
  Rdm conceptual, form, bias, language_type;
  const Rdm& get(RdmKind k) const;
};

struct TheoryOptions {
  // Language-type class of the structured form. The default groups it with
  // code and math.
  bool structured_is_formal = true;
};

bool is_formal(Form f, const TheoryOptions& options);

// Binary RDM for the concept, form or language_type kind.
Rdm label_rdm(const LabelTable& labels, RdmKind kind, const TheoryOptions& options = {});

TheoreticalRdms theoretical_rdms(const LabelTable& labels, const std::vector<bench::SurfaceFeatures>& features,
                                 const TheoryOptions& options = {});

struct LayerRsa {
  int layer = 0;
  std::array<stats::PermutationResult, 4> result;  // indexed like kTheoryKinds
  std::array<bool, 4> significant{};
};

struct RsaSweep {
  std::vector<LayerRsa> layers;
  std::array<int, 4> peak_layer{};
  std::array<double, 4> peak_rho{};
  double alpha = 0.05;
};

// Rows are put into canonical order first, so the result does not depend on
// stimulus row order. Layer l, kind k uses permutation seed derived from
// (seed, l, k). BH-FDR runs jointly over all layer x kind p-values.
RsaSweep rsa_sweep(const store::ActivationTensor& tensor, const LabelTable& labels,
                   const std::vector<bench::SurfaceFeatures>& features, int n_perm, std::uint64_t seed,
                   double alpha = 0.05, const TheoryOptions& theory = {}, Metric metric = Metric::correlation);

// Spearman between an empirical RDM and a theoretical RDM (no test).
double rsa_rho(const Rdm& emp, const Rdm& theo);

// Standard linear CKA through N x N Gram matrices. UndefinedResult when a
// centered input is all zero.
double linear_cka(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

enum class CkaGroup { linguistic = 0, symbolic, structural };
inline constexpr int kCkaGroupCount = 3;
std::string_view to_string(CkaGroup g);
// The three form pairs of each group; "prose" is the English form.
std::array<std::pair<Form, Form>, 3> cka_pairs(CkaGroup g);

struct CkaByDimension {
  Eigen::MatrixXd values;  // L x 3
  std::array<double, 3> peak{};
  std::array<int, 3> peak_layer{};
  double spread = 0.0;  // max - min of the peaks
};

// Rows of form f ordered by (concept_id, instance_idx), checked to align
// across all forms.
std::vector<std::vector<int>> aligned_form_rows(const LabelTable& labels);

CkaByDimension dimensionwise_cka(const store::ActivationTensor& tensor, const LabelTable& labels);

struct ProbeGrid {
  Eigen::MatrixXd accuracy;  // 6 x 6, source x target
  double mean_offdiag = 0.0;  // over the 30 ordered pairs
  std::vector<double> unordered;  // 15 pair means, (i<j) in form order
};

struct ProbeResult {
  std::vector<ProbeGrid> layers;
  std::vector<std::string> warnings;
};

struct ProbeOptions {
  double alpha = 0.1;
};

// Multi-output ridge on one-hot concept targets with intercept, features
// standardized by source-form statistics. Diagonal cells use
// leave-one-instance-out folds.
ProbeResult cross_form_probe(const store::ActivationTensor& tensor, const LabelTable& labels,
                             const ProbeOptions& options = {});

// Same probe on a single N x D matrix (used for projected data).
ProbeGrid cross_form_probe_matrix(const Eigen::MatrixXd& X, const LabelTable& labels, double alpha,
                                  std::vector<std::string>* warnings = nullptr);

struct Ridge {
  Eigen::MatrixXd W;
  Eigen::RowVectorXd intercept;
};
// Closed-form ridge with unpenalized intercept; X is assumed standardized.
Ridge fit_ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double alpha);

struct CcaResult {
  std::vector<double> correlations;  // descending
  int rank_p = 0;
  int rank_q = 0;
  double mean = 0.0;
  std::string note;  // set when computed on an effective rank below k
};

CcaResult canonical_correlations(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q);
double cca_mean(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q);

double centroid_rsa(const Eigen::MatrixXd& C1, const Eigen::MatrixXd& C2, Metric metric = Metric::correlation);

// Group means of the rows of X; result row g is label value sorted order.
Eigen::MatrixXd centroids(const Eigen::MatrixXd& X, const std::vector<int>& group_labels,
                          std::vector<int>* group_values = nullptr);

}  // namespace triform::geometry
