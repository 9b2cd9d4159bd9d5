#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "triform/fars.hpp"
#include "triform/stats.hpp"

namespace triform::patching {

inline constexpr std::string_view kFarsK10 = "fars_k10";
inline constexpr std::string_view kVariancePca10 = "variance_pca_10";
inline constexpr std::string_view kRandom10 = "random_10";
inline constexpr std::string_view kFullReplacement = "full_replacement";
inline constexpr std::string_view kFormControlAblate = "form_control_ablate";
inline constexpr std::string_view kFarsAblate = "fars_ablate";

inline constexpr std::array<std::string_view, 6> kConditions = {kFarsK10,    kVariancePca10,     kRandom10,
                                                               kFullReplacement, kFormControlAblate, kFarsAblate};
bool is_ablation(std::string_view condition);
// Throws InvalidArgument for an unknown tag.
void check_condition(std::string_view condition);

// Reference used for the full replacement condition; no file backs it.
inline constexpr std::string_view kIdentityRef = "identity";

struct FormPair {
  Form src = Form::en;
  Form tgt = Form::en;
  bool operator==(const FormPair&) const = default;
};

struct ConceptInstance {
  int concept_id = 1;
  int instance = 0;
  bool operator==(const ConceptInstance&) const = default;
};

std::vector<FormPair> default_form_pairs();

struct PlanConfig {
  std::string model_id;
  int n_layers = 0;
  int hidden_dim = 0;
  int best_layer = 0;
  int n_instances = 50;
  int n_layer_samples = 8;
  int random_draws = 10;
  int k = 10;
  int form_control_k = fars::kMaxFormK;
  std::uint64_t seed = 0;
  std::vector<FormPair> form_pairs = default_form_pairs();
};

struct BasisRef {
  std::string condition;
  int layer = 0;
  std::optional<int> draw;
  std::string ref;  // path relative to the basis directory, without suffix
};

struct PatchPlan {
  std::string model_id;
  int n_layers = 0;
  int hidden_dim = 0;
  int best_layer = 0;
  int k = 10;
  int form_control_k = fars::kMaxFormK;
  int random_draws = 10;
  std::uint64_t seed = 0;
  std::vector<int> layers;
  std::vector<FormPair> form_pairs;
  std::vector<ConceptInstance> instances;
  std::vector<std::string> conditions;
  std::vector<BasisRef> bases;
};

// Layers: n_layer_samples evenly spaced over [0, L-1] plus the best layer.
// Instances: a keyed shuffle of the 54 (concept, instance) pairs, first
// n_instances kept, sorted.
PatchPlan build_patch_plan(const PlanConfig& config);

std::string plan_to_json(const PatchPlan& plan);
PatchPlan plan_from_json(const std::string& text);

// Random bases are keyed by (plan seed, layer, draw).
std::uint64_t random_basis_seed(const PatchPlan& plan, int layer, int draw);
std::string basis_ref(std::string_view condition, int layer, std::optional<int> draw = std::nullopt);
const BasisRef& find_basis(const PatchPlan& plan, std::string_view condition, int layer,
                           std::optional<int> draw = std::nullopt);

struct PlanCell {
  std::string condition;
  int layer = 0;
  FormPair pair;
  ConceptInstance instance;
  std::optional<int> draw;
};

// Patching cells: (condition, layer, form pair, instance[, draw]). Ablation
// cells use each distinct target form once with src = tgt.
std::vector<PlanCell> plan_cells(const PatchPlan& plan);
std::string cell_key(const std::string& model_id, const PlanCell& cell);

// Computes every basis referenced by the plan from the activations.
std::map<std::string, fars::SubspaceBasis> condition_bases(const store::ActivationTensor& tensor,
                                                           const LabelTable& labels, const PatchPlan& plan);
void write_condition_bases(const std::map<std::string, fars::SubspaceBasis>& bases,
                           const std::filesystem::path& dir);
std::map<std::string, fars::SubspaceBasis> load_condition_bases(const PatchPlan& plan,
                                                                const std::filesystem::path& dir);

// Every referenced basis file exists and matches the plan's hidden_dim.
// Throws ContractViolation listing the offending references.
void validate_plan(const PatchPlan& plan, const std::filesystem::path& basis_dir);

struct InterventionRecord {
  std::string model_id;
  std::string condition;
  int layer = 0;
  Form src_form = Form::en;
  Form tgt_form = Form::en;
  int concept_id = 1;
  int instance = 0;
  std::optional<int> draw;
  std::array<std::int64_t, 10> clean_top10{};
  std::array<std::int64_t, 10> patched_top10{};
  std::optional<double> kl;
};

// Throws FormatError on malformed lines, duplicate token ids or negative KL.
InterventionRecord record_from_json(const std::string& line);
std::string record_to_json(const InterventionRecord& record);
std::vector<InterventionRecord> read_records(std::istream& in);
void write_records(const std::vector<InterventionRecord>& records, std::ostream& out);
PlanCell cell_of(const InterventionRecord& record);

struct ConditionSummary {
  std::string model_id;
  std::string condition;
  int n_cells = 0;
  double mean_overlap = 0.0;
  stats::Interval overlap_ci;
  std::optional<double> mean_kl;
  std::optional<stats::Interval> kl_ci;
};

struct PairSummary {
  std::string model_id;
  std::string condition;
  FormPair pair;
  int n_cells = 0;
  double mean_overlap = 0.0;
};

struct DomainSummary {
  std::string model_id;
  std::string condition;
  Domain domain = Domain::arithmetic;
  int n_cells = 0;
  double mean_overlap = 0.0;
  std::optional<double> mean_kl;
};

struct DrawSummary {
  std::string model_id;
  int draw = 0;
  int n_cells = 0;
  double mean_overlap = 0.0;
};

struct Coverage {
  std::string model_id;
  std::size_t expected = 0;
  std::size_t observed = 0;
  std::size_t missing = 0;
  std::size_t duplicates = 0;
  std::size_t unplanned = 0;
};

struct InterventionSummary {
  std::vector<ConditionSummary> conditions;
  std::vector<PairSummary> pairs;
  std::vector<DomainSummary> domains;
  std::vector<DrawSummary> draws;
  std::vector<Coverage> coverage;
};

struct AggregateOptions {
  int n_resamples = 5000;
  std::uint64_t seed = 0;
  double level = 0.95;
  // Plans used for coverage; models without a plan get no coverage row.
  std::vector<PatchPlan> plans;
};

// Records are sorted into canonical order first, so the result does not
// depend on input order. CIs resample concepts.
InterventionSummary aggregate_interventions(std::vector<InterventionRecord> records,
                                            const AggregateOptions& options = {});

// Dual-implementation fixture: float32 (h_src, h_tgt, B) triples and the
// expected subspace_patch output.
struct ParityCase {
  int dim = 0;
  int k = 0;
  std::vector<float> h_src, h_tgt, basis, expected;  // basis is k x dim row-major
};

std::vector<ParityCase> make_parity_fixture(int n_cases, int dim, std::uint64_t seed);
std::string fixture_to_json(const std::vector<ParityCase>& cases);
std::vector<ParityCase> fixture_from_json(const std::string& text);
// Max |subspace_patch(inputs) - expected| over all cases and coordinates.
double parity_max_deviation(const std::vector<ParityCase>& cases);

}  // namespace triform::patching
