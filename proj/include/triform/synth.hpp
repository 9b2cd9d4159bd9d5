#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "triform/fars.hpp"
#include "triform/patching.hpp"
#include "triform/store.hpp"

namespace triform::synth {

// Per-layer multiplier of a planted signal.
struct LayerProfile {
  enum class Kind { constant, bump, only };
  Kind kind = Kind::constant;
  double center = 0.0;  // bump center (layer units); the single layer for `only`
  double width = 1.0;   // bump standard deviation

  double at(int layer) const;
  static LayerProfile constant() { return {}; }
  static LayerProfile bump(double center, double width) { return {Kind::bump, center, width}; }
  static LayerProfile only(int layer) { return {Kind::only, static_cast<double>(layer), 1.0}; }
};

enum class Geometry {
  shared,            // concept codes live in one k_c-dimensional subspace
  concept_specific,  // every concept gets its own orthogonal direction
};

struct PlantedSpec {
  int D = 256;
  int L = 12;
  int k_c = 10;
  int k_f = 5;
  double concept_scale = 1.0;
  double form_scale = 1.0;
  double sigma = 0.2;
  // Per (concept, form) perturbation of the concept code inside the concept
  // subspace, relative to the code norm.
  double concept_distortion = 0.0;
  LayerProfile concept_profile;
  LayerProfile form_profile;
  Geometry geometry = Geometry::shared;
  // When false the form subspace is drawn independently of the concept
  // subspace instead of being orthogonalized against it.
  bool orthogonal = true;
  std::uint64_t seed = 0;
  // When set, concept and form codes come from this seed instead, so models
  // with different subspaces and noise share one concept geometry.
  std::optional<std::uint64_t> code_seed;
  std::string model_id = "synthetic:planted";
};

struct GroundTruth {
  Eigen::MatrixXd concept_basis;  // k_c x D (18 x D for concept_specific)
  Eigen::MatrixXd form_basis;     // k_f x D
  Eigen::MatrixXd concept_codes;  // 18 x k_c, row c-1 is concept c
  Eigen::MatrixXd form_codes;     // 6 x k_f
};

struct Planted {
  store::ActivationTensor tensor;
  GroundTruth truth;
};

// Rows follow the label table. Concept and form codes are centered and
// whitened so that their mean squared norm is 1; noise is isotropic with
// per-coordinate sd sigma / sqrt(D), so signal-to-noise is scale / sigma.
Planted generate_planted(const PlantedSpec& spec, const LabelTable& labels);

// Principal angles between the row spans of B1 (k x D) and B2 (m x D), in
// radians, ascending, min(k, m) of them.
Eigen::VectorXd principal_angles(const Eigen::MatrixXd& B1, const Eigen::MatrixXd& B2);

// Linear readout standing in for the rest of a model when simulating
// interventions: logits = W h with separate gains on the concept, form and
// background subspaces.
struct ReadoutSpec {
  int vocab = 1000;
  double concept_gain = 1.0;
  double form_gain = 1.0;
  double background_gain = 1.0;
  std::uint64_t seed = 0;
};

class SyntheticReadout {
 public:
  SyntheticReadout(const GroundTruth& truth, int D, const ReadoutSpec& spec);
  Eigen::VectorXd logits(const Eigen::VectorXd& h) const;
  std::array<std::int64_t, 10> top10(const Eigen::VectorXd& h) const;
  std::vector<double> softmax(const Eigen::VectorXd& h) const;

 private:
  Eigen::MatrixXd W_;
};

// Runs every plan cell on the synthetic readout. The clean run reads the
// target stimulus; the patched run reads the condition's intervention at
// the cell layer. Ablation records carry KL(clean || ablated).
std::vector<patching::InterventionRecord> simulate_interventions(
    const store::ActivationTensor& tensor, const LabelTable& labels, const patching::PatchPlan& plan,
    const std::map<std::string, fars::SubspaceBasis>& bases, const SyntheticReadout& readout);

// Form-dominant data: form offsets and isotropic noise both exceed the
// concept signal in the full space, while the concept subspace stays clean.
PlantedSpec form_dominant_preset(std::uint64_t seed);

// Planted data and readout used for simulated patching runs.
struct InterventionPreset {
  PlantedSpec planted;
  ReadoutSpec readout;
};
InterventionPreset intervention_preset(std::uint64_t seed);

// A directory with everything the report pipeline reads: stimuli.jsonl,
// per-model activations, and (optionally) patch plans, their bases and
// simulated intervention records, plus config.json pointing at them.
struct WorkspaceSpec {
  int n_models = 2;
  int n_layers = 12;
  std::optional<int> hidden_dim;  // preset default when unset
  std::string preset = "intervention";  // intervention, form-dominant or default
  bool interventions = true;
  int random_draws = 10;
  int n_layer_samples = 8;
  std::uint64_t seed = 0;
};
// Returns the path of config.json.
std::filesystem::path write_workspace(const WorkspaceSpec& spec, const std::filesystem::path& dir);

// Balanced 324-row label table in canonical order, without stimulus text.
LabelTable planted_labels();

}  // namespace triform::synth
