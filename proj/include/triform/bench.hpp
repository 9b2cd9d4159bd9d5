#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "triform/types.hpp"

namespace triform::bench {

inline constexpr std::string_view kBenchmarkVersion = "triform-bench/1.0";

enum class SlotKind { integer, integer_set, entity, direction, lexicon_entry };

struct SlotSpec {
  std::string name;
  SlotKind kind;
};

struct ConceptSpec {
  int concept_id;  // 1..18
  Domain domain;
  std::string name;  // human-readable, e.g. "Modus ponens"
  std::string key;   // snake_case, used in stimulus ids and code identifiers
  std::vector<SlotSpec> parameter_schema;
  std::string solution_rule;  // what the canonical conclusion is, in words
};

// The 18 concepts in inventory order (concept_id = index + 1).
const std::vector<ConceptSpec>& concept_specs();
const ConceptSpec& concept_spec(int concept_id);

using ParamValue = std::variant<std::int64_t, std::string>;

struct Param {
  std::string name;
  ParamValue value;
};

struct CanonicalInstance {
  int concept_id = 0;
  int instance_idx = 0;
  std::vector<Param> parameters;
  std::string conclusion;  // language-neutral canonical answer

  std::int64_t integer(std::string_view name) const;
  const std::string& text(std::string_view name) const;
};

// The three instances of a concept. Parameters are drawn from a generator
// keyed by (seed, concept_id, instance_idx, attempt); an instance is redrawn
// until its conclusion differs from the lower-indexed instances.
std::vector<CanonicalInstance> canonical_instances(int concept_id, std::uint64_t seed);

// Evaluates the concept's solution rule on the instance parameters,
// independent of the stored conclusion.
std::string solve(const CanonicalInstance& instance);

// Throws InvalidArgument for an out-of-range form value.
std::string render_form(const CanonicalInstance& instance, Form form);

// The canonical conclusion as it must appear inside the rendered text of
// the given form.
std::string conclusion_surface(const CanonicalInstance& instance, Form form);

struct Stimulus {
  std::string stimulus_id;
  int concept_id = 0;
  int instance_idx = 0;
  Form form = Form::en;
  std::string text;
  Domain domain = Domain::arithmetic;
};

struct StimulusSet {
  std::vector<Stimulus> stimuli;
  std::uint64_t seed = 0;
  std::string benchmark_version;
};

StimulusSet generate_benchmark(std::uint64_t seed);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_stimulus_set(const StimulusSet& set);

LabelTable label_table(const StimulusSet& set);

// Stimulus file: a header object {"benchmark_version", "seed", "count"}
// followed by one object per stimulus, sorted by (concept_id, instance_idx,
// form), LF-terminated.
std::string to_jsonl(const StimulusSet& set);
void write_stimulus_file(const StimulusSet& set, std::ostream& out);
StimulusSet read_stimulus_file(std::istream& in);
// Accepts either a stimulus file or a label-only file in the same schema.
LabelTable read_label_table(std::istream& in);

struct SurfaceFeatures {
  int token_count = 0;
  double char_entropy = 0.0;  // nats, over Unicode code points
  double type_token_ratio = 0.0;
};

// Tokens: split on Unicode whitespace, then every punctuation code point
// becomes its own token. Leading/trailing whitespace is ignored.
std::vector<std::string> tokenize(std::string_view text);
SurfaceFeatures surface_features(std::string_view text);

}  // namespace triform::bench
