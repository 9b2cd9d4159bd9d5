#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace triform {

enum class Form : int { en = 0, zh, fr, code, math, structured };
inline constexpr int kFormCount = 6;
inline constexpr std::array<Form, kFormCount> kAllForms = {Form::en,   Form::zh,   Form::fr,
                                                          Form::code, Form::math, Form::structured};

enum class Domain : int { arithmetic = 0, logic, relational, causal, spatial };
inline constexpr int kDomainCount = 5;
inline constexpr std::array<Domain, kDomainCount> kAllDomains = {
    Domain::arithmetic, Domain::logic, Domain::relational, Domain::causal, Domain::spatial};

inline constexpr int kConceptCount = 18;
inline constexpr int kInstancesPerConcept = 3;
inline constexpr int kStimulusCount = kConceptCount * kInstancesPerConcept * kFormCount;

std::string_view to_string(Form f);
std::string_view to_string(Domain d);
// Throw InvalidArgument on unknown names.
Form parse_form(std::string_view s);
Domain parse_domain(std::string_view s);

inline int form_index(Form f) { return static_cast<int>(f); }

// One row per stimulus; row order defines the stimulus axis of activation
// tensors.
struct LabelRecord {
  std::string stimulus_id;
  int concept_id = 0;  // 1..18
  Form form = Form::en;
  int instance_idx = 0;  // 0..2
  Domain domain = Domain::arithmetic;
};

struct LabelTable {
  std::vector<LabelRecord> rows;

  std::size_t size() const { return rows.size(); }
  std::vector<int> concept_ids() const;
  std::vector<int> form_indices() const;
  // Indices of rows with the given form, ordered by (concept_id, instance_idx).
  std::vector<int> rows_of_form(Form f) const;
  LabelTable subset(const std::vector<int>& row_indices) const;
};

}  // namespace triform
