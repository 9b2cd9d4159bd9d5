#include "triform/types.hpp"

#include <algorithm>
#include <numeric>

#include "triform/error.hpp"

namespace triform {

namespace {
constexpr std::array<std::string_view, kFormCount> kFormNames = {"en",   "zh",   "fr",
                                                                 "code", "math", "structured"};
constexpr std::array<std::string_view, kDomainCount> kDomainNames = {
    "arithmetic", "logic", "relational", "causal", "spatial"};
}  // namespace

std::string_view to_string(Form f) {
  const int i = static_cast<int>(f);
  if (i < 0 || i >= kFormCount) throw InvalidArgument("unknown form enum value " + std::to_string(i));
  return kFormNames[static_cast<std::size_t>(i)];
}

std::string_view to_string(Domain d) {
  const int i = static_cast<int>(d);
  if (i < 0 || i >= kDomainCount) throw InvalidArgument("unknown domain enum value " + std::to_string(i));
  return kDomainNames[static_cast<std::size_t>(i)];
}

Form parse_form(std::string_view s) {
  for (int i = 0; i < kFormCount; ++i)
    if (kFormNames[static_cast<std::size_t>(i)] == s) return static_cast<Form>(i);
  throw InvalidArgument("unknown form '" + std::string(s) + "'");
}

Domain parse_domain(std::string_view s) {
  for (int i = 0; i < kDomainCount; ++i)
    if (kDomainNames[static_cast<std::size_t>(i)] == s) return static_cast<Domain>(i);
  throw InvalidArgument("unknown domain '" + std::string(s) + "'");
}

std::vector<int> LabelTable::concept_ids() const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.concept_id);
  return out;
}

std::vector<int> LabelTable::form_indices() const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(form_index(r.form));
  return out;
}

std::vector<int> LabelTable::rows_of_form(Form f) const {
  std::vector<int> idx;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].form == f) idx.push_back(static_cast<int>(i));
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const auto& ra = rows[static_cast<std::size_t>(a)];
    const auto& rb = rows[static_cast<std::size_t>(b)];
    return std::pair(ra.concept_id, ra.instance_idx) < std::pair(rb.concept_id, rb.instance_idx);
  });
  return idx;
}

LabelTable LabelTable::subset(const std::vector<int>& row_indices) const {
  LabelTable out;
  out.rows.reserve(row_indices.size());
  for (int i : row_indices) out.rows.push_back(rows.at(static_cast<std::size_t>(i)));
  return out;
}

}  // namespace triform
