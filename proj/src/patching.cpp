#include "triform/patching.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include "json.hpp"
#include "triform/bench.hpp"
#include "triform/error.hpp"
#include "triform/rng.hpp"

namespace triform::patching {
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Json pair_json(const FormPair& p) {
  return Json{{"src", std::string(to_string(p.src))}, {"tgt", std::string(to_string(p.tgt))}};
}

}  // namespace

bool is_ablation(std::string_view c) { return c == kFormControlAblate || c == kFarsAblate; }

void check_condition(std::string_view c) {
  if (std::find(kConditions.begin(), kConditions.end(), c) == kConditions.end())
    throw InvalidArgument("unknown condition '" + std::string(c) + "'");
}

std::vector<FormPair> default_form_pairs() {
  return {{Form::en, Form::math}, {Form::en, Form::zh}, {Form::en, Form::code}, {Form::code, Form::math}};
}

std::string basis_ref(std::string_view condition, int layer, std::optional<int> draw) {
  if (condition == kFullReplacement) return std::string(kIdentityRef);
  std::string name;
  if (condition == kFarsK10 || condition == kFarsAblate)
    name = std::string(kFarsK10);
  else if (condition == kFormControlAblate)
    name = "form_control";
  else if (condition == kRandom10)
    name = fmt::format("random_10_d{}", draw.value_or(0));
  else
    name = std::string(condition);
  return fmt::format("L{:02d}/{}", layer, name);
}

std::uint64_t random_basis_seed(const PatchPlan& plan, int layer, int draw) {
  return KeyedRng{plan.seed, 0x7261ULL, static_cast<std::uint64_t>(layer), static_cast<std::uint64_t>(draw)}();
}

PatchPlan build_patch_plan(const PlanConfig& c) {
  if (c.n_layers < 1 || c.hidden_dim < 1)
    throw InvalidArgument(fmt::format("plan needs positive n_layers and hidden_dim, got {} and {}", c.n_layers,
                                      c.hidden_dim));
  if (c.best_layer < 0 || c.best_layer >= c.n_layers)
    throw InvalidArgument(fmt::format("best layer {} outside [0, {})", c.best_layer, c.n_layers));
  const int total = kConceptCount * kInstancesPerConcept;
  if (c.n_instances < 1 || c.n_instances > total)
    throw InvalidArgument(fmt::format("n_instances = {} outside 1..{}", c.n_instances, total));
  if (c.n_layer_samples < 1) throw InvalidArgument("n_layer_samples must be positive");
  if (c.random_draws < 1) throw InvalidArgument("random_draws must be positive");
  if (c.k < 1 || c.k > std::min(fars::kMaxConceptK, c.hidden_dim))
    throw InvalidArgument(fmt::format("k = {} outside 1..{}", c.k, std::min(fars::kMaxConceptK, c.hidden_dim)));
  if (c.form_pairs.empty()) throw InvalidArgument("plan needs at least one form pair");
  for (const auto& p : c.form_pairs)
    if (p.src == p.tgt) throw InvalidArgument(fmt::format("form pair {}->{} is not a pair", to_string(p.src), to_string(p.tgt)));

  PatchPlan plan;
  plan.model_id = c.model_id;
  plan.n_layers = c.n_layers;
  plan.hidden_dim = c.hidden_dim;
  plan.best_layer = c.best_layer;
  plan.k = c.k;
  plan.form_control_k = c.form_control_k;
  plan.random_draws = c.random_draws;
  plan.seed = c.seed;
  plan.form_pairs = c.form_pairs;

  std::set<int> layers{c.best_layer};
  const int samples = std::min(c.n_layer_samples, c.n_layers);
  for (int i = 0; i < samples; ++i)
    layers.insert(samples == 1 ? 0
                               : static_cast<int>(std::lround(static_cast<double>(i) * (c.n_layers - 1) / (samples - 1))));
  plan.layers.assign(layers.begin(), layers.end());

  std::vector<ConceptInstance> all;
  for (int cid = 1; cid <= kConceptCount; ++cid)
    for (int i = 0; i < kInstancesPerConcept; ++i) all.push_back({cid, i});
  KeyedRng rng{c.seed, 0x696e7374ULL};
  rng.shuffle(all.begin(), all.end());
  all.resize(static_cast<std::size_t>(c.n_instances));
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return std::tie(a.concept_id, a.instance) < std::tie(b.concept_id, b.instance);
  });
  plan.instances = all;

  for (auto cond : kConditions) plan.conditions.emplace_back(cond);
  for (int l : plan.layers) {
    plan.bases.push_back({std::string(kFarsK10), l, std::nullopt, basis_ref(kFarsK10, l)});
    plan.bases.push_back({std::string(kVariancePca10), l, std::nullopt, basis_ref(kVariancePca10, l)});
    for (int d = 0; d < c.random_draws; ++d) plan.bases.push_back({std::string(kRandom10), l, d, basis_ref(kRandom10, l, d)});
    plan.bases.push_back({std::string(kFullReplacement), l, std::nullopt, basis_ref(kFullReplacement, l)});
    plan.bases.push_back({std::string(kFormControlAblate), l, std::nullopt, basis_ref(kFormControlAblate, l)});
    plan.bases.push_back({std::string(kFarsAblate), l, std::nullopt, basis_ref(kFarsAblate, l)});
  }
  return plan;
}

std::string plan_to_json(const PatchPlan& p) {
  Json j;
  j["model_id"] = p.model_id;
  j["n_layers"] = p.n_layers;
  j["hidden_dim"] = p.hidden_dim;
  j["best_layer"] = p.best_layer;
  j["k"] = p.k;
  j["form_control_k"] = p.form_control_k;
  j["random_draws"] = p.random_draws;
  j["seed"] = p.seed;
  j["layers"] = p.layers;
  j["form_pairs"] = Json::array();
  for (const auto& fp : p.form_pairs) j["form_pairs"].push_back(pair_json(fp));
  j["instances"] = Json::array();
  for (const auto& ci : p.instances) j["instances"].push_back({{"concept_id", ci.concept_id}, {"instance", ci.instance}});
  j["conditions"] = p.conditions;
  j["bases"] = Json::array();
  for (const auto& b : p.bases)
    j["bases"].push_back({{"condition", b.condition},
                          {"layer", b.layer},
                          {"draw", b.draw ? Json(*b.draw) : Json(nullptr)},
                          {"ref", b.ref}});
  j["n_cells"] = plan_cells(p).size();
  return j.dump(2) + "\n";
}

PatchPlan plan_from_json(const std::string& text) {
  try {
    const auto j = Json::parse(text);
    PatchPlan p;
    p.model_id = j.at("model_id").get<std::string>();
    p.n_layers = j.at("n_layers").get<int>();
    p.hidden_dim = j.at("hidden_dim").get<int>();
    p.best_layer = j.at("best_layer").get<int>();
    p.k = j.at("k").get<int>();
    p.form_control_k = j.value("form_control_k", fars::kMaxFormK);
    p.random_draws = j.at("random_draws").get<int>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.layers = j.at("layers").get<std::vector<int>>();
    for (const auto& fp : j.at("form_pairs"))
      p.form_pairs.push_back({parse_form(fp.at("src").get<std::string>()), parse_form(fp.at("tgt").get<std::string>())});
    for (const auto& ci : j.at("instances")) p.instances.push_back({ci.at("concept_id").get<int>(), ci.at("instance").get<int>()});
    p.conditions = j.at("conditions").get<std::vector<std::string>>();
    for (const auto& c : p.conditions) check_condition(c);
    for (const auto& b : j.at("bases")) {
      BasisRef r{b.at("condition").get<std::string>(), b.at("layer").get<int>(), std::nullopt, b.at("ref").get<std::string>()};
      if (!b.at("draw").is_null()) r.draw = b.at("draw").get<int>();
      p.bases.push_back(std::move(r));
    }
    return p;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed patch plan: ") + e.what());
  }
}

const BasisRef& find_basis(const PatchPlan& plan, std::string_view condition, int layer, std::optional<int> draw) {
  for (const auto& b : plan.bases)
    if (b.condition == condition && b.layer == layer && b.draw == draw) return b;
  throw ContractViolation(fmt::format("plan has no basis for {} at layer {}", condition, layer));
}

std::vector<PlanCell> plan_cells(const PatchPlan& plan) {
  std::vector<Form> targets;
  for (const auto& p : plan.form_pairs)
    if (std::find(targets.begin(), targets.end(), p.tgt) == targets.end()) targets.push_back(p.tgt);
  std::sort(targets.begin(), targets.end());

  std::vector<PlanCell> cells;
  for (const auto& cond : plan.conditions)
    for (int l : plan.layers) {
      if (is_ablation(cond)) {
        for (Form f : targets)
          for (const auto& ci : plan.instances) cells.push_back({cond, l, {f, f}, ci, std::nullopt});
        continue;
      }
      for (const auto& fp : plan.form_pairs)
        for (const auto& ci : plan.instances) {
          if (cond == kRandom10) {
            for (int d = 0; d < plan.random_draws; ++d) cells.push_back({cond, l, fp, ci, d});
          } else {
            cells.push_back({cond, l, fp, ci, std::nullopt});
          }
        }
    }
  return cells;
}

std::string cell_key(const std::string& model_id, const PlanCell& c) {
  return fmt::format("{}|{}|{}|{}>{}|{}|{}|{}", model_id, c.condition, c.layer, to_string(c.pair.src),
                     to_string(c.pair.tgt), c.instance.concept_id, c.instance.instance, c.draw ? *c.draw : -1);
}

std::map<std::string, fars::SubspaceBasis> condition_bases(const store::ActivationTensor& tensor,
                                                           const LabelTable& labels, const PatchPlan& plan) {
  store::validate_pair(tensor, labels);
  if (tensor.hidden_dim != plan.hidden_dim)
    throw ContractViolation(
        fmt::format("plan hidden_dim {} does not match activations D = {}", plan.hidden_dim, tensor.hidden_dim));
  const auto order = store::canonical_order(labels);
  const auto lab = labels.subset(order);
  std::map<std::string, fars::SubspaceBasis> out;
  for (int l : plan.layers) {
    const auto X = store::slice_rows(tensor, l, order);
    auto fars_b = fars::extract_fars_layer(X, lab, plan.k, l);
    auto pca_b = fars::variance_pca_basis(X, plan.k, l);
    auto form_b = fars::extract_form_control_layer(X, lab, plan.form_control_k, l);
    for (auto* b : {&fars_b, &pca_b, &form_b}) b->model_id = tensor.model_id;
    out[basis_ref(kFarsK10, l)] = fars_b;
    out[basis_ref(kVariancePca10, l)] = pca_b;
    out[basis_ref(kFormControlAblate, l)] = form_b;
    for (int d = 0; d < plan.random_draws; ++d) {
      auto r = fars::random_basis(tensor.hidden_dim, plan.k, random_basis_seed(plan, l, d));
      r.layer = l;
      r.model_id = tensor.model_id;
      out[basis_ref(kRandom10, l, d)] = std::move(r);
    }
  }
  auto id = fars::identity_basis(tensor.hidden_dim);
  id.model_id = tensor.model_id;
  out[std::string(kIdentityRef)] = std::move(id);
  return out;
}

void write_condition_bases(const std::map<std::string, fars::SubspaceBasis>& bases, const fs::path& dir) {
  for (const auto& [ref, b] : bases)
    if (ref != kIdentityRef) fars::write_basis(b, dir / ref);
}

std::map<std::string, fars::SubspaceBasis> load_condition_bases(const PatchPlan& plan, const fs::path& dir) {
  validate_plan(plan, dir);
  std::map<std::string, fars::SubspaceBasis> out;
  for (const auto& b : plan.bases) {
    if (out.count(b.ref)) continue;
    out[b.ref] = b.ref == kIdentityRef ? fars::identity_basis(plan.hidden_dim) : fars::read_basis(dir / b.ref);
  }
  return out;
}

void validate_plan(const PatchPlan& plan, const fs::path& dir) {
  std::vector<std::string> problems;
  std::set<std::string> seen;
  for (const auto& b : plan.bases) {
    if (!seen.insert(b.ref).second || b.ref == kIdentityRef) continue;
    if (!fs::exists((dir / b.ref).string() + ".basis.json")) {
      problems.push_back(b.ref + ": missing");
      continue;
    }
    try {
      const auto basis = fars::read_basis(dir / b.ref);
      if (basis.dim() != plan.hidden_dim)
        problems.push_back(fmt::format("{}: D = {}, model has {}", b.ref, basis.dim(), plan.hidden_dim));
    } catch (const Error& e) {
      problems.push_back(fmt::format("{}: {}", b.ref, e.what()));
    }
  }
  for (const auto& cond : plan.conditions)
    for (int l : plan.layers) {
      if (cond == kRandom10) {
        for (int d = 0; d < plan.random_draws; ++d) {
          try {
            find_basis(plan, cond, l, d);
          } catch (const ContractViolation& e) {
            problems.push_back(fmt::format("{} draw {} layer {}: not referenced", cond, d, l));
          }
        }
      } else {
        try {
          find_basis(plan, cond, l);
        } catch (const ContractViolation& e) {
          problems.push_back(fmt::format("{} layer {}: not referenced", cond, l));
        }
      }
    }
  if (!problems.empty()) {
    std::string msg = fmt::format("patch plan has {} basis problem(s):", problems.size());
    for (const auto& p : problems) msg += "\n  " + p;
    throw ContractViolation(msg);
  }
}

InterventionRecord record_from_json(const std::string& line) {
  InterventionRecord r;
  try {
    const auto j = Json::parse(line);
    r.model_id = j.value("model_id", std::string());
    r.condition = j.at("condition").get<std::string>();
    check_condition(r.condition);
    r.layer = j.at("layer").get<int>();
    r.src_form = parse_form(j.at("src_form").get<std::string>());
    r.tgt_form = parse_form(j.at("tgt_form").get<std::string>());
    r.concept_id = j.at("concept_id").get<int>();
    r.instance = j.at("instance").get<int>();
    if (j.contains("draw") && !j.at("draw").is_null()) r.draw = j.at("draw").get<int>();
    for (auto [key, out] : {std::pair{"clean_top10", &r.clean_top10}, std::pair{"patched_top10", &r.patched_top10}}) {
      const auto ids = j.at(key).get<std::vector<std::int64_t>>();
      if (ids.size() != 10) throw FormatError(fmt::format("{} has {} ids, expected 10", key, ids.size()));
      if (std::set<std::int64_t>(ids.begin(), ids.end()).size() != 10)
        throw FormatError(fmt::format("{} contains duplicate ids", key));
      std::copy(ids.begin(), ids.end(), out->begin());
    }
    if (j.contains("kl") && !j.at("kl").is_null()) {
      const double kl = j.at("kl").get<double>();
      if (!(kl >= 0.0) || !std::isfinite(kl)) throw FormatError(fmt::format("kl = {} is not a finite non-negative value", kl));
      r.kl = kl;
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed intervention record: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("malformed intervention record: ") + e.what());
  }
  if (r.concept_id < 1 || r.concept_id > kConceptCount)
    throw FormatError(fmt::format("concept_id {} out of range", r.concept_id));
  if (r.instance < 0 || r.instance >= kInstancesPerConcept)
    throw FormatError(fmt::format("instance {} out of range", r.instance));
  return r;
}

std::string record_to_json(const InterventionRecord& r) {
  Json j;
  j["model_id"] = r.model_id;
  j["condition"] = r.condition;
  j["layer"] = r.layer;
  j["src_form"] = std::string(to_string(r.src_form));
  j["tgt_form"] = std::string(to_string(r.tgt_form));
  j["concept_id"] = r.concept_id;
  j["instance"] = r.instance;
  j["draw"] = r.draw ? Json(*r.draw) : Json(nullptr);
  j["clean_top10"] = r.clean_top10;
  j["patched_top10"] = r.patched_top10;
  j["kl"] = r.kl ? Json(*r.kl) : Json(nullptr);
  return j.dump();
}

std::vector<InterventionRecord> read_records(std::istream& in) {
  std::vector<InterventionRecord> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const FormatError& e) {
      throw FormatError(fmt::format("line {}: {}", n, e.what()));
    }
  }
  return out;
}

void write_records(const std::vector<InterventionRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << record_to_json(r) << '\n';
}

PlanCell cell_of(const InterventionRecord& r) {
  return {r.condition, r.layer, {r.src_form, r.tgt_form}, {r.concept_id, r.instance}, r.draw};
}

namespace {

auto record_tuple(const InterventionRecord& r) {
  return std::make_tuple(std::cref(r.model_id), std::cref(r.condition), r.layer, r.src_form, r.tgt_form, r.concept_id,
                         r.instance, r.draw.value_or(-1), r.clean_top10, r.patched_top10, r.kl.value_or(-1.0));
}

struct Acc {
  std::vector<double> overlap, kl;
  std::vector<int> groups, kl_groups;
};

double mean_of(const std::vector<double>& v) { return stats::mean(v); }

}  // namespace

InterventionSummary aggregate_interventions(std::vector<InterventionRecord> records, const AggregateOptions& options) {
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return record_tuple(a) < record_tuple(b); });

  std::map<std::pair<std::string, std::string>, Acc> by_cond;
  std::map<std::tuple<std::string, std::string, Form, Form>, std::vector<double>> by_pair;
  std::map<std::tuple<std::string, std::string, Domain>, Acc> by_domain;
  std::map<std::pair<std::string, int>, std::vector<double>> by_draw;

  for (const auto& r : records) {
    const double ov = fars::top10_overlap(r.clean_top10, r.patched_top10);
    auto& a = by_cond[{r.model_id, r.condition}];
    a.overlap.push_back(ov);
    a.groups.push_back(r.concept_id);
    if (r.kl) {
      a.kl.push_back(*r.kl);
      a.kl_groups.push_back(r.concept_id);
    }
    by_pair[{r.model_id, r.condition, r.src_form, r.tgt_form}].push_back(ov);
    auto& d = by_domain[{r.model_id, r.condition, bench::concept_spec(r.concept_id).domain}];
    d.overlap.push_back(ov);
    if (r.kl) d.kl.push_back(*r.kl);
    if (r.condition == kRandom10 && r.draw) by_draw[{r.model_id, *r.draw}].push_back(ov);
  }

  InterventionSummary s;
  for (const auto& [key, a] : by_cond) {
    ConditionSummary c;
    c.model_id = key.first;
    c.condition = key.second;
    c.n_cells = static_cast<int>(a.overlap.size());
    c.mean_overlap = mean_of(a.overlap);
    const std::uint64_t seed = KeyedRng{options.seed, fnv1a(key.first), fnv1a(key.second)}();
    c.overlap_ci = stats::block_bootstrap_ci(a.overlap, a.groups, options.n_resamples, seed, options.level);
    if (!a.kl.empty()) {
      c.mean_kl = mean_of(a.kl);
      c.kl_ci = stats::block_bootstrap_ci(a.kl, a.kl_groups, options.n_resamples, seed ^ 0x6b6cULL, options.level);
    }
    s.conditions.push_back(std::move(c));
  }
  for (const auto& [key, v] : by_pair)
    s.pairs.push_back({std::get<0>(key), std::get<1>(key), {std::get<2>(key), std::get<3>(key)},
                       static_cast<int>(v.size()), mean_of(v)});
  for (const auto& [key, a] : by_domain) {
    DomainSummary d{std::get<0>(key), std::get<1>(key), std::get<2>(key), static_cast<int>(a.overlap.size()),
                    mean_of(a.overlap), std::nullopt};
    if (!a.kl.empty()) d.mean_kl = mean_of(a.kl);
    s.domains.push_back(std::move(d));
  }
  for (const auto& [key, v] : by_draw) s.draws.push_back({key.first, key.second, static_cast<int>(v.size()), mean_of(v)});

  for (const auto& plan : options.plans) {
    Coverage cov;
    cov.model_id = plan.model_id;
    std::map<std::string, int> expected;
    for (const auto& c : plan_cells(plan)) expected[cell_key(plan.model_id, c)] = 0;
    cov.expected = expected.size();
    for (const auto& r : records) {
      if (r.model_id != plan.model_id) continue;
      auto it = expected.find(cell_key(r.model_id, cell_of(r)));
      if (it == expected.end()) {
        ++cov.unplanned;
        continue;
      }
      if (it->second++ > 0) ++cov.duplicates;
    }
    for (const auto& [k, n] : expected) (n > 0 ? cov.observed : cov.missing) += 1;
    s.coverage.push_back(cov);
  }
  return s;
}

std::vector<ParityCase> make_parity_fixture(int n_cases, int dim, std::uint64_t seed) {
  if (n_cases < 1 || dim < 1) throw InvalidArgument("parity fixture needs positive n_cases and dim");
  std::vector<ParityCase> out;
  for (int i = 0; i < n_cases; ++i) {
    ParityCase c;
    c.dim = dim;
    // Cycle k through 0..dim so the empty and full bases are covered.
    c.k = i % (dim + 1);
    KeyedRng rng{seed, static_cast<std::uint64_t>(i)};
    c.h_src.resize(static_cast<std::size_t>(dim));
    c.h_tgt.resize(static_cast<std::size_t>(dim));
    for (auto& v : c.h_src) v = static_cast<float>(rng.normal());
    for (auto& v : c.h_tgt) v = static_cast<float>(rng.normal());
    const auto b = fars::random_basis(dim, c.k, KeyedRng{seed, static_cast<std::uint64_t>(i), 1}());
    c.basis.resize(static_cast<std::size_t>(c.k) * static_cast<std::size_t>(dim));
    for (int r = 0; r < c.k; ++r)
      for (int d = 0; d < dim; ++d)
        c.basis[static_cast<std::size_t>(r) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)] =
            static_cast<float>(b.B(r, d));
    c.expected.assign(static_cast<std::size_t>(dim), 0.0f);
    out.push_back(std::move(c));
  }
  // Expected output from the float32-rounded inputs, computed in double.
  for (auto& c : out) {
    fars::SubspaceBasis b;
    b.B.resize(c.k, c.dim);
    for (int r = 0; r < c.k; ++r)
      for (int d = 0; d < c.dim; ++d)
        b.B(r, d) = c.basis[static_cast<std::size_t>(r) * static_cast<std::size_t>(c.dim) + static_cast<std::size_t>(d)];
    const Eigen::VectorXd src = Eigen::Map<const Eigen::VectorXf>(c.h_src.data(), c.dim).cast<double>();
    const Eigen::VectorXd tgt = Eigen::Map<const Eigen::VectorXf>(c.h_tgt.data(), c.dim).cast<double>();
    const auto y = fars::subspace_patch(src, tgt, b);
    for (int d = 0; d < c.dim; ++d) c.expected[static_cast<std::size_t>(d)] = static_cast<float>(y(d));
  }
  return out;
}

std::string fixture_to_json(const std::vector<ParityCase>& cases) {
  Json j;
  j["dtype"] = "f32";
  j["tolerance"] = 1e-5;
  j["cases"] = Json::array();
  for (const auto& c : cases)
    j["cases"].push_back({{"dim", c.dim},
                          {"k", c.k},
                          {"h_src", c.h_src},
                          {"h_tgt", c.h_tgt},
                          {"basis", c.basis},
                          {"expected", c.expected}});
  return j.dump() + "\n";
}

std::vector<ParityCase> fixture_from_json(const std::string& text) {
  try {
    const auto j = Json::parse(text);
    std::vector<ParityCase> out;
    for (const auto& e : j.at("cases")) {
      ParityCase c;
      c.dim = e.at("dim").get<int>();
      c.k = e.at("k").get<int>();
      c.h_src = e.at("h_src").get<std::vector<float>>();
      c.h_tgt = e.at("h_tgt").get<std::vector<float>>();
      c.basis = e.at("basis").get<std::vector<float>>();
      c.expected = e.at("expected").get<std::vector<float>>();
      const auto D = static_cast<std::size_t>(c.dim);
      if (c.h_src.size() != D || c.h_tgt.size() != D || c.expected.size() != D ||
          c.basis.size() != static_cast<std::size_t>(c.k) * D)
        throw FormatError(fmt::format("parity case {} has inconsistent lengths", out.size()));
      out.push_back(std::move(c));
    }
    return out;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed parity fixture: ") + e.what());
  }
}

double parity_max_deviation(const std::vector<ParityCase>& cases) {
  double worst = 0.0;
  for (const auto& c : cases) {
    fars::SubspaceBasis b;
    b.B = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(c.basis.data(), c.k, c.dim)
              .cast<double>();
    const Eigen::VectorXd src = Eigen::Map<const Eigen::VectorXf>(c.h_src.data(), c.dim).cast<double>();
    const Eigen::VectorXd tgt = Eigen::Map<const Eigen::VectorXf>(c.h_tgt.data(), c.dim).cast<double>();
    const auto y = fars::subspace_patch(src, tgt, b);
    for (int d = 0; d < c.dim; ++d) worst = std::max(worst, std::abs(y(d) - c.expected[static_cast<std::size_t>(d)]));
  }
  return worst;
}

}  // namespace triform::patching
