#include "triform/pipeline.hpp"

#include <fmt/format.h>

#include <Eigen/Core>
#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "triform/bench.hpp"
#include "triform/digest.hpp"
#include "triform/error.hpp"
#include "triform/fars.hpp"
#include "triform/geometry.hpp"
#include "triform/patching.hpp"
#include "triform/rng.hpp"
#include "triform/stats.hpp"
#include "triform/store.hpp"

namespace triform::report {
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

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage, std::string_view model) {
  return KeyedRng{seed, fnv1a(stage), fnv1a(model)}();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

Table make_table(const std::string& name) {
  Table t;
  t.name = name;
  const auto pct = [](const char* n) { return real_col(n, 1); };
  if (name == "table1_summary")
    t.columns = {text_col("model"),       text_col("params"),     int_col("layers"),
                 real_col("rsa_c_peak"),  int_col("peak_layer"),  real_col("rsa_f_peak"),
                 pct("probe_pct"),        pct("agnostic_pct"),    int_col("agnostic_layer")};
  else if (name == "layer_rsa")
    t.columns = {text_col("model"),      int_col("layer"), text_col("kind"), real_col("rho"), real_col("p_value", 6),
                 int_col("significant")};
  else if (name == "layer_metrics")
    t.columns = {text_col("model"),        int_col("layer"),    real_col("rsa_concept"),
                 real_col("rsa_form"),     real_col("rsa_bias"), real_col("rsa_language_type"),
                 pct("probe_pct"),         pct("agnostic_pct")};
  else if (name == "probe_grid")
    t.columns = {text_col("model"), int_col("layer"), text_col("src"), text_col("tgt"), real_col("accuracy")};
  else if (name == "layer_probe")
    t.columns = {text_col("model"), int_col("layer"), pct("probe_pct")};
  else if (name == "layer_entropy")
    t.columns = {text_col("model"), int_col("layer"), pct("agnostic_pct"), real_col("mean_entropy")};
  else if (name == "table2_cka")
    t.columns = {text_col("model"),          real_col("linguistic"),  real_col("symbolic"),
                 real_col("structural"),     real_col("spread"),      int_col("linguistic_layer"),
                 int_col("symbolic_layer"),  int_col("structural_layer")};
  else if (name == "layer_cka")
    t.columns = {text_col("model"), int_col("layer"), real_col("linguistic"), real_col("symbolic"),
                 real_col("structural")};
  else if (name == "table3_patching")
    t.columns = {text_col("model"), text_col("condition"), text_col("src"), text_col("tgt"), int_col("n"),
                 real_col("mean_overlap")};
  else if (name == "table4_subspace_patching")
    t.columns = {text_col("model"),       text_col("condition"), int_col("n"),          real_col("mean_overlap"),
                 real_col("ci_lo"),       real_col("ci_hi"),     real_col("mean_kl"),   real_col("kl_ci_lo"),
                 real_col("kl_ci_hi")};
  else if (name == "per_domain")
    t.columns = {text_col("model"), text_col("condition"), text_col("domain"), int_col("n"), real_col("mean_overlap"),
                 real_col("mean_kl")};
  else if (name == "random_draws")
    t.columns = {text_col("model"), int_col("draw"), int_col("n"), real_col("mean_overlap")};
  else if (name == "coverage")
    t.columns = {text_col("model"), int_col("expected"), int_col("observed"), int_col("missing"),
                 int_col("duplicates"), int_col("unplanned")};
  else if (name == "table5_subspace")
    t.columns = {text_col("model"),      int_col("layer"),    text_col("space"), int_col("k"),
                 real_col("rsa_concept"), real_col("rsa_form"), pct("probe_pct")};
  else if (name == "sweep")
    t.columns = {text_col("model"),    int_col("k"),          int_col("best_layer"), real_col("rsa_concept"),
                 real_col("rsa_form"), pct("probe_pct"),      real_col("explained_variance")};
  else if (name == "holdout")
    t.columns = {text_col("model"),          int_col("K"),                int_col("layer"),
                 int_col("k"),               real_col("heldout_rsa_mean"), real_col("heldout_rsa_sd"),
                 real_col("insample_rsa_mean"), real_col("insample_rsa_sd"), pct("probe_pct_mean"),
                 pct("probe_pct_sd"),        pct("chance_pct")};
  else if (name == "alignment")
    t.columns = {text_col("model_a"), text_col("model_b"), real_col("cca_mean"), real_col("centroid_rsa")};
  else if (name == "stage_status")
    t.columns = {text_col("stage"), text_col("model"), text_col("status"), text_col("reason")};
  else
    throw InvalidArgument("unknown table " + name);
  return t;
}

// Report order.
const std::vector<std::string>& table_names() {
  static const std::vector<std::string> names = {
      "table1_summary", "layer_metrics", "layer_rsa",  "layer_probe", "probe_grid",
      "layer_entropy",  "table2_cka",    "layer_cka",  "table3_patching", "table4_subspace_patching",
      "per_domain",     "random_draws",  "coverage",   "table5_subspace", "sweep",
      "holdout",        "alignment",     "stage_status"};
  return names;
}

Cell I(std::int64_t v) { return v; }
Cell R(double v) { return v; }
Cell S(std::string_view v) { return std::string(v); }
Cell opt(const std::optional<double>& v) { return v ? Cell(*v) : Cell(std::monostate{}); }

double real_at(const std::vector<Cell>& row, std::size_t i) { return std::get<double>(row[i]); }
std::int64_t int_at(const std::vector<Cell>& row, std::size_t i) { return std::get<std::int64_t>(row[i]); }
const std::string& text_at(const std::vector<Cell>& row, std::size_t i) { return std::get<std::string>(row[i]); }

struct ModelData {
  store::ReadResult read;
  std::vector<bench::SurfaceFeatures> features;
  std::string acts_digest;
  std::string labels_digest;
  std::optional<int> best_layer;
  std::vector<std::string> warnings;
};

class Runner {
 public:
  Runner(const PipelineConfig& cfg, ReportBundle& bundle) : cfg_(cfg), bundle_(bundle) {
    for (const auto& n : table_names()) tables_.emplace(n, make_table(n));
  }

  // Runs fn unless cached; merges the returned tables. Returns false when
  // the stage failed.
  bool stage(const std::string& name, const std::string& model, const Json& key,
             const std::function<std::vector<Table>()>& fn) {
    const auto seed = stage_seed(cfg_.seed, name, model);
    std::vector<Table> out;
    try {
      const std::string digest = sha256_digest(name + "|" + model + "|" + key.dump());
      const auto cache = cfg_.cache_dir ? std::optional<fs::path>(*cfg_.cache_dir / name / (digest.substr(7) + ".json"))
                                        : std::nullopt;
      bool hit = false;
      if (cache && fs::exists(*cache)) {
        try {
          for (const auto& t : Json::parse(store::read_file(*cache))) out.push_back(table_from_json(t));
          hit = true;
          ++bundle_.cache_hits;
        } catch (const std::exception&) {
          out.clear();
        }
      }
      if (!hit) {
        out = fn();
        for (auto& t : out) t.source = {name, t.source.operation, seed};
        if (cache) {
          Json arr = Json::array();
          for (const auto& t : out) arr.push_back(to_json(t));
          store::atomic_write(*cache, arr.dump() + "\n");
        }
      }
    } catch (const std::exception& e) {
      if (cfg_.fail_fast) throw;
      bundle_.stages.push_back({name, model, "error", e.what()});
      return false;
    }
    for (auto& t : out) {
      auto& dst = tables_.at(t.name);
      dst.source = t.source;
      if (dst.source.stage.empty()) dst.source.stage = name;
      for (auto& r : t.rows) dst.rows.push_back(std::move(r));
    }
    seeds_[name][model] = seed;
    bundle_.stages.push_back({name, model, "ok", ""});
    return true;
  }

  void skip(const std::string& name, const std::string& model, const std::string& reason) {
    bundle_.stages.push_back({name, model, "skipped", reason});
  }

  Table& table(const std::string& name) { return tables_.at(name); }
  std::uint64_t seed_of(const std::string& name, const std::string& model) const {
    return stage_seed(cfg_.seed, name, model);
  }

  void finish() {
    auto& status = tables_.at("stage_status");
    status.source = {"report", "run_pipeline", cfg_.seed};
    for (const auto& s : bundle_.stages) status.add_row({S(s.stage), S(s.model_id), S(s.status), S(s.reason)});
    for (const auto& n : table_names()) bundle_.tables.push_back(std::move(tables_.at(n)));
    Json seeds = Json::object();
    for (const auto& [stage, per_model] : seeds_) {
      Json m = Json::object();
      for (const auto& [model, seed] : per_model) m[model.empty() ? "*" : model] = seed;
      seeds[stage] = m;
    }
    bundle_.provenance["stage_seeds"] = seeds;
  }

 private:
  const PipelineConfig& cfg_;
  ReportBundle& bundle_;
  std::map<std::string, Table> tables_;
  std::map<std::string, std::map<std::string, std::uint64_t>> seeds_;
};

Json analysis_key(const PipelineConfig& c) {
  return Json{{"n_perm", c.n_perm},
              {"alpha", c.alpha},
              {"ridge_alpha", c.ridge_alpha},
              {"k", c.k},
              {"bootstrap_resamples", c.bootstrap_resamples},
              {"agnostic_percentile", c.agnostic_percentile},
              {"sweep_ks", c.sweep_ks},
              {"holdout_ks", c.holdout_ks},
              {"holdout_splits", c.holdout_splits},
              {"seed", c.seed},
              {"structured_is_formal", c.structured_is_formal}};
}

std::vector<Table> rsa_stage(const std::string& model, const ModelData& d, const PipelineConfig& c, std::uint64_t seed) {
  geometry::TheoryOptions theory{c.structured_is_formal};
  const auto sweep = geometry::rsa_sweep(d.read.tensor, d.read.labels, d.features, c.n_perm, seed, c.alpha, theory);
  auto t = make_table("layer_rsa");
  t.source.operation = "rsa_sweep";
  for (const auto& lr : sweep.layers)
    for (std::size_t k = 0; k < geometry::kTheoryKinds.size(); ++k)
      t.add_row({S(model), I(lr.layer), S(geometry::to_string(geometry::kTheoryKinds[k])), R(lr.result[k].observed_rho),
                 R(lr.result[k].p_value), I(lr.significant[k] ? 1 : 0)});
  return {t};
}

std::vector<Table> probe_stage(const std::string& model, const ModelData& d, const PipelineConfig& c) {
  const auto res = geometry::cross_form_probe(d.read.tensor, d.read.labels, {c.ridge_alpha});
  auto lp = make_table("layer_probe");
  auto grid = make_table("probe_grid");
  lp.source.operation = grid.source.operation = "cross_form_probe";
  for (std::size_t l = 0; l < res.layers.size(); ++l) {
    const auto& g = res.layers[l];
    lp.add_row({S(model), I(static_cast<std::int64_t>(l)), R(100.0 * g.mean_offdiag)});
    for (Form s : kAllForms)
      for (Form t : kAllForms)
        grid.add_row({S(model), I(static_cast<std::int64_t>(l)), S(to_string(s)), S(to_string(t)),
                      R(g.accuracy(form_index(s), form_index(t)))});
  }
  return {lp, grid};
}

std::vector<Table> entropy_stage(const std::string& model, const ModelData& d, const PipelineConfig& c) {
  const auto prof = stats::entropy_profile(d.read.tensor, d.read.labels.form_indices());
  const auto frac = stats::agnostic_fraction(prof, c.agnostic_percentile);
  auto t = make_table("layer_entropy");
  t.source.operation = "entropy_profile/agnostic_fraction";
  for (std::size_t l = 0; l < frac.size(); ++l)
    t.add_row({S(model), I(static_cast<std::int64_t>(l)), R(100.0 * frac[l]), R(prof.H.row(static_cast<Eigen::Index>(l)).mean())});
  return {t};
}

std::vector<Table> cka_stage(const std::string& model, const ModelData& d) {
  const auto res = geometry::dimensionwise_cka(d.read.tensor, d.read.labels);
  auto lt = make_table("layer_cka");
  auto t2 = make_table("table2_cka");
  lt.source.operation = t2.source.operation = "dimensionwise_cka";
  for (Eigen::Index l = 0; l < res.values.rows(); ++l)
    lt.add_row({S(model), I(l), R(res.values(l, 0)), R(res.values(l, 1)), R(res.values(l, 2))});
  t2.add_row({S(model), R(res.peak[0]), R(res.peak[1]), R(res.peak[2]), R(res.spread), I(res.peak_layer[0]),
              I(res.peak_layer[1]), I(res.peak_layer[2])});
  return {lt, t2};
}

std::vector<Table> fars_stage(const std::string& model, const ModelData& d, const PipelineConfig& c) {
  const auto& tensor = d.read.tensor;
  const auto order = store::canonical_order(d.read.labels);
  const auto lab = d.read.labels.subset(order);
  const int best = fars::best_fars_layer(tensor, d.read.labels, c.k);
  const auto X = store::slice_rows(tensor, best, order);
  auto t = make_table("table5_subspace");
  t.source.operation = "extract_fars/extract_form_control/subspace_metrics";
  const auto full = fars::identity_basis(tensor.hidden_dim);
  const auto fb = fars::extract_fars_layer(X, lab, c.k, best);
  const auto cb = fars::extract_form_control_layer(X, lab, fars::kMaxFormK, best);
  const std::pair<const char*, const fars::SubspaceBasis*> spaces[] = {{"full", &full}, {"fars", &fb}, {"form_control", &cb}};
  for (const auto& [name, b] : spaces) {
    fars::SubspaceBasis centered = *b;
    if (b == &full) centered.centering = X.colwise().mean().transpose();
    const auto m = fars::subspace_metrics(X, lab, centered, c.ridge_alpha);
    t.add_row({S(model), I(best), S(name), I(b->k()), R(m.rsa_concept), R(m.rsa_form), R(100.0 * m.probe)});
  }
  return {t};
}

std::vector<Table> sweep_stage(const std::string& model, const ModelData& d, const PipelineConfig& c) {
  auto t = make_table("sweep");
  t.source.operation = "dimensionality_sweep";
  for (const auto& r : fars::dimensionality_sweep(d.read.tensor, d.read.labels, c.sweep_ks, c.ridge_alpha))
    t.add_row({S(model), I(r.k), I(r.best_layer), R(r.rsa_concept), R(r.rsa_form), R(100.0 * r.probe),
               R(r.explained_variance)});
  return {t};
}

std::vector<Table> holdout_stage(const std::string& model, const ModelData& d, const PipelineConfig& c, int layer,
                                 std::uint64_t seed) {
  auto t = make_table("holdout");
  t.source.operation = "leave_k_out";
  for (int K : c.holdout_ks) {
    const auto r = fars::leave_k_out(d.read.tensor, d.read.labels, layer, K, c.holdout_splits, seed, c.k, c.ridge_alpha);
    t.add_row({S(model), I(K), I(layer), I(c.k), R(r.heldout_mean), R(r.heldout_sd), R(r.insample_mean),
               R(r.insample_sd), R(100.0 * r.probe_mean), R(100.0 * r.probe_sd), R(100.0 / K)});
  }
  return {t};
}

std::vector<Table> patching_stage(const ModelInput& m, const PipelineConfig& c, std::uint64_t seed) {
  std::ifstream in(*m.interventions);
  if (!in) throw IoError("cannot open " + m.interventions->string());
  auto records = patching::read_records(in);
  for (auto& r : records)
    if (r.model_id.empty()) r.model_id = m.model_id;
  std::erase_if(records, [&](const auto& r) { return r.model_id != m.model_id; });
  if (records.empty()) throw ContractViolation("no intervention records for " + m.model_id);
  patching::AggregateOptions options;
  options.n_resamples = c.bootstrap_resamples;
  options.seed = seed;
  if (m.plan) {
    auto plan = patching::plan_from_json(store::read_file(*m.plan));
    if (plan.model_id.empty()) plan.model_id = m.model_id;
    options.plans.push_back(std::move(plan));
  }
  const auto s = patching::aggregate_interventions(std::move(records), options);
  auto t3 = make_table("table3_patching"), t4 = make_table("table4_subspace_patching"), dom = make_table("per_domain"),
       draws = make_table("random_draws"), cov = make_table("coverage");
  for (auto* t : {&t3, &t4, &dom, &draws, &cov}) t->source.operation = "aggregate_interventions";
  for (const auto& p : s.pairs)
    t3.add_row({S(p.model_id), S(p.condition), S(to_string(p.pair.src)), S(to_string(p.pair.tgt)), I(p.n_cells),
                R(p.mean_overlap)});
  for (const auto& x : s.conditions)
    t4.add_row({S(x.model_id), S(x.condition), I(x.n_cells), R(x.mean_overlap), R(x.overlap_ci.lo), R(x.overlap_ci.hi),
                opt(x.mean_kl), opt(x.kl_ci ? std::optional<double>(x.kl_ci->lo) : std::nullopt),
                opt(x.kl_ci ? std::optional<double>(x.kl_ci->hi) : std::nullopt)});
  for (const auto& x : s.domains)
    dom.add_row({S(x.model_id), S(x.condition), S(to_string(x.domain)), I(x.n_cells), R(x.mean_overlap), opt(x.mean_kl)});
  for (const auto& x : s.draws) draws.add_row({S(x.model_id), I(x.draw), I(x.n_cells), R(x.mean_overlap)});
  for (const auto& x : s.coverage)
    cov.add_row({S(x.model_id), I(static_cast<std::int64_t>(x.expected)), I(static_cast<std::int64_t>(x.observed)),
                 I(static_cast<std::int64_t>(x.missing)), I(static_cast<std::int64_t>(x.duplicates)),
                 I(static_cast<std::int64_t>(x.unplanned))});
  return {t3, t4, dom, draws, cov};
}

fars::ModelProjection model_projection(const std::string& model, const ModelData& d, int k) {
  const auto order = store::canonical_order(d.read.labels);
  const auto lab = d.read.labels.subset(order);
  const auto X = store::slice_rows(d.read.tensor, *d.best_layer, order);
  const auto b = fars::extract_fars_layer(X, lab, k, *d.best_layer);
  fars::ModelProjection p;
  p.model_id = model;
  p.stimulus_digest = d.labels_digest;
  p.projections = fars::project(X, b);
  p.centroids = geometry::centroids(p.projections, lab.concept_ids());
  return p;
}

void build_table1(Runner& run, const PipelineConfig& cfg, const std::map<std::string, ModelData>& data) {
  auto& t1 = run.table("table1_summary");
  auto& lm = run.table("layer_metrics");
  t1.source = {"report", "rsa_sweep/cross_form_probe/agnostic_fraction", cfg.seed};
  lm.source = t1.source;
  for (const auto& m : cfg.models) {
    const auto it = data.find(m.model_id);
    if (it == data.end()) continue;
    const int L = it->second.read.tensor.n_layers;
    std::vector<std::array<std::optional<double>, 4>> rsa(static_cast<std::size_t>(L));
    std::vector<std::optional<double>> probe(static_cast<std::size_t>(L)), agn(static_cast<std::size_t>(L));
    for (const auto& r : run.table("layer_rsa").rows) {
      if (text_at(r, 0) != m.model_id) continue;
      for (std::size_t k = 0; k < 4; ++k)
        if (text_at(r, 2) == geometry::to_string(geometry::kTheoryKinds[k]))
          rsa[static_cast<std::size_t>(int_at(r, 1))][k] = real_at(r, 3);
    }
    for (const auto& r : run.table("layer_probe").rows)
      if (text_at(r, 0) == m.model_id) probe[static_cast<std::size_t>(int_at(r, 1))] = real_at(r, 2);
    for (const auto& r : run.table("layer_entropy").rows)
      if (text_at(r, 0) == m.model_id) agn[static_cast<std::size_t>(int_at(r, 1))] = real_at(r, 2);

    for (int l = 0; l < L; ++l) {
      const auto& x = rsa[static_cast<std::size_t>(l)];
      lm.add_row({S(m.model_id), I(l), opt(x[0]), opt(x[1]), opt(x[2]), opt(x[3]), opt(probe[static_cast<std::size_t>(l)]),
                  opt(agn[static_cast<std::size_t>(l)])});
    }
    // Peaks: first layer attaining the maximum.
    auto peak = [&](auto get) {
      std::optional<std::pair<double, int>> best;
      for (int l = 0; l < L; ++l) {
        const std::optional<double> v = get(l);
        if (v && (!best || *v > best->first)) best = std::pair{*v, l};
      }
      return best;
    };
    const auto pc = peak([&](int l) { return rsa[static_cast<std::size_t>(l)][0]; });
    const auto pf = peak([&](int l) { return rsa[static_cast<std::size_t>(l)][1]; });
    const auto pp = peak([&](int l) { return probe[static_cast<std::size_t>(l)]; });
    const auto pa = peak([&](int l) { return agn[static_cast<std::size_t>(l)]; });
    const Cell none = std::monostate{};
    t1.add_row({S(m.model_id), S(m.params), I(L), pc ? R(pc->first) : none, pc ? I(pc->second) : none,
                pf ? R(pf->first) : none, pp ? R(pp->first) : none, pa ? R(pa->first) : none,
                pa ? I(pa->second) : none});
  }
}

}  // namespace

PipelineConfig config_from_json(const std::string& text, const fs::path& base) {
  try {
    const auto j = Json::parse(text);
    PipelineConfig c;
    if (j.contains("stimulus_file") && !j.at("stimulus_file").is_null())
      c.stimulus_file = resolve(base, j.at("stimulus_file").get<std::string>());
    for (const auto& m : j.value("models", Json::array())) {
      ModelInput mi;
      mi.model_id = m.at("model_id").get<std::string>();
      mi.params = m.value("params", std::string());
      mi.activations = resolve(base, m.at("activations").get<std::string>());
      if (m.contains("interventions") && !m.at("interventions").is_null())
        mi.interventions = resolve(base, m.at("interventions").get<std::string>());
      if (m.contains("plan") && !m.at("plan").is_null()) mi.plan = resolve(base, m.at("plan").get<std::string>());
      c.models.push_back(std::move(mi));
    }
    if (j.contains("stages")) {
      const auto& s = j.at("stages");
      auto& t = c.stages;
      for (auto [name, flag] : {std::pair{"rsa", &t.rsa}, {"probe", &t.probe}, {"entropy", &t.entropy}, {"cka", &t.cka},
                                {"fars", &t.fars}, {"sweep", &t.sweep}, {"holdout", &t.holdout},
                                {"patching", &t.patching}, {"alignment", &t.alignment}})
        *flag = s.value(name, *flag);
      for (const auto& [key, v] : s.items())
        if (!std::set<std::string>{"rsa", "probe", "entropy", "cka", "fars", "sweep", "holdout", "patching", "alignment"}
                 .count(key))
          throw InvalidArgument("unknown stage '" + key + "' in config");
    }
    c.n_perm = j.value("n_perm", c.n_perm);
    c.alpha = j.value("alpha", c.alpha);
    c.ridge_alpha = j.value("ridge_alpha", c.ridge_alpha);
    c.k = j.value("k", c.k);
    c.bootstrap_resamples = j.value("bootstrap_resamples", c.bootstrap_resamples);
    c.random_draws = j.value("random_draws", c.random_draws);
    c.agnostic_percentile = j.value("agnostic_percentile", c.agnostic_percentile);
    c.sweep_ks = j.value("sweep_ks", c.sweep_ks);
    c.holdout_ks = j.value("holdout_ks", c.holdout_ks);
    c.holdout_splits = j.value("holdout_splits", c.holdout_splits);
    c.seed = j.value("seed", c.seed);
    c.structured_is_formal = j.value("structured_is_formal", c.structured_is_formal);
    if (j.contains("cache_dir") && !j.at("cache_dir").is_null())
      c.cache_dir = resolve(base, j.at("cache_dir").get<std::string>());
    return c;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed pipeline config: ") + e.what());
  }
}

PipelineConfig load_config(const fs::path& path) {
  return config_from_json(store::read_file(path), path.parent_path());
}

Json config_to_json(const PipelineConfig& c) {
  Json j;
  j["stimulus_file"] = c.stimulus_file ? Json(c.stimulus_file->string()) : Json(nullptr);
  j["models"] = Json::array();
  for (const auto& m : c.models)
    j["models"].push_back({{"model_id", m.model_id},
                           {"params", m.params},
                           {"activations", m.activations.string()},
                           {"interventions", m.interventions ? Json(m.interventions->string()) : Json(nullptr)},
                           {"plan", m.plan ? Json(m.plan->string()) : Json(nullptr)}});
  const auto& s = c.stages;
  j["stages"] = {{"rsa", s.rsa},         {"probe", s.probe},   {"entropy", s.entropy},
                 {"cka", s.cka},         {"fars", s.fars},     {"sweep", s.sweep},
                 {"holdout", s.holdout}, {"patching", s.patching}, {"alignment", s.alignment}};
  const auto analysis = analysis_key(c);
  for (const auto& [k, v] : analysis.items()) j[k] = v;
  j["random_draws"] = c.random_draws;
  j["cache_dir"] = c.cache_dir ? Json(c.cache_dir->string()) : Json(nullptr);
  return j;
}

const Table* ReportBundle::find(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return &t;
  return nullptr;
}

bool ReportBundle::ok() const {
  return std::none_of(stages.begin(), stages.end(), [](const auto& s) { return s.status == "error"; });
}

ReportBundle run_pipeline(const PipelineConfig& cfg) {
  if (cfg.n_perm < 1 || cfg.bootstrap_resamples < 1 || cfg.k < 1 || cfg.holdout_splits < 1)
    throw InvalidArgument("n_perm, bootstrap_resamples, k and holdout_splits must be positive");
  ReportBundle bundle;
  Runner run(cfg, bundle);
  const auto analysis = analysis_key(cfg);

  Json prov;
  prov["tool_version"] = std::string(kToolVersion);
  prov["benchmark_version"] = std::string(bench::kBenchmarkVersion);
  prov["eigen_version"] = fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
  prov["config"] = config_to_json(cfg);

  std::optional<std::map<std::string, std::string>> texts;
  std::string stimulus_digest;
  if (cfg.stimulus_file) {
    try {
      const auto bytes = store::read_file(*cfg.stimulus_file);
      stimulus_digest = sha256_digest(bytes);
      std::istringstream in(bytes);
      const auto set = bench::read_stimulus_file(in);
      texts.emplace();
      for (const auto& s : set.stimuli) (*texts)[s.stimulus_id] = s.text;
      bundle.stages.push_back({"bench", "", "ok", ""});
    } catch (const std::exception& e) {
      if (cfg.fail_fast) throw;
      bundle.stages.push_back({"bench", "", "error", e.what()});
    }
  } else {
    bundle.stages.push_back({"bench", "", "skipped", "no stimulus file configured"});
  }
  prov["stimulus_digest"] = stimulus_digest.empty() ? Json(nullptr) : Json(stimulus_digest);

  std::map<std::string, ModelData> data;
  Json model_prov = Json::array();
  for (const auto& m : cfg.models) {
    const auto& id = m.model_id;
    ModelData d;
    try {
      store::ReadOptions ro;
      if (texts) ro.stimulus_file = cfg.stimulus_file;
      d.read = store::read_tensor(m.activations, ro);
      const auto paths = store::paths_for(m.activations);
      d.acts_digest = sha256_file(paths.acts);
      d.labels_digest = d.read.manifest.stimulus_digest;
      if (d.read.tensor.model_id != id)
        d.warnings.push_back(fmt::format("manifest model_id '{}' differs from configured '{}'", d.read.tensor.model_id, id));
      if (d.read.provenance_mismatch) throw ContractViolation(d.read.warnings.front());
      if (texts) {
        for (const auto& r : d.read.labels.rows) {
          const auto it = texts->find(r.stimulus_id);
          if (it == texts->end()) throw ContractViolation("stimulus " + r.stimulus_id + " missing from stimulus file");
          d.features.push_back(bench::surface_features(it->second));
        }
      }
      bundle.stages.push_back({"ingest", id, "ok", ""});
    } catch (const std::exception& e) {
      if (cfg.fail_fast) throw;
      bundle.stages.push_back({"ingest", id, "error", e.what()});
      const std::string reason = "activation file unavailable: " + std::string(e.what());
      for (const char* s : {"rsa", "probe", "entropy", "cka", "fars", "sweep", "holdout"}) run.skip(s, id, reason);
      model_prov.push_back({{"model_id", id}, {"activations", m.activations.string()}, {"status", "unavailable"}});
      // Patching only needs the record file.
      if (cfg.stages.patching && m.interventions)
        run.stage("patching", id, {{"records", sha256_file(*m.interventions)}, {"analysis", analysis}},
                  [&] { return patching_stage(m, cfg, run.seed_of("patching", id)); });
      continue;
    }
    model_prov.push_back({{"model_id", id},
                          {"activations", m.activations.string()},
                          {"acts_digest", d.acts_digest},
                          {"stimulus_digest", d.labels_digest},
                          {"n_stimuli", d.read.tensor.n_stimuli},
                          {"n_layers", d.read.tensor.n_layers},
                          {"hidden_dim", d.read.tensor.hidden_dim},
                          {"warnings", d.warnings}});
    const Json key{{"acts", d.acts_digest}, {"labels", d.labels_digest}, {"stimulus", stimulus_digest},
                   {"analysis", analysis}};

    if (!cfg.stages.rsa)
      run.skip("rsa", id, "disabled");
    else if (!texts)
      run.skip("rsa", id, "no stimulus file: surface features for the bias RDM are unavailable");
    else
      run.stage("rsa", id, key, [&] { return rsa_stage(id, d, cfg, run.seed_of("rsa", id)); });

    if (cfg.stages.probe) run.stage("probe", id, key, [&] { return probe_stage(id, d, cfg); });
    else run.skip("probe", id, "disabled");
    if (cfg.stages.entropy) run.stage("entropy", id, key, [&] { return entropy_stage(id, d, cfg); });
    else run.skip("entropy", id, "disabled");
    if (cfg.stages.cka) run.stage("cka", id, key, [&] { return cka_stage(id, d); });
    else run.skip("cka", id, "disabled");

    bool fars_ok = false;
    if (cfg.stages.fars) {
      fars_ok = run.stage("fars", id, key, [&] { return fars_stage(id, d, cfg); });
      if (fars_ok)
        for (const auto& r : run.table("table5_subspace").rows)
          if (text_at(r, 0) == id) d.best_layer = static_cast<int>(int_at(r, 1));
    } else {
      run.skip("fars", id, "disabled");
    }
    if (cfg.stages.sweep) run.stage("sweep", id, key, [&] { return sweep_stage(id, d, cfg); });
    else run.skip("sweep", id, "disabled");
    if (!cfg.stages.holdout)
      run.skip("holdout", id, "disabled");
    else if (!d.best_layer)
      run.skip("holdout", id, "needs the best FARS layer from the fars stage");
    else
      run.stage("holdout", id, key, [&] { return holdout_stage(id, d, cfg, *d.best_layer, run.seed_of("holdout", id)); });

    if (!cfg.stages.patching)
      run.skip("patching", id, "disabled");
    else if (!m.interventions)
      run.skip("patching", id, "no intervention records configured");
    else {
      Json pkey{{"records", fs::exists(*m.interventions) ? sha256_file(*m.interventions) : ""},
                {"plan", m.plan && fs::exists(*m.plan) ? sha256_file(*m.plan) : ""},
                {"analysis", analysis}};
      run.stage("patching", id, pkey, [&] { return patching_stage(m, cfg, run.seed_of("patching", id)); });
    }
    data.emplace(id, std::move(d));
  }
  prov["models"] = model_prov;

  if (!cfg.stages.alignment) {
    run.skip("alignment", "", "disabled");
  } else {
    std::vector<std::string> ready;
    for (const auto& m : cfg.models)
      if (data.count(m.model_id) && data.at(m.model_id).best_layer) ready.push_back(m.model_id);
    if (ready.size() < 2) {
      run.skip("alignment", "", fmt::format("needs at least two models with a FARS layer, have {}", ready.size()));
    } else {
      Json key{{"analysis", analysis}, {"models", Json::array()}};
      for (const auto& id : ready)
        key["models"].push_back({{"id", id}, {"acts", data.at(id).acts_digest}, {"layer", *data.at(id).best_layer}});
      run.stage("alignment", "", key, [&] {
        std::vector<fars::ModelProjection> proj;
        for (const auto& id : ready) proj.push_back(model_projection(id, data.at(id), cfg.k));
        const auto r = fars::cross_model_alignment(proj);
        auto t = make_table("alignment");
        t.source.operation = "cross_model_alignment";
        for (std::size_t i = 0; i < r.model_ids.size(); ++i)
          for (std::size_t j = i + 1; j < r.model_ids.size(); ++j)
            t.add_row({S(r.model_ids[i]), S(r.model_ids[j]), R(r.cca(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))),
                       R(r.centroid_rsa(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))});
        return std::vector<Table>{t};
      });
    }
  }

  build_table1(run, cfg, data);
  bundle.provenance = prov;
  run.finish();
  return bundle;
}

std::string bundle_to_json(const ReportBundle& b) {
  Json j;
  j["provenance"] = b.provenance;
  j["stages"] = Json::array();
  for (const auto& s : b.stages)
    j["stages"].push_back({{"stage", s.stage}, {"model", s.model_id}, {"status", s.status}, {"reason", s.reason}});
  j["tables"] = Json::array();
  for (const auto& t : b.tables) j["tables"].push_back(to_json(t));
  return j.dump(2) + "\n";
}

std::vector<fs::path> write_bundle(const ReportBundle& bundle, const fs::path& dir, Format format) {
  auto out = emit_tables(bundle.tables, dir, format);
  const auto prov = dir / "provenance.json";
  store::atomic_write(prov, bundle.provenance.dump(2) + "\n");
  out.push_back(prov);
  const auto full = dir / "bundle.json";
  store::atomic_write(full, bundle_to_json(bundle));
  out.push_back(full);
  return out;
}

}  // namespace triform::report
