#include <set>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "triform/error.hpp"
#include "triform/patching.hpp"
#include "triform/synth.hpp"

using namespace triform;
using namespace triform::patching;
using doctest::Approx;

namespace {

PlanConfig config(int L = 12, int D = 32) {
  PlanConfig c;
  c.model_id = "m";
  c.n_layers = L;
  c.hidden_dim = D;
  c.best_layer = 5;
  c.seed = 42;
  return c;
}

InterventionRecord record(const std::string& cond, int concept_id, int inst, int layer = 0) {
  InterventionRecord r;
  r.model_id = "m";
  r.condition = cond;
  r.layer = layer;
  r.src_form = Form::en;
  r.tgt_form = Form::math;
  r.concept_id = concept_id;
  r.instance = inst;
  for (int i = 0; i < 10; ++i) {
    r.clean_top10[static_cast<std::size_t>(i)] = i;
    r.patched_top10[static_cast<std::size_t>(i)] = i < concept_id % 11 ? i : 100 + i;
  }
  return r;
}

}  // namespace

TEST_CASE("plan layers and instances") {
  const auto p = build_patch_plan(config());
  // round(i * 11 / 7) for i = 0..7, plus layer 5
  CHECK(p.layers == std::vector<int>{0, 2, 3, 5, 6, 8, 9, 11});
  CHECK(p.instances.size() == 50);
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < p.instances.size(); ++i) {
    const auto& ci = p.instances[i];
    CHECK(ci.concept_id >= 1);
    CHECK(ci.concept_id <= 18);
    CHECK(ci.instance >= 0);
    CHECK(ci.instance <= 2);
    seen.insert({ci.concept_id, ci.instance});
    if (i) CHECK(std::pair{p.instances[i - 1].concept_id, p.instances[i - 1].instance} < std::pair{ci.concept_id, ci.instance});
  }
  CHECK(seen.size() == 50);
  CHECK(build_patch_plan(config()).instances == p.instances);
  auto c = config();
  c.seed = 43;
  CHECK(build_patch_plan(c).instances != p.instances);
  c.best_layer = 12;
  CHECK_THROWS_AS(build_patch_plan(c), InvalidArgument);
  c = config();
  c.form_pairs = {{Form::en, Form::en}};
  CHECK_THROWS_AS(build_patch_plan(c), InvalidArgument);
}

TEST_CASE("plan cells") {
  auto c = config(4);
  c.best_layer = 1;
  c.n_layer_samples = 2;
  c.random_draws = 3;
  const auto p = build_patch_plan(c);
  CHECK(p.layers == std::vector<int>{0, 1, 3});
  const auto cells = plan_cells(p);
  // Per layer: fars, pca and full use 4 pairs x 50; random adds 3 draws;
  // each ablation covers 3 target forms x 50.
  const std::size_t per_layer = 3 * 200 + 3 * 200 + 2 * 150;
  CHECK(cells.size() == 3 * per_layer);
  std::set<std::string> keys;
  for (const auto& cell : cells) keys.insert(cell_key("m", cell));
  CHECK(keys.size() == cells.size());
  for (const auto& cell : cells)
    if (is_ablation(cell.condition)) CHECK(cell.pair.src == cell.pair.tgt);
}

TEST_CASE("plan json round trip") {
  const auto p = build_patch_plan(config());
  const auto text = plan_to_json(p);
  const auto q = plan_from_json(text);
  CHECK(plan_to_json(q) == text);
  CHECK(q.instances == p.instances);
  CHECK(q.form_pairs == p.form_pairs);
  CHECK(find_basis(q, kFarsK10, 5).ref == basis_ref(kFarsK10, 5));
  CHECK(find_basis(q, kFullReplacement, 5).ref == kIdentityRef);
  CHECK(find_basis(q, kRandom10, 5, 2).ref == "L05/random_10_d2");
  CHECK_THROWS_AS(plan_from_json("{\"model_id\": 1}"), FormatError);
  CHECK_THROWS_AS(check_condition("fars_k11"), InvalidArgument);
}

TEST_CASE("plan bases on disk") {
  const auto dir = testing::scratch_dir("plan");
  synth::PlantedSpec spec;
  spec.D = 24;
  spec.L = 3;
  spec.seed = 1;
  const auto labels = synth::planted_labels();
  const auto planted = synth::generate_planted(spec, labels);
  auto c = config(3, 24);
  c.best_layer = 1;
  c.n_layer_samples = 2;
  c.random_draws = 2;
  const auto plan = build_patch_plan(c);
  const auto bases = condition_bases(planted.tensor, labels, plan);
  CHECK(bases.at(basis_ref(kFarsK10, 1)).k() == 10);
  CHECK(bases.at(basis_ref(kFormControlAblate, 1)).k() == 5);
  CHECK(bases.at(basis_ref(kRandom10, 2, 1)).seed == random_basis_seed(plan, 2, 1));
  write_condition_bases(bases, dir);
  validate_plan(plan, dir);
  const auto loaded = load_condition_bases(plan, dir);
  CHECK(loaded.size() == bases.size());
  std::filesystem::remove(dir / (basis_ref(kVariancePca10, 2) + ".basis.f32"));
  try {
    validate_plan(plan, dir);
    FAIL("expected ContractViolation");
  } catch (const ContractViolation& e) {
    CHECK(std::string(e.what()).find("L02/variance_pca_10") != std::string::npos);
  }
  auto wrong = plan;
  wrong.hidden_dim = 25;
  CHECK_THROWS_AS(condition_bases(planted.tensor, labels, wrong), ContractViolation);
}

TEST_CASE("records") {
  auto r = record(std::string(kFarsAblate), 3, 1, 2);
  r.src_form = r.tgt_form = Form::zh;
  r.kl = 0.25;
  const auto line = record_to_json(r);
  const auto back = record_from_json(line);
  CHECK(record_to_json(back) == line);
  CHECK(*back.kl == 0.25);

  auto bad = [&](const std::string& from, const std::string& to) {
    auto s = line;
    const auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    s.replace(pos, from.size(), to);
    CHECK_THROWS_AS(record_from_json(s), FormatError);
  };
  bad("\"kl\":0.25", "\"kl\":-0.1");
  bad("\"concept_id\":3", "\"concept_id\":19");
  bad("\"clean_top10\":[0,1", "\"clean_top10\":[1,1");
  bad("\"clean_top10\":[0,", "\"clean_top10\":[");
  bad("\"condition\":\"fars_ablate\"", "\"condition\":\"nope\"");
  CHECK_THROWS_AS(record_from_json("not json"), FormatError);

  std::stringstream ss;
  write_records({r, record(std::string(kFarsK10), 1, 0)}, ss);
  ss << "\n";
  CHECK(read_records(ss).size() == 2);
  std::istringstream broken(line + "\n{\n");
  try {
    read_records(broken);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("aggregation is order independent") {
  std::vector<InterventionRecord> recs;
  for (int c = 1; c <= 18; ++c)
    for (int i = 0; i < 3; ++i) recs.push_back(record(std::string(kFarsK10), c, i));
  AggregateOptions o;
  o.n_resamples = 300;
  const auto a = aggregate_interventions(recs, o);
  std::reverse(recs.begin(), recs.end());
  const auto b = aggregate_interventions(recs, o);
  REQUIRE(a.conditions.size() == 1);
  CHECK(a.conditions[0].mean_overlap == b.conditions[0].mean_overlap);
  CHECK(a.conditions[0].overlap_ci.lo == b.conditions[0].overlap_ci.lo);
  CHECK(a.conditions[0].n_cells == 54);
  // overlap of concept c is (c mod 11) / 10
  double expect = 0;
  for (int c = 1; c <= 18; ++c) expect += 3 * (c % 11) / 10.0;
  CHECK(a.conditions[0].mean_overlap == Approx(expect / 54));
  CHECK(a.domains.size() == 5);
  CHECK(!a.conditions[0].mean_kl);
}

TEST_CASE("coverage accounting") {
  auto c = config(2, 16);
  c.best_layer = 0;
  c.n_layer_samples = 1;
  c.n_instances = 2;
  c.random_draws = 1;
  c.form_pairs = {{Form::en, Form::math}};
  const auto plan = build_patch_plan(c);
  const auto cells = plan_cells(plan);
  std::vector<InterventionRecord> recs;
  for (const auto& cell : cells) {
    auto r = record(cell.condition, cell.instance.concept_id, cell.instance.instance, cell.layer);
    r.src_form = cell.pair.src;
    r.tgt_form = cell.pair.tgt;
    r.draw = cell.draw;
    if (is_ablation(cell.condition)) r.kl = 0.1;
    recs.push_back(r);
  }
  recs.push_back(recs.front());                  // duplicate
  recs.erase(recs.begin() + 3);                   // missing
  auto extra = recs.back();
  extra.layer = 1;                                 // layer not in plan
  recs.push_back(extra);
  AggregateOptions o;
  o.n_resamples = 50;
  o.plans = {plan};
  const auto s = aggregate_interventions(recs, o);
  REQUIRE(s.coverage.size() == 1);
  const auto& cov = s.coverage[0];
  CHECK(cov.expected == cells.size());
  CHECK(cov.missing == 1);
  CHECK(cov.duplicates == 1);
  CHECK(cov.unplanned == 1);
}

TEST_CASE("parity fixture against an explicit loop") {
  const auto cases = make_parity_fixture(30, 8, 3);
  std::set<int> ks;
  for (const auto& c : cases) {
    ks.insert(c.k);
    for (int d = 0; d < c.dim; ++d) {
      double v = c.h_tgt[static_cast<std::size_t>(d)];
      for (int r = 0; r < c.k; ++r) {
        double dot = 0;
        for (int e = 0; e < c.dim; ++e)
          dot += static_cast<double>(c.basis[static_cast<std::size_t>(r * c.dim + e)]) *
                 (static_cast<double>(c.h_src[static_cast<std::size_t>(e)]) - c.h_tgt[static_cast<std::size_t>(e)]);
        v += c.basis[static_cast<std::size_t>(r * c.dim + d)] * dot;
      }
      CHECK(std::abs(v - c.expected[static_cast<std::size_t>(d)]) < 1e-5);
    }
  }
  CHECK(ks.count(0));
  CHECK(ks.count(8));
  const auto back = fixture_from_json(fixture_to_json(cases));
  CHECK(back.size() == cases.size());
  CHECK(parity_max_deviation(back) < 1e-5);
  auto tampered = back;
  tampered[3].expected[0] += 0.01f;
  CHECK(parity_max_deviation(tampered) > 1e-3);
}
