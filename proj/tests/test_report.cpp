#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "triform/error.hpp"
#include "triform/pipeline.hpp"
#include "triform/synth.hpp"
#include "triform/table.hpp"

using namespace triform;
using namespace triform::report;

namespace {

PipelineConfig small_workspace(const std::string& name, int n_models = 2, bool interventions = true) {
  const auto dir = testing::scratch_dir(name);
  synth::WorkspaceSpec w;
  w.n_models = n_models;
  w.n_layers = 3;
  w.hidden_dim = 48;
  w.interventions = interventions;
  w.random_draws = 2;
  w.n_layer_samples = 2;
  w.seed = 5;
  auto c = load_config(synth::write_workspace(w, dir));
  c.n_perm = 100;
  c.bootstrap_resamples = 200;
  c.sweep_ks = {2, 10};
  c.holdout_ks = {3};
  c.holdout_splits = 2;
  return c;
}

}  // namespace

TEST_CASE("csv formatting") {
  Table t;
  t.name = "t";
  t.columns = {text_col("name"), int_col("n"), real_col("x", 2)};
  t.add_row({std::string("a,b"), std::int64_t{3}, -0.001});
  t.add_row({std::string("say \"hi\""), std::monostate{}, std::int64_t{2}});
  CHECK(to_csv(t) == "name,n,x\n\"a,b\",3,0.00\n\"say \"\"hi\"\"\",,2.00\n");
  CHECK_THROWS_AS(t.add_row({std::string("x")}), ContractViolation);
  CHECK_THROWS_AS(t.add_row({std::int64_t{1}, std::int64_t{1}, 0.5}), ContractViolation);
  CHECK_THROWS_AS(t.add_row({std::string("x"), std::int64_t{1}, std::nan("")}), ContractViolation);
}

TEST_CASE("json tables round trip") {
  Table t;
  t.name = "t";
  t.source = {"rsa", "permutation_rsa", 7};
  t.columns = {text_col("name"), int_col("n"), real_col("x")};
  t.add_row({std::string("a"), std::int64_t{3}, 0.125});
  t.add_row({std::monostate{}, std::int64_t{-1}, 2.0});
  const auto back = table_from_json(to_json(t));
  CHECK(to_csv(back) == to_csv(t));
  CHECK(back.source.seed == 7);
  CHECK(to_json(back).dump() == to_json(t).dump());
  CHECK_THROWS_AS(table_from_json(nlohmann::ordered_json::parse("{\"name\": 3}")), FormatError);
  CHECK(parse_format("json") == Format::json);
  CHECK_THROWS_AS(parse_format("xml"), InvalidArgument);
}

TEST_CASE("config parsing") {
  const auto c = config_from_json(R"({"stimulus_file": "s.jsonl",
    "models": [{"model_id": "a", "activations": "acts/a"}], "stages": {"cka": false}, "n_perm": 50})", "/data");
  CHECK(c.stimulus_file->string() == "/data/s.jsonl");
  CHECK(c.models.at(0).activations.string() == "/data/acts/a");
  CHECK(!c.stages.cka);
  CHECK(c.stages.rsa);
  CHECK(c.n_perm == 50);
  CHECK_THROWS_AS(config_from_json(R"({"stages": {"tsne": true}})"), InvalidArgument);
  CHECK_THROWS_AS(config_from_json("{"), FormatError);
  CHECK_THROWS_AS(config_from_json(R"({"models": [{"model_id": "a"}]})"), FormatError);
}

TEST_CASE("pipeline produces every table") {
  const auto c = small_workspace("pipe");
  const auto b = run_pipeline(c);
  for (const auto& s : b.stages) {
    CAPTURE(s.stage);
    CAPTURE(s.reason);
    CHECK(s.status == "ok");
  }
  for (const char* name : {"table1_summary", "layer_rsa", "layer_probe", "probe_grid", "layer_entropy", "table2_cka",
                           "table3_patching", "table4_subspace_patching", "per_domain", "random_draws", "coverage",
                           "table5_subspace", "sweep", "holdout", "alignment", "stage_status"})
    CHECK_MESSAGE(b.find(name) != nullptr, name);
  CHECK(b.find("table1_summary")->rows.size() == 2);
  CHECK(b.find("alignment")->rows.size() == 1);
  const auto* cov = b.find("coverage");
  REQUIRE(cov);
  for (const auto& row : cov->rows) CHECK(std::get<std::int64_t>(row[3]) == 0);  // missing
  CHECK(b.provenance.contains("stimulus_digest"));
  CHECK(b.provenance.dump().find("created") == std::string::npos);
}

TEST_CASE("a missing activation file fails one model only") {
  auto c = small_workspace("partial", 2, false);
  c.stages.holdout = false;
  c.models[1].activations = c.models[1].activations.string() + "_gone";
  const auto b = run_pipeline(c);
  CHECK(!b.ok());
  int errors = 0, skipped = 0, ok = 0;
  for (const auto& s : b.stages) {
    if (s.model_id == c.models[1].model_id) {
      errors += s.status == "error";
      skipped += s.status == "skipped";
      if (s.status == "skipped") CHECK(s.reason.find("activation file unavailable") != std::string::npos);
    }
    if (s.model_id == c.models[0].model_id) ok += s.status == "ok";
  }
  CHECK(errors == 1);
  CHECK(skipped >= 5);
  CHECK(ok >= 6);
  CHECK(b.find("table1_summary")->rows.size() == 1);

  auto ff = c;
  ff.fail_fast = true;
  CHECK_THROWS(run_pipeline(ff));
}

TEST_CASE("stage cache") {
  auto c = small_workspace("cache", 1, false);
  c.stages.sweep = c.stages.holdout = false;
  c.cache_dir = testing::scratch_dir("cache_store");
  const auto a = run_pipeline(c);
  CHECK(a.cache_hits == 0);
  const auto b = run_pipeline(c);
  CHECK(b.cache_hits > 0);
  CHECK(bundle_to_json(a) == bundle_to_json(b));
  c.n_perm = 101;
  const auto d = run_pipeline(c);
  CHECK(d.cache_hits < b.cache_hits);
}

TEST_CASE("bundle on disk") {
  auto c = small_workspace("disk", 1, false);
  c.stages.sweep = c.stages.holdout = c.stages.rsa = false;
  const auto b = run_pipeline(c);
  const auto out = testing::scratch_dir("disk_out");
  const auto files = write_bundle(b, out, Format::csv);
  CHECK(std::filesystem::exists(out / "provenance.json"));
  CHECK(std::filesystem::exists(out / "table1_summary.csv"));
  CHECK(std::filesystem::exists(out / "stage_status.csv"));
  CHECK(files.size() >= b.tables.size());
}
