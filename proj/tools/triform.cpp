// Command-line front end. Exit codes: 0 success, 2 validation failure,
// 1 anything else.
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "triform/bench.hpp"
#include "triform/digest.hpp"
#include "triform/error.hpp"
#include "triform/fars.hpp"
#include "triform/patching.hpp"
#include "triform/pipeline.hpp"
#include "triform/store.hpp"
#include "triform/synth.hpp"

namespace fs = std::filesystem;
using namespace triform;
using Json = nlohmann::ordered_json;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string format = "csv";
};

report::PipelineConfig base_config(const Globals& g) {
  report::PipelineConfig c = g.config.empty() ? report::PipelineConfig{} : report::load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  c.fail_fast = true;
  return c;
}

report::StageToggles only(std::initializer_list<bool report::StageToggles::*> on) {
  report::StageToggles t;
  for (auto m : {&report::StageToggles::rsa, &report::StageToggles::probe, &report::StageToggles::entropy,
                 &report::StageToggles::cka, &report::StageToggles::fars, &report::StageToggles::sweep,
                 &report::StageToggles::holdout, &report::StageToggles::patching, &report::StageToggles::alignment})
    t.*m = false;
  for (auto m : on) t.*m = true;
  return t;
}

report::ModelInput model_input(const std::string& base) {
  const auto m = store::manifest_from_json(store::read_file(store::paths_for(base).manifest));
  report::ModelInput in;
  in.model_id = m.model_id;
  in.activations = base;
  return in;
}

void emit(const report::ReportBundle& b, const std::vector<std::string>& names, const Globals& g) {
  std::vector<report::Table> tables;
  for (const auto& n : names)
    if (const auto* t = b.find(n)) tables.push_back(*t);
  for (const auto& p : report::emit_tables(tables, g.out_dir, report::parse_format(g.format)))
    fmt::print("wrote {}\n", p.string());
}

store::ReadResult load(const std::string& acts, const std::string& stimuli) {
  store::ReadOptions ro;
  if (!stimuli.empty()) ro.stimulus_file = stimuli;
  auto r = store::read_tensor(acts, ro);
  for (const auto& w : r.warnings) fmt::print(stderr, "warning: {}\n", w);
  if (r.provenance_mismatch) throw ContractViolation("activations were not extracted from " + stimuli);
  return r;
}

std::string write_text(const fs::path& path, const std::string& text) {
  store::atomic_write(path, text);
  return path.string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"triform: benchmark construction and representation analysis"};
  app.require_subcommand(1);
  // Subcommands inherit this, so global options may follow the subcommand.
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "pipeline config JSON");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_option("--format", g.format, "table format")->check(CLI::IsMember({"csv", "json"}));

  std::string acts, stimuli, basis, plan_file, records_file, bases_dir, out_file;
  std::vector<std::string> acts_list;
  int k = 10, layer = -1, splits = 10, n_cases = 100, dim = 64, n_models = 2, n_layers = 12, best_layer = -1;
  int n_perm = -1, bootstrap = -1, draws = 10, n_instances = 50, layer_samples = 8;
  double ridge = -1, percentile = -1;
  std::vector<int> ks, holdout_ks;
  bool form_control = false, no_interventions = false;
  std::string preset = "intervention";

  auto* generate = app.add_subcommand("generate", "write the 324-stimulus benchmark as JSONL");
  generate->add_option("--out", out_file, "stimulus file (default <out-dir>/stimuli.jsonl)");

  auto* validate = app.add_subcommand("validate", "validate stimulus, activation, basis, plan or record files");
  validate->add_option("--stimuli", stimuli);
  validate->add_option("--activations", acts);
  validate->add_option("--basis", basis);
  validate->add_option("--plan", plan_file);
  validate->add_option("--bases", bases_dir, "basis directory for --plan");
  validate->add_option("--records", records_file);

  auto* ingest = app.add_subcommand("ingest", "check activation files and their provenance");
  ingest->add_option("--activations", acts)->required();
  ingest->add_option("--stimuli", stimuli);

  auto add_acts = [&](CLI::App* c) {
    c->add_option("--activations", acts)->required();
    c->add_option("--stimuli", stimuli);
  };
  auto* rsa = app.add_subcommand("rsa", "layer-wise RSA with permutation tests and BH-FDR");
  add_acts(rsa);
  rsa->add_option("--n-perm", n_perm);
  auto* probe = app.add_subcommand("probe", "cross-form ridge probe per layer");
  add_acts(probe);
  probe->add_option("--ridge-alpha", ridge);
  auto* entropy = app.add_subcommand("entropy", "form-selectivity entropy and agnostic fractions");
  add_acts(entropy);
  entropy->add_option("--percentile", percentile);
  auto* cka = app.add_subcommand("cka", "linear CKA by invariance dimension");
  add_acts(cka);

  auto* fars_cmd = app.add_subcommand("fars", "subspace extraction and analyses");
  fars_cmd->require_subcommand(1);
  auto* fx = fars_cmd->add_subcommand("extract", "write per-layer FARS (or form-control) bases");
  add_acts(fx);
  fx->add_option("--k", k);
  fx->add_option("--layer", layer, "single layer (default all)");
  fx->add_flag("--form-control", form_control, "form-centroid PCA instead");
  auto* fs_cmd = fars_cmd->add_subcommand("sweep", "dimensionality sweep over k");
  add_acts(fs_cmd);
  fs_cmd->add_option("--ks", ks)->delimiter(',');
  auto* fh = fars_cmd->add_subcommand("holdout", "leave-K-concepts-out generalization");
  add_acts(fh);
  fh->add_option("--K", holdout_ks)->delimiter(',');
  fh->add_option("--splits", splits);
  fh->add_option("--k", k);
  fh->add_option("--layer", layer, "default: best FARS layer");
  auto* fp = fars_cmd->add_subcommand("project", "export projections as CSV");
  add_acts(fp);
  fp->add_option("--basis", basis)->required();
  fp->add_option("--out", out_file, "CSV path (default <out-dir>/projection.csv)");

  auto* patch = app.add_subcommand("patch", "patch plans, record aggregation and parity fixtures");
  patch->require_subcommand(1);
  auto* pplan = patch->add_subcommand("plan", "build a patch plan and its bases");
  add_acts(pplan);
  pplan->add_option("--k", k);
  pplan->add_option("--best-layer", best_layer, "default: best FARS layer");
  pplan->add_option("--draws", draws);
  pplan->add_option("--instances", n_instances);
  pplan->add_option("--layer-samples", layer_samples);
  auto* pagg = patch->add_subcommand("aggregate", "summarize InterventionRecord JSONL");
  pagg->add_option("--records", records_file)->required();
  pagg->add_option("--plan", plan_file);
  pagg->add_option("--bootstrap", bootstrap);
  auto* pfix = patch->add_subcommand("fixture", "write the vector-math parity fixture");
  pfix->add_option("--n", n_cases);
  pfix->add_option("--dim", dim);
  pfix->add_option("--out", out_file, "default <out-dir>/parity_fixture.json");
  auto* ppar = patch->add_subcommand("parity", "check a parity fixture against subspace_patch");
  ppar->add_option("--fixture", out_file)->required();

  auto* align = app.add_subcommand("align", "cross-model CCA and centroid RSA at each best FARS layer");
  align->add_option("--activations", acts_list)->required();
  align->add_option("--k", k);

  auto* report_cmd = app.add_subcommand("report", "run the configured pipeline and write every table");

  auto* synth_cmd = app.add_subcommand("synth", "write planted synthetic inputs for the whole pipeline");
  synth_cmd->add_option("--models", n_models);
  synth_cmd->add_option("--layers", n_layers);
  synth_cmd->add_option("--preset", preset)->check(CLI::IsMember({"intervention", "form-dominant", "default"}));
  synth_cmd->add_flag("--no-interventions", no_interventions);
  synth_cmd->add_option("--draws", draws);
  synth_cmd->add_option("--layer-samples", layer_samples);
  synth_cmd->add_option("--dim", dim, "hidden size (default from the preset)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const fs::path out(g.out_dir);
    const auto seed = g.seed.value_or(0);

    if (*generate) {
      const auto set = bench::generate_benchmark(seed);
      const auto report = bench::validate_stimulus_set(set);
      if (!report.ok()) throw ContractViolation("generated set failed validation: " + report.violations.front());
      const auto path = out_file.empty() ? out / "stimuli.jsonl" : fs::path(out_file);
      fmt::print("wrote {} ({} stimuli, {})\n", write_text(path, bench::to_jsonl(set)), set.stimuli.size(),
                 sha256_digest(bench::to_jsonl(set)));
      return 0;
    }

    if (*validate) {
      int checked = 0;
      if (!stimuli.empty()) {
        std::ifstream in(stimuli);
        if (!in) throw IoError("cannot open " + stimuli);
        const auto set = bench::read_stimulus_file(in);
        const auto r = bench::validate_stimulus_set(set);
        for (const auto& v : r.violations) fmt::print(stderr, "{}\n", v);
        if (!r.ok()) throw ContractViolation(fmt::format("{}: {} violation(s)", stimuli, r.violations.size()));
        fmt::print("{}: ok ({} stimuli)\n", stimuli, set.stimuli.size());
        ++checked;
      }
      if (!acts.empty()) {
        const auto r = load(acts, stimuli);
        fmt::print("{}: ok (N={} L={} D={})\n", acts, r.tensor.n_stimuli, r.tensor.n_layers, r.tensor.hidden_dim);
        ++checked;
      }
      if (!basis.empty()) {
        const auto b = fars::read_basis(basis);
        fmt::print("{}: ok (k={} D={} layer={})\n", basis, b.k(), b.dim(), b.layer);
        ++checked;
      }
      if (!plan_file.empty()) {
        const auto p = patching::plan_from_json(store::read_file(plan_file));
        patching::validate_plan(p, bases_dir.empty() ? fs::path(plan_file).parent_path() : fs::path(bases_dir));
        fmt::print("{}: ok ({} cells)\n", plan_file, patching::plan_cells(p).size());
        ++checked;
      }
      if (!records_file.empty()) {
        std::ifstream in(records_file);
        if (!in) throw IoError("cannot open " + records_file);
        fmt::print("{}: ok ({} records)\n", records_file, patching::read_records(in).size());
        ++checked;
      }
      if (checked == 0) throw InvalidArgument("nothing to validate");
      return 0;
    }

    if (*ingest) {
      const auto r = load(acts, stimuli);
      Json j = Json::parse(store::manifest_to_json(r.manifest));
      j["acts_digest"] = sha256_file(store::paths_for(acts).acts);
      j["provenance_checked"] = !stimuli.empty();
      j["warnings"] = r.warnings;
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*rsa || *probe || *entropy || *cka || *fs_cmd || *fh || *align) {
      auto c = base_config(g);
      if (!stimuli.empty()) c.stimulus_file = stimuli;
      if (n_perm > 0) c.n_perm = n_perm;
      if (ridge > 0) c.ridge_alpha = ridge;
      if (percentile > 0) c.agnostic_percentile = percentile;
      c.models.clear();
      std::vector<std::string> tables;
      if (*align) {
        for (const auto& a : acts_list) c.models.push_back(model_input(a));
        c.k = k;
        c.stages = only({&report::StageToggles::fars, &report::StageToggles::alignment});
        tables = {"alignment", "table5_subspace"};
      } else {
        c.models.push_back(model_input(acts));
      }
      if (*rsa) {
        c.stages = only({&report::StageToggles::rsa});
        tables = {"layer_rsa"};
      } else if (*probe) {
        c.stages = only({&report::StageToggles::probe});
        tables = {"layer_probe", "probe_grid"};
      } else if (*entropy) {
        c.stages = only({&report::StageToggles::entropy});
        tables = {"layer_entropy"};
      } else if (*cka) {
        c.stages = only({&report::StageToggles::cka});
        tables = {"table2_cka", "layer_cka"};
      } else if (*fs_cmd) {
        if (!ks.empty()) c.sweep_ks = ks;
        c.stages = only({&report::StageToggles::sweep});
        tables = {"sweep"};
      } else if (*fh) {
        if (!holdout_ks.empty()) c.holdout_ks = holdout_ks;
        c.holdout_splits = splits;
        c.k = k;
        if (layer >= 0) {
          // Explicit layer: run the holdout directly.
          const auto r = load(acts, stimuli);
          report::Table t;
          t.name = "holdout";
          t.columns = {report::text_col("model"), report::int_col("K"), report::int_col("layer"),
                       report::real_col("heldout_rsa_mean"), report::real_col("heldout_rsa_sd"),
                       report::real_col("insample_rsa_mean"), report::real_col("probe_pct_mean", 1)};
          for (int K : c.holdout_ks) {
            const auto h = fars::leave_k_out(r.tensor, r.labels, layer, K, splits, c.seed, k, c.ridge_alpha);
            t.add_row({r.tensor.model_id, std::int64_t{K}, std::int64_t{layer}, h.heldout_mean, h.heldout_sd,
                       h.insample_mean, 100.0 * h.probe_mean});
          }
          for (const auto& p : report::emit_tables({t}, out, report::parse_format(g.format)))
            fmt::print("wrote {}\n", p.string());
          return 0;
        }
        c.stages = only({&report::StageToggles::fars, &report::StageToggles::holdout});
        tables = {"holdout"};
      }
      const auto b = report::run_pipeline(c);
      emit(b, tables, g);
      return 0;
    }

    if (*fx) {
      const auto r = load(acts, stimuli);
      const auto order = store::canonical_order(r.labels);
      const auto lab = r.labels.subset(order);
      int written = 0;
      for (int l = 0; l < r.tensor.n_layers; ++l) {
        if (layer >= 0 && l != layer) continue;
        const auto X = store::slice_rows(r.tensor, l, order);
        auto b = form_control ? fars::extract_form_control_layer(X, lab, std::min(k, fars::kMaxFormK), l)
                              : fars::extract_fars_layer(X, lab, k, l);
        b.model_id = r.tensor.model_id;
        const auto base = out / fmt::format("{}_L{:02d}", form_control ? "form_control" : "fars", l);
        fars::write_basis(b, base);
        fmt::print("wrote {}.basis.json (k={})\n", base.string(), b.k());
        ++written;
      }
      if (written == 0) throw InvalidArgument(fmt::format("layer {} out of range", layer));
      return 0;
    }

    if (*fp) {
      const auto r = load(acts, stimuli);
      const auto b = fars::read_basis(basis);
      const auto order = store::canonical_order(r.labels);
      const auto lab = r.labels.subset(order);
      const auto P = fars::project(store::slice_rows(r.tensor, b.layer < 0 ? 0 : b.layer, order), b);
      std::string csv = "stimulus_id,concept_id,form";
      for (int i = 0; i < b.k(); ++i) csv += fmt::format(",p{}", i);
      csv += '\n';
      for (std::size_t n = 0; n < lab.size(); ++n) {
        csv += fmt::format("{},{},{}", lab.rows[n].stimulus_id, lab.rows[n].concept_id, to_string(lab.rows[n].form));
        for (int i = 0; i < b.k(); ++i) csv += fmt::format(",{:.6f}", P(static_cast<Eigen::Index>(n), i));
        csv += '\n';
      }
      fmt::print("wrote {}\n", write_text(out_file.empty() ? out / "projection.csv" : fs::path(out_file), csv));
      return 0;
    }

    if (*pplan) {
      const auto r = load(acts, stimuli);
      patching::PlanConfig pc;
      pc.model_id = r.tensor.model_id;
      pc.n_layers = r.tensor.n_layers;
      pc.hidden_dim = r.tensor.hidden_dim;
      pc.best_layer = best_layer >= 0 ? best_layer : fars::best_fars_layer(r.tensor, r.labels, k);
      pc.k = k;
      pc.random_draws = draws;
      pc.n_instances = n_instances;
      pc.n_layer_samples = layer_samples;
      pc.seed = seed;
      const auto plan = patching::build_patch_plan(pc);
      const auto bases = patching::condition_bases(r.tensor, r.labels, plan);
      patching::write_condition_bases(bases, out / "bases");
      fmt::print("wrote {} ({} cells, {} layers, best layer {})\n",
                 write_text(out / "plan.json", patching::plan_to_json(plan)), patching::plan_cells(plan).size(),
                 plan.layers.size(), plan.best_layer);
      return 0;
    }

    if (*pagg) {
      auto c = base_config(g);
      if (bootstrap > 0) c.bootstrap_resamples = bootstrap;
      std::ifstream in(records_file);
      if (!in) throw IoError("cannot open " + records_file);
      // Model ids come from the records themselves.
      const auto records = patching::read_records(in);
      std::set<std::string> ids;
      for (const auto& r : records) ids.insert(r.model_id);
      c.models.clear();
      c.stages = only({&report::StageToggles::patching});
      for (const auto& id : ids) {
        report::ModelInput m;
        m.model_id = id;
        m.activations = out / ".no-activations";
        m.interventions = records_file;
        if (!plan_file.empty()) m.plan = plan_file;
        c.models.push_back(m);
      }
      c.fail_fast = false;
      const auto b = report::run_pipeline(c);
      for (const auto& s : b.stages)
        if (s.stage == "patching" && s.status == "error") throw ContractViolation(s.model_id + ": " + s.reason);
      emit(b, {"table3_patching", "table4_subspace_patching", "per_domain", "random_draws", "coverage"}, g);
      return 0;
    }

    if (*pfix) {
      const auto cases = patching::make_parity_fixture(n_cases, dim, seed);
      fmt::print("wrote {} ({} cases)\n",
                 write_text(out_file.empty() ? out / "parity_fixture.json" : fs::path(out_file),
                            patching::fixture_to_json(cases)),
                 cases.size());
      return 0;
    }

    if (*ppar) {
      const auto dev = patching::parity_max_deviation(patching::fixture_from_json(store::read_file(out_file)));
      fmt::print("max abs deviation {:.3g}\n", dev);
      if (!(dev < 1e-5)) throw ContractViolation("parity deviation exceeds 1e-5");
      return 0;
    }

    if (*report_cmd) {
      if (g.config.empty()) throw InvalidArgument("report needs --config");
      auto c = base_config(g);
      c.fail_fast = false;
      const auto b = report::run_pipeline(c);
      for (const auto& p : report::write_bundle(b, out, report::parse_format(g.format))) fmt::print("wrote {}\n", p.string());
      int errors = 0;
      for (const auto& s : b.stages)
        if (s.status != "ok") {
          fmt::print(stderr, "{} {} {}: {}\n", s.stage, s.model_id.empty() ? "-" : s.model_id, s.status, s.reason);
          errors += s.status == "error";
        }
      return errors ? 1 : 0;
    }

    if (*synth_cmd) {
      synth::WorkspaceSpec w;
      w.n_models = n_models;
      w.n_layers = n_layers;
      w.preset = preset;
      w.interventions = !no_interventions;
      w.random_draws = draws;
      w.n_layer_samples = layer_samples;
      w.seed = seed;
      if (synth_cmd->count("--dim")) w.hidden_dim = dim;
      fmt::print("wrote {}\n", synth::write_workspace(w, out).string());
      return 0;
    }
  } catch (const ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
