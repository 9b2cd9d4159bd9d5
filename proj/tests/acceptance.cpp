// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures, capped at 1.
#include <fmt/format.h>

#include <chrono>
#include <functional>
#include <map>
#include <numbers>
#include <set>

#include "helpers.hpp"
#include "triform/bench.hpp"
#include "triform/fars.hpp"
#include "triform/geometry.hpp"
#include "triform/patching.hpp"
#include "triform/pipeline.hpp"
#include "triform/rng.hpp"
#include "triform/stats.hpp"
#include "triform/synth.hpp"

using namespace triform;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (s >= budget_s) {
    o.pass = false;
    o.detail += fmt::format("; over the {:.0f} s budget", budget_s);
  }
  failures += o.pass ? 0 : 1;
  fmt::print("{} {}: {} ({:.2f} s)\n", o.pass ? "PASS" : "FAIL", name, o.detail, s);
  std::fflush(stdout);
}

double degrees(double rad) { return rad * 180.0 / std::numbers::pi; }

// Benjamini-Hochberg by its counting definition: the largest k such that at
// least k p-values are <= k*alpha/m; reject everything at or below that line.
std::vector<bool> bh_brute(const std::vector<double>& p, double alpha) {
  const std::size_t m = p.size();
  std::vector<bool> out(m, false);
  for (std::size_t k = m; k >= 1; --k) {
    const double line = static_cast<double>(k) * alpha / static_cast<double>(m);
    std::size_t below = 0;
    for (double v : p) below += v <= line;
    if (below >= k) {
      for (std::size_t i = 0; i < m; ++i) out[i] = p[i] <= line;
      break;
    }
  }
  return out;
}

// Kolmogorov-Smirnov distance between a sample and U(0, 1).
double ks_uniform(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d = std::max(d, static_cast<double>(i + 1) / n - x[i]);
    d = std::max(d, x[i] - static_cast<double>(i) / n);
  }
  return d;
}

Eigen::MatrixXd layer_canonical(const store::ActivationTensor& t, const LabelTable& labels, int layer) {
  return store::slice_rows(t, layer, store::canonical_order(labels));
}

}  // namespace

int main() {
  const auto labels = synth::planted_labels();

  criterion("benchmark_composition", 1.0, [] {
    const auto set = bench::generate_benchmark(0);
    std::map<Form, int> per_form;
    std::map<int, int> per_concept;
    std::set<std::tuple<int, int, int>> cells;
    for (const auto& s : set.stimuli) {
      ++per_form[s.form];
      ++per_concept[s.concept_id];
      cells.insert({s.concept_id, s.instance_idx, form_index(s.form)});
    }
    bool ok = set.stimuli.size() == 324 && cells.size() == 324 && per_form.size() == 6 && per_concept.size() == 18;
    for (const auto& [f, n] : per_form) ok = ok && n == 54;
    for (const auto& [c, n] : per_concept) ok = ok && n == 18;
    ok = ok && bench::validate_stimulus_set(set).ok();
    return Outcome{ok, fmt::format("{} stimuli, {} distinct cells, {} forms x 54, {} concepts x 18", set.stimuli.size(),
                                   cells.size(), per_form.size(), per_concept.size())};
  });

  criterion("planted_subspace_recovery", 30.0, [&] {
    // Unit signal scale against sigma 0.2 is a signal-to-noise ratio of 5.
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      synth::PlantedSpec spec;
      spec.D = 256;
      spec.L = 12;
      spec.k_c = 10;
      spec.concept_scale = 1.0;
      spec.sigma = 0.2;
      spec.seed = seed;
      const auto p = synth::generate_planted(spec, labels);
      for (const auto& b : fars::extract_fars(p.tensor, labels, 10))
        worst = std::max(worst, degrees(synth::principal_angles(b.B, p.truth.concept_basis).maxCoeff()));
    }
    return Outcome{worst < 5.0, fmt::format("max principal angle {:.3f} deg over 10 seeds x 12 layers (< 5)", worst)};
  });

  criterion("signal_concentration", 60.0, [&] {
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto p = synth::generate_planted(synth::form_dominant_preset(seed), labels);
      const int layer = fars::best_fars_layer(p.tensor, labels, 10);
      const auto X = layer_canonical(p.tensor, labels, layer);
      const auto concept_rdm = geometry::label_rdm(labels, geometry::RdmKind::conceptual);
      const auto fars_m = fars::subspace_metrics(X, labels, fars::extract_fars_layer(X, labels, 10), 0.1, false);
      const auto ctrl = fars::subspace_metrics(X, labels, fars::extract_form_control_layer(X, labels), 0.1, false);
      const double full_euc = geometry::rsa_rho(geometry::empirical_rdm(X, geometry::Metric::euclidean), concept_rdm);
      const double full_cor = geometry::rsa_rho(geometry::empirical_rdm(X, geometry::Metric::correlation), concept_rdm);
      const double full = std::max(full_euc, full_cor);
      const bool s_ok = fars_m.rsa_concept >= 2.0 * full && fars_m.rsa_form < 0.1 && std::abs(ctrl.rsa_concept) < 0.05;
      ok = ok && s_ok;
      detail += fmt::format("{}seed {}: fars {:.3f} vs full {:.3f} (euclidean {:.3f}, correlation {:.3f}), fars form "
                            "{:.3f}, control concept {:.3f}",
                            detail.empty() ? "" : "; ", seed, fars_m.rsa_concept, full, full_euc, full_cor,
                            fars_m.rsa_form, ctrl.rsa_concept);
    }
    return Outcome{ok, detail};
  });

  criterion("condition_ordering", 120.0, [&] {
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto preset = synth::intervention_preset(seed);
      preset.planted.L = 6;
      const auto p = synth::generate_planted(preset.planted, labels);
      patching::PlanConfig pc;
      pc.model_id = preset.planted.model_id;
      pc.n_layers = preset.planted.L;
      pc.hidden_dim = preset.planted.D;
      pc.best_layer = fars::best_fars_layer(p.tensor, labels, 10);
      pc.n_layer_samples = 2;
      pc.random_draws = 3;
      pc.seed = seed;
      const auto plan = patching::build_patch_plan(pc);
      const auto bases = patching::condition_bases(p.tensor, labels, plan);
      const synth::SyntheticReadout readout(p.truth, preset.planted.D, preset.readout);
      patching::AggregateOptions o;
      o.n_resamples = 200;
      const auto s = patching::aggregate_interventions(
          synth::simulate_interventions(p.tensor, labels, plan, bases, readout), o);
      std::map<std::string, patching::ConditionSummary> c;
      for (const auto& x : s.conditions) c[x.condition] = x;
      const double rnd = c.at("random_10").mean_overlap, fr = c.at("fars_k10").mean_overlap,
                   pca = c.at("variance_pca_10").mean_overlap, full = c.at("full_replacement").mean_overlap;
      const double kl_f = *c.at("fars_ablate").mean_kl, kl_c = *c.at("form_control_ablate").mean_kl;
      const bool s_ok = rnd >= 0.95 && rnd > fr && fr > pca && pca > full && kl_f > kl_c;
      ok = ok && s_ok;
      detail += fmt::format("{}seed {}: random {:.3f} > fars {:.3f} > pca {:.3f} > full {:.3f}, ablation KL fars "
                            "{:.3f} > control {:.3f}",
                            detail.empty() ? "" : "; ", seed, rnd, fr, pca, full, kl_f, kl_c);
    }
    return Outcome{ok, "overlap, random >= 0.95; " + detail};
  });

  criterion("permutation_calibration", 120.0, [&] {
    // Random data against concept labels shuffled per run.
    const int n = 36;
    LabelTable lab;
    for (int i = 0; i < n; ++i) lab.rows.push_back({"s" + std::to_string(i), i % 6 + 1, Form::en, 0, Domain::logic});
    std::vector<double> ps;
    for (int run = 0; run < 200; ++run) {
      const auto X = testing::gaussian(n, 8, 1000 + static_cast<std::uint64_t>(run));
      auto shuffled = lab;
      KeyedRng rng{static_cast<std::uint64_t>(run), 0x6e756c6c};
      rng.shuffle(shuffled.rows.begin(), shuffled.rows.end());
      const auto theo = geometry::label_rdm(shuffled, geometry::RdmKind::conceptual);
      const auto emp = geometry::empirical_rdm(X, geometry::Metric::euclidean);
      ps.push_back(stats::permutation_rsa(emp.matrix, theo.matrix, 200, static_cast<std::uint64_t>(run)).p_value);
    }
    const double ks = ks_uniform(ps);
    // Zero exceedances: identical RDMs.
    const auto X = testing::gaussian(n, 8, 1);
    const auto emp = geometry::empirical_rdm(X, geometry::Metric::euclidean);
    const auto top = stats::permutation_rsa(emp.matrix, emp.matrix, 200, 3);
    const bool exact = top.exceedances == 0 && top.p_value == 1.0 / 201.0 && stats::permutation_p_value(0, 200) == 1.0 / 201.0;
    return Outcome{ks < 0.1 && exact, fmt::format("KS {:.4f} over 200 null runs (< 0.1); zero-exceedance p {:.6f} = 1/201: {}",
                                                  ks, top.p_value, exact ? "yes" : "no")};
  });

  criterion("bh_fdr_brute_force", 10.0, [] {
    int mismatches = 0, rejections = 0;
    for (int v = 0; v < 1000; ++v) {
      KeyedRng rng{static_cast<std::uint64_t>(v), 0x6268};
      const int m = 1 + static_cast<int>(rng.below(20));
      std::vector<double> p(static_cast<std::size_t>(m));
      for (auto& x : p) {
        x = std::pow(1.0 - rng.uniform(), 3.0);  // skewed toward 0, in (0, 1]
        if (v % 3 == 0) x = std::max(0.001, std::round(x * 100.0) / 100.0);  // ties
      }
      const double alpha = v % 2 ? 0.05 : 0.1;
      const auto got = stats::bh_fdr(p, alpha);
      mismatches += got != bh_brute(p, alpha);
      for (bool b : got) rejections += b;
    }
    return Outcome{mismatches == 0, fmt::format("{} mismatches over 1000 vectors ({} rejections)", mismatches, rejections)};
  });

  criterion("cka_invariances", 10.0, [] {
    const auto X = testing::gaussian(100, 20, 5);
    const double self = geometry::linear_cka(X, X);
    double worst = std::abs(self - 1.0);
    const auto Y = testing::gaussian(100, 15, 6);
    const double base = geometry::linear_cka(X, Y);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Eigen::MatrixXd Xr = X * testing::random_orthogonal(20, 10 + s);
      const Eigen::MatrixXd Ys = (0.01 + 7.0 * static_cast<double>(s)) * Y;
      worst = std::max(worst, std::abs(geometry::linear_cka(Xr, Ys) - base));
      worst = std::max(worst, std::abs(geometry::linear_cka(X, Xr) - 1.0));
    }
    // Null level: independent N x D Gaussians.
    double null = 0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r)
      null += geometry::linear_cka(testing::gaussian(200, 50, 100 + static_cast<std::uint64_t>(2 * r)),
                                   testing::gaussian(200, 50, 101 + static_cast<std::uint64_t>(2 * r)));
    null /= reps;
    return Outcome{worst < 1e-6 && null < 0.15,
                   fmt::format("max invariance error {:.2e} (< 1e-6); null CKA {:.4f} at N=200, D=50, mean of {} (< 0.15)",
                               worst, null, reps)};
  });

  criterion("probe_chance", 60.0, [&] {
    bool ok = true;
    std::string detail;
    double sum = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      // One orthogonal direction per concept, so a one-vs-rest linear readout
      // can separate all 18 classes; form offsets stay in place.
      synth::PlantedSpec spec;
      spec.D = 256;
      spec.L = 1;
      spec.geometry = synth::Geometry::concept_specific;
      spec.seed = seed;
      const auto p = synth::generate_planted(spec, labels);
      const auto X = store::slice_layer(p.tensor, 0);
      const double separable = geometry::cross_form_probe_matrix(X, labels, 0.1).mean_offdiag;
      // Concept labels permuted independently within each form.
      auto shuffled = labels;
      for (Form f : kAllForms) {
        const auto rows = labels.rows_of_form(f);
        std::vector<int> ids;
        for (int r : rows) ids.push_back(labels.rows[static_cast<std::size_t>(r)].concept_id);
        KeyedRng rng{seed, static_cast<std::uint64_t>(form_index(f)), 0x7072};
        rng.shuffle(ids.begin(), ids.end());
        for (std::size_t i = 0; i < rows.size(); ++i) shuffled.rows[static_cast<std::size_t>(rows[i])].concept_id = ids[i];
      }
      const double chance = geometry::cross_form_probe_matrix(X, shuffled, 0.1).mean_offdiag;
      sum += chance;
      ok = ok && std::abs(chance - 0.056) <= 0.03 && separable == 1.0;
      detail += fmt::format("{}{:.3f}/{:.3f}", detail.empty() ? "" : ", ", chance, separable);
    }
    return Outcome{ok, fmt::format("shuffled/separable accuracy per seed {}; shuffled mean {:.3f} (0.056 +- 0.03), "
                                   "separable must be 1.0",
                                   detail, sum / 5)};
  });

  criterion("entropy_bounds", 10.0, [] {
    const double logF = std::log(6.0);
    double lo = 1e9, hi = -1e9;
    // Dense, sparse, signed and constant-zero profiles.
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      store::ActivationTensor t("e", 60, 2, 200);
      KeyedRng rng{seed, 0x656e74};
      for (auto& v : t.data) {
        const double u = rng.uniform();
        v = static_cast<float>(seed == 1 && u < 0.8 ? 0.0 : seed == 2 ? rng.normal() * 100.0 : seed == 3 ? 0.0 : u);
      }
      std::vector<int> forms(60);
      for (int i = 0; i < 60; ++i) forms[static_cast<std::size_t>(i)] = i % 6;
      const auto prof = stats::entropy_profile(t, forms);
      lo = std::min(lo, prof.H.minCoeff());
      hi = std::max(hi, prof.H.maxCoeff());
    }
    // Continuous random profiles: pooled 90th percentile marks 10% of neurons.
    store::ActivationTensor t("e", 60, 4, 500);
    KeyedRng rng{9, 0x656e74};
    for (auto& v : t.data) v = static_cast<float>(std::exp(rng.normal()));
    std::vector<int> forms(60);
    for (int i = 0; i < 60; ++i) forms[static_cast<std::size_t>(i)] = i % 6;
    const auto frac = stats::agnostic_fraction(stats::entropy_profile(t, forms), 90.0);
    const double pooled = stats::mean(frac);
    const bool ok = lo >= 0.0 && hi <= logF && std::abs(pooled - 0.10) <= 1.0 / 2000.0 + 1e-12;
    return Outcome{ok, fmt::format("H in [{:.4f}, {:.4f}] within [0, log 6 = {:.4f}]; pooled fraction {:.4f} "
                                   "(0.10 within one neuron of 2000); per layer {:.3f} {:.3f} {:.3f} {:.3f}",
                                   lo, hi, logF, pooled, frac[0], frac[1], frac[2], frac[3])};
  });

  criterion("patch_identities", 1.0, [&] {
    double worst = 0;
    const int D = 64;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Eigen::VectorXd hs = testing::gaussian(D, 1, 2 * s).col(0);
      const Eigen::VectorXd ht = testing::gaussian(D, 1, 2 * s + 1).col(0);
      const auto b = fars::random_basis(D, 1 + static_cast<int>(s % 17), s);
      worst = std::max(worst, (fars::subspace_patch(hs, ht, fars::identity_basis(D)) - hs).cwiseAbs().maxCoeff());
      worst = std::max(worst, (fars::subspace_patch(hs, ht, fars::empty_basis(D)) - ht).cwiseAbs().maxCoeff());
      worst = std::max(worst, (fars::subspace_patch(hs, hs, b) - hs).cwiseAbs().maxCoeff());
      worst = std::max(worst, (b.B * fars::subspace_ablate(hs, b)).cwiseAbs().maxCoeff());
    }
    return Outcome{worst < 1e-6, fmt::format("max deviation {:.2e} over 20 triples (< 1e-6)", worst)};
  });

  criterion("bootstrap_coverage", 120.0, [] {
    // 18 concepts x 12 cells; concept effects sd 0.1, cell noise sd 0.05.
    const double mu = 0.6;
    int covered = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      KeyedRng rng{static_cast<std::uint64_t>(t), 0x626f6f74};
      std::vector<double> v;
      std::vector<int> g;
      for (int c = 0; c < 18; ++c) {
        const double a = 0.1 * rng.normal();
        for (int i = 0; i < 12; ++i) {
          v.push_back(mu + a + 0.05 * rng.normal());
          g.push_back(c);
        }
      }
      const auto ci = stats::block_bootstrap_ci(v, g, 2000, static_cast<std::uint64_t>(t));
      covered += ci.lo <= mu && mu <= ci.hi;
    }
    const double cov = static_cast<double>(covered) / trials;
    return Outcome{std::abs(cov - 0.95) <= 0.04, fmt::format("coverage {:.3f} over {} trials (0.95 +- 0.04)", cov, trials)};
  });

  criterion("leave_k_out_oracle", 120.0, [&] {
    bool ok = true;
    std::string detail;
    for (auto geo : {synth::Geometry::shared, synth::Geometry::concept_specific}) {
      synth::PlantedSpec spec;
      spec.D = 128;
      spec.L = 1;
      spec.geometry = geo;
      spec.seed = 21;
      const auto p = synth::generate_planted(spec, labels);
      for (int K : {3, 6, 9}) {
        const auto h = fars::leave_k_out(p.tensor, labels, 0, K, 10, 4);
        const bool s_ok = geo == synth::Geometry::shared ? h.heldout_mean >= 0.9 * h.insample_mean : h.heldout_mean < 0.1;
        ok = ok && s_ok;
        detail += fmt::format("{}{} K={}: held-out {:.3f}, in-sample {:.3f}", detail.empty() ? "" : "; ",
                              geo == synth::Geometry::shared ? "shared" : "non-shared", K, h.heldout_mean,
                              h.insample_mean);
      }
    }
    return Outcome{ok, "shared needs >= 0.9x in-sample, non-shared < 0.1; " + detail};
  });

  criterion("determinism", 120.0, [] {
    const auto dir = testing::scratch_dir("accept_det");
    synth::WorkspaceSpec w;
    w.n_models = 2;
    w.n_layers = 4;
    w.hidden_dim = 64;
    w.random_draws = 2;
    w.n_layer_samples = 2;
    w.seed = 17;
    auto snapshot = [&] {
      std::map<std::string, std::string> files;
      for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[e.path().lexically_relative(dir).string()] = store::read_file(e.path());
      return files;
    };
    auto cfg_path = synth::write_workspace(w, dir / "in");
    const auto inputs = snapshot();
    cfg_path = synth::write_workspace(w, dir / "in");
    const bool same_inputs = snapshot() == inputs;

    auto c = report::load_config(cfg_path);
    c.n_perm = 200;
    c.bootstrap_resamples = 500;
    c.holdout_splits = 3;
    const auto a = report::run_pipeline(c);
    const auto b = report::run_pipeline(c);
    report::write_bundle(a, dir / "out_a", report::Format::csv);
    report::write_bundle(b, dir / "out_b", report::Format::csv);
    std::size_t files = 0, differ = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir / "out_a")) {
      ++files;
      differ += store::read_file(e.path()) != store::read_file(dir / "out_b" / e.path().filename());
    }
    const bool same = bundle_to_json(a) == bundle_to_json(b) && differ == 0 && a.ok();
    return Outcome{same && same_inputs,
                   fmt::format("synthetic inputs identical: {}; bundle json identical: {}; {} of {} output files differ; "
                               "all stages ok: {}",
                               same_inputs, bundle_to_json(a) == bundle_to_json(b), differ, files, a.ok())};
  });

  fmt::print("{} criteria failed\n", failures);
  return failures ? 1 : 0;
}
