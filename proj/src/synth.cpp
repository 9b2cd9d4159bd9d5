#include "triform/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <set>

#include "json.hpp"
#include "triform/bench.hpp"
#include "triform/digest.hpp"
#include "triform/error.hpp"
#include "triform/rng.hpp"

namespace triform::synth {

namespace {

constexpr std::uint64_t kTagSubspace = 0x5355425350ULL;
constexpr std::uint64_t kTagConcept = 0x434f4e43ULL;
constexpr std::uint64_t kTagForm = 0x464f524dULL;
constexpr std::uint64_t kTagDistort = 0x44495354ULL;
constexpr std::uint64_t kTagNoise = 0x4e4f4953ULL;
constexpr std::uint64_t kTagReadout = 0x52454144ULL;

Eigen::MatrixXd gaussian(KeyedRng& rng, int rows, int cols) {
  Eigen::MatrixXd G(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) G(i, j) = rng.normal();
  return G;
}

// rows x cols with orthonormal columns, signs fixed by diag(R).
Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& G) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(G.rows(), G.cols());
  for (Eigen::Index j = 0; j < G.cols(); ++j)
    if (qr.matrixQR()(j, j) < 0) Q.col(j) *= -1.0;
  return Q;
}

// n x k codes, column-centered, with Z'Z = (n/k) I so the mean squared row
// norm is exactly 1.
Eigen::MatrixXd whitened_codes(KeyedRng& rng, int n, int k) {
  Eigen::MatrixXd G = gaussian(rng, n, k);
  G = G.rowwise() - G.colwise().mean();
  Eigen::MatrixXd Q = orthonormal_columns(G);
  return Q * std::sqrt(static_cast<double>(n) / k);
}

}  // namespace

double LayerProfile::at(int layer) const {
  switch (kind) {
    case Kind::constant: return 1.0;
    case Kind::bump: {
      const double z = (layer - center) / width;
      return std::exp(-0.5 * z * z);
    }
    case Kind::only: return layer == static_cast<int>(center) ? 1.0 : 0.0;
  }
  return 1.0;
}

PlantedSpec form_dominant_preset(std::uint64_t seed) {
  PlantedSpec s;
  s.form_scale = 3.0;
  s.sigma = 3.0;
  s.seed = seed;
  return s;
}

InterventionPreset intervention_preset(std::uint64_t seed) {
  InterventionPreset p;
  // A larger D keeps a random 10-dim patch small relative to the readout.
  p.planted.D = 512;
  p.planted.concept_distortion = 0.2;
  p.planted.seed = seed;
  p.readout.concept_gain = 1.0;
  p.readout.form_gain = 0.3;
  p.readout.background_gain = 0.05;
  p.readout.seed = seed;
  return p;
}

LabelTable planted_labels() {
  LabelTable t;
  for (int c = 1; c <= kConceptCount; ++c)
    for (int i = 0; i < kInstancesPerConcept; ++i)
      for (Form f : kAllForms) {
        LabelRecord r;
        r.concept_id = c;
        r.instance_idx = i;
        r.form = f;
        r.domain = bench::concept_spec(c).domain;
        r.stimulus_id = fmt::format("c{:02d}_i{}_{}", c, i, to_string(f));
        t.rows.push_back(std::move(r));
      }
  return t;
}

Planted generate_planted(const PlantedSpec& s, const LabelTable& labels) {
  if (s.D < 1 || s.L < 1) throw InvalidArgument(fmt::format("D and L must be positive, got D={} L={}", s.D, s.L));
  if (s.concept_scale < 0 || s.form_scale < 0 || s.sigma < 0 || s.concept_distortion < 0)
    throw InvalidArgument("scales, sigma and distortion must be non-negative");
  const bool specific = s.geometry == Geometry::concept_specific;
  const int kc = specific ? kConceptCount : s.k_c;
  if (!specific && (s.k_c < 1 || s.k_c > fars::kMaxConceptK))
    throw InvalidArgument(fmt::format("k_c = {} outside 1..{}", s.k_c, fars::kMaxConceptK));
  if (s.k_f < 1 || s.k_f > fars::kMaxFormK)
    throw InvalidArgument(fmt::format("k_f = {} outside 1..{}", s.k_f, fars::kMaxFormK));
  if (kc + s.k_f > s.D) throw InvalidArgument(fmt::format("k_c + k_f = {} exceeds D = {}", kc + s.k_f, s.D));

  std::set<std::tuple<int, int, int>> cells;
  for (const auto& r : labels.rows) {
    if (r.concept_id < 1 || r.concept_id > kConceptCount || r.instance_idx < 0 || r.instance_idx >= kInstancesPerConcept)
      throw ContractViolation(fmt::format("label {} is outside the 18 x 3 x 6 design", r.stimulus_id));
    cells.insert({r.concept_id, r.instance_idx, form_index(r.form)});
  }
  if (cells.size() != static_cast<std::size_t>(kStimulusCount))
    throw ContractViolation(
        fmt::format("labels cover {} of the {} concept x instance x form cells", cells.size(), kStimulusCount));

  GroundTruth gt;
  {
    KeyedRng rng{s.seed, kTagSubspace};
    if (s.orthogonal) {
      const Eigen::MatrixXd Q = orthonormal_columns(gaussian(rng, s.D, kc + s.k_f));
      gt.concept_basis = Q.leftCols(kc).transpose();
      gt.form_basis = Q.rightCols(s.k_f).transpose();
    } else {
      gt.concept_basis = orthonormal_columns(gaussian(rng, s.D, kc)).transpose();
      gt.form_basis = orthonormal_columns(gaussian(rng, s.D, s.k_f)).transpose();
    }
  }
  if (specific) {
    gt.concept_codes = Eigen::MatrixXd::Identity(kConceptCount, kConceptCount);
  } else {
    KeyedRng rng{s.code_seed.value_or(s.seed), kTagConcept};
    gt.concept_codes = whitened_codes(rng, kConceptCount, kc);
  }
  {
    KeyedRng rng{s.code_seed.value_or(s.seed), kTagForm};
    gt.form_codes = whitened_codes(rng, kFormCount, s.k_f);
  }

  // Concept part per (concept, form), including distortion, in D space.
  std::vector<Eigen::RowVectorXd> concept_part(static_cast<std::size_t>(kConceptCount * kFormCount));
  for (int c = 0; c < kConceptCount; ++c)
    for (int f = 0; f < kFormCount; ++f) {
      Eigen::RowVectorXd z = gt.concept_codes.row(c);
      if (s.concept_distortion > 0) {
        KeyedRng rng{s.seed, kTagDistort, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(f)};
        Eigen::RowVectorXd d(kc);
        for (int i = 0; i < kc; ++i) d(i) = rng.normal();
        z += s.concept_distortion * d / std::sqrt(static_cast<double>(kc));
      }
      concept_part[static_cast<std::size_t>(c * kFormCount + f)] = z * gt.concept_basis;
    }
  std::vector<Eigen::RowVectorXd> form_part(kFormCount);
  for (int f = 0; f < kFormCount; ++f) form_part[static_cast<std::size_t>(f)] = gt.form_codes.row(f) * gt.form_basis;

  Planted out;
  out.tensor = store::ActivationTensor(s.model_id, static_cast<int>(labels.size()), s.L, s.D);
  const double noise_sd = s.sigma / std::sqrt(static_cast<double>(s.D));
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const auto& r = labels.rows[n];
    const int c = r.concept_id - 1, f = form_index(r.form);
    for (int l = 0; l < s.L; ++l) {
      const double sc = s.concept_scale * s.concept_profile.at(l);
      const double sf = s.form_scale * s.form_profile.at(l);
      Eigen::RowVectorXd h = sc * concept_part[static_cast<std::size_t>(c * kFormCount + f)] +
                             sf * form_part[static_cast<std::size_t>(f)];
      if (noise_sd > 0) {
        KeyedRng rng{s.seed, kTagNoise, static_cast<std::uint64_t>(r.concept_id),
                     static_cast<std::uint64_t>(r.instance_idx), static_cast<std::uint64_t>(f),
                     static_cast<std::uint64_t>(l)};
        for (int d = 0; d < s.D; ++d) h(d) += noise_sd * rng.normal();
      }
      float* row = &out.tensor.data[out.tensor.index(static_cast<int>(n), l, 0)];
      for (int d = 0; d < s.D; ++d) row[d] = static_cast<float>(h(d));
    }
  }
  out.truth = std::move(gt);
  return out;
}

Eigen::VectorXd principal_angles(const Eigen::MatrixXd& B1, const Eigen::MatrixXd& B2) {
  if (B1.cols() != B2.cols())
    throw ContractViolation(fmt::format("principal_angles: D mismatch {} vs {}", B1.cols(), B2.cols()));
  fars::check_orthonormal(B1);
  fars::check_orthonormal(B2);
  const auto m = std::min(B1.rows(), B2.rows());
  if (m == 0) return Eigen::VectorXd(0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B1 * B2.transpose());
  Eigen::VectorXd a(m);
  for (Eigen::Index i = 0; i < m; ++i) a(i) = std::acos(std::clamp(svd.singularValues()(i), -1.0, 1.0));
  std::sort(a.data(), a.data() + a.size());
  return a;
}

SyntheticReadout::SyntheticReadout(const GroundTruth& truth, int D, const ReadoutSpec& spec) {
  if (spec.vocab < 10) throw InvalidArgument("readout vocabulary must have at least 10 entries");
  if (truth.concept_basis.cols() != D || truth.form_basis.cols() != D)
    throw ContractViolation("readout: ground truth dimension does not match D");
  KeyedRng rng{spec.seed, kTagReadout};
  const auto& C = truth.concept_basis;
  const auto& F = truth.form_basis;
  const Eigen::MatrixXd Wc = gaussian(rng, spec.vocab, static_cast<int>(C.rows()));
  const Eigen::MatrixXd Wf = gaussian(rng, spec.vocab, static_cast<int>(F.rows()));
  const Eigen::MatrixXd Wb = gaussian(rng, spec.vocab, D);
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(D, D) - C.transpose() * C - F.transpose() * F;
  W_ = spec.concept_gain * Wc * C + spec.form_gain * Wf * F + spec.background_gain * Wb * P;
}

Eigen::VectorXd SyntheticReadout::logits(const Eigen::VectorXd& h) const {
  if (h.size() != W_.cols()) throw ContractViolation("readout: h has the wrong dimension");
  return W_ * h;
}

std::array<std::int64_t, 10> SyntheticReadout::top10(const Eigen::VectorXd& h) const {
  const Eigen::VectorXd z = logits(h);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(z.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + 10, idx.end(), [&](std::int64_t a, std::int64_t b) {
    return z(a) > z(b) || (z(a) == z(b) && a < b);
  });
  std::array<std::int64_t, 10> out{};
  std::copy(idx.begin(), idx.begin() + 10, out.begin());
  return out;
}

std::vector<double> SyntheticReadout::softmax(const Eigen::VectorXd& h) const {
  const Eigen::VectorXd z = logits(h);
  const double m = z.maxCoeff();
  std::vector<double> p(static_cast<std::size_t>(z.size()));
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) s += (p[static_cast<std::size_t>(i)] = std::exp(z(i) - m));
  for (auto& v : p) v /= s;
  return p;
}

std::vector<patching::InterventionRecord> simulate_interventions(
    const store::ActivationTensor& tensor, const LabelTable& labels, const patching::PatchPlan& plan,
    const std::map<std::string, fars::SubspaceBasis>& bases, const SyntheticReadout& readout) {
  store::validate_pair(tensor, labels);
  std::map<std::tuple<int, int, int>, int> row_of;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const auto& r = labels.rows[n];
    row_of[{r.concept_id, r.instance_idx, form_index(r.form)}] = static_cast<int>(n);
  }
  auto vec = [&](int concept_id, int instance, Form f, int layer) {
    const auto it = row_of.find({concept_id, instance, form_index(f)});
    if (it == row_of.end())
      throw ContractViolation(fmt::format("no stimulus for concept {} instance {} form {}", concept_id, instance, to_string(f)));
    const float* p = &tensor.data[tensor.index(it->second, layer, 0)];
    return Eigen::Map<const Eigen::VectorXf>(p, tensor.hidden_dim).cast<double>().eval();
  };

  std::vector<patching::InterventionRecord> out;
  for (const auto& cell : patching::plan_cells(plan)) {
    const auto& ref = patching::find_basis(plan, cell.condition, cell.layer, cell.draw).ref;
    const auto bit = bases.find(ref);
    if (bit == bases.end()) throw ContractViolation("basis " + ref + " not provided");
    const auto& B = bit->second;
    const auto h_tgt = vec(cell.instance.concept_id, cell.instance.instance, cell.pair.tgt, cell.layer);

    patching::InterventionRecord r;
    r.model_id = plan.model_id;
    r.condition = cell.condition;
    r.layer = cell.layer;
    r.src_form = cell.pair.src;
    r.tgt_form = cell.pair.tgt;
    r.concept_id = cell.instance.concept_id;
    r.instance = cell.instance.instance;
    r.draw = cell.draw;
    r.clean_top10 = readout.top10(h_tgt);
    if (patching::is_ablation(cell.condition)) {
      const auto h = fars::subspace_ablate(h_tgt, B);
      r.patched_top10 = readout.top10(h);
      const auto p = fars::floor_and_renormalize(readout.softmax(h_tgt));
      const auto q = fars::floor_and_renormalize(readout.softmax(h));
      r.kl = fars::kl_divergence(p, q);
    } else {
      const auto h_src = vec(cell.instance.concept_id, cell.instance.instance, cell.pair.src, cell.layer);
      r.patched_top10 = readout.top10(fars::subspace_patch(h_src, h_tgt, B));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::filesystem::path write_workspace(const WorkspaceSpec& w, const std::filesystem::path& dir) {
  if (w.n_models < 1) throw InvalidArgument("workspace needs at least one model");
  if (w.preset != "intervention" && w.preset != "form-dominant" && w.preset != "default")
    throw InvalidArgument("unknown preset '" + w.preset + "'");
  using Json = nlohmann::ordered_json;
  const auto set = bench::generate_benchmark(w.seed);
  const auto stim_text = bench::to_jsonl(set);
  store::atomic_write(dir / "stimuli.jsonl", stim_text);
  const auto labels = bench::label_table(set);
  Json cfg;
  cfg["stimulus_file"] = "stimuli.jsonl";
  cfg["models"] = Json::array();
  for (int m = 0; m < w.n_models; ++m) {
    const std::uint64_t mseed = w.seed * 1000 + static_cast<std::uint64_t>(m);
    const auto ip = intervention_preset(mseed);
    PlantedSpec spec = w.preset == "intervention"    ? ip.planted
                       : w.preset == "form-dominant" ? form_dominant_preset(mseed)
                                                     : PlantedSpec{};
    spec.seed = mseed;
    spec.code_seed = w.seed;
    spec.L = w.n_layers;
    if (w.hidden_dim) spec.D = *w.hidden_dim;
    // Concept signal peaks mid-stack so layer curves have a shape.
    spec.concept_profile = LayerProfile::bump(w.n_layers / 2.0, std::max(1.0, w.n_layers / 4.0));
    spec.model_id = fmt::format("synthetic:m{}", m);
    const auto planted = generate_planted(spec, labels);
    const std::string stem = fmt::format("synthetic_m{}", m);
    store::WriteOptions wo;
    wo.stimulus_digest = sha256_digest(stim_text);
    wo.created_utc = "1970-01-01T00:00:00Z";
    store::write_tensor(planted.tensor, labels, dir / stem, wo);
    Json entry{{"model_id", spec.model_id}, {"params", "synthetic"}, {"activations", stem}};
    if (w.interventions) {
      patching::PlanConfig pc;
      pc.model_id = spec.model_id;
      pc.n_layers = spec.L;
      pc.hidden_dim = spec.D;
      pc.best_layer = fars::best_fars_layer(planted.tensor, labels, pc.k);
      pc.random_draws = w.random_draws;
      pc.n_layer_samples = w.n_layer_samples;
      pc.seed = mseed;
      const auto plan = patching::build_patch_plan(pc);
      const auto bases = patching::condition_bases(planted.tensor, labels, plan);
      patching::write_condition_bases(bases, dir / (stem + "_bases"));
      store::atomic_write(dir / (stem + ".plan.json"), patching::plan_to_json(plan));
      ReadoutSpec rs = ip.readout;
      rs.seed = mseed;
      const SyntheticReadout readout(planted.truth, spec.D, rs);
      std::ostringstream rec;
      patching::write_records(simulate_interventions(planted.tensor, labels, plan, bases, readout), rec);
      store::atomic_write(dir / (stem + ".interventions.jsonl"), rec.str());
      entry["interventions"] = stem + ".interventions.jsonl";
      entry["plan"] = stem + ".plan.json";
    }
    cfg["models"].push_back(entry);
  }
  cfg["seed"] = w.seed;
  const auto path = dir / "config.json";
  store::atomic_write(path, cfg.dump(2) + "\n");
  return path;
}

}  // namespace triform::synth
