#include "triform/fars.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"
#include "triform/digest.hpp"
#include "triform/error.hpp"
#include "triform/rng.hpp"

namespace triform::fars {
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::concept_centroid_pca: return "concept_centroid_pca";
    case Method::form_centroid_pca: return "form_centroid_pca";
    case Method::variance_pca: return "variance_pca";
    case Method::random_qr: return "random_qr";
    case Method::identity: return "identity";
    case Method::empty: return "empty";
  }
  throw InvalidArgument("unknown basis method");
}

Method parse_method(std::string_view s) {
  for (Method m : {Method::concept_centroid_pca, Method::form_centroid_pca, Method::variance_pca, Method::random_qr,
                   Method::identity, Method::empty})
    if (to_string(m) == s) return m;
  throw InvalidArgument("unknown basis method '" + std::string(s) + "'");
}

void check_orthonormal(const Eigen::MatrixXd& B, double tol) {
  if (B.rows() == 0) return;
  const Eigen::MatrixXd G = B * B.transpose() - Eigen::MatrixXd::Identity(B.rows(), B.rows());
  const double err = G.cwiseAbs().maxCoeff();
  if (!(err < tol))
    throw ContractViolation(fmt::format("basis rows are not orthonormal: max |BB' - I| = {:.3g} (tol {:.1g})", err, tol));
}

namespace {

// Flip each row so its largest-magnitude entry is positive.
void canonical_signs(Eigen::MatrixXd& B) {
  for (Eigen::Index r = 0; r < B.rows(); ++r) {
    Eigen::Index j;
    B.row(r).cwiseAbs().maxCoeff(&j);
    if (B(r, j) < 0) B.row(r) *= -1.0;
  }
}

std::vector<int> concept_labels(const LabelTable& labels) { return labels.concept_ids(); }

}  // namespace

SubspaceBasis centroid_pca(const Eigen::MatrixXd& X, const std::vector<int>& groups, int k, int cap, Method method,
                           int layer) {
  if (k < 1 || k > cap) throw InvalidArgument(fmt::format("k = {} outside 1..{} for {}", k, cap, to_string(method)));
  const auto C = geometry::centroids(X, groups);
  if (C.rows() < k + 1)
    throw ContractViolation(fmt::format("fewer than k+1 distinct centroids: {} groups for k = {}", C.rows(), k));
  const Eigen::RowVectorXd mu = C.colwise().mean();
  const Eigen::MatrixXd Cm = C.rowwise() - mu;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Cm, Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double tol = s.size() && s(0) > 0 ? s(0) * 1e-10 : 0.0;
  int rank = 0;
  while (rank < s.size() && s(rank) > tol) ++rank;
  if (rank < k)
    throw ContractViolation(
        fmt::format("fewer than k+1 distinct centroids: centroid span has rank {} < k = {}", rank, k));
  SubspaceBasis b;
  b.method = method;
  b.layer = layer;
  b.B = svd.matrixV().leftCols(k).transpose();
  canonical_signs(b.B);
  b.centering = mu.transpose();
  const double total = s.squaredNorm();
  for (int i = 0; i < k; ++i) b.explained_variance.push_back(s(i) * s(i) / total);
  return b;
}

SubspaceBasis extract_fars_layer(const Eigen::MatrixXd& X, const LabelTable& labels, int k, int layer) {
  if (static_cast<std::size_t>(X.rows()) != labels.size())
    throw ContractViolation(fmt::format("{} rows but {} labels", X.rows(), labels.size()));
  return centroid_pca(X, concept_labels(labels), k, kMaxConceptK, Method::concept_centroid_pca, layer);
}

std::vector<SubspaceBasis> extract_fars(const store::ActivationTensor& tensor, const LabelTable& labels, int k) {
  store::validate_pair(tensor, labels);
  const auto order = store::canonical_order(labels);
  const auto lab = labels.subset(order);
  std::vector<SubspaceBasis> out;
  for (int l = 0; l < tensor.n_layers; ++l) {
    out.push_back(extract_fars_layer(store::slice_rows(tensor, l, order), lab, k, l));
    out.back().model_id = tensor.model_id;
  }
  return out;
}

SubspaceBasis extract_form_control_layer(const Eigen::MatrixXd& X, const LabelTable& labels, int k, int layer) {
  if (k > kMaxFormK)
    throw InvalidArgument(fmt::format("k = {} exceeds {}: {} form centroids have only {} nontrivial components", k,
                                      kMaxFormK, kFormCount, kMaxFormK));
  if (static_cast<std::size_t>(X.rows()) != labels.size())
    throw ContractViolation(fmt::format("{} rows but {} labels", X.rows(), labels.size()));
  return centroid_pca(X, labels.form_indices(), k, kMaxFormK, Method::form_centroid_pca, layer);
}

std::vector<SubspaceBasis> extract_form_control(const store::ActivationTensor& tensor, const LabelTable& labels, int k) {
  store::validate_pair(tensor, labels);
  const auto order = store::canonical_order(labels);
  const auto lab = labels.subset(order);
  std::vector<SubspaceBasis> out;
  for (int l = 0; l < tensor.n_layers; ++l) {
    out.push_back(extract_form_control_layer(store::slice_rows(tensor, l, order), lab, k, l));
    out.back().model_id = tensor.model_id;
  }
  return out;
}

SubspaceBasis random_basis(int D, int k, std::uint64_t seed) {
  if (D < 1 || k < 0 || k > D) throw InvalidArgument(fmt::format("random_basis needs 0 <= k <= D, got k={} D={}", k, D));
  KeyedRng rng{seed, 0x72616e646f6d5f71ULL};
  Eigen::MatrixXd G(D, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < D; ++i) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(D, k);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (int j = 0; j < k; ++j)
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  SubspaceBasis b;
  b.method = Method::random_qr;
  b.B = Q.transpose();
  b.centering = Eigen::VectorXd::Zero(D);
  b.seed = seed;
  return b;
}

SubspaceBasis variance_pca_basis(const Eigen::MatrixXd& X, int k, int layer) {
  if (k < 1 || X.rows() <= k)
    throw InvalidArgument(fmt::format("variance_pca_basis needs N > k >= 1, got N={} k={}", X.rows(), k));
  if (k > X.cols()) throw InvalidArgument("variance_pca_basis: k exceeds D");
  const Eigen::RowVectorXd mu = X.colwise().mean();
  const Eigen::MatrixXd Xc = X.rowwise() - mu;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Xc, Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double tol = s.size() && s(0) > 0 ? s(0) * 1e-10 : 0.0;
  int rank = 0;
  while (rank < s.size() && s(rank) > tol) ++rank;
  if (rank < k) throw ContractViolation(fmt::format("variance_pca_basis: data rank {} < k = {}", rank, k));
  SubspaceBasis b;
  b.method = Method::variance_pca;
  b.layer = layer;
  b.B = svd.matrixV().leftCols(k).transpose();
  canonical_signs(b.B);
  b.centering = mu.transpose();
  const double total = s.squaredNorm();
  for (int i = 0; i < k; ++i) b.explained_variance.push_back(s(i) * s(i) / total);
  return b;
}

SubspaceBasis identity_basis(int D) {
  SubspaceBasis b;
  b.method = Method::identity;
  b.B = Eigen::MatrixXd::Identity(D, D);
  b.centering = Eigen::VectorXd::Zero(D);
  return b;
}

SubspaceBasis empty_basis(int D) {
  SubspaceBasis b;
  b.method = Method::empty;
  b.B = Eigen::MatrixXd(0, D);
  b.centering = Eigen::VectorXd::Zero(D);
  return b;
}

SubspaceBasis truncate(const SubspaceBasis& b, int k) {
  if (k < 0 || k > b.k()) throw InvalidArgument(fmt::format("truncate: k = {} outside 0..{}", k, b.k()));
  SubspaceBasis t = b;
  t.B = b.B.topRows(k);
  if (t.explained_variance.size() > static_cast<std::size_t>(k)) t.explained_variance.resize(static_cast<std::size_t>(k));
  return t;
}

Eigen::MatrixXd project(const Eigen::MatrixXd& X, const SubspaceBasis& basis) {
  if (X.cols() != basis.B.cols())
    throw ContractViolation(fmt::format("project: data D = {} but basis D = {}", X.cols(), basis.B.cols()));
  if (basis.centering.size() == 0) return X * basis.B.transpose();
  if (basis.centering.size() != X.cols()) throw ContractViolation("project: centering vector has wrong length");
  return (X.rowwise() - basis.centering.transpose()) * basis.B.transpose();
}

Eigen::VectorXd subspace_patch(const Eigen::VectorXd& h_src, const Eigen::VectorXd& h_tgt, const SubspaceBasis& basis) {
  if (h_src.size() != h_tgt.size() || h_src.size() != basis.B.cols())
    throw ContractViolation(fmt::format("subspace_patch: dimension mismatch (src {}, tgt {}, basis {})", h_src.size(),
                                        h_tgt.size(), basis.B.cols()));
  if (basis.B.rows() == 0) return h_tgt;
  return h_tgt + basis.B.transpose() * (basis.B * (h_src - h_tgt));
}

Eigen::VectorXd subspace_ablate(const Eigen::VectorXd& h, const SubspaceBasis& basis) {
  if (h.size() != basis.B.cols())
    throw ContractViolation(fmt::format("subspace_ablate: h has {} dims, basis {}", h.size(), basis.B.cols()));
  if (basis.B.rows() == 0) return h;
  return h - basis.B.transpose() * (basis.B * h);
}

double top10_overlap(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  for (auto list : {a, b}) {
    if (list.size() != 10) throw InvalidArgument(fmt::format("top-10 list has {} ids", list.size()));
    std::set<std::int64_t> s(list.begin(), list.end());
    if (s.size() != list.size()) throw InvalidArgument("top-10 list contains duplicate ids");
  }
  const std::set<std::int64_t> sa(a.begin(), a.end());
  int shared = 0;
  for (auto id : b) shared += sa.count(id) ? 1 : 0;
  return shared / 10.0;
}

namespace {

void check_distribution(std::span<const double> p, const char* name) {
  double s = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument(fmt::format("{} has a negative or non-finite entry", name));
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-6) throw InvalidArgument(fmt::format("{} sums to {:.9g}, expected 1", name, s));
}

}  // namespace

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ContractViolation(fmt::format("KL: length mismatch {} vs {}", p.size(), q.size()));
  check_distribution(p, "p");
  check_distribution(q, "q");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] <= 0.0) throw ContractViolation(fmt::format("KL support violation: q[{}] = 0 where p > 0", i));
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

std::vector<double> floor_and_renormalize(std::span<const double> p, double eps) {
  std::vector<double> out(p.begin(), p.end());
  double s = 0.0;
  for (auto& v : out) {
    if (!std::isfinite(v)) throw InvalidArgument("floor_and_renormalize: non-finite entry");
    v = std::max(v, eps);
    s += v;
  }
  for (auto& v : out) v /= s;
  return out;
}

double subspace_rsa(const Eigen::MatrixXd& projected, const geometry::Rdm& theo) {
  return geometry::rsa_rho(geometry::empirical_rdm(projected, geometry::Metric::euclidean), theo);
}

SubspaceMetrics subspace_metrics(const Eigen::MatrixXd& X, const LabelTable& labels, const SubspaceBasis& basis,
                                 double ridge_alpha, bool with_probe) {
  const auto P = project(X, basis);
  SubspaceMetrics m;
  m.rsa_concept = subspace_rsa(P, geometry::label_rdm(labels, geometry::RdmKind::conceptual));
  m.rsa_form = subspace_rsa(P, geometry::label_rdm(labels, geometry::RdmKind::form));
  if (with_probe) m.probe = geometry::cross_form_probe_matrix(P, labels, ridge_alpha).mean_offdiag;
  return m;
}

std::vector<SweepRow> dimensionality_sweep(const store::ActivationTensor& tensor, const LabelTable& labels,
                                           const std::vector<int>& ks, double ridge_alpha) {
  store::validate_pair(tensor, labels);
  for (int k : ks)
    if (k < 1 || k > kMaxConceptK) throw InvalidArgument(fmt::format("sweep k = {} outside 1..{}", k, kMaxConceptK));
  const auto order = store::canonical_order(labels);
  const auto lab = labels.subset(order);
  const auto concept_rdm = geometry::label_rdm(lab, geometry::RdmKind::conceptual);
  const int kmax = ks.empty() ? 1 : *std::max_element(ks.begin(), ks.end());

  std::vector<SubspaceBasis> full;
  std::vector<Eigen::MatrixXd> X;
  for (int l = 0; l < tensor.n_layers; ++l) {
    X.push_back(store::slice_rows(tensor, l, order));
    full.push_back(extract_fars_layer(X.back(), lab, kmax, l));
  }
  std::vector<SweepRow> rows;
  for (int k : ks) {
    SweepRow row;
    row.k = k;
    double best = -2.0;
    for (int l = 0; l < tensor.n_layers; ++l) {
      const double r = subspace_rsa(project(X[static_cast<std::size_t>(l)], truncate(full[static_cast<std::size_t>(l)], k)),
                                    concept_rdm);
      if (r > best) {
        best = r;
        row.best_layer = l;
      }
    }
    const auto b = truncate(full[static_cast<std::size_t>(row.best_layer)], k);
    const auto m = subspace_metrics(X[static_cast<std::size_t>(row.best_layer)], lab, b, ridge_alpha);
    row.rsa_concept = m.rsa_concept;
    row.rsa_form = m.rsa_form;
    row.probe = m.probe;
    for (double v : b.explained_variance) row.explained_variance += v;
    rows.push_back(row);
  }
  return rows;
}

int best_fars_layer(const store::ActivationTensor& tensor, const LabelTable& labels, int k) {
  return dimensionality_sweep(tensor, labels, {k}, 0.1).front().best_layer;
}

HoldoutResult leave_k_out(const store::ActivationTensor& tensor, const LabelTable& labels, int layer, int K,
                          int n_splits, std::uint64_t seed, int k, double ridge_alpha) {
  store::validate_pair(tensor, labels);
  const auto order = store::canonical_order(labels);
  const auto lab = labels.subset(order);
  const auto X = store::slice_rows(tensor, layer, order);
  std::vector<int> concepts;
  {
    std::set<int> s;
    for (const auto& r : lab.rows) s.insert(r.concept_id);
    concepts.assign(s.begin(), s.end());
  }
  const int n_concepts = static_cast<int>(concepts.size());
  if (K < 2 || K >= n_concepts) throw InvalidArgument(fmt::format("K = {} must satisfy 2 <= K < {}", K, n_concepts));
  if (n_splits < 1) throw InvalidArgument("n_splits must be positive");

  const auto all = extract_fars_layer(X, lab, std::min(k, n_concepts - 1), layer);
  HoldoutResult res;
  res.K = K;
  res.layer = layer;
  res.k = k;
  for (int s = 0; s < n_splits; ++s) {
    KeyedRng rng{seed, static_cast<std::uint64_t>(K), static_cast<std::uint64_t>(s)};
    auto perm = concepts;
    rng.shuffle(perm.begin(), perm.end());
    const std::set<int> held(perm.begin(), perm.begin() + K);
    std::vector<int> train_rows, held_rows;
    for (std::size_t i = 0; i < lab.size(); ++i)
      (held.count(lab.rows[i].concept_id) ? held_rows : train_rows).push_back(static_cast<int>(i));
    Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train_rows.size()), X.cols());
    Eigen::MatrixXd Xho(static_cast<Eigen::Index>(held_rows.size()), X.cols());
    for (std::size_t i = 0; i < train_rows.size(); ++i) Xtr.row(static_cast<Eigen::Index>(i)) = X.row(train_rows[i]);
    for (std::size_t i = 0; i < held_rows.size(); ++i) Xho.row(static_cast<Eigen::Index>(i)) = X.row(held_rows[i]);
    const auto lab_tr = lab.subset(train_rows);
    const auto lab_ho = lab.subset(held_rows);
    const int n_train = n_concepts - K;
    const auto basis = extract_fars_layer(Xtr, lab_tr, std::min(k, n_train - 1), layer);
    const auto rdm = geometry::label_rdm(lab_ho, geometry::RdmKind::conceptual);
    const auto P = project(Xho, basis);
    res.heldout_rsa.push_back(subspace_rsa(P, rdm));
    res.insample_rsa.push_back(subspace_rsa(project(Xho, all), rdm));
    res.probe.push_back(geometry::cross_form_probe_matrix(P, lab_ho, ridge_alpha).mean_offdiag);
  }
  res.heldout_mean = stats::mean(res.heldout_rsa);
  res.heldout_sd = stats::sample_sd(res.heldout_rsa);
  res.insample_mean = stats::mean(res.insample_rsa);
  res.insample_sd = stats::sample_sd(res.insample_rsa);
  res.probe_mean = stats::mean(res.probe);
  res.probe_sd = stats::sample_sd(res.probe);
  return res;
}

AlignmentResult cross_model_alignment(const std::vector<ModelProjection>& models) {
  if (models.empty()) throw InvalidArgument("cross_model_alignment: no models");
  for (const auto& m : models) {
    if (m.stimulus_digest != models.front().stimulus_digest)
      throw ContractViolation(fmt::format("stimulus ordering mismatch: {} has digest {} but {} has {}", m.model_id,
                                          m.stimulus_digest, models.front().model_id, models.front().stimulus_digest));
    if (m.projections.rows() != models.front().projections.rows())
      throw ContractViolation(fmt::format("{} has {} projected stimuli, expected {}", m.model_id, m.projections.rows(),
                                          models.front().projections.rows()));
  }
  const auto n = static_cast<Eigen::Index>(models.size());
  AlignmentResult r;
  r.cca = Eigen::MatrixXd::Identity(n, n);
  r.centroid_rsa = Eigen::MatrixXd::Identity(n, n);
  for (const auto& m : models) r.model_ids.push_back(m.model_id);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& a = models[static_cast<std::size_t>(i)];
      const auto& b = models[static_cast<std::size_t>(j)];
      const auto cca = geometry::canonical_correlations(a.projections, b.projections);
      if (!cca.note.empty()) r.notes.push_back(fmt::format("{} vs {}: {}", a.model_id, b.model_id, cca.note));
      r.cca(i, j) = r.cca(j, i) = cca.mean;
      r.centroid_rsa(i, j) = r.centroid_rsa(j, i) = geometry::centroid_rsa(a.centroids, b.centroids);
    }
  return r;
}

namespace {

struct BasisPaths {
  fs::path manifest, basis, center;
};

BasisPaths basis_paths(const fs::path& base) {
  const auto s = base.string();
  return {s + ".basis.json", s + ".basis.f32", s + ".center.f32"};
}

std::vector<float> to_f32(const Eigen::MatrixXd& m) {
  std::vector<float> v(static_cast<std::size_t>(m.size()));
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) v[i++] = static_cast<float>(m(r, c));
  return v;
}

}  // namespace

void write_basis(const SubspaceBasis& basis, const fs::path& base) {
  check_orthonormal(basis.B);
  const auto p = basis_paths(base);
  const int D = basis.dim();
  const auto B32 = to_f32(basis.B);
  Eigen::VectorXd c = basis.centering.size() ? basis.centering : Eigen::VectorXd::Zero(D);
  if (c.size() != D) throw ContractViolation("write_basis: centering vector has wrong length");
  const auto c32 = to_f32(c.transpose());

  Json j;
  j["model_id"] = basis.model_id;
  j["layer"] = basis.layer;
  j["method"] = std::string(to_string(basis.method));
  j["k"] = basis.k();
  j["hidden_dim"] = D;
  j["seed"] = basis.seed ? Json(*basis.seed) : Json(nullptr);
  j["centering_digest"] = sha256_digest(std::span<const float>(c32));
  j["explained_variance"] = basis.explained_variance;
  j["dtype"] = "f32";
  j["byte_order"] = "le";
  j["basis_file"] = p.basis.filename().string();
  j["centering_file"] = p.center.filename().string();
  store::atomic_write(p.basis, store::encode_f32(B32.data(), B32.size(), store::ByteOrder::little));
  store::atomic_write(p.center, store::encode_f32(c32.data(), c32.size(), store::ByteOrder::little));
  store::atomic_write(p.manifest, j.dump(2) + "\n");
}

SubspaceBasis read_basis(const fs::path& base, double tol) {
  const auto p = basis_paths(base);
  Json j;
  try {
    j = Json::parse(store::read_file(p.manifest));
  } catch (const Json::parse_error& e) {
    throw FormatError(fmt::format("malformed basis manifest {}: {}", p.manifest.string(), e.what()));
  }
  SubspaceBasis b;
  int k, D;
  std::string digest;
  try {
    b.model_id = j.value("model_id", std::string());
    b.layer = j.at("layer").get<int>();
    b.method = parse_method(j.at("method").get<std::string>());
    k = j.at("k").get<int>();
    D = j.at("hidden_dim").get<int>();
    if (!j.at("seed").is_null()) b.seed = j.at("seed").get<std::uint64_t>();
    digest = j.at("centering_digest").get<std::string>();
    b.explained_variance = j.value("explained_variance", std::vector<double>{});
    if (j.value("byte_order", std::string("le")) != "le" || j.value("dtype", std::string("f32")) != "f32")
      throw FormatError("basis files must be little-endian f32");
  } catch (const Json::exception& e) {
    throw FormatError(fmt::format("basis manifest {}: {}", p.manifest.string(), e.what()));
  }
  if (k < 0 || D < 1) throw FormatError(fmt::format("basis manifest has invalid shape k={} D={}", k, D));
  const auto bytes = store::read_file(p.basis);
  const auto expected = static_cast<std::size_t>(k) * static_cast<std::size_t>(D) * 4;
  if (bytes.size() != expected)
    throw FormatError(fmt::format("size mismatch for {}: expected {} bytes, actual {} bytes", p.basis.string(), expected,
                                  bytes.size()));
  std::vector<float> B32(static_cast<std::size_t>(k) * static_cast<std::size_t>(D));
  store::decode_f32(bytes, B32.data(), B32.size(), store::ByteOrder::little);
  const auto cbytes = store::read_file(p.center);
  if (cbytes.size() != static_cast<std::size_t>(D) * 4)
    throw FormatError(fmt::format("size mismatch for {}: expected {} bytes, actual {} bytes", p.center.string(),
                                  static_cast<std::size_t>(D) * 4, cbytes.size()));
  std::vector<float> c32(static_cast<std::size_t>(D));
  store::decode_f32(cbytes, c32.data(), c32.size(), store::ByteOrder::little);
  if (sha256_digest(std::span<const float>(c32)) != digest)
    throw FormatError(fmt::format("centering digest mismatch for {}", p.center.string()));
  b.B.resize(k, D);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < D; ++c) b.B(r, c) = B32[static_cast<std::size_t>(r) * static_cast<std::size_t>(D) + static_cast<std::size_t>(c)];
  b.centering.resize(D);
  for (int c = 0; c < D; ++c) b.centering(c) = c32[static_cast<std::size_t>(c)];
  check_orthonormal(b.B, tol);
  return b;
}

}  // namespace triform::fars
