#include "triform/geometry.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "triform/error.hpp"
#include "triform/rng.hpp"

namespace triform::geometry {

std::string_view to_string(RdmKind k) {
  switch (k) {
    case RdmKind::empirical: return "empirical";
    case RdmKind::conceptual: return "concept";
    case RdmKind::form: return "form";
    case RdmKind::bias: return "bias";
    case RdmKind::language_type: return "language_type";
  }
  throw InvalidArgument("unknown RDM kind");
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::correlation: return "correlation";
    case Metric::euclidean: return "euclidean";
    case Metric::binary: return "binary";
  }
  throw InvalidArgument("unknown metric");
}

std::string_view to_string(CkaGroup g) {
  switch (g) {
    case CkaGroup::linguistic: return "linguistic";
    case CkaGroup::symbolic: return "symbolic";
    case CkaGroup::structural: return "structural";
  }
  throw InvalidArgument("unknown CKA group");
}

const Rdm& TheoreticalRdms::get(RdmKind k) const {
  switch (k) {
    case RdmKind::conceptual: return conceptual;
    case RdmKind::form: return form;
    case RdmKind::bias: return bias;
    case RdmKind::language_type: return language_type;
    default: throw InvalidArgument("not a theoretical RDM kind");
  }
}

Rdm empirical_rdm(const Eigen::MatrixXd& X, Metric metric) {
  const auto n = X.rows();
  if (n < 2) throw InvalidArgument("empirical_rdm needs at least 2 rows");
  if (!X.allFinite()) throw InvalidArgument("empirical_rdm: non-finite entries");
  Rdm r;
  r.kind = RdmKind::empirical;
  r.metric = metric;
  r.matrix = Eigen::MatrixXd::Zero(n, n);
  if (metric == Metric::correlation) {
    Eigen::MatrixXd Z = X.colwise() - X.rowwise().mean();
    std::vector<Eigen::Index> constant;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double norm = Z.row(i).norm();
      if (norm == 0.0)
        constant.push_back(i);
      else
        Z.row(i) /= norm;
    }
    if (!constant.empty())
      throw UndefinedResult(fmt::format("correlation distance undefined for constant row(s): {}",
                                        fmt::join(constant, ", ")));
    const Eigen::MatrixXd G = Z * Z.transpose();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) r.matrix(i, j) = r.matrix(j, i) = std::clamp(1.0 - G(i, j), 0.0, 2.0);
  } else if (metric == Metric::euclidean) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) r.matrix(i, j) = r.matrix(j, i) = (X.row(i) - X.row(j)).norm();
  } else {
    throw InvalidArgument("empirical_rdm: binary metric applies only to theoretical RDMs");
  }
  return r;
}

bool is_formal(Form f, const TheoryOptions& options) {
  switch (f) {
    case Form::en:
    case Form::zh:
    case Form::fr: return false;
    case Form::code:
    case Form::math: return true;
    case Form::structured: return options.structured_is_formal;
  }
  throw InvalidArgument("unknown form");
}

Rdm label_rdm(const LabelTable& labels, RdmKind kind, const TheoryOptions& options) {
  auto same = [&](const LabelRecord& a, const LabelRecord& b) {
    switch (kind) {
      case RdmKind::conceptual: return a.concept_id == b.concept_id;
      case RdmKind::form: return a.form == b.form;
      case RdmKind::language_type: return is_formal(a.form, options) == is_formal(b.form, options);
      default: throw InvalidArgument(fmt::format("label_rdm: {} is not a label-defined kind", to_string(kind)));
    }
  };
  const auto n = static_cast<Eigen::Index>(labels.size());
  Rdm r;
  r.kind = kind;
  r.metric = Metric::binary;
  r.matrix = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      r.matrix(i, j) = r.matrix(j, i) =
          same(labels.rows[static_cast<std::size_t>(i)], labels.rows[static_cast<std::size_t>(j)]) ? 0.0 : 1.0;
  return r;
}

TheoreticalRdms theoretical_rdms(const LabelTable& labels, const std::vector<bench::SurfaceFeatures>& features,
                                 const TheoryOptions& options) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (features.size() != labels.size())
    throw ContractViolation(
        fmt::format("missing features: {} feature rows for {} labels", features.size(), labels.size()));
  TheoreticalRdms t;
  t.conceptual = label_rdm(labels, RdmKind::conceptual, options);
  t.form = label_rdm(labels, RdmKind::form, options);
  t.language_type = label_rdm(labels, RdmKind::language_type, options);

  Eigen::MatrixXd F(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = features[static_cast<std::size_t>(i)];
    F(i, 0) = f.token_count;
    F(i, 1) = f.char_entropy;
    F(i, 2) = f.type_token_ratio;
  }
  for (int c = 0; c < 3; ++c) {
    const double mu = F.col(c).mean();
    const double sd = std::sqrt((F.col(c).array() - mu).square().mean());
    // A feature constant across stimuli carries no bias information.
    F.col(c) = sd > 0.0 ? Eigen::VectorXd((F.col(c).array() - mu) / sd) : Eigen::VectorXd::Zero(n);
  }
  t.bias.kind = RdmKind::bias;
  t.bias.metric = Metric::euclidean;
  t.bias.matrix = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) t.bias.matrix(i, j) = t.bias.matrix(j, i) = (F.row(i) - F.row(j)).norm();
  return t;
}

double rsa_rho(const Rdm& emp, const Rdm& theo) {
  if (emp.matrix.rows() != theo.matrix.rows())
    throw ContractViolation(fmt::format("RDM dimension mismatch: {} vs {}", emp.matrix.rows(), theo.matrix.rows()));
  const auto a = stats::upper_triangle(emp.matrix), b = stats::upper_triangle(theo.matrix);
  return stats::spearman(a, b);
}

namespace {

Eigen::MatrixXd rows_of_layer(const store::ActivationTensor& t, int layer, const std::vector<int>& order) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(order.size()), t.hidden_dim);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const float* row = &t.data[t.index(order[i], layer, 0)];
    for (int d = 0; d < t.hidden_dim; ++d) X(static_cast<Eigen::Index>(i), d) = static_cast<double>(row[d]);
  }
  return X;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  KeyedRng r{seed, a, b};
  return r();
}

}  // namespace

RsaSweep rsa_sweep(const store::ActivationTensor& tensor, const LabelTable& labels,
                   const std::vector<bench::SurfaceFeatures>& features, int n_perm, std::uint64_t seed, double alpha,
                   const TheoryOptions& theory, Metric metric) {
  store::validate_pair(tensor, labels);
  if (features.size() != labels.size())
    throw ContractViolation(fmt::format("{} feature rows for {} labels", features.size(), labels.size()));
  const auto order = store::canonical_order(labels);
  const auto lab = labels.subset(order);
  std::vector<bench::SurfaceFeatures> feat;
  feat.reserve(order.size());
  for (int i : order) feat.push_back(features[static_cast<std::size_t>(i)]);
  const auto theo = theoretical_rdms(lab, feat, theory);

  RsaSweep sweep;
  sweep.alpha = alpha;
  std::vector<double> pvals;
  for (int l = 0; l < tensor.n_layers; ++l) {
    const auto emp = empirical_rdm(rows_of_layer(tensor, l, order), metric);
    LayerRsa lr;
    lr.layer = l;
    for (std::size_t k = 0; k < kTheoryKinds.size(); ++k) {
      lr.result[k] = stats::permutation_rsa(emp.matrix, theo.get(kTheoryKinds[k]).matrix, n_perm,
                                            derive_seed(seed, static_cast<std::uint64_t>(l), k));
      pvals.push_back(lr.result[k].p_value);
    }
    sweep.layers.push_back(lr);
  }
  const auto reject = stats::bh_fdr(pvals, alpha);
  for (std::size_t l = 0; l < sweep.layers.size(); ++l)
    for (std::size_t k = 0; k < 4; ++k) sweep.layers[l].significant[k] = reject[l * 4 + k];
  for (std::size_t k = 0; k < 4; ++k) {
    int best = 0;
    for (std::size_t l = 1; l < sweep.layers.size(); ++l)
      if (sweep.layers[l].result[k].observed_rho > sweep.layers[static_cast<std::size_t>(best)].result[k].observed_rho)
        best = static_cast<int>(l);
    sweep.peak_layer[k] = best;
    sweep.peak_rho[k] = sweep.layers[static_cast<std::size_t>(best)].result[k].observed_rho;
  }
  return sweep;
}

double linear_cka(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (X.rows() != Y.rows()) throw ContractViolation(fmt::format("CKA row mismatch: {} vs {}", X.rows(), Y.rows()));
  if (X.rows() < 3) throw InvalidArgument("CKA needs at least 3 rows");
  const Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
  const Eigen::MatrixXd Yc = Y.rowwise() - Y.colwise().mean();
  const Eigen::MatrixXd K = Xc * Xc.transpose();
  const Eigen::MatrixXd M = Yc * Yc.transpose();
  const double nk = K.norm(), nm = M.norm();
  if (nk == 0.0 || nm == 0.0) throw UndefinedResult("CKA undefined: a centered input is all zero");
  return std::clamp(K.cwiseProduct(M).sum() / (nk * nm), 0.0, 1.0);
}

std::array<std::pair<Form, Form>, 3> cka_pairs(CkaGroup g) {
  switch (g) {
    case CkaGroup::linguistic: return {{{Form::en, Form::zh}, {Form::en, Form::fr}, {Form::zh, Form::fr}}};
    case CkaGroup::symbolic: return {{{Form::en, Form::code}, {Form::en, Form::math}, {Form::code, Form::math}}};
    case CkaGroup::structural:
      return {{{Form::en, Form::structured}, {Form::code, Form::structured}, {Form::math, Form::structured}}};
  }
  throw InvalidArgument("unknown CKA group");
}

std::vector<std::vector<int>> aligned_form_rows(const LabelTable& labels) {
  std::vector<std::vector<int>> rows;
  std::vector<std::pair<int, int>> ref;
  for (Form f : kAllForms) {
    auto r = labels.rows_of_form(f);
    if (r.empty()) throw ContractViolation(fmt::format("form {} has no rows", to_string(f)));
    std::vector<std::pair<int, int>> keys;
    for (int i : r) keys.emplace_back(labels.rows[static_cast<std::size_t>(i)].concept_id,
                                      labels.rows[static_cast<std::size_t>(i)].instance_idx);
    if (rows.empty())
      ref = keys;
    else if (keys != ref)
      throw ContractViolation(fmt::format("misaligned rows: form {} does not have the same (concept, instance) keys as {}",
                                          to_string(f), to_string(Form::en)));
    rows.push_back(std::move(r));
  }
  return rows;
}

CkaByDimension dimensionwise_cka(const store::ActivationTensor& tensor, const LabelTable& labels) {
  store::validate_pair(tensor, labels);
  const auto order = store::canonical_order(labels);
  const auto lab = labels.subset(order);
  const auto rows = aligned_form_rows(lab);
  CkaByDimension out;
  out.values.resize(tensor.n_layers, kCkaGroupCount);
  for (int l = 0; l < tensor.n_layers; ++l) {
    std::array<Eigen::MatrixXd, kFormCount> sub;
    for (int f = 0; f < kFormCount; ++f) {
      std::vector<int> idx;
      for (int i : rows[static_cast<std::size_t>(f)]) idx.push_back(order[static_cast<std::size_t>(i)]);
      sub[static_cast<std::size_t>(f)] = rows_of_layer(tensor, l, idx);
    }
    for (int g = 0; g < kCkaGroupCount; ++g) {
      double s = 0.0;
      for (const auto& [a, b] : cka_pairs(static_cast<CkaGroup>(g)))
        s += linear_cka(sub[static_cast<std::size_t>(form_index(a))], sub[static_cast<std::size_t>(form_index(b))]);
      out.values(l, g) = s / 3.0;
    }
  }
  for (int g = 0; g < kCkaGroupCount; ++g) {
    Eigen::Index best;
    out.peak[static_cast<std::size_t>(g)] = out.values.col(g).maxCoeff(&best);
    out.peak_layer[static_cast<std::size_t>(g)] = static_cast<int>(best);
  }
  out.spread = *std::max_element(out.peak.begin(), out.peak.end()) - *std::min_element(out.peak.begin(), out.peak.end());
  return out;
}

Ridge fit_ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double alpha) {
  if (X.rows() != Y.rows()) throw ContractViolation("ridge: X and Y row mismatch");
  if (!(alpha > 0.0)) throw InvalidArgument("ridge alpha must be positive");
  const Eigen::RowVectorXd mx = X.colwise().mean(), my = Y.colwise().mean();
  const Eigen::MatrixXd Xc = X.rowwise() - mx;
  const Eigen::MatrixXd Yc = Y.rowwise() - my;
  Ridge r;
  if (X.cols() > X.rows()) {
    // Dual form: W = Xc' (Xc Xc' + a I)^-1 Yc.
    Eigen::MatrixXd G = Xc * Xc.transpose();
    G.diagonal().array() += alpha;
    r.W = Xc.transpose() * G.ldlt().solve(Yc);
  } else {
    Eigen::MatrixXd G = Xc.transpose() * Xc;
    G.diagonal().array() += alpha;
    r.W = G.ldlt().solve(Xc.transpose() * Yc);
  }
  r.intercept = my - mx * r.W;
  return r;
}

namespace {

struct Standardizer {
  std::vector<Eigen::Index> keep;
  Eigen::RowVectorXd mu, sd;
  int dropped = 0;

  explicit Standardizer(const Eigen::MatrixXd& X) {
    const Eigen::RowVectorXd m = X.colwise().mean();
    const Eigen::RowVectorXd s = ((X.rowwise() - m).array().square().colwise().mean()).sqrt();
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (s(j) > 1e-12 * std::max(1.0, std::abs(m(j))))
        keep.push_back(j);
      else
        ++dropped;
    }
    mu.resize(static_cast<Eigen::Index>(keep.size()));
    sd.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      mu(static_cast<Eigen::Index>(k)) = m(keep[k]);
      sd(static_cast<Eigen::Index>(k)) = s(keep[k]);
    }
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd Z(X.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) Z.col(static_cast<Eigen::Index>(k)) = X.col(keep[k]);
    return (Z.rowwise() - mu).array().rowwise() / sd.array();
  }
};

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
  return out;
}

// Fits on train rows, returns accuracy on test rows. Returns the number of
// dropped features through *dropped.
double probe_accuracy(const Eigen::MatrixXd& X, const std::vector<int>& cls, int n_classes,
                      const std::vector<int>& train, const std::vector<int>& test, double alpha, int* dropped) {
  const Eigen::MatrixXd Xtr = take_rows(X, train);
  Standardizer st(Xtr);
  *dropped = st.dropped;
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(train.size()), n_classes);
  for (std::size_t i = 0; i < train.size(); ++i) Y(static_cast<Eigen::Index>(i), cls[static_cast<std::size_t>(train[i])]) = 1.0;
  int correct = 0;
  if (st.keep.empty()) {
    // No usable feature: predict the majority training class.
    Eigen::Index best;
    Y.colwise().sum().maxCoeff(&best);
    for (int i : test) correct += cls[static_cast<std::size_t>(i)] == best;
    return static_cast<double>(correct) / static_cast<double>(test.size());
  }
  const auto ridge = fit_ridge(st.apply(Xtr), Y, alpha);
  const Eigen::MatrixXd scores = (st.apply(take_rows(X, test)) * ridge.W).rowwise() + ridge.intercept;
  for (std::size_t i = 0; i < test.size(); ++i) {
    Eigen::Index best;
    scores.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    correct += cls[static_cast<std::size_t>(test[i])] == best;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace

ProbeGrid cross_form_probe_matrix(const Eigen::MatrixXd& X, const LabelTable& labels, double alpha,
                                  std::vector<std::string>* warnings) {
  if (static_cast<std::size_t>(X.rows()) != labels.size())
    throw ContractViolation(fmt::format("probe: {} rows but {} labels", X.rows(), labels.size()));
  std::map<int, int> class_of;
  for (const auto& r : labels.rows) class_of.emplace(r.concept_id, 0);
  int n_classes = 0;
  for (auto& [c, k] : class_of) k = n_classes++;
  std::vector<int> cls;
  cls.reserve(labels.size());
  for (const auto& r : labels.rows) cls.push_back(class_of[r.concept_id]);

  std::array<std::vector<int>, kFormCount> by_form;
  for (std::size_t i = 0; i < labels.size(); ++i) by_form[static_cast<std::size_t>(form_index(labels.rows[i].form))].push_back(static_cast<int>(i));
  for (Form f : kAllForms)
    if (by_form[static_cast<std::size_t>(form_index(f))].empty())
      throw ContractViolation(fmt::format("probe: form {} has no rows", to_string(f)));

  ProbeGrid g;
  g.accuracy = Eigen::MatrixXd::Zero(kFormCount, kFormCount);
  int dropped_total = 0;
  for (int s = 0; s < kFormCount; ++s) {
    const auto& src = by_form[static_cast<std::size_t>(s)];
    for (int t = 0; t < kFormCount; ++t) {
      int dropped = 0;
      if (s != t) {
        g.accuracy(s, t) = probe_accuracy(X, cls, n_classes, src, by_form[static_cast<std::size_t>(t)], alpha, &dropped);
        dropped_total += dropped;
        continue;
      }
      // Within-form: hold out one instance index at a time.
      std::set<int> instances;
      for (int i : src) instances.insert(labels.rows[static_cast<std::size_t>(i)].instance_idx);
      double acc = 0.0;
      int folds = 0;
      for (int held : instances) {
        std::vector<int> train, test;
        for (int i : src) (labels.rows[static_cast<std::size_t>(i)].instance_idx == held ? test : train).push_back(i);
        if (train.empty() || test.empty()) continue;
        acc += probe_accuracy(X, cls, n_classes, train, test, alpha, &dropped);
        ++folds;
      }
      g.accuracy(s, s) = folds ? acc / folds : std::nan("");
    }
  }
  double sum = 0.0;
  for (int s = 0; s < kFormCount; ++s)
    for (int t = 0; t < kFormCount; ++t)
      if (s != t) sum += g.accuracy(s, t);
  g.mean_offdiag = sum / (kFormCount * (kFormCount - 1));
  for (int s = 0; s < kFormCount; ++s)
    for (int t = s + 1; t < kFormCount; ++t) g.unordered.push_back(0.5 * (g.accuracy(s, t) + g.accuracy(t, s)));
  if (warnings && dropped_total > 0)
    warnings->push_back(fmt::format("probe: dropped zero-variance feature columns {} times across source fits", dropped_total));
  return g;
}

ProbeResult cross_form_probe(const store::ActivationTensor& tensor, const LabelTable& labels, const ProbeOptions& options) {
  store::validate_pair(tensor, labels);
  const auto order = store::canonical_order(labels);
  const auto lab = labels.subset(order);
  ProbeResult res;
  for (int l = 0; l < tensor.n_layers; ++l) {
    std::vector<std::string> w;
    res.layers.push_back(cross_form_probe_matrix(rows_of_layer(tensor, l, order), lab, options.alpha, &w));
    for (auto& s : w) res.warnings.push_back(fmt::format("layer {}: {}", l, s));
  }
  return res;
}

namespace {

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& A, int* rank) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double tol = s.size() ? s(0) * 1e-10 : 0.0;
  int r = 0;
  while (r < s.size() && s(r) > tol) ++r;
  *rank = r;
  return svd.matrixU().leftCols(r);
}

}  // namespace

CcaResult canonical_correlations(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q) {
  if (P.rows() != Q.rows()) throw ContractViolation(fmt::format("CCA row mismatch: {} vs {}", P.rows(), Q.rows()));
  if (P.cols() > P.rows() || Q.cols() > Q.rows()) throw InvalidArgument("CCA requires k <= N");
  CcaResult res;
  const Eigen::MatrixXd Pc = P.rowwise() - P.colwise().mean();
  const Eigen::MatrixXd Qc = Q.rowwise() - Q.colwise().mean();
  const auto Up = orthonormal_columns(Pc, &res.rank_p);
  const auto Uq = orthonormal_columns(Qc, &res.rank_q);
  const int r = std::min(res.rank_p, res.rank_q);
  if (r == 0) throw UndefinedResult("CCA undefined: a centered input has rank 0");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Up.transpose() * Uq);
  const auto& s = svd.singularValues();
  for (int i = 0; i < r; ++i) res.correlations.push_back(std::clamp(s(i), 0.0, 1.0));
  res.mean = stats::mean(res.correlations);
  const auto k = std::min(P.cols(), Q.cols());
  if (r < k)
    res.note = fmt::format("computed on effective rank {} (requested {}; ranks {} and {})", r, k, res.rank_p, res.rank_q);
  return res;
}

double cca_mean(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q) { return canonical_correlations(P, Q).mean; }

double centroid_rsa(const Eigen::MatrixXd& C1, const Eigen::MatrixXd& C2, Metric metric) {
  if (C1.rows() != C2.rows())
    throw ContractViolation(fmt::format("centroid row mismatch: {} vs {}", C1.rows(), C2.rows()));
  return rsa_rho(empirical_rdm(C1, metric), empirical_rdm(C2, metric));
}

Eigen::MatrixXd centroids(const Eigen::MatrixXd& X, const std::vector<int>& group_labels, std::vector<int>* group_values) {
  if (static_cast<std::size_t>(X.rows()) != group_labels.size())
    throw ContractViolation(fmt::format("{} rows but {} group labels", X.rows(), group_labels.size()));
  std::map<int, std::pair<Eigen::RowVectorXd, int>> acc;
  for (std::size_t i = 0; i < group_labels.size(); ++i) {
    auto it = acc.find(group_labels[i]);
    if (it == acc.end()) it = acc.emplace(group_labels[i], std::make_pair(Eigen::RowVectorXd::Zero(X.cols()), 0)).first;
    it->second.first += X.row(static_cast<Eigen::Index>(i));
    it->second.second += 1;
  }
  Eigen::MatrixXd C(static_cast<Eigen::Index>(acc.size()), X.cols());
  if (group_values) group_values->clear();
  Eigen::Index r = 0;
  for (const auto& [g, sc] : acc) {
    C.row(r++) = sc.first / sc.second;
    if (group_values) group_values->push_back(g);
  }
  return C;
}

}  // namespace triform::geometry
