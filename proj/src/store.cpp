#include "triform/store.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "triform/bench.hpp"
#include "triform/digest.hpp"
#include "triform/error.hpp"

namespace triform::store {
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string labels_jsonl(const LabelTable& labels) {
  bench::StimulusSet set;
  set.benchmark_version = std::string(bench::kBenchmarkVersion);
  for (const auto& r : labels.rows)
    set.stimuli.push_back({r.stimulus_id, r.concept_id, r.instance_idx, r.form, {}, r.domain});
  return bench::to_jsonl(set);
}

}  // namespace

void validate_tensor(const ActivationTensor& t) {
  if (t.n_stimuli <= 0 || t.n_layers <= 0 || t.hidden_dim <= 0)
    throw ContractViolation(fmt::format("tensor dims must be positive, got N={} L={} D={}", t.n_stimuli,
                                        t.n_layers, t.hidden_dim));
  const auto expected = static_cast<std::size_t>(t.n_stimuli) * static_cast<std::size_t>(t.n_layers) *
                        static_cast<std::size_t>(t.hidden_dim);
  if (t.data.size() != expected)
    throw ContractViolation(fmt::format("tensor holds {} values, expected N*L*D = {}", t.data.size(), expected));
  std::size_t bad = 0, first = 0;
  for (std::size_t i = 0; i < t.data.size(); ++i)
    if (!std::isfinite(t.data[i])) {
      if (bad++ == 0) first = i;
    }
  if (bad) {
    const auto D = static_cast<std::size_t>(t.hidden_dim), L = static_cast<std::size_t>(t.n_layers);
    throw FormatError(fmt::format("tensor contains {} non-finite value(s); first at (n={}, l={}, d={})", bad,
                                  first / (L * D), (first / D) % L, first % D));
  }
}

void validate_pair(const ActivationTensor& tensor, const LabelTable& labels) {
  validate_tensor(tensor);
  if (labels.size() != static_cast<std::size_t>(tensor.n_stimuli))
    throw ContractViolation(
        fmt::format("label table has {} rows but tensor has N={}", labels.size(), tensor.n_stimuli));
}

std::string manifest_to_json(const Manifest& m) {
  Json j;
  j["model_id"] = m.model_id;
  j["n_stimuli"] = m.n_stimuli;
  j["n_layers"] = m.n_layers;
  j["hidden_dim"] = m.hidden_dim;
  j["dtype"] = m.dtype;
  j["byte_order"] = m.byte_order;
  j["stimulus_digest"] = m.stimulus_digest;
  j["created_utc"] = m.created_utc;
  return j.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
  try {
    const auto j = Json::parse(text);
    Manifest m;
    m.model_id = j.at("model_id").get<std::string>();
    m.n_stimuli = j.at("n_stimuli").get<int>();
    m.n_layers = j.at("n_layers").get<int>();
    m.hidden_dim = j.at("hidden_dim").get<int>();
    m.dtype = j.at("dtype").get<std::string>();
    m.byte_order = j.at("byte_order").get<std::string>();
    m.stimulus_digest = j.value("stimulus_digest", std::string());
    m.created_utc = j.value("created_utc", std::string());
    return m;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

FilePaths paths_for(const fs::path& base) {
  const auto s = base.string();
  return {s + ".manifest.json", s + ".acts", s + ".labels.jsonl"};
}

std::string encode_f32(const float* values, std::size_t count, ByteOrder order) {
  std::string out(count * 4, '\0');
  for (std::size_t i = 0; i < count; ++i) {
    const auto u = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) {
      const int shift = order == ByteOrder::little ? 8 * b : 8 * (3 - b);
      out[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>((u >> shift) & 0xFFu);
    }
  }
  return out;
}

void decode_f32(const std::string& bytes, float* out, std::size_t count, ByteOrder order) {
  if (bytes.size() != count * 4)
    throw FormatError(fmt::format("expected {} bytes, got {}", count * 4, bytes.size()));
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) {
      const auto byte = static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + static_cast<std::size_t>(b)]));
      const int shift = order == ByteOrder::little ? 8 * b : 8 * (3 - b);
      u |= byte << shift;
    }
    out[i] = std::bit_cast<float>(u);
  }
}

void atomic_write(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(fmt::format("cannot create directory {}: {}", path.parent_path().string(), ec.message()));
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot rename {} to {}: {}", tmp.string(), path.string(), ec.message()));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Manifest write_tensor(const ActivationTensor& tensor, const LabelTable& labels, const fs::path& base,
                      const WriteOptions& options) {
  validate_pair(tensor, labels);
  const auto paths = paths_for(base);
  const auto label_bytes = labels_jsonl(labels);

  Manifest m;
  m.model_id = tensor.model_id;
  m.n_stimuli = tensor.n_stimuli;
  m.n_layers = tensor.n_layers;
  m.hidden_dim = tensor.hidden_dim;
  m.byte_order = options.byte_order == ByteOrder::little ? "le" : "be";
  m.stimulus_digest = options.stimulus_digest.empty() ? sha256_digest(label_bytes) : options.stimulus_digest;
  m.created_utc = options.created_utc.empty() ? utc_now_iso8601() : options.created_utc;

  // Manifest goes last so a reader never sees a manifest without its data.
  atomic_write(paths.acts, encode_f32(tensor.data.data(), tensor.data.size(), options.byte_order));
  atomic_write(paths.labels, label_bytes);
  atomic_write(paths.manifest, manifest_to_json(m));
  return m;
}

ReadResult read_tensor(const fs::path& base, const ReadOptions& options) {
  const auto paths = paths_for(base);
  ReadResult r;
  r.manifest = manifest_from_json(read_file(paths.manifest));
  const auto& m = r.manifest;
  if (m.dtype != "f32") throw FormatError("unsupported dtype '" + m.dtype + "', expected f32");
  ByteOrder order;
  if (m.byte_order == "le")
    order = ByteOrder::little;
  else if (m.byte_order == "be")
    order = ByteOrder::big;
  else
    throw FormatError("unknown byte_order '" + m.byte_order + "'");
  if (m.n_stimuli <= 0 || m.n_layers <= 0 || m.hidden_dim <= 0)
    throw FormatError(fmt::format("manifest dims must be positive, got N={} L={} D={}", m.n_stimuli, m.n_layers,
                                  m.hidden_dim));

  std::error_code ec;
  const auto actual = fs::file_size(paths.acts, ec);
  if (ec) throw IoError("cannot stat " + paths.acts.string() + ": " + ec.message());
  const auto count = static_cast<std::size_t>(m.n_stimuli) * static_cast<std::size_t>(m.n_layers) *
                     static_cast<std::size_t>(m.hidden_dim);
  const auto expected = count * 4;
  if (actual != expected)
    throw FormatError(fmt::format("size mismatch for {}: expected {} bytes (N={} L={} D={} x 4), actual {} bytes",
                                  paths.acts.string(), expected, m.n_stimuli, m.n_layers, m.hidden_dim, actual));

  r.tensor = ActivationTensor(m.model_id, m.n_stimuli, m.n_layers, m.hidden_dim);
  decode_f32(read_file(paths.acts), r.tensor.data.data(), count, order);

  if (options.stimulus_file) {
    const auto bytes = read_file(*options.stimulus_file);
    std::istringstream in(bytes);
    r.labels = bench::read_label_table(in);
    if (sha256_digest(bytes) != m.stimulus_digest) {
      r.provenance_mismatch = true;
      r.warnings.push_back(fmt::format("provenance mismatch: manifest stimulus_digest {} differs from {} ({})",
                                       m.stimulus_digest, sha256_digest(bytes), options.stimulus_file->string()));
    }
  } else {
    const auto bytes = read_file(paths.labels);
    std::istringstream in(bytes);
    r.labels = bench::read_label_table(in);
    if (sha256_digest(bytes) != m.stimulus_digest) {
      // The label file is only a copy; a differing digest is expected when the
      // manifest references the original stimulus file.
      r.warnings.push_back("manifest stimulus_digest refers to a file other than the bundled label table; "
                           "pass the stimulus file to verify provenance");
    }
  }
  validate_pair(r.tensor, r.labels);
  return r;
}

Eigen::MatrixXd slice_layer(const ActivationTensor& t, int layer) {
  if (layer < 0 || layer >= t.n_layers)
    throw InvalidArgument(fmt::format("layer {} out of range [0, {})", layer, t.n_layers));
  Eigen::MatrixXd X(t.n_stimuli, t.hidden_dim);
  for (int n = 0; n < t.n_stimuli; ++n) {
    const float* row = &t.data[t.index(n, layer, 0)];
    for (int d = 0; d < t.hidden_dim; ++d) X(n, d) = static_cast<double>(row[d]);
  }
  return X;
}

Eigen::MatrixXd slice_rows(const ActivationTensor& t, int layer, const std::vector<int>& rows) {
  if (layer < 0 || layer >= t.n_layers)
    throw InvalidArgument(fmt::format("layer {} out of range [0, {})", layer, t.n_layers));
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), t.hidden_dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= t.n_stimuli) throw InvalidArgument(fmt::format("row {} out of range", rows[i]));
    const float* row = &t.data[t.index(rows[i], layer, 0)];
    for (int d = 0; d < t.hidden_dim; ++d) X(static_cast<Eigen::Index>(i), d) = static_cast<double>(row[d]);
  }
  return X;
}

std::vector<int> canonical_order(const LabelTable& labels) {
  std::vector<int> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& x = labels.rows[static_cast<std::size_t>(a)];
    const auto& y = labels.rows[static_cast<std::size_t>(b)];
    return std::tie(x.concept_id, x.instance_idx, x.form, x.stimulus_id) <
           std::tie(y.concept_id, y.instance_idx, y.form, y.stimulus_id);
  });
  return order;
}

void reorder(ActivationTensor& tensor, LabelTable& labels, const std::vector<int>& order) {
  validate_pair(tensor, labels);
  if (order.size() != labels.size()) throw ContractViolation("reorder: permutation length mismatch");
  ActivationTensor t(tensor.model_id, tensor.n_stimuli, tensor.n_layers, tensor.hidden_dim);
  const std::size_t row = static_cast<std::size_t>(tensor.n_layers) * static_cast<std::size_t>(tensor.hidden_dim);
  for (std::size_t i = 0; i < order.size(); ++i)
    std::copy_n(tensor.data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(order[i]) * row),
                row, t.data.begin() + static_cast<std::ptrdiff_t>(i * row));
  tensor = std::move(t);
  labels = labels.subset(order);
}

}  // namespace triform::store
