#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "triform/types.hpp"

namespace triform::store {

// N x L x D float32 activations, row-major [n][l][d].
struct ActivationTensor {
  std::string model_id;
  int n_stimuli = 0;
  int n_layers = 0;
  int hidden_dim = 0;
  std::vector<float> data;

  ActivationTensor() = default;
  ActivationTensor(std::string model, int n, int l, int d)
      : model_id(std::move(model)), n_stimuli(n), n_layers(l), hidden_dim(d),
        data(static_cast<std::size_t>(n) * static_cast<std::size_t>(l) * static_cast<std::size_t>(d)) {}

  std::size_t index(int n, int l, int d) const {
    return (static_cast<std::size_t>(n) * static_cast<std::size_t>(n_layers) + static_cast<std::size_t>(l)) *
               static_cast<std::size_t>(hidden_dim) +
           static_cast<std::size_t>(d);
  }
  float& at(int n, int l, int d) { return data[index(n, l, d)]; }
  float at(int n, int l, int d) const { return data[index(n, l, d)]; }
};

// Throws ContractViolation on shape/size inconsistency and FormatError on
// non-finite values (count and first (n, l, d) in the message).
void validate_tensor(const ActivationTensor& tensor);
void validate_pair(const ActivationTensor& tensor, const LabelTable& labels);

struct Manifest {
  std::string model_id;
  int n_stimuli = 0;
  int n_layers = 0;
  int hidden_dim = 0;
  std::string dtype = "f32";
  std::string byte_order = "le";
  std::string stimulus_digest;
  std::string created_utc;
};

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);

struct FilePaths {
  std::filesystem::path manifest;  // <base>.manifest.json
  std::filesystem::path acts;      // <base>.acts
  std::filesystem::path labels;    // <base>.labels.jsonl
};
FilePaths paths_for(const std::filesystem::path& base);

enum class ByteOrder { little, big };

struct WriteOptions {
  // Digest of the stimulus file the activations were extracted from. Empty
  // means: use the digest of the label file written alongside.
  std::string stimulus_digest;
  // Empty means the current UTC time.
  std::string created_utc;
  ByteOrder byte_order = ByteOrder::little;
};

Manifest write_tensor(const ActivationTensor& tensor, const LabelTable& labels,
                      const std::filesystem::path& base, const WriteOptions& options = {});

struct ReadOptions {
  // If set, labels are taken from this stimulus file and its digest is
  // compared to the manifest.
  std::optional<std::filesystem::path> stimulus_file;
};

struct ReadResult {
  ActivationTensor tensor;
  LabelTable labels;
  Manifest manifest;
  bool provenance_mismatch = false;
  std::vector<std::string> warnings;
};

ReadResult read_tensor(const std::filesystem::path& base, const ReadOptions& options = {});

// Exact widening of one layer to double, N x D.
Eigen::MatrixXd slice_layer(const ActivationTensor& tensor, int layer);

// Layer slice restricted to the given rows, in that order.
Eigen::MatrixXd slice_rows(const ActivationTensor& tensor, int layer, const std::vector<int>& rows);

// Row order sorted by (concept_id, instance_idx, form, stimulus_id).
std::vector<int> canonical_order(const LabelTable& labels);
// Applies the same row permutation to tensor and labels.
void reorder(ActivationTensor& tensor, LabelTable& labels, const std::vector<int>& order);

// Byte-level helpers shared with the basis file format.
std::string encode_f32(const float* values, std::size_t count, ByteOrder order);
void decode_f32(const std::string& bytes, float* out, std::size_t count, ByteOrder order);

// Writes bytes to path via a temporary file and atomic rename.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

std::string utc_now_iso8601();

}  // namespace triform::store
