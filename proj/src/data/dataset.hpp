#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace eie {

// One training example: a pair of frozen-extractor feature grids, per-image
// guidance probability vectors, and the reference follow-up summary.
struct DatasetRecord {
  std::string id;
  std::string features_b_ref;  // sidecar path relative to the jsonl, or "" when inline
  std::string features_f_ref;
  Tensor features_b;  // [image_tokens x feature_dim]
  Tensor features_f;
  std::vector<float> p_b;
  std::vector<float> p_f;
  std::string summary;
};

struct DatasetHeader {
  int version = 1;
  int guidance_dim = 5;
  int feature_tokens = 49;
  int feature_dim = 1024;
};

struct Dataset {
  DatasetHeader header;
  std::vector<DatasetRecord> records;

  size_t size() const { return records.size(); }
};

// dataset.jsonl with a header line and one record per line; feature grids
// live in .eiet sidecars referenced by relative path (tiny fixtures may
// inline them as nested arrays). Loading validates every record invariant
// and reports the offending line number.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

std::vector<std::string> dataset_summaries(const Dataset& ds);

}  // namespace eie
