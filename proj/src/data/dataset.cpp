#include "data/dataset.hpp"

#include <fstream>

#include "core/eiet.hpp"
#include "core/error.hpp"
#include "json.hpp"

namespace eie {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

DataError line_error(const fs::path& file, size_t line, const std::string& what) {
  return DataError(file.string() + ":" + std::to_string(line) + ": " + what);
}

Tensor features_from_json(const json& cell, const fs::path& base, const DatasetHeader& h,
                          const fs::path& file, size_t line, std::string* ref_out) {
  if (cell.is_string()) {
    *ref_out = cell.get<std::string>();
    const fs::path sidecar = base / *ref_out;
    if (!fs::exists(sidecar)) {
      throw line_error(file, line, "missing feature sidecar: " + sidecar.string());
    }
    Tensor t = load_eiet(sidecar);
    if (t.rank() != 2 || t.dim(0) != h.feature_tokens || t.dim(1) != h.feature_dim) {
      throw line_error(file, line,
                       "feature shape " + shape_str(t.shape()) + " does not match header " +
                           std::to_string(h.feature_tokens) + "x" + std::to_string(h.feature_dim));
    }
    return t;
  }
  if (cell.is_array()) {
    // inline escape hatch for tiny fixtures
    std::vector<float> data;
    data.reserve(static_cast<size_t>(h.feature_tokens) * h.feature_dim);
    if (static_cast<int>(cell.size()) != h.feature_tokens) {
      throw line_error(file, line, "inline features: expected " + std::to_string(h.feature_tokens) +
                                       " rows, got " + std::to_string(cell.size()));
    }
    for (const auto& row : cell) {
      if (!row.is_array() || static_cast<int>(row.size()) != h.feature_dim) {
        throw line_error(file, line, "inline features: bad row width");
      }
      for (const auto& v : row) data.push_back(v.get<float>());
    }
    ref_out->clear();
    return Tensor::from_data({h.feature_tokens, h.feature_dim}, std::move(data));
  }
  throw line_error(file, line, "features must be a sidecar path or an inline array");
}

std::vector<float> probabilities_from_json(const json& cell, int dim, const fs::path& file,
                                           size_t line, const char* name) {
  if (!cell.is_array() || static_cast<int>(cell.size()) != dim) {
    throw line_error(file, line,
                     std::string(name) + " must be an array of length " + std::to_string(dim));
  }
  std::vector<float> p;
  p.reserve(cell.size());
  for (const auto& v : cell) {
    const float x = v.get<float>();
    if (!(x >= 0.0f && x <= 1.0f)) {
      throw line_error(file, line, std::string(name) + " entry " + std::to_string(x) +
                                       " outside [0, 1]");
    }
    p.push_back(x);
  }
  return p;
}

}  // namespace

Dataset load_dataset(const fs::path& path) {
  fs::path file = path;
  if (fs::is_directory(file)) file = file / "dataset.jsonl";
  std::ifstream f(file);
  if (!f) throw IoError("cannot open dataset: " + file.string());
  const fs::path base = file.parent_path();

  Dataset ds;
  std::string line;
  size_t line_no = 0;
  if (!std::getline(f, line)) throw DataError("empty dataset file: " + file.string());
  ++line_no;
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw line_error(file, line_no, std::string("malformed header json: ") + e.what());
  }
  if (header.value("schema", "") != "eie-dataset") {
    throw line_error(file, line_no, "missing eie-dataset schema header");
  }
  ds.header.version = header.value("version", 1);
  if (ds.header.version != 1) {
    throw line_error(file, line_no, "unsupported dataset version " + std::to_string(ds.header.version));
  }
  if (!header.contains("guidance_dim")) throw line_error(file, line_no, "header lacks guidance_dim");
  ds.header.guidance_dim = header.at("guidance_dim").get<int>();
  ds.header.feature_tokens = header.value("feature_tokens", 49);
  ds.header.feature_dim = header.value("feature_dim", 1024);

  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw line_error(file, line_no, std::string("malformed json: ") + e.what());
    }
    DatasetRecord rec;
    try {
      rec.id = j.at("id").get<std::string>();
      rec.summary = j.at("summary").get<std::string>();
    } catch (const json::exception& e) {
      throw line_error(file, line_no, std::string("missing field: ") + e.what());
    }
    if (rec.summary.empty()) throw line_error(file, line_no, "empty summary");
    rec.features_b = features_from_json(j.at("features_b"), base, ds.header, file, line_no,
                                        &rec.features_b_ref);
    rec.features_f = features_from_json(j.at("features_f"), base, ds.header, file, line_no,
                                        &rec.features_f_ref);
    rec.p_b = probabilities_from_json(j.at("p_b"), ds.header.guidance_dim, file, line_no, "p_b");
    rec.p_f = probabilities_from_json(j.at("p_f"), ds.header.guidance_dim, file, line_no, "p_f");
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "features", ec);
  const fs::path file = dir / "dataset.jsonl";
  std::ofstream f(file, std::ios::trunc);
  if (!f) throw IoError("cannot write dataset: " + file.string());
  json header = {{"schema", "eie-dataset"},
                 {"version", ds.header.version},
                 {"guidance_dim", ds.header.guidance_dim},
                 {"feature_tokens", ds.header.feature_tokens},
                 {"feature_dim", ds.header.feature_dim}};
  f << header.dump() << "\n";
  for (const auto& rec : ds.records) {
    json j;
    j["id"] = rec.id;
    std::string b_ref = rec.features_b_ref.empty() ? "features/" + rec.id + "_b.eiet" : rec.features_b_ref;
    std::string f_ref = rec.features_f_ref.empty() ? "features/" + rec.id + "_f.eiet" : rec.features_f_ref;
    save_eiet(dir / b_ref, rec.features_b);
    save_eiet(dir / f_ref, rec.features_f);
    j["features_b"] = b_ref;
    j["features_f"] = f_ref;
    j["p_b"] = rec.p_b;
    j["p_f"] = rec.p_f;
    j["summary"] = rec.summary;
    f << j.dump() << "\n";
  }
  if (!f) throw IoError("short write: " + file.string());
}

std::vector<std::string> dataset_summaries(const Dataset& ds) {
  std::vector<std::string> out;
  out.reserve(ds.records.size());
  for (const auto& r : ds.records) out.push_back(r.summary);
  return out;
}

}  // namespace eie
