#include "model/params.hpp"

#include <cmath>
#include <fstream>

#include "core/eiet.hpp"

namespace eie {

namespace fs = std::filesystem;
using nlohmann::json;

Tensor sinusoidal_positional(int positions, int dim) {
  Tensor t = Tensor::zeros({positions, dim});
  auto v = t.mutable_data();
  for (int p = 0; p < positions; ++p) {
    for (int i = 0; i < dim; i += 2) {
      const double angle = p / std::pow(10000.0, static_cast<double>(i) / dim);
      v[static_cast<size_t>(p) * dim + i] = static_cast<float>(std::sin(angle));
      if (i + 1 < dim) {
        v[static_cast<size_t>(p) * dim + i + 1] = static_cast<float>(std::cos(angle));
      }
    }
  }
  return t;
}

namespace {

constexpr float kInitStd = 0.02f;

LayerParams init_layer(const ModelConfig& cfg, Rng rng) {
  const int h = cfg.hidden_dim;
  const int f = cfg.ffn_dim();
  LayerParams p;
  p.ln1_gamma = Tensor::full({h}, 1.0f, true);
  p.ln1_beta = Tensor::zeros({h}, true);
  Rng r1 = rng.split("attn");
  p.wq = Tensor::randn({h, h}, r1, kInitStd, true);
  p.bq = Tensor::zeros({h}, true);
  p.wk = Tensor::randn({h, h}, r1, kInitStd, true);
  p.bk = Tensor::zeros({h}, true);
  p.wv = Tensor::randn({h, h}, r1, kInitStd, true);
  p.bv = Tensor::zeros({h}, true);
  p.wo = Tensor::randn({h, h}, r1, kInitStd, true);
  p.bo = Tensor::zeros({h}, true);
  p.ln2_gamma = Tensor::full({h}, 1.0f, true);
  p.ln2_beta = Tensor::zeros({h}, true);
  Rng r2 = rng.split("ffn");
  p.ffn_w1 = Tensor::randn({h, f}, r2, kInitStd, true);
  p.ffn_b1 = Tensor::zeros({f}, true);
  p.ffn_w2 = Tensor::randn({f, h}, r2, kInitStd, true);
  p.ffn_b2 = Tensor::zeros({h}, true);
  return p;
}

}  // namespace

ModelParameters ModelParameters::init(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  ModelParameters m;
  m.cfg = cfg;
  Rng root = Rng(seed).split("init");
  const int h = cfg.hidden_dim;
  Rng emb = root.split("embeddings");
  m.word_embedding = Tensor::randn({cfg.vocab_size, h}, emb, kInitStd, true);
  m.type_embedding = Tensor::randn({3, h}, emb, kInitStd, true);
  const int positions = std::max(cfg.egdcm_seq_len(), cfg.max_text_block());
  m.positional = sinusoidal_positional(positions, h);
  Rng proj = root.split("projections");
  m.guidance_w = Tensor::randn({cfg.guidance_dim, h}, proj, kInitStd, true);
  m.guidance_b = Tensor::zeros({h}, true);
  m.image_w = Tensor::randn({cfg.feature_dim, h}, proj, kInitStd, true);
  m.image_b = Tensor::zeros({h}, true);
  for (int l = 0; l < cfg.egdcm_layers; ++l) {
    m.egdcm.push_back(init_layer(cfg, root.split("egdcm").split(static_cast<uint64_t>(l))));
  }
  m.egdcm_ln_gamma = Tensor::full({h}, 1.0f, true);
  m.egdcm_ln_beta = Tensor::zeros({h}, true);
  for (int l = 0; l < cfg.generator_layers; ++l) {
    m.generator.push_back(init_layer(cfg, root.split("generator").split(static_cast<uint64_t>(l))));
  }
  m.gen_ln_gamma = Tensor::full({h}, 1.0f, true);
  m.gen_ln_beta = Tensor::zeros({h}, true);
  Rng head = root.split("head");
  m.head_w = Tensor::randn({h, cfg.vocab_size}, head, kInitStd, true);
  m.head_b = Tensor::zeros({cfg.vocab_size}, true);
  return m;
}

std::vector<std::pair<std::string, Tensor>> ModelParameters::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(16 + 16 * (egdcm.size() + generator.size()));
  out.emplace_back("word_embedding", word_embedding);
  out.emplace_back("type_embedding", type_embedding);
  out.emplace_back("guidance_projection.weight", guidance_w);
  out.emplace_back("guidance_projection.bias", guidance_b);
  out.emplace_back("image_projection.weight", image_w);
  out.emplace_back("image_projection.bias", image_b);
  auto add_stack = [&out](const char* stack, const std::vector<LayerParams>& layers) {
    for (size_t l = 0; l < layers.size(); ++l) {
      const std::string p = std::string(stack) + "." + std::to_string(l) + ".";
      const LayerParams& lp = layers[l];
      out.emplace_back(p + "ln1.gamma", lp.ln1_gamma);
      out.emplace_back(p + "ln1.beta", lp.ln1_beta);
      out.emplace_back(p + "attn.wq", lp.wq);
      out.emplace_back(p + "attn.bq", lp.bq);
      out.emplace_back(p + "attn.wk", lp.wk);
      out.emplace_back(p + "attn.bk", lp.bk);
      out.emplace_back(p + "attn.wv", lp.wv);
      out.emplace_back(p + "attn.bv", lp.bv);
      out.emplace_back(p + "attn.wo", lp.wo);
      out.emplace_back(p + "attn.bo", lp.bo);
      out.emplace_back(p + "ln2.gamma", lp.ln2_gamma);
      out.emplace_back(p + "ln2.beta", lp.ln2_beta);
      out.emplace_back(p + "ffn.w1", lp.ffn_w1);
      out.emplace_back(p + "ffn.b1", lp.ffn_b1);
      out.emplace_back(p + "ffn.w2", lp.ffn_w2);
      out.emplace_back(p + "ffn.b2", lp.ffn_b2);
    }
  };
  add_stack("egdcm", egdcm);
  out.emplace_back("egdcm.final_ln.gamma", egdcm_ln_gamma);
  out.emplace_back("egdcm.final_ln.beta", egdcm_ln_beta);
  add_stack("generator", generator);
  out.emplace_back("generator.final_ln.gamma", gen_ln_gamma);
  out.emplace_back("generator.final_ln.beta", gen_ln_beta);
  out.emplace_back("output_head.weight", head_w);
  out.emplace_back("output_head.bias", head_b);
  return out;
}

int64_t ModelParameters::trainable_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : named()) n += t.numel();
  return n;
}

void ModelParameters::zero_grad() const {
  for (auto& [name, t] : named()) {
    Tensor tt = t;
    tt.zero_grad();
  }
}

bool ModelParameters::all_finite() const {
  for (const auto& [name, t] : named()) {
    if (!t.all_finite()) return false;
  }
  return true;
}

void save_checkpoint(const fs::path& dir, const ModelParameters& params, const Vocabulary& vocab,
                     int64_t step, uint64_t seed, const json& train_config, const AdamState* adam) {
  std::error_code ec;
  fs::create_directories(dir / "params", ec);
  json manifest;
  manifest["format"] = "eie-checkpoint";
  manifest["version"] = 1;
  manifest["step"] = step;
  manifest["seed"] = seed;
  manifest["model_config"] = params.cfg.to_json();
  manifest["train_config"] = train_config;
  manifest["vocab"] = "vocab.json";
  vocab.save(dir / "vocab.json");

  json entries = json::object();
  for (const auto& [name, t] : params.named()) {
    const std::string file = "params/" + name + ".eiet";
    save_eiet(dir / file, t);
    entries[name] = {{"file", file}, {"shape", t.shape()}};
  }
  {
    const std::string file = "params/positional.eiet";
    save_eiet(dir / file, params.positional);
    entries["positional"] = {{"file", file}, {"shape", params.positional.shape()}, {"fixed", true}};
  }
  manifest["params"] = entries;

  if (adam) {
    fs::create_directories(dir / "opt", ec);
    json opt;
    opt["step"] = adam->step;
    json moments = json::object();
    for (const auto& [name, t] : params.named()) {
      auto mi = adam->m.find(name);
      auto vi = adam->v.find(name);
      if (mi == adam->m.end() || vi == adam->v.end()) continue;
      const std::string mf = "opt/" + name + ".m.eiet";
      const std::string vf = "opt/" + name + ".v.eiet";
      save_eiet(dir / mf, Tensor::from_data(t.shape(), mi->second));
      save_eiet(dir / vf, Tensor::from_data(t.shape(), vi->second));
      moments[name] = {{"m", mf}, {"v", vf}};
    }
    opt["moments"] = moments;
    manifest["optimizer"] = opt;
  }

  std::ofstream f(dir / "manifest.json", std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint manifest in " + dir.string());
  f << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const fs::path& dir) {
  std::ifstream f(dir / "manifest.json");
  if (!f) throw IoError("cannot open checkpoint manifest: " + (dir / "manifest.json").string());
  json manifest;
  try {
    f >> manifest;
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "eie-checkpoint") {
    throw DataError("not an eie checkpoint: " + dir.string());
  }
  Checkpoint ck;
  ck.step = manifest.value("step", 0);
  ck.seed = manifest.value("seed", 0ULL);
  ck.train_config = manifest.value("train_config", json::object());
  const ModelConfig cfg = ModelConfig::from_json(manifest.at("model_config"));
  ck.vocab = Vocabulary::load(dir / manifest.value("vocab", "vocab.json"));

  // materialize with the right structure, then overwrite every tensor
  ck.params = ModelParameters::init(cfg, 0);
  const json& entries = manifest.at("params");
  auto load_into = [&](const std::string& name, Tensor target) {
    if (!entries.contains(name)) throw DataError("checkpoint lacks parameter '" + name + "'");
    const fs::path file = dir / entries.at(name).at("file").get<std::string>();
    Tensor loaded = load_eiet(file);
    if (loaded.shape() != target.shape()) {
      throw DataError("checkpoint parameter '" + name + "' has shape " + shape_str(loaded.shape()) +
                      ", expected " + shape_str(target.shape()));
    }
    std::copy(loaded.data().begin(), loaded.data().end(), target.mutable_data().begin());
  };
  for (auto& [name, t] : ck.params.named()) load_into(name, t);
  load_into("positional", ck.params.positional);

  if (manifest.contains("optimizer")) {
    AdamState state;
    const json& opt = manifest.at("optimizer");
    state.step = opt.value("step", 0);
    for (const auto& [name, files] : opt.at("moments").items()) {
      Tensor m = load_eiet(dir / files.at("m").get<std::string>());
      Tensor v = load_eiet(dir / files.at("v").get<std::string>());
      state.m[name].assign(m.data().begin(), m.data().end());
      state.v[name].assign(v.data().begin(), v.data().end());
    }
    ck.adam = std::move(state);
  }
  return ck;
}

}  // namespace eie
