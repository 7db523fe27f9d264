#include "decode/decoder.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>

#include "core/ops.hpp"
#include "data/tokenizer.hpp"
#include "json.hpp"
#include "train/trainer.hpp"

namespace eie {

namespace {

bool banned_id(int id) {
  return id == SpecialTokens::kMask || id == SpecialTokens::kPad || id == SpecialTokens::kXray1 ||
         id == SpecialTokens::kXray2 || id == SpecialTokens::kCls;
}

// last-row logits with structural tokens removed from the running
std::vector<float> sanitized_last_row(const Tensor& logits) {
  const int t = logits.dim(0);
  const int v = logits.dim(1);
  std::vector<float> row(static_cast<size_t>(v));
  const float* lv = logits.data().data() + static_cast<size_t>(t - 1) * v;
  for (int j = 0; j < v; ++j) {
    row[static_cast<size_t>(j)] = banned_id(j) ? -std::numeric_limits<float>::infinity() : lv[j];
  }
  return row;
}

int argmax_lowest_id(const std::vector<float>& row) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(row.size()); ++j) {
    if (row[static_cast<size_t>(j)] > row[static_cast<size_t>(best)]) best = j;
  }
  return best;
}

std::vector<double> log_softmax(const std::vector<float>& row) {
  double mx = -std::numeric_limits<double>::infinity();
  for (float x : row) mx = std::max(mx, static_cast<double>(x));
  double z = 0.0;
  for (float x : row) z += std::exp(static_cast<double>(x) - mx);
  const double lse = std::log(z) + mx;
  std::vector<double> out(row.size());
  for (size_t j = 0; j < row.size(); ++j) out[j] = static_cast<double>(row[j]) - lse;
  return out;
}

GenerationResult finalize(const std::vector<int>& prefix, const Vocabulary& vocab) {
  GenerationResult res;
  // strip [CLS] [BOS] and the trailing [EOS] if present
  for (size_t i = 2; i < prefix.size(); ++i) {
    if (prefix[i] == SpecialTokens::kEos) break;
    res.token_ids.push_back(prefix[i]);
  }
  res.text = detokenize(vocab.decode_words(res.token_ids));
  return res;
}

GenerationResult greedy_decode(const Tensor& diff, const ModelParameters& params,
                               const Vocabulary& vocab, const DecodeConfig& cfg) {
  std::vector<int> prefix = {SpecialTokens::kCls, SpecialTokens::kBos};
  for (int step = 0; step < cfg.max_len; ++step) {
    Tensor logits = generator_logits(diff, prefix, params);
    const int next = argmax_lowest_id(sanitized_last_row(logits));
    if (next == SpecialTokens::kEos) {
      prefix.push_back(next);
      break;
    }
    prefix.push_back(next);
  }
  return finalize(prefix, vocab);
}

struct Beam {
  std::vector<int> prefix;
  double score = 0.0;
  bool finished = false;
};

GenerationResult beam_decode(const Tensor& diff, const ModelParameters& params,
                             const Vocabulary& vocab, const DecodeConfig& cfg) {
  std::vector<Beam> beams = {{{SpecialTokens::kCls, SpecialTokens::kBos}, 0.0, false}};
  for (int step = 0; step < cfg.max_len + 1; ++step) {
    bool any_live = false;
    std::vector<Beam> pool;
    for (const Beam& b : beams) {
      if (b.finished || static_cast<int>(b.prefix.size()) - 2 >= cfg.max_len) {
        pool.push_back(b);
        continue;
      }
      any_live = true;
      Tensor logits = generator_logits(diff, b.prefix, params);
      const std::vector<float> row = sanitized_last_row(logits);
      const std::vector<double> logp = log_softmax(row);
      // top beam_width extensions; ties resolve to the lowest id, matching greedy
      std::vector<int> order(row.size());
      for (size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
      std::stable_sort(order.begin(), order.end(), [&](int a, int c) { return logp[static_cast<size_t>(a)] > logp[static_cast<size_t>(c)]; });
      for (int k = 0; k < cfg.beam_width && k < static_cast<int>(order.size()); ++k) {
        const int tok = order[static_cast<size_t>(k)];
        if (std::isinf(logp[static_cast<size_t>(tok)])) continue;
        Beam nb = b;
        nb.prefix.push_back(tok);
        nb.score += logp[static_cast<size_t>(tok)];
        nb.finished = tok == SpecialTokens::kEos;
        pool.push_back(std::move(nb));
      }
    }
    if (!any_live) break;
    std::stable_sort(pool.begin(), pool.end(), [](const Beam& a, const Beam& b) {
      return a.score > b.score;
    });
    if (static_cast<int>(pool.size()) > cfg.beam_width) pool.resize(static_cast<size_t>(cfg.beam_width));
    beams = std::move(pool);
  }
  const Beam* best = &beams.front();
  for (const Beam& b : beams) {
    if (b.finished && !best->finished) best = &b;
  }
  return finalize(best->prefix, vocab);
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam_width < 1) throw UsageError("decode: beam width must be >= 1");
  if (max_len < 1) throw UsageError("decode: max_len must be >= 1");
}

GenerationResult generate(const DatasetRecord& rec, const ModelParameters& params,
                          const Vocabulary& vocab, const DecodeConfig& cfg) {
  cfg.validate();
  Tensor g_b = guidance_token(rec.p_b, cfg.guidance, params);
  Tensor g_f = guidance_token(rec.p_f, cfg.guidance, params);
  Tensor tokens = assemble_image_tokens(rec.features_b, rec.features_f, g_b, g_f, params);
  Tensor diff = egdcm_forward(tokens, params);
  if (cfg.strategy == DecodeConfig::Strategy::beam && cfg.beam_width > 1) {
    return beam_decode(diff, params, vocab, cfg);
  }
  return greedy_decode(diff, params, vocab, cfg);
}

CorpusGenResult generate_corpus(const Dataset& ds, const ModelParameters& params,
                                const Vocabulary& vocab, const DecodeConfig& cfg,
                                const std::filesystem::path& out_jsonl, int threads) {
  cfg.validate();
  std::ofstream f(out_jsonl, std::ios::trunc);
  if (!f) throw IoError("cannot write hypotheses: " + out_jsonl.string());
  if (ds.records.empty()) {
    std::cerr << "warning: empty dataset, wrote empty hypothesis file\n";
    return {};
  }
  const size_t n = ds.records.size();
  std::vector<std::string> texts(n);
  std::vector<std::string> errors(n);
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
  }
  std::vector<std::thread> workers;
  std::atomic<size_t> next{0};
  for (int w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          texts[i] = generate(ds.records[i], params, vocab, cfg).text;
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    });
  }
  for (auto& w : workers) w.join();

  CorpusGenResult res;
  for (size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      std::cerr << "record " << ds.records[i].id << " failed: " << errors[i] << "\n";
      ++res.failed;
      continue;
    }
    nlohmann::json j = {{"id", ds.records[i].id},
                        {"hypothesis", texts[i]},
                        {"reference", ds.records[i].summary}};
    f << j.dump() << "\n";
    ++res.written;
  }
  if (!f) throw IoError("short write: " + out_jsonl.string());
  return res;
}

GuidancePath default_decode_guidance(const nlohmann::json& train_config) {
  GuidancePath g;
  g.mode = GuidancePath::Mode::off;
  if (!train_config.contains("variant")) return g;
  const Variant v = variant_from_string(train_config.at("variant").get<std::string>());
  if (v == Variant::esg || v == Variant::all) {
    g.mode = train_config.value("guidance_mode", "soft") == "hard" ? GuidancePath::Mode::hard
                                                                   : GuidancePath::Mode::soft;
    g.threshold = train_config.value("guidance_threshold", 0.5f);
  }
  return g;
}

}  // namespace eie
