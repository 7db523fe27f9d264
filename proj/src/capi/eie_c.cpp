#include "eie/eie.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "core/error.hpp"
#include "data/synth.hpp"
#include "decode/decoder.hpp"
#include "json.hpp"
#include "metrics/report.hpp"
#include "model/gradcheck_suite.hpp"
#include "train/trainer.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Runs fn, translating exceptions into status codes + the thread-local
// message. The C boundary never lets an exception escape.
template <typename Fn>
eie_status guarded(Fn&& fn) {
  try {
    fn();
    return EIE_OK;
  } catch (const eie::Error& e) {
    g_last_error = e.what();
    return static_cast<eie_status>(static_cast<int>(e.code()));
  } catch (const json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return EIE_ERR_DATA;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EIE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return EIE_ERR_INTERNAL;
  }
}

json parse_json_arg(const char* text, const char* what) {
  if (!text || !*text) return json::object();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw eie::UsageError(std::string("malformed ") + what + " json: " + e.what());
  }
}

eie::DecodeConfig decode_config_from_json(const json& j, const json& train_config) {
  eie::DecodeConfig cfg;
  if (j.value("strategy", "greedy") == "beam") cfg.strategy = eie::DecodeConfig::Strategy::beam;
  cfg.beam_width = j.value("beam_width", 1);
  cfg.max_len = j.value("max_len", 24);
  const std::string guidance = j.value("guidance", "default");
  if (guidance == "default") {
    cfg.guidance = eie::default_decode_guidance(train_config);
  } else if (guidance == "off") {
    cfg.guidance.mode = eie::GuidancePath::Mode::off;
  } else if (guidance == "soft") {
    cfg.guidance.mode = eie::GuidancePath::Mode::soft;
  } else if (guidance == "hard") {
    cfg.guidance.mode = eie::GuidancePath::Mode::hard;
    cfg.guidance.threshold = j.value("threshold", 0.5f);
  } else {
    throw eie::UsageError("decode guidance must be default, off, soft or hard");
  }
  return cfg;
}

}  // namespace

struct eie_dataset {
  eie::Dataset ds;
};

struct eie_checkpoint {
  eie::Checkpoint ck;
};

extern "C" {

const char* eie_version(void) { return "eie 1.0.0"; }

const char* eie_last_error(void) { return g_last_error.c_str(); }

void eie_string_free(char* s) { std::free(s); }

eie_status eie_synth(const char* config_json, const char* out_dir) {
  return guarded([&] {
    if (!out_dir) throw eie::UsageError("eie_synth: out_dir is required");
    const json j = parse_json_arg(config_json, "synth config");
    eie::SynthConfig cfg;
    cfg.num_records = j.value("num_records", cfg.num_records);
    cfg.guidance_dim = j.value("guidance_dim", cfg.guidance_dim);
    cfg.noise = j.value("noise", cfg.noise);
    cfg.informativeness = j.value("informativeness", cfg.informativeness);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.feature_tokens = j.value("feature_tokens", cfg.feature_tokens);
    cfg.feature_dim = j.value("feature_dim", cfg.feature_dim);
    cfg.max_facts = j.value("max_facts", cfg.max_facts);
    eie::save_dataset(eie::synth_generate(cfg), out_dir);
  });
}

eie_status eie_dataset_open(const char* path, eie_dataset** out) {
  return guarded([&] {
    if (!path || !out) throw eie::UsageError("eie_dataset_open: path and out are required");
    auto handle = std::make_unique<eie_dataset>();
    handle->ds = eie::load_dataset(path);
    *out = handle.release();
  });
}

void eie_dataset_close(eie_dataset* ds) { delete ds; }

int eie_dataset_size(const eie_dataset* ds) {
  return ds ? static_cast<int>(ds->ds.size()) : 0;
}

int eie_dataset_guidance_dim(const eie_dataset* ds) {
  return ds ? ds->ds.header.guidance_dim : 0;
}

eie_status eie_dataset_slice(const eie_dataset* ds, int begin, int end, eie_dataset** out) {
  return guarded([&] {
    if (!ds || !out) throw eie::UsageError("eie_dataset_slice: ds and out are required");
    if (begin < 0 || end > static_cast<int>(ds->ds.size()) || begin >= end) {
      throw eie::UsageError("eie_dataset_slice: bad range [" + std::to_string(begin) + ", " +
                            std::to_string(end) + ") for " + std::to_string(ds->ds.size()) +
                            " records");
    }
    auto handle = std::make_unique<eie_dataset>();
    handle->ds.header = ds->ds.header;
    handle->ds.records.assign(ds->ds.records.begin() + begin, ds->ds.records.begin() + end);
    *out = handle.release();
  });
}

eie_status eie_train(const eie_dataset* ds, const char* config_json, const char* resume_from,
                     const char* out_dir, char** final_ckpt_dir) {
  return guarded([&] {
    if (!ds || !out_dir) throw eie::UsageError("eie_train: dataset and out_dir are required");
    const json j = parse_json_arg(config_json, "train config");
    eie::ModelConfig mcfg = eie::ModelConfig::from_json(j.value("model", json::object()));
    eie::TrainingConfig tcfg = eie::TrainingConfig::from_json(j.value("train", json::object()));
    eie::TrainOptions opts;
    opts.out_dir = out_dir;
    if (resume_from && *resume_from) opts.resume_from = resume_from;
    const auto final_dir = eie::train_loop(ds->ds, mcfg, tcfg, opts);
    if (final_ckpt_dir) *final_ckpt_dir = dup_string(final_dir.string());
  });
}

eie_status eie_checkpoint_open(const char* dir, eie_checkpoint** out) {
  return guarded([&] {
    if (!dir || !out) throw eie::UsageError("eie_checkpoint_open: dir and out are required");
    auto handle = std::make_unique<eie_checkpoint>();
    handle->ck = eie::load_checkpoint(dir);
    *out = handle.release();
  });
}

void eie_checkpoint_close(eie_checkpoint* ck) { delete ck; }

char* eie_checkpoint_train_config(const eie_checkpoint* ck) {
  if (!ck) return nullptr;
  return dup_string(ck->ck.train_config.dump());
}

eie_status eie_generate_corpus(const eie_checkpoint* ck, const eie_dataset* ds,
                               const char* decode_json, const char* out_jsonl, int* failed) {
  return guarded([&] {
    if (!ck || !ds || !out_jsonl) {
      throw eie::UsageError("eie_generate_corpus: checkpoint, dataset and out_jsonl are required");
    }
    const json j = parse_json_arg(decode_json, "decode config");
    const eie::DecodeConfig cfg = decode_config_from_json(j, ck->ck.train_config);
    const eie::CorpusGenResult res = eie::generate_corpus(
        ds->ds, ck->ck.params, ck->ck.vocab, cfg, out_jsonl, j.value("threads", 0));
    if (failed) *failed = static_cast<int>(res.failed);
  });
}

eie_status eie_generate_one(const eie_checkpoint* ck, const eie_dataset* ds, int index,
                            const char* decode_json, char** text_out) {
  return guarded([&] {
    if (!ck || !ds || !text_out) {
      throw eie::UsageError("eie_generate_one: checkpoint, dataset and text_out are required");
    }
    if (index < 0 || index >= static_cast<int>(ds->ds.size())) {
      throw eie::UsageError("eie_generate_one: record index out of range");
    }
    const json j = parse_json_arg(decode_json, "decode config");
    const eie::DecodeConfig cfg = decode_config_from_json(j, ck->ck.train_config);
    *text_out = dup_string(
        eie::generate(ds->ds.records[static_cast<size_t>(index)], ck->ck.params, ck->ck.vocab, cfg)
            .text);
  });
}

eie_status eie_eval_files(const char* hyp_jsonl, const char* rules_path, char** report_json) {
  return guarded([&] {
    if (!hyp_jsonl || !report_json) {
      throw eie::UsageError("eie_eval_files: hyp_jsonl and report_json are required");
    }
    std::vector<std::string> hyps, refs;
    eie::read_hypotheses_jsonl(hyp_jsonl, &hyps, &refs, nullptr);
    const eie::LabelerRules rules =
        rules_path && *rules_path ? eie::LabelerRules::load(rules_path) : eie::LabelerRules::builtin();
    const eie::MetricReport report = eie::evaluate_corpus(hyps, refs, rules);
    *report_json = dup_string(report.to_json().dump(2));
  });
}

eie_status eie_gradcheck(unsigned long long seed, double eps, char** report_json) {
  eie_status status = guarded([&] {
    const auto results = eie::run_gradcheck_suite(seed, eps);
    json checks = json::array();
    bool all_ok = true;
    std::string worst_name;
    double worst_margin = 0.0;
    for (const auto& r : results) {
      checks.push_back({{"name", r.name},
                        {"max_rel_err", r.max_rel_err},
                        {"tolerance", r.tolerance},
                        {"passed", r.passed()}});
      if (!r.passed()) all_ok = false;
      const double margin = r.max_rel_err / r.tolerance;
      if (margin > worst_margin) {
        worst_margin = margin;
        worst_name = r.name;
      }
    }
    json report = {{"seed", seed}, {"eps", eps}, {"passed", all_ok}, {"worst", worst_name},
                   {"checks", checks}};
    if (report_json) *report_json = dup_string(report.dump(2));
    if (!all_ok) throw eie::NumericError("gradient check failed, worst op: " + worst_name);
  });
  return status;
}

}  // extern "C"
