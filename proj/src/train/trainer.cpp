#include "train/trainer.hpp"

#include <cmath>
#include <fstream>

#include "core/ops.hpp"
#include "data/clinical_terms.hpp"

namespace eie {

namespace fs = std::filesystem;
using nlohmann::json;

Variant variant_from_string(const std::string& s) {
  if (s == "eie-base" || s == "base") return Variant::base;
  if (s == "eie-mem" || s == "mem") return Variant::mem;
  if (s == "eie-esg" || s == "esg") return Variant::esg;
  if (s == "eie-all" || s == "all") return Variant::all;
  if (s == "eie-light" || s == "light") return Variant::light;
  throw UsageError("unknown variant '" + s +
                   "' (expected eie-base, eie-mem, eie-esg, eie-all or eie-light)");
}

std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::base: return "eie-base";
    case Variant::mem: return "eie-mem";
    case Variant::esg: return "eie-esg";
    case Variant::all: return "eie-all";
    case Variant::light: return "eie-light";
  }
  return "?";
}

void TrainingConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw UsageError("alpha must lie in [0, 1]");
  if (beta < 0.0 || beta > 1.0) throw UsageError("beta must lie in [0, 1]");
  if (lr <= 0.0f) throw UsageError("learning rate must be positive");
  if (total_iterations < 1) throw UsageError("total_iterations must be >= 1");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (mask_rate <= 0.0 || mask_rate >= 1.0) throw UsageError("mask_rate must lie in (0, 1)");
}

json TrainingConfig::to_json() const {
  return {{"variant", variant_to_string(variant)},
          {"alpha", alpha},
          {"beta", beta},
          {"guidance_mode", guidance_mode == GuidancePath::Mode::hard ? "hard" : "soft"},
          {"guidance_threshold", guidance_threshold},
          {"lr", lr},
          {"total_iterations", total_iterations},
          {"batch_size", batch_size},
          {"seed", seed},
          {"mask_rate", mask_rate},
          {"checkpoint_every", checkpoint_every}};
}

TrainingConfig TrainingConfig::from_json(const json& j) {
  TrainingConfig c;
  if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  if (j.value("guidance_mode", "soft") == "hard") c.guidance_mode = GuidancePath::Mode::hard;
  c.guidance_threshold = j.value("guidance_threshold", c.guidance_threshold);
  c.lr = j.value("lr", c.lr);
  c.total_iterations = j.value("total_iterations", c.total_iterations);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.mask_rate = j.value("mask_rate", c.mask_rate);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  return c;
}

std::string branch_to_string(Branch b) {
  switch (b) {
    case Branch::mlm: return "mlm";
    case Branch::mem: return "mem";
    case Branch::mem_fallback: return "mem_fallback";
  }
  return "?";
}

Branch select_loss_branch(Rng& rng, double alpha) {
  return rng.uniform() > alpha ? Branch::mem : Branch::mlm;
}

bool guidance_dropout_keep(Rng& rng, double beta) { return rng.uniform() >= beta; }

Rng iteration_stream(uint64_t seed, const char* purpose, int64_t iteration) {
  return Rng(seed).split("train").split(purpose).split(static_cast<uint64_t>(iteration));
}

namespace {

GuidancePath guidance_path_for(const TrainingConfig& cfg, bool enabled) {
  GuidancePath g;
  if (!cfg.uses_guidance() || !enabled) {
    g.mode = GuidancePath::Mode::off;
  } else {
    g.mode = cfg.guidance_mode;
    g.threshold = cfg.guidance_threshold;
  }
  return g;
}

}  // namespace

StepResult train_step(const Dataset& ds, const std::vector<size_t>& batch, ModelParameters& params,
                      AdamState& adam, const TrainingConfig& cfg, const Vocabulary& vocab,
                      const EntityLexicon& lexicon, int64_t iteration) {
  if (batch.empty()) throw UsageError("train_step: empty batch");
  StepResult result;

  if (cfg.uses_mem()) {
    Rng branch_rng = iteration_stream(cfg.seed, "branch", iteration);
    result.branch = select_loss_branch(branch_rng, cfg.alpha);
  } else {
    result.branch = Branch::mlm;
  }

  bool enabled = cfg.uses_guidance();
  if (cfg.variant == Variant::light && enabled) {
    Rng drop_rng = iteration_stream(cfg.seed, "gdrop", iteration);
    enabled = guidance_dropout_keep(drop_rng, cfg.beta);
  }
  result.guidance_enabled = enabled;
  const GuidancePath gpath = guidance_path_for(cfg, enabled);

  params.zero_grad();
  const float inv_batch = 1.0f / static_cast<float>(batch.size());
  double loss_sum = 0.0;
  Rng mask_root = iteration_stream(cfg.seed, "mask", iteration);
  for (size_t slot = 0; slot < batch.size(); ++slot) {
    const DatasetRecord& rec = ds.records[batch[slot]];
    const std::vector<int> text = text_token_ids(rec.summary, vocab, params.cfg.max_text_len);
    Rng mask_rng = mask_root.split(static_cast<uint64_t>(slot));
    MaskingOutcome mo;
    if (result.branch == Branch::mlm) {
      mo = bert_mask(text, mask_rng, cfg.mask_rate, params.cfg.vocab_size);
    } else {
      mo = entity_mask(text, lexicon, mask_rng, cfg.mask_rate, params.cfg.vocab_size);
      if (mo.fallback) result.branch = Branch::mem_fallback;
    }

    Tape tape;
    TapeScope scope(tape);
    Tensor logits =
        forward_full(rec.features_b, rec.features_f, rec.p_b, rec.p_f, mo.input_ids, gpath, params);
    // Row i of the logits scores text position i+1; shift the masking outcome
    // accordingly. The final transition (last word -> [EOS]) is always
    // supervised: without it greedy decoding never learns to terminate.
    const size_t t = text.size();
    std::vector<int> targets(t, SpecialTokens::kPad);
    std::vector<uint8_t> ce_mask(t, 0);
    for (size_t i = 0; i + 1 < t; ++i) {
      targets[i] = mo.targets[i + 1];
      ce_mask[i] = mo.loss_mask[i + 1] || (i + 2 == t) ? 1 : 0;
    }
    Tensor loss = cross_entropy_from_logits(logits, targets, ce_mask);
    loss_sum += loss.scalar_hi();
    tape.backward(mul_scalar(loss, inv_batch));
  }

  result.loss = loss_sum / static_cast<double>(batch.size());
  if (!std::isfinite(result.loss)) {
    throw NumericError("train_step: non-finite loss at iteration " + std::to_string(iteration));
  }
  AdamConfig acfg;
  acfg.lr = cfg.lr;
  auto named = params.named();
  adam_step(named, adam, acfg);
  return result;
}

std::filesystem::path train_loop(const Dataset& ds, const ModelConfig& model_cfg,
                                 const TrainingConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  if (ds.records.empty()) throw DataError("train_loop: dataset is empty");
  if (static_cast<int>(ds.size()) < cfg.batch_size) {
    throw DataError("train_loop: dataset smaller than batch size");
  }

  ModelParameters params;
  Vocabulary vocab;
  AdamState adam;
  int64_t start_iter = 0;
  if (!opts.resume_from.empty()) {
    Checkpoint ck = load_checkpoint(opts.resume_from);
    if (ck.seed != cfg.seed) {
      throw UsageError("resume: checkpoint seed " + std::to_string(ck.seed) +
                       " does not match configured seed " + std::to_string(cfg.seed));
    }
    params = std::move(ck.params);
    vocab = std::move(ck.vocab);
    if (!ck.adam) throw DataError("resume: checkpoint has no optimizer state");
    adam = std::move(*ck.adam);
    start_iter = ck.step;
  } else {
    vocab = Vocabulary::build(dataset_summaries(ds));
    ModelConfig mc = model_cfg;
    mc.vocab_size = vocab.size();
    mc.feature_dim = ds.header.feature_dim;
    mc.image_tokens_per_xray = ds.header.feature_tokens;
    mc.guidance_dim = ds.header.guidance_dim;
    params = ModelParameters::init(mc, cfg.seed);
  }

  const EntityLexicon lexicon = EntityLexicon::from_phrases(entity_phrases(), vocab);
  if (cfg.uses_mem() && lexicon.empty()) {
    throw DataError("train_loop: entity lexicon is empty for this vocabulary");
  }

  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  const fs::path csv_path = opts.out_dir / "loss.csv";
  std::ofstream csv;
  if (start_iter == 0) {
    csv.open(csv_path, std::ios::trunc);
    csv << "iteration,loss,branch,guidance_enabled\n";
  } else {
    csv.open(csv_path, std::ios::app);
  }
  if (!csv) throw IoError("cannot write loss curve: " + csv_path.string());

  const json train_echo = cfg.to_json();
  for (int64_t iter = start_iter; iter < cfg.total_iterations; ++iter) {
    Rng batch_rng = iteration_stream(cfg.seed, "batch", iter);
    std::vector<size_t> batch(static_cast<size_t>(cfg.batch_size));
    for (auto& b : batch) b = static_cast<size_t>(batch_rng.next_below(ds.size()));
    const StepResult step = train_step(ds, batch, params, adam, cfg, vocab, lexicon, iter);
    csv << iter << "," << step.loss << "," << branch_to_string(step.branch) << ","
        << (step.guidance_enabled ? 1 : 0) << "\n";
    const int64_t done = iter + 1;
    if (cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 &&
        done != cfg.total_iterations) {
      save_checkpoint(opts.out_dir / ("checkpoint-" + std::to_string(done)), params, vocab, done,
                      cfg.seed, train_echo, &adam);
    }
  }
  csv.flush();
  const fs::path final_dir = opts.out_dir / "checkpoint-final";
  save_checkpoint(final_dir, params, vocab, cfg.total_iterations, cfg.seed, train_echo, &adam);
  return final_dir;
}

}  // namespace eie
