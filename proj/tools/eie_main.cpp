// Command-line front end. Links only the public C API (libeie); everything
// model-related happens behind the handle boundary.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eie/eie.h"
#include "json.hpp"
#include "svg_plot.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitData = 4;

[[noreturn]] void fail(eie_status status) {
  std::cerr << "error: " << eie_last_error() << "\n";
  std::exit(static_cast<int>(status));
}

void require_ok(eie_status status) {
  if (status != EIE_OK) fail(status);
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  eie_string_free(s);
  return out;
}

// flags > config file > built-in defaults
struct ConfigBinder {
  std::vector<std::function<void(const json&)>> binds;

  template <typename T>
  void bind(CLI::Option* opt, std::string key, T& var) {
    binds.push_back([opt, key = std::move(key), &var](const json& j) {
      if (opt->count() == 0 && j.contains(key)) var = j.at(key).get<T>();
    });
  }
  void apply(const fs::path& config_path) {
    if (config_path.empty()) return;
    std::ifstream f(config_path);
    if (!f) {
      std::cerr << "error: cannot open config file " << config_path << "\n";
      std::exit(kExitIo);
    }
    json j;
    try {
      f >> j;
    } catch (const json::exception& e) {
      std::cerr << "error: malformed config file: " << e.what() << "\n";
      std::exit(kExitUsage);
    }
    for (auto& b : binds) b(j);
  }
};

void write_manifest(const fs::path& path, const std::string& command, const json& effective,
                    const std::vector<std::string>& files) {
  json m = {{"command", command}, {"effective_config", effective}, {"files", files}};
  std::ofstream f(path, std::ios::trunc);
  if (!f) {
    std::cerr << "error: cannot write manifest " << path << "\n";
    std::exit(kExitIo);
  }
  f << m.dump(2) << "\n";
}

size_t count_lines(const fs::path& path) {
  std::ifstream f(path);
  if (!f) {
    std::cerr << "error: cannot open " << path << "\n";
    std::exit(kExitIo);
  }
  size_t n = 0;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty()) ++n;
  }
  return n;
}

struct GuidanceFlag {
  std::string mode = "default";
  double threshold = 0.5;
};

GuidanceFlag parse_guidance(const std::string& text) {
  GuidanceFlag g;
  if (text == "default" || text == "off" || text == "soft") {
    g.mode = text;
    return g;
  }
  if (text.rfind("hard", 0) == 0) {
    g.mode = "hard";
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
      try {
        g.threshold = std::stod(text.substr(colon + 1));
      } catch (...) {
        std::cerr << "error: bad guidance threshold in '" << text << "'\n";
        std::exit(kExitUsage);
      }
    }
    if (g.threshold <= 0.0 || g.threshold >= 1.0) {
      std::cerr << "error: guidance threshold must lie in (0, 1)\n";
      std::exit(kExitUsage);
    }
    return g;
  }
  std::cerr << "error: guidance must be default, off, soft or hard[:t], got '" << text << "'\n";
  std::exit(kExitUsage);
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out;
  int n = 32;
  int guidance_dim = 5;
  double informativeness = 1.0;
  double noise = 0.1;
  uint64_t seed = 1;
  int feature_tokens = 49;
  int feature_dim = 1024;
  fs::path config;
};

int cmd_synth(const SynthArgs& a) {
  json cfg = {{"num_records", a.n},
              {"guidance_dim", a.guidance_dim},
              {"informativeness", a.informativeness},
              {"noise", a.noise},
              {"seed", a.seed},
              {"feature_tokens", a.feature_tokens},
              {"feature_dim", a.feature_dim}};
  require_ok(eie_synth(cfg.dump().c_str(), a.out.c_str()));
  write_manifest(fs::path(a.out) / "manifest.json", "synth", cfg,
                 {"dataset.jsonl", "features/"});
  std::cout << "wrote " << a.n << " records (schema eie-dataset v1, guidance_dim "
            << a.guidance_dim << ") to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data, out, resume;
  std::string variant = "eie-all";
  double alpha = 0.8;
  double beta = 0.6;
  std::string guidance = "soft";
  double lr = 3e-5;
  int64_t iters = 5000;
  int batch = 4;
  uint64_t seed = 1;
  double mask_rate = 0.15;
  int64_t ckpt_every = 0;
  // model overrides (paper defaults otherwise)
  int hidden = 512;
  int heads = 8;
  int egdcm_layers = 2;
  int generator_layers = 3;
  int max_text_len = 24;
  int ffn_mult = 4;
  bool beta_given = false;
  bool guidance_given = false;
};

int cmd_train(const TrainArgs& a) {
  const bool uses_guidance =
      a.variant == "eie-esg" || a.variant == "eie-all" || a.variant == "eie-light";
  if (a.guidance_given && !uses_guidance) {
    std::cerr << "error: --guidance is meaningless for " << a.variant
              << " (this variant consumes no guidance)\n";
    return kExitUsage;
  }
  if (a.beta_given && a.variant != "eie-light") {
    std::cerr << "error: --beta applies only to eie-light\n";
    return kExitUsage;
  }
  GuidanceFlag g = parse_guidance(a.guidance);
  if (g.mode == "default") g.mode = "soft";
  if (g.mode == "off") {
    std::cerr << "error: training guidance mode must be soft or hard[:t]\n";
    return kExitUsage;
  }

  json cfg = {{"model",
               {{"hidden_dim", a.hidden},
                {"num_heads", a.heads},
                {"egdcm_layers", a.egdcm_layers},
                {"generator_layers", a.generator_layers},
                {"max_text_len", a.max_text_len},
                {"ffn_multiplier", a.ffn_mult}}},
              {"train",
               {{"variant", a.variant},
                {"alpha", a.alpha},
                {"beta", a.beta},
                {"guidance_mode", g.mode},
                {"guidance_threshold", g.threshold},
                {"lr", a.lr},
                {"total_iterations", a.iters},
                {"batch_size", a.batch},
                {"seed", a.seed},
                {"mask_rate", a.mask_rate},
                {"checkpoint_every", a.ckpt_every}}}};

  eie_dataset* ds = nullptr;
  require_ok(eie_dataset_open(a.data.c_str(), &ds));
  char* final_dir = nullptr;
  const eie_status st = eie_train(ds, cfg.dump().c_str(), a.resume.empty() ? nullptr : a.resume.c_str(),
                                  a.out.c_str(), &final_dir);
  eie_dataset_close(ds);
  if (st != EIE_OK) fail(st);
  const std::string ckpt = take_string(final_dir);
  write_manifest(fs::path(a.out) / "manifest.json", "train", cfg,
                 {"loss.csv", fs::relative(ckpt, a.out).string()});
  std::cout << "final checkpoint: " << ckpt << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::string ckpt, data, out;
  int beam = 0;  // 0 = greedy
  int max_len = 24;
  std::string guidance = "default";
  int threads = 0;
};

json decode_json_for(const GenerateArgs& a) {
  GuidanceFlag g = parse_guidance(a.guidance);
  json decode = {{"strategy", a.beam > 1 ? "beam" : "greedy"},
                 {"beam_width", a.beam > 1 ? a.beam : 1},
                 {"max_len", a.max_len},
                 {"guidance", g.mode},
                 {"threshold", g.threshold},
                 {"threads", a.threads}};
  return decode;
}

int cmd_generate(const GenerateArgs& a) {
  eie_dataset* ds = nullptr;
  require_ok(eie_dataset_open(a.data.c_str(), &ds));
  eie_checkpoint* ck = nullptr;
  eie_status st = eie_checkpoint_open(a.ckpt.c_str(), &ck);
  if (st != EIE_OK) {
    eie_dataset_close(ds);
    fail(st);
  }
  const json decode = decode_json_for(a);
  int failed = 0;
  st = eie_generate_corpus(ck, ds, decode.dump().c_str(), a.out.c_str(), &failed);
  const int total = eie_dataset_size(ds);
  eie_checkpoint_close(ck);
  eie_dataset_close(ds);
  if (st != EIE_OK) fail(st);
  write_manifest(fs::path(a.out.empty() ? "." : a.out).string() + ".manifest.json", "generate",
                 decode, {a.out});
  std::cout << "generated " << (total - failed) << "/" << total << " hypotheses to " << a.out
            << "\n";
  if (failed > 0) {
    std::cerr << "error: " << failed << " records failed\n";
    return kExitData;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string hyp_jsonl, ckpt, data, report, rules;
  GenerateArgs gen;
};

int cmd_eval(EvalArgs a) {
  std::string hyp_path = a.hyp_jsonl;
  fs::path scratch;
  if (hyp_path.empty()) {
    if (a.ckpt.empty() || a.data.empty()) {
      std::cerr << "error: eval needs --hyp-jsonl or both --ckpt and --data\n";
      return kExitUsage;
    }
    scratch = fs::temp_directory_path() / ("eie_eval_" + std::to_string(::getpid()) + ".jsonl");
    a.gen.ckpt = a.ckpt;
    a.gen.data = a.data;
    a.gen.out = scratch.string();
    const int rc = cmd_generate(a.gen);
    if (rc != 0) return rc;
    hyp_path = scratch.string();
  } else if (!a.data.empty()) {
    // cross-check corpus sizes against the dataset
    eie_dataset* ds = nullptr;
    require_ok(eie_dataset_open(a.data.c_str(), &ds));
    const size_t expect = static_cast<size_t>(eie_dataset_size(ds));
    eie_dataset_close(ds);
    const size_t got = count_lines(hyp_path);
    if (got != expect) {
      std::cerr << "error: hypothesis corpus has " << got << " records, dataset has " << expect
                << "\n";
      return kExitData;
    }
  }

  char* report_json = nullptr;
  const eie_status st =
      eie_eval_files(hyp_path.c_str(), a.rules.empty() ? nullptr : a.rules.c_str(), &report_json);
  if (!scratch.empty()) fs::remove(scratch);
  if (st != EIE_OK) fail(st);
  const std::string report = take_string(report_json);
  const json j = json::parse(report);

  std::printf("metric             value\n");
  std::printf("-----------------  ------\n");
  auto row = [&](const char* name, const char* key) {
    std::printf("%-19s%.4f\n", name, j.at(key).get<double>());
  };
  row("BLEU-1", "bleu1");
  row("BLEU-2", "bleu2");
  row("BLEU-3", "bleu3");
  row("BLEU-4", "bleu4");
  row("METEOR-simplified", "meteor");
  row("ROUGE-L", "rouge_l");
  row("CIDEr", "cider");
  row("Acc5", "acc5");
  row("Acc14", "acc14");
  std::printf("pairs: %zu\n", j.at("counts").at("corpus_size").get<size_t>());

  if (!a.report.empty()) {
    std::ofstream f(a.report, std::ios::trunc);
    if (!f) {
      std::cerr << "error: cannot write report " << a.report << "\n";
      return kExitIo;
    }
    f << report << "\n";
    write_manifest(a.report + ".manifest.json", "eval",
                   {{"hyp_jsonl", hyp_path}, {"rules", a.rules}}, {a.report});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

int cmd_gradcheck(uint64_t seed, double eps) {
  char* report_json = nullptr;
  const eie_status st = eie_gradcheck(seed, eps, &report_json);
  const std::string report = take_string(report_json);
  if (!report.empty()) {
    const json j = json::parse(report);
    for (const auto& check : j.at("checks")) {
      std::printf("%-22s max_rel_err %.3e  tolerance %.0e  %s\n",
                  check.at("name").get<std::string>().c_str(),
                  check.at("max_rel_err").get<double>(), check.at("tolerance").get<double>(),
                  check.at("passed").get<bool>() ? "ok" : "FAIL");
    }
    if (!j.at("passed").get<bool>()) {
      std::cerr << "error: gradient check failed, worst op: "
                << j.at("worst").get<std::string>() << "\n";
      return 5;
    }
  } else if (st != EIE_OK) {
    fail(st);
  }
  std::cout << "all gradient checks passed\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string param;
  std::string values;
  std::string data, eval_data, out;
  fs::path base_config;
  uint64_t seed = 1;
  double eval_frac = 0.2;
};

int cmd_sweep(const SweepArgs& a) {
  std::vector<double> values;
  {
    std::stringstream ss(a.values);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        values.push_back(std::stod(item));
      } catch (...) {
        std::cerr << "error: bad sweep value '" << item << "'\n";
        return kExitUsage;
      }
    }
  }
  if (values.empty()) {
    std::cerr << "error: --values is empty\n";
    return kExitUsage;
  }

  json base = {{"model", json::object()}, {"train", json::object()}, {"decode", json::object()}};
  if (!a.base_config.empty()) {
    std::ifstream f(a.base_config);
    if (!f) {
      std::cerr << "error: cannot open base config " << a.base_config << "\n";
      return kExitIo;
    }
    try {
      json j;
      f >> j;
      base.update(j);
    } catch (const json::exception& e) {
      std::cerr << "error: malformed base config: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  base["train"]["seed"] = a.seed;

  eie_dataset* full = nullptr;
  require_ok(eie_dataset_open(a.data.c_str(), &full));
  eie_dataset* train_ds = nullptr;
  eie_dataset* eval_ds = nullptr;
  if (!a.eval_data.empty()) {
    require_ok(eie_dataset_open(a.eval_data.c_str(), &eval_ds));
    train_ds = full;
  } else {
    const int n = eie_dataset_size(full);
    const int eval_n = std::max(1, static_cast<int>(std::lround(n * a.eval_frac)));
    if (eval_n >= n) {
      std::cerr << "error: dataset too small to split\n";
      eie_dataset_close(full);
      return kExitData;
    }
    require_ok(eie_dataset_slice(full, 0, n - eval_n, &train_ds));
    require_ok(eie_dataset_slice(full, n - eval_n, n, &eval_ds));
  }

  fs::create_directories(a.out);
  const fs::path csv_path = fs::path(a.out) / "sweep.csv";
  std::ofstream csv(csv_path, std::ios::trunc);
  csv << "value,bleu1,bleu2,bleu3,bleu4,meteor,rouge_l,cider,acc5,acc14\n";

  int overall_rc = 0;
  std::vector<double> ciders(values.size(), std::nan(""));
  for (size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    json cfg = base;
    if (a.param == "alpha") {
      if (!cfg["train"].contains("variant")) cfg["train"]["variant"] = "eie-mem";
      cfg["train"]["alpha"] = v;
    } else if (a.param == "beta") {
      cfg["train"]["variant"] = "eie-light";
      cfg["train"]["beta"] = v;
    } else if (a.param == "threshold") {
      if (!cfg["train"].contains("variant")) cfg["train"]["variant"] = "eie-esg";
      cfg["train"]["guidance_mode"] = "hard";
      cfg["train"]["guidance_threshold"] = v;
    } else {
      std::cerr << "error: --param must be alpha, beta or threshold\n";
      return kExitUsage;
    }

    std::ostringstream run_name;
    run_name << "run-" << a.param << "-" << v;
    const fs::path run_dir = fs::path(a.out) / run_name.str();
    std::cout << "[sweep] " << a.param << " = " << v << "\n";

    auto run = [&]() -> eie_status {
      char* ckpt_dir_c = nullptr;
      eie_status st = eie_train(train_ds, cfg.dump().c_str(), nullptr, run_dir.string().c_str(),
                                &ckpt_dir_c);
      if (st != EIE_OK) return st;
      const std::string ckpt_dir = take_string(ckpt_dir_c);
      eie_checkpoint* ck = nullptr;
      st = eie_checkpoint_open(ckpt_dir.c_str(), &ck);
      if (st != EIE_OK) return st;
      const fs::path hyp = run_dir / "hyp.jsonl";
      json decode = cfg.value("decode", json::object());
      if (!decode.contains("guidance")) decode["guidance"] = "default";
      int failed = 0;
      st = eie_generate_corpus(ck, eval_ds, decode.dump().c_str(), hyp.string().c_str(), &failed);
      eie_checkpoint_close(ck);
      if (st != EIE_OK) return st;
      if (failed > 0) return EIE_ERR_DATA;
      char* report_c = nullptr;
      st = eie_eval_files(hyp.string().c_str(), nullptr, &report_c);
      if (st != EIE_OK) return st;
      const json report = json::parse(take_string(report_c));
      csv << v;
      for (const char* key : {"bleu1", "bleu2", "bleu3", "bleu4", "meteor", "rouge_l", "cider",
                              "acc5", "acc14"}) {
        csv << "," << report.at(key).get<double>();
      }
      csv << "\n";
      ciders[i] = report.at("cider").get<double>();
      return EIE_OK;
    };
    const eie_status st = run();
    if (st != EIE_OK) {
      std::cerr << "run " << run_name.str() << " failed: " << eie_last_error() << "\n";
      csv << v << ",nan,nan,nan,nan,nan,nan,nan,nan,nan\n";
      overall_rc = static_cast<int>(st);
    }
    csv.flush();
  }

  const fs::path plot_path = fs::path(a.out) / ("cider_vs_" + a.param + ".svg");
  eie_cli::LinePlot plot;
  plot.title = "CIDEr vs " + a.param;
  plot.x_label = a.param;
  plot.y_label = "CIDEr";
  plot.x = values;
  plot.y = ciders;
  eie_cli::write_svg(plot, plot_path.string());
  write_manifest(fs::path(a.out) / "manifest.json", "sweep",
                 {{"param", a.param}, {"values", values}, {"base", base}},
                 {"sweep.csv", plot_path.filename().string()});
  std::cout << "sweep results: " << csv_path << "\n";

  if (train_ds != full) eie_dataset_close(train_ds);
  eie_dataset_close(eval_ds);
  eie_dataset_close(full);
  return overall_rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EIE follow-up chest X-ray summary generator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(eie_version()));

  // synth ------------------------------------------------------------------
  SynthArgs sa;
  ConfigBinder sb;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", sa.out, "output directory")->required();
  auto* o_n = synth->add_option("--n", sa.n, "number of records")
                  ->check(CLI::PositiveNumber)
                  ->capture_default_str();
  auto* o_gd = synth->add_option("--guidance-dim", sa.guidance_dim, "guidance vector width")
                   ->capture_default_str();
  auto* o_inf = synth
                    ->add_option("--informativeness", sa.informativeness,
                                 "probability that guidance reflects the planted facts")
                    ->check(CLI::Range(0.0, 1.0))
                    ->capture_default_str();
  auto* o_noise = synth->add_option("--noise", sa.noise, "feature noise stddev")->capture_default_str();
  auto* o_seed = synth->add_option("--seed", sa.seed, "random seed")->capture_default_str();
  auto* o_ft = synth->add_option("--feature-tokens", sa.feature_tokens, "grid tokens per image")
                   ->capture_default_str();
  auto* o_fd = synth->add_option("--feature-dim", sa.feature_dim, "feature channels")
                   ->capture_default_str();
  synth->add_option("--config", sa.config, "json config file (flags win)");
  sb.bind(o_n, "n", sa.n);
  sb.bind(o_gd, "guidance_dim", sa.guidance_dim);
  sb.bind(o_inf, "informativeness", sa.informativeness);
  sb.bind(o_noise, "noise", sa.noise);
  sb.bind(o_seed, "seed", sa.seed);
  sb.bind(o_ft, "feature_tokens", sa.feature_tokens);
  sb.bind(o_fd, "feature_dim", sa.feature_dim);

  // train ------------------------------------------------------------------
  TrainArgs ta;
  ConfigBinder tb;
  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--data", ta.data, "dataset directory or jsonl")->required();
  train->add_option("--out", ta.out, "output directory")->required();
  train->add_option("--resume", ta.resume, "checkpoint directory to resume from");
  auto* o_variant =
      train
          ->add_option("--variant", ta.variant,
                       "eie-base | eie-mem | eie-esg | eie-all | eie-light")
          ->capture_default_str();
  auto* o_alpha = train->add_option("--alpha", ta.alpha, "MLM/MEM alternation parameter")
                      ->check(CLI::Range(0.0, 1.0))
                      ->capture_default_str();
  auto* o_beta = train->add_option("--beta", ta.beta, "eie-light guidance dropout parameter")
                     ->check(CLI::Range(0.0, 1.0))
                     ->capture_default_str();
  auto* o_guidance =
      train->add_option("--guidance", ta.guidance, "soft | hard[:threshold]")->capture_default_str();
  auto* o_lr = train->add_option("--lr", ta.lr, "learning rate")->capture_default_str();
  auto* o_iters = train->add_option("--iters", ta.iters, "total training iterations")
                      ->check(CLI::PositiveNumber)
                      ->capture_default_str();
  auto* o_batch = train->add_option("--batch", ta.batch, "batch size")
                      ->check(CLI::PositiveNumber)
                      ->capture_default_str();
  auto* o_tseed = train->add_option("--seed", ta.seed, "random seed")->capture_default_str();
  auto* o_mask = train->add_option("--mask-rate", ta.mask_rate, "BERT masking rate")
                     ->capture_default_str();
  auto* o_ck = train->add_option("--ckpt-every", ta.ckpt_every, "checkpoint cadence (0 = final only)")
                   ->capture_default_str();
  auto* o_hidden = train->add_option("--hidden", ta.hidden, "hidden width")->capture_default_str();
  auto* o_heads = train->add_option("--heads", ta.heads, "attention heads")->capture_default_str();
  auto* o_el = train->add_option("--egdcm-layers", ta.egdcm_layers, "difference encoder layers")
                   ->capture_default_str();
  auto* o_gl = train->add_option("--generator-layers", ta.generator_layers, "generator layers")
                   ->capture_default_str();
  auto* o_mtl = train->add_option("--max-text-len", ta.max_text_len, "max summary words")
                    ->capture_default_str();
  auto* o_ffn = train->add_option("--ffn-mult", ta.ffn_mult, "feed-forward width multiplier")
                    ->capture_default_str();
  fs::path train_config;
  train->add_option("--config", train_config, "json config file (flags win)");
  tb.bind(o_variant, "variant", ta.variant);
  tb.bind(o_alpha, "alpha", ta.alpha);
  tb.bind(o_beta, "beta", ta.beta);
  tb.bind(o_guidance, "guidance", ta.guidance);
  tb.bind(o_lr, "lr", ta.lr);
  tb.bind(o_iters, "iters", ta.iters);
  tb.bind(o_batch, "batch", ta.batch);
  tb.bind(o_tseed, "seed", ta.seed);
  tb.bind(o_mask, "mask_rate", ta.mask_rate);
  tb.bind(o_ck, "ckpt_every", ta.ckpt_every);
  tb.bind(o_hidden, "hidden", ta.hidden);
  tb.bind(o_heads, "heads", ta.heads);
  tb.bind(o_el, "egdcm_layers", ta.egdcm_layers);
  tb.bind(o_gl, "generator_layers", ta.generator_layers);
  tb.bind(o_mtl, "max_text_len", ta.max_text_len);
  tb.bind(o_ffn, "ffn_mult", ta.ffn_mult);

  // generate ----------------------------------------------------------------
  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "decode summaries for a dataset");
  gen->add_option("--ckpt", ga.ckpt, "checkpoint directory")->required();
  gen->add_option("--data", ga.data, "dataset directory or jsonl")->required();
  gen->add_option("--out", ga.out, "output hypotheses jsonl")->required();
  gen->add_option("--beam", ga.beam, "beam width (default greedy)")->capture_default_str();
  gen->add_option("--max-len", ga.max_len, "maximum generated words")->capture_default_str();
  gen->add_option("--guidance", ga.guidance, "default | off | soft | hard[:t]")
      ->capture_default_str();
  gen->add_option("--threads", ga.threads, "decode threads (0 = hardware)")->capture_default_str();

  // eval ---------------------------------------------------------------------
  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "compute the metric report");
  eval->add_option("--hyp-jsonl", ea.hyp_jsonl, "hypotheses jsonl (from generate)");
  eval->add_option("--ckpt", ea.ckpt, "checkpoint directory (with --data)");
  eval->add_option("--data", ea.data, "dataset for generation or size cross-check");
  eval->add_option("--report", ea.report, "metric report json output path");
  eval->add_option("--rules", ea.rules, "observation rule table (default: built-in)");
  eval->add_option("--beam", ea.gen.beam, "beam width when generating")->capture_default_str();
  eval->add_option("--max-len", ea.gen.max_len, "max words when generating")->capture_default_str();
  eval->add_option("--guidance", ea.gen.guidance, "guidance mode when generating")
      ->capture_default_str();

  // gradcheck ----------------------------------------------------------------
  uint64_t gc_seed = 1;
  double gc_eps = 1e-3;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("--seed", gc_seed, "random seed")->capture_default_str();
  gradcheck->add_option("--eps", gc_eps, "finite-difference step")->capture_default_str();

  // sweep ---------------------------------------------------------------------
  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "train/evaluate across a parameter grid");
  sweep->add_option("--param", wa.param, "alpha | beta | threshold")->required();
  sweep->add_option("--values", wa.values, "comma-separated values")->required();
  sweep->add_option("--data", wa.data, "training dataset")->required();
  sweep->add_option("--eval-data", wa.eval_data, "held-out dataset (default: tail split)");
  sweep->add_option("--out", wa.out, "output directory")->required();
  sweep->add_option("--base-config", wa.base_config, "json with model/train/decode settings");
  sweep->add_option("--seed", wa.seed, "shared seed for every run")->capture_default_str();
  sweep->add_option("--eval-frac", wa.eval_frac, "held-out fraction when splitting")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (synth->parsed()) {
    sb.apply(sa.config);
    return cmd_synth(sa);
  }
  if (train->parsed()) {
    tb.apply(train_config);
    ta.beta_given = o_beta->count() > 0;
    ta.guidance_given = o_guidance->count() > 0;
    return cmd_train(ta);
  }
  if (gen->parsed()) return cmd_generate(ga);
  if (eval->parsed()) return cmd_eval(ea);
  if (gradcheck->parsed()) return cmd_gradcheck(gc_seed, gc_eps);
  if (sweep->parsed()) return cmd_sweep(wa);
  return kExitUsage;
}
