#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <set>

#include "data/clinical_terms.hpp"
#include "data/dataset.hpp"
#include "data/synth.hpp"
#include "data/tokenizer.hpp"
#include "data/vocab.hpp"
#include "doctest.h"

using namespace eie;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// "phrase appears and is not negated" per the grammar: the only negation the
// grammar emits is "there is no <entity>".
bool mentioned_non_negated(const std::string& summary, const std::string& phrase) {
  const auto toks = tokenize(summary);
  const auto ph = tokenize(phrase);
  for (size_t i = 0; i + ph.size() <= toks.size(); ++i) {
    bool match = true;
    for (size_t k = 0; k < ph.size(); ++k) {
      if (toks[i + k] != ph[k]) match = false;
    }
    if (!match) continue;
    if (i > 0 && toks[i - 1] == "no") continue;
    return true;
  }
  return false;
}

}  // namespace

TEST_CASE("tokenizer: lowercase, punctuation split, canonical round trip") {
  auto toks = tokenize("Pleural effusion, improved.");
  CHECK(toks == std::vector<std::string>{"pleural", "effusion", ",", "improved", "."});
  CHECK(detokenize(toks) == "pleural effusion , improved .");
  const std::string canonical = "edema has improved and there is no pneumothorax";
  CHECK(detokenize(tokenize(canonical)) == canonical);
  CHECK(tokenize("  a\t b\nc ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(tokenize("").empty());
}

TEST_CASE("vocabulary: frequency order, fixed specials, determinism") {
  Vocabulary v = Vocabulary::build({"a b", "a"});
  CHECK(v.id("a") == SpecialTokens::kFirstWordId);
  CHECK(v.id("b") == SpecialTokens::kFirstWordId + 1);
  CHECK(v.id("a") < v.id("b"));

  CHECK(v.id("[PAD]") == 0);
  CHECK(v.id("[UNK]") == 1);
  CHECK(v.id("[CLS]") == 2);
  CHECK(v.id("[BOS]") == 3);
  CHECK(v.id("[EOS]") == 4);
  CHECK(v.id("[MASK]") == 5);
  CHECK(v.id("[Xray1]") == 6);
  CHECK(v.id("[Xray2]") == 7);

  Vocabulary v2 = Vocabulary::build({"a b", "a"});
  CHECK(v == v2);

  CHECK(v.id("missing") == SpecialTokens::kUnk);
  CHECK_THROWS_AS(Vocabulary::build({}), UsageError);
}

TEST_CASE("vocabulary: frequency ties break lexicographically, min_freq drops") {
  Vocabulary v = Vocabulary::build({"zeta alpha", "zeta alpha beta"});
  // zeta and alpha tie at 2, alpha first lexicographically
  CHECK(v.id("alpha") < v.id("zeta"));
  CHECK(v.id("beta") > v.id("zeta"));
  Vocabulary cut = Vocabulary::build({"zeta alpha", "zeta alpha beta"}, 2);
  CHECK(cut.id("beta") == SpecialTokens::kUnk);
  CHECK(cut.contains("zeta"));
}

TEST_CASE("vocabulary: save/load round trip") {
  Vocabulary v = Vocabulary::build({"edema has improved", "edema is stable"});
  const auto path = fs::temp_directory_path() / "eie_vocab_test.json";
  v.save(path);
  Vocabulary back = Vocabulary::load(path);
  CHECK(back == v);
  fs::remove(path);
}

TEST_CASE("synth: deterministic bytes for a fixed seed") {
  SynthConfig cfg;
  cfg.num_records = 12;
  cfg.feature_tokens = 4;
  cfg.feature_dim = 8;
  cfg.seed = 7;
  const auto d1 = temp_dir("eie_synth_a");
  const auto d2 = temp_dir("eie_synth_b");
  save_dataset(synth_generate(cfg), d1);
  save_dataset(synth_generate(cfg), d2);
  CHECK(read_file(d1 / "dataset.jsonl") == read_file(d2 / "dataset.jsonl"));
  CHECK(read_file(d1 / "features" / "r00003_f.eiet") == read_file(d2 / "features" / "r00003_f.eiet"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("synth: summaries stay within the 4..20 word grammar bound") {
  SynthConfig cfg;
  cfg.num_records = 200;
  cfg.feature_tokens = 4;
  cfg.feature_dim = 8;
  cfg.seed = 3;
  Dataset ds = synth_generate(cfg);
  for (const auto& rec : ds.records) {
    const size_t words = tokenize(rec.summary).size();
    CHECK(words >= 4);
    CHECK(words <= 20);
  }
}

TEST_CASE("synth: informativeness=1 makes follow-up guidance an exact presence predictor") {
  for (int dim : {5, 14}) {
    SynthConfig cfg;
    cfg.num_records = 300;
    cfg.guidance_dim = dim;
    cfg.feature_tokens = 4;
    cfg.feature_dim = 8;
    cfg.informativeness = 1.0;
    cfg.seed = 11;
    Dataset ds = synth_generate(cfg);
    const auto& table = dim == 14 ? observations14() : observations5();
    for (const auto& rec : ds.records) {
      for (int k = 0; k < dim; ++k) {
        const bool present = mentioned_non_negated(rec.summary, table[static_cast<size_t>(k)]);
        CHECK((rec.p_f[static_cast<size_t>(k)] > 0.5f) == present);
      }
    }
  }
}

TEST_CASE("synth: informativeness=0 guidance is independent of mentions") {
  SynthConfig cfg;
  cfg.num_records = 1000;
  cfg.guidance_dim = 5;
  cfg.feature_tokens = 4;
  cfg.feature_dim = 8;
  cfg.informativeness = 0.0;
  cfg.seed = 5;
  Dataset ds = synth_generate(cfg);
  const auto& table = observations5();
  // chi-square independence test per observation at significance 0.01
  for (int k = 0; k < 5; ++k) {
    double n[2][2] = {{0, 0}, {0, 0}};
    for (const auto& rec : ds.records) {
      const int mention = mentioned_non_negated(rec.summary, table[static_cast<size_t>(k)]) ? 1 : 0;
      const int high = rec.p_f[static_cast<size_t>(k)] > 0.5f ? 1 : 0;
      n[mention][high] += 1.0;
    }
    const double total = ds.records.size();
    double chi2 = 0.0;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const double row = n[a][0] + n[a][1];
        const double col = n[0][b] + n[1][b];
        const double expected = row * col / total;
        if (expected > 0) chi2 += (n[a][b] - expected) * (n[a][b] - expected) / expected;
      }
    }
    CHECK(chi2 < 6.635);  // critical value, df=1, p=0.01
  }
}

TEST_CASE("dataset: save/load round trip preserves everything") {
  SynthConfig cfg;
  cfg.num_records = 6;
  cfg.feature_tokens = 3;
  cfg.feature_dim = 4;
  cfg.seed = 9;
  Dataset ds = synth_generate(cfg);
  const auto dir = temp_dir("eie_ds_roundtrip");
  save_dataset(ds, dir);
  Dataset back = load_dataset(dir);
  REQUIRE(back.size() == ds.size());
  CHECK(back.header.guidance_dim == ds.header.guidance_dim);
  for (size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.records[i].id == ds.records[i].id);
    CHECK(back.records[i].summary == ds.records[i].summary);
    CHECK(back.records[i].p_b == ds.records[i].p_b);
    CHECK(back.records[i].p_f == ds.records[i].p_f);
    for (int64_t j = 0; j < ds.records[i].features_b.numel(); ++j) {
      CHECK(back.records[i].features_b.data()[static_cast<size_t>(j)] ==
            ds.records[i].features_b.data()[static_cast<size_t>(j)]);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("dataset: validation errors carry line numbers and paths") {
  const auto dir = temp_dir("eie_ds_invalid");
  {
    std::ofstream f(dir / "dataset.jsonl");
    f << R"({"schema":"eie-dataset","version":1,"guidance_dim":2,"feature_tokens":1,"feature_dim":2})" << "\n";
    f << R"({"id":"r0","features_b":[[0.0,0.0]],"features_f":[[0.0,0.0]],"p_b":[0.5,1.5],"p_f":[0.1,0.2],"summary":"x y"})" << "\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains(":2:"), DataError);
  try {
    load_dataset(dir);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("1.5") != std::string::npos);
  }

  {
    std::ofstream f(dir / "dataset.jsonl");
    f << R"({"schema":"eie-dataset","version":1,"guidance_dim":2,"feature_tokens":1,"feature_dim":2})" << "\n";
    f << R"({"id":"r0","features_b":"features/gone.eiet","features_f":[[0.0,0.0]],"p_b":[0.5,0.5],"p_f":[0.1,0.2],"summary":"x y"})" << "\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("gone.eiet"), DataError);

  {
    std::ofstream f(dir / "dataset.jsonl");
    f << R"({"schema":"eie-dataset","version":1,"guidance_dim":2,"feature_tokens":1,"feature_dim":2})" << "\n";
    f << "{not json\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains(":2:"), DataError);

  {
    std::ofstream f(dir / "dataset.jsonl");
    f << R"({"schema":"eie-dataset","version":1,"guidance_dim":2,"feature_tokens":1,"feature_dim":2})" << "\n";
    f << R"({"id":"r0","features_b":[[0.0,0.0]],"features_f":[[0.0,0.0]],"p_b":[0.5,0.5],"p_f":[0.1,0.2],"summary":""})" << "\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("empty summary"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("dataset: inline feature arrays work for tiny fixtures") {
  const auto dir = temp_dir("eie_ds_inline");
  {
    std::ofstream f(dir / "dataset.jsonl");
    f << R"({"schema":"eie-dataset","version":1,"guidance_dim":2,"feature_tokens":2,"feature_dim":2})" << "\n";
    f << R"({"id":"r0","features_b":[[1.0,2.0],[3.0,4.0]],"features_f":[[0.0,0.0],[0.0,0.0]],"p_b":[0.5,0.5],"p_f":[0.1,0.2],"summary":"edema has improved"})" << "\n";
  }
  Dataset ds = load_dataset(dir);
  REQUIRE(ds.size() == 1);
  CHECK(ds.records[0].features_b.at({1, 0}) == 3.0f);
  fs::remove_all(dir);
}
