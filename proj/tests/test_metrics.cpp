#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "core/error.hpp"
#include "data/clinical_terms.hpp"
#include "data/tokenizer.hpp"
#include "doctest.h"
#include "metrics/nlg.hpp"
#include "metrics/report.hpp"

using namespace eie;

// ---------------------------------------------------------------------------
// Independent brute-force oracles. Deliberately written with different data
// structures (token-vector keys, no hashing tricks) than the implementations
// they check.
namespace oracle {

using Words = std::vector<std::string>;

std::map<Words, int> grams(const Words& toks, int n) {
  std::map<Words, int> out;
  for (int i = 0; i + n <= static_cast<int>(toks.size()); ++i) {
    out[Words(toks.begin() + i, toks.begin() + i + n)]++;
  }
  return out;
}

double bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs, int n) {
  std::vector<int64_t> match(static_cast<size_t>(n), 0), total(static_cast<size_t>(n), 0);
  int64_t hyp_len = 0, ref_len = 0;
  for (size_t i = 0; i < hyps.size(); ++i) {
    const Words h = tokenize(hyps[i]);
    const Words r = tokenize(refs[i]);
    hyp_len += static_cast<int64_t>(h.size());
    ref_len += static_cast<int64_t>(r.size());
    for (int k = 1; k <= n; ++k) {
      auto hg = grams(h, k);
      auto rg = grams(r, k);
      for (const auto& [g, c] : hg) {
        total[static_cast<size_t>(k - 1)] += c;
        if (rg.count(g)) match[static_cast<size_t>(k - 1)] += std::min(c, rg[g]);
      }
    }
  }
  double logp = 0;
  for (int k = 0; k < n; ++k) {
    double p = total[static_cast<size_t>(k)]
                   ? static_cast<double>(match[static_cast<size_t>(k)]) /
                         static_cast<double>(total[static_cast<size_t>(k)])
                   : 0.0;
    if (p <= 0) p = 1e-9;
    logp += std::log(p);
  }
  double bp = hyp_len < ref_len && hyp_len > 0
                  ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len))
                  : 1.0;
  return bp * std::exp(logp / n);
}

double cider(const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
  const int kN = 4;
  const double sigma = 6.0;
  const size_t docs = refs.size();
  std::vector<std::map<Words, int>> df(static_cast<size_t>(kN));
  for (const auto& r : refs) {
    const Words toks = tokenize(r);
    for (int n = 1; n <= kN; ++n) {
      for (const auto& [g, c] : grams(toks, n)) df[static_cast<size_t>(n - 1)][g] += 1;
    }
  }
  double corpus = 0;
  for (size_t i = 0; i < docs; ++i) {
    const Words h = tokenize(hyps[i]);
    const Words r = tokenize(refs[i]);
    const double delta = static_cast<double>(h.size()) - static_cast<double>(r.size());
    double per_n = 0;
    for (int n = 1; n <= kN; ++n) {
      auto hv = grams(h, n);
      auto rv = grams(r, n);
      auto weight = [&](const Words& g, int count) {
        const auto& table = df[static_cast<size_t>(n - 1)];
        const double d = table.count(g) ? static_cast<double>(table.at(g)) : 0.0;
        return count * std::log(static_cast<double>(docs) / std::max(1.0, d));
      };
      double dot = 0, hn = 0, rn = 0;
      for (const auto& [g, c] : hv) hn += weight(g, c) * weight(g, c);
      for (const auto& [g, c] : rv) rn += weight(g, c) * weight(g, c);
      for (const auto& [g, c] : hv) {
        if (!rv.count(g)) continue;
        dot += std::min(weight(g, c), weight(g, rv[g])) * weight(g, rv[g]);
      }
      double sim = hn > 0 && rn > 0 ? dot / (std::sqrt(hn) * std::sqrt(rn)) : 0.0;
      per_n += sim * std::exp(-delta * delta / (2 * sigma * sigma));
    }
    corpus += 10.0 * per_n / kN;
  }
  return corpus / static_cast<double>(docs);
}

double rouge(const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
  double total = 0;
  for (size_t i = 0; i < hyps.size(); ++i) {
    const Words a = tokenize(hyps[i]);
    const Words b = tokenize(refs[i]);
    std::vector<std::vector<size_t>> dp(a.size() + 1, std::vector<size_t>(b.size() + 1, 0));
    for (size_t x = 1; x <= a.size(); ++x) {
      for (size_t y = 1; y <= b.size(); ++y) {
        dp[x][y] = a[x - 1] == b[y - 1] ? dp[x - 1][y - 1] + 1
                                        : std::max(dp[x - 1][y], dp[x][y - 1]);
      }
    }
    const double lcs = static_cast<double>(dp[a.size()][b.size()]);
    if (lcs == 0) continue;
    const double p = lcs / static_cast<double>(a.size());
    const double r = lcs / static_cast<double>(b.size());
    total += 2 * p * r / (p + r);
  }
  return total / static_cast<double>(hyps.size());
}

// counting oracles for the accuracies
double acc5_counting(const std::vector<ObservationLabels>& h,
                     const std::vector<ObservationLabels>& r) {
  const std::vector<std::string> five = observations5();
  int64_t ok = 0, n = 0;
  for (size_t e = 0; e < h.size(); ++e) {
    for (const auto& name : five) {
      size_t idx = 0;
      const auto& all = observations14();
      for (size_t i = 0; i < all.size(); ++i) {
        if (all[i] == name) idx = i;
      }
      ok += h[e][idx] == r[e][idx];
      ++n;
    }
  }
  return static_cast<double>(ok) / static_cast<double>(n);
}

double acc14_counting(const std::vector<ObservationLabels>& h,
                      const std::vector<ObservationLabels>& r) {
  double s = 0;
  for (size_t e = 0; e < h.size(); ++e) {
    int ok = 0;
    for (size_t i = 0; i < 14; ++i) ok += h[e][i] == r[e][i];
    s += ok / 14.0;
  }
  return s / static_cast<double>(h.size());
}

}  // namespace oracle

namespace {

// small random corpora over a fixed word pool
std::vector<std::string> random_corpus(std::mt19937& gen, size_t n, int min_len, int max_len) {
  static const std::vector<std::string> kPool = {
      "pleural", "effusion", "edema",  "has",   "improved", "worsened", "stable",
      "is",      "new",      "there",  "no",    "lung",     "opacity",  "and",
      "while",   "small",    "large",  "right", "left",     "basilar"};
  std::vector<std::string> out;
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<size_t> pick(0, kPool.size() - 1);
  for (size_t i = 0; i < n; ++i) {
    std::string s;
    const int L = len(gen);
    for (int k = 0; k < L; ++k) {
      if (k) s += ' ';
      s += kPool[pick(gen)];
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("bleu: identity corpus scores exactly 1 for every order") {
  const std::vector<std::string> c = {"pleural effusion has improved", "there is new edema",
                                      "lung opacity is stable"};
  for (int n = 1; n <= 4; ++n) CHECK(bleu(c, c, n) == 1.0);
}

TEST_CASE("bleu: brevity penalty hand example") {
  // hyp "the cat" vs ref "the cat is here": p1 = 1, BP = exp(1 - 4/2)
  const double got = bleu({"the cat"}, {"the cat is here"}, 1);
  CHECK(got == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("bleu: matches the brute-force oracle on random corpora") {
  std::mt19937 gen(2024);
  for (int trial = 0; trial < 20; ++trial) {
    auto hyps = random_corpus(gen, 20, 1, 12);
    auto refs = random_corpus(gen, 20, 1, 12);
    for (int n = 1; n <= 4; ++n) {
      CHECK(bleu(hyps, refs, n) == doctest::Approx(oracle::bleu(hyps, refs, n)).epsilon(1e-9));
    }
  }
}

TEST_CASE("bleu: empty corpus is an error") {
  CHECK_THROWS_AS(bleu({}, {}, 1), UsageError);
  CHECK_THROWS_AS(bleu({"a"}, {"a", "b"}, 1), DataError);
}

TEST_CASE("rouge_l: identity, hand LCS example, disjoint") {
  CHECK(rouge_l({"a b c"}, {"a b c"}) == 1.0);
  // LCS = 3: R = 3/4, P = 1 -> F = 6/7
  CHECK(rouge_l({"pleural effusion improved"}, {"pleural effusion has improved"}) ==
        doctest::Approx(6.0 / 7.0).epsilon(1e-12));
  CHECK(rouge_l({"alpha beta"}, {"gamma delta"}) == 0.0);
}

TEST_CASE("rouge_l: matches the oracle on random corpora") {
  std::mt19937 gen(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto hyps = random_corpus(gen, 15, 1, 10);
    auto refs = random_corpus(gen, 15, 1, 10);
    CHECK(rouge_l(hyps, refs) == doctest::Approx(oracle::rouge(hyps, refs)).epsilon(1e-12));
  }
}

TEST_CASE("cider: identity corpus matches the oracle near the ceiling") {
  const std::vector<std::string> refs = {"pleural effusion has improved",
                                         "there is new edema today",
                                         "lung opacity is stable overall",
                                         "cardiomegaly has worsened since the prior"};
  const double got = cider(refs, refs);
  CHECK(got == doctest::Approx(oracle::cider(refs, refs)).epsilon(1e-6));
  CHECK(got > 9.0);
  CHECK(got <= 10.0 + 1e-9);
}

TEST_CASE("cider: disjoint pair contributes zero") {
  const std::vector<std::string> hyps = {"alpha beta gamma", "pleural effusion has improved"};
  const std::vector<std::string> refs = {"delta epsilon zeta", "pleural effusion has improved"};
  const double with_pair = cider(hyps, refs);
  // first pair shares no n-gram: the corpus score is half of the second's
  const double second_only = cider({hyps[1], hyps[1]}, {refs[1], refs[1]});
  (void)second_only;
  CHECK(with_pair == doctest::Approx(oracle::cider(hyps, refs)).epsilon(1e-6));
  const std::vector<std::string> only_disjoint = {"alpha beta", "x y"};
  const std::vector<std::string> only_disjoint_refs = {"c d", "e f"};
  CHECK(cider(only_disjoint, only_disjoint_refs) == 0.0);
}

TEST_CASE("cider: matches the oracle on random corpora") {
  std::mt19937 gen(99);
  for (int trial = 0; trial < 20; ++trial) {
    auto hyps = random_corpus(gen, 20, 2, 12);
    auto refs = random_corpus(gen, 20, 2, 12);
    CHECK(cider(hyps, refs) == doctest::Approx(oracle::cider(hyps, refs)).epsilon(1e-6));
  }
}

TEST_CASE("meteor: spec closed-form examples") {
  // single word identity: P=R=1, Fmean=1, chunks=1, matches=1 -> 0.5
  CHECK(meteor_simplified({"edema"}, {"edema"}) == doctest::Approx(0.5).epsilon(1e-12));
  // 10-word identity, one chunk: 1 - 0.5 * (1/10)^3
  const std::string ten = "a b c d e f g h i j";
  CHECK(meteor_simplified({ten}, {ten}) == doctest::Approx(0.9995).epsilon(1e-12));
  CHECK(meteor_simplified({"alpha beta"}, {"gamma delta"}) == 0.0);
}

TEST_CASE("meteor: fragmented matches are penalized") {
  // same unigrams, scrambled order -> more chunks -> lower score
  const double in_order = meteor_simplified({"a b c d"}, {"a b c d"});
  const double scrambled = meteor_simplified({"d c b a"}, {"a b c d"});
  CHECK(scrambled < in_order);
}

TEST_CASE("labeler: positive mention, negation window, uncertainty, empty text") {
  const auto& rules = LabelerRules::builtin();
  ObservationLabels l = label_extract("pleural effusion has increased", rules);
  const auto& names = observations14();
  for (size_t i = 0; i < names.size(); ++i) {
    CHECK(l[i] == (names[i] == "pleural effusion"));
  }

  ObservationLabels none = label_extract("no pneumothorax", rules);
  for (size_t i = 0; i < 14; ++i) CHECK(none[i] == false);

  ObservationLabels uncertain = label_extract("possible pneumonia in the right lobe", rules);
  CHECK(uncertain[0] == false);  // pneumonia is observation 0

  ObservationLabels empty = label_extract("", rules);
  for (size_t i = 0; i < 14; ++i) CHECK(empty[i] == false);
}

TEST_CASE("labeler: negation window is three tokens") {
  const auto& rules = LabelerRules::builtin();
  // negator 3 tokens before the phrase start: still inside the window
  CHECK(label_extract("no evidence of pneumothorax", rules)[7] == false);
  // negator 4 tokens before: outside the window
  CHECK(label_extract("no evidence at all of pneumothorax", rules)[7] == true);
}

TEST_CASE("labeler: shipped rule table matches the builtin") {
  const LabelerRules loaded = LabelerRules::load("config/observation_rules.json");
  CHECK(loaded.to_json() == LabelerRules::builtin().to_json());
}

TEST_CASE("acc5/acc14: identity, counting examples, skew distinguishes them") {
  std::vector<ObservationLabels> ref(2);
  ref[0].fill(true);
  ref[1].fill(false);
  CHECK(acc5(ref, ref) == 1.0);
  CHECK(acc14(ref, ref) == 1.0);

  // one wrong slot among the 10 pooled acc5 slots
  std::vector<ObservationLabels> hyp = ref;
  hyp[0][8] = false;  // atelectasis slot
  CHECK(acc5(hyp, ref) == doctest::Approx(0.9));

  // one example 7/14 correct
  std::vector<ObservationLabels> single_ref(1);
  single_ref[0].fill(false);
  std::vector<ObservationLabels> single_hyp(1);
  single_hyp[0].fill(false);
  for (int i = 0; i < 7; ++i) single_hyp[0][static_cast<size_t>(i)] = true;
  CHECK(acc14(single_hyp, single_ref) == doctest::Approx(0.5));

  // skewed case: errors concentrated outside the acc5 observations
  std::vector<ObservationLabels> skew_ref(2), skew_hyp(2);
  skew_ref[0].fill(false);
  skew_ref[1].fill(false);
  skew_hyp[0].fill(false);
  skew_hyp[1].fill(false);
  skew_hyp[0][0] = true;  // pneumonia: not in the acc5 set
  skew_hyp[0][1] = true;  // fracture
  CHECK(acc5(skew_hyp, skew_ref) == 1.0);
  CHECK(acc14(skew_hyp, skew_ref) < 1.0);
}

TEST_CASE("acc5/acc14 equal their counting oracles on random labels") {
  std::mt19937 gen(5);
  std::bernoulli_distribution coin(0.4);
  std::vector<ObservationLabels> h(50), r(50);
  for (size_t e = 0; e < 50; ++e) {
    for (size_t i = 0; i < 14; ++i) {
      h[e][i] = coin(gen);
      r[e][i] = coin(gen);
    }
  }
  CHECK(acc5(h, r) == oracle::acc5_counting(h, r));
  CHECK(acc14(h, r) == oracle::acc14_counting(h, r));
}

TEST_CASE("metrics are permutation invariant over corpus order") {
  std::mt19937 gen(11);
  auto hyps = random_corpus(gen, 12, 2, 10);
  auto refs = random_corpus(gen, 12, 2, 10);
  std::vector<size_t> perm(hyps.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), gen);
  std::vector<std::string> ph, pr;
  for (size_t i : perm) {
    ph.push_back(hyps[i]);
    pr.push_back(refs[i]);
  }
  for (int n = 1; n <= 4; ++n) {
    CHECK(bleu(hyps, refs, n) == doctest::Approx(bleu(ph, pr, n)).epsilon(1e-12));
  }
  CHECK(rouge_l(hyps, refs) == doctest::Approx(rouge_l(ph, pr)).epsilon(1e-12));
  CHECK(cider(hyps, refs) == doctest::Approx(cider(ph, pr)).epsilon(1e-12));
  CHECK(meteor_simplified(hyps, refs) == doctest::Approx(meteor_simplified(ph, pr)).epsilon(1e-12));
}

TEST_CASE("metric report: stable json key set") {
  const std::vector<std::string> c = {"edema has improved", "pleural effusion is stable"};
  MetricReport r = evaluate_corpus(c, c, LabelerRules::builtin());
  const auto j = r.to_json();
  const std::vector<std::string> keys = {"bleu1", "bleu2",   "bleu3", "bleu4", "meteor",
                                         "rouge_l", "cider", "acc5",  "acc14", "counts"};
  CHECK(j.size() == keys.size());
  for (const auto& k : keys) CHECK(j.contains(k));
  CHECK(j["bleu1"] == 1.0);
  CHECK(j["rouge_l"] == 1.0);
  CHECK(j["acc5"] == 1.0);
  CHECK(r.table().find("CIDEr") != std::string::npos);
}
