#pragma once

#include <string>
#include <vector>

namespace eie {

// Corpus-level text generation metrics over aligned (hypothesis, reference)
// pairs, one reference per hypothesis. All of them tokenize with the shared
// project tokenizer.

// Corpus BLEU-n: modified n-gram precision with uniform weights over 1..n,
// corpus-level brevity penalty, add-epsilon (1e-9) smoothing of zero
// precisions.
double bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs, int n);

struct BleuCounts {
  std::vector<int64_t> matches;  // clipped n-gram matches, index n-1
  std::vector<int64_t> totals;   // hypothesis n-gram counts
  int64_t hyp_len = 0;
  int64_t ref_len = 0;
};
BleuCounts bleu_counts(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                       int max_n);

// Mean over pairs of the LCS F-measure with beta = 1:
// R = LCS/|ref|, P = LCS/|hyp|, F = 2PR/(P+R), 0 when the LCS is empty.
double rouge_l(const std::vector<std::string>& hyps, const std::vector<std::string>& refs);

// CIDEr-D: n-grams 1..4, TF-IDF over the reference corpus with
// idf = log(N / max(1, df)), clipped cosine per n, Gaussian length penalty
// sigma = 6, scaled by 10, averaged over n then over the corpus.
double cider(const std::vector<std::string>& hyps, const std::vector<std::string>& refs);

// Exact-unigram-match METEOR (no stemming or synonym stages):
// Fmean = 10PR/(R+9P), penalty = 0.5*(chunks/matches)^3,
// score = Fmean*(1-penalty); mean over pairs. Reported as
// "METEOR-simplified".
double meteor_simplified(const std::vector<std::string>& hyps,
                         const std::vector<std::string>& refs);

}  // namespace eie
