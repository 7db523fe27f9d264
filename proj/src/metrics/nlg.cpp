#include "metrics/nlg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <unordered_map>

#include "core/error.hpp"
#include "data/tokenizer.hpp"

namespace eie {

namespace {

void check_corpus(const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
  if (hyps.empty()) throw UsageError("metrics: empty corpus");
  if (hyps.size() != refs.size()) {
    throw DataError("metrics: corpus size mismatch, " + std::to_string(hyps.size()) +
                    " hypotheses vs " + std::to_string(refs.size()) + " references");
  }
}

// joined n-gram key; '\x1f' never appears in tokens
std::unordered_map<std::string, int> ngram_counts(const std::vector<std::string>& toks, int n) {
  std::unordered_map<std::string, int> counts;
  if (static_cast<int>(toks.size()) < n) return counts;
  for (size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key = toks[i];
    for (int k = 1; k < n; ++k) {
      key.push_back('\x1f');
      key += toks[i + static_cast<size_t>(k)];
    }
    ++counts[key];
  }
  return counts;
}

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace

BleuCounts bleu_counts(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                       int max_n) {
  check_corpus(hyps, refs);
  BleuCounts c;
  c.matches.assign(static_cast<size_t>(max_n), 0);
  c.totals.assign(static_cast<size_t>(max_n), 0);
  for (size_t i = 0; i < hyps.size(); ++i) {
    const auto h = tokenize(hyps[i]);
    const auto r = tokenize(refs[i]);
    c.hyp_len += static_cast<int64_t>(h.size());
    c.ref_len += static_cast<int64_t>(r.size());
    for (int n = 1; n <= max_n; ++n) {
      const auto hc = ngram_counts(h, n);
      const auto rc = ngram_counts(r, n);
      for (const auto& [gram, count] : hc) {
        c.totals[static_cast<size_t>(n - 1)] += count;
        auto it = rc.find(gram);
        if (it != rc.end()) {
          c.matches[static_cast<size_t>(n - 1)] += std::min(count, it->second);
        }
      }
    }
  }
  return c;
}

double bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs, int n) {
  if (n < 1) throw UsageError("bleu: order must be >= 1");
  const BleuCounts c = bleu_counts(hyps, refs, n);
  double log_prec = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double total = static_cast<double>(c.totals[static_cast<size_t>(k - 1)]);
    double p = total > 0.0 ? static_cast<double>(c.matches[static_cast<size_t>(k - 1)]) / total : 0.0;
    if (p <= 0.0) p = 1e-9;  // add-epsilon smoothing
    log_prec += std::log(p) / n;
  }
  double bp = 1.0;
  if (c.hyp_len < c.ref_len && c.hyp_len > 0) {
    bp = std::exp(1.0 - static_cast<double>(c.ref_len) / static_cast<double>(c.hyp_len));
  }
  return bp * std::exp(log_prec);
}

double rouge_l(const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
  check_corpus(hyps, refs);
  double total = 0.0;
  for (size_t i = 0; i < hyps.size(); ++i) {
    const auto h = tokenize(hyps[i]);
    const auto r = tokenize(refs[i]);
    const size_t lcs = lcs_length(h, r);
    if (lcs == 0 || h.empty() || r.empty()) continue;
    const double p = static_cast<double>(lcs) / static_cast<double>(h.size());
    const double rec = static_cast<double>(lcs) / static_cast<double>(r.size());
    total += 2.0 * p * rec / (p + rec);
  }
  return total / static_cast<double>(hyps.size());
}

double cider(const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
  check_corpus(hyps, refs);
  constexpr int kMaxN = 4;
  constexpr double kSigma = 6.0;
  const size_t n_docs = refs.size();

  // document frequency over the reference corpus
  std::array<std::unordered_map<std::string, int64_t>, kMaxN> df;
  std::vector<std::vector<std::string>> ref_toks(n_docs), hyp_toks(n_docs);
  for (size_t i = 0; i < n_docs; ++i) {
    ref_toks[i] = tokenize(refs[i]);
    hyp_toks[i] = tokenize(hyps[i]);
    for (int n = 1; n <= kMaxN; ++n) {
      for (const auto& [gram, cnt] : ngram_counts(ref_toks[i], n)) {
        ++df[static_cast<size_t>(n - 1)][gram];
      }
    }
  }
  const double log_docs = std::log(static_cast<double>(n_docs));

  auto tfidf = [&](const std::vector<std::string>& toks, int n) {
    std::unordered_map<std::string, double> vec;
    double norm_sq = 0.0;
    for (const auto& [gram, cnt] : ngram_counts(toks, n)) {
      const auto& table = df[static_cast<size_t>(n - 1)];
      auto it = table.find(gram);
      const double d = it == table.end() ? 0.0 : static_cast<double>(it->second);
      const double idf = log_docs - std::log(std::max(1.0, d));
      const double w = cnt * idf;
      vec[gram] = w;
      norm_sq += w * w;
    }
    return std::make_pair(std::move(vec), std::sqrt(norm_sq));
  };

  double corpus = 0.0;
  for (size_t i = 0; i < n_docs; ++i) {
    const double delta = static_cast<double>(hyp_toks[i].size()) -
                         static_cast<double>(ref_toks[i].size());
    const double len_penalty = std::exp(-delta * delta / (2.0 * kSigma * kSigma));
    double score_n_sum = 0.0;
    for (int n = 1; n <= kMaxN; ++n) {
      auto [hv, hnorm] = tfidf(hyp_toks[i], n);
      auto [rv, rnorm] = tfidf(ref_toks[i], n);
      double dot = 0.0;
      for (const auto& [gram, w] : hv) {
        auto it = rv.find(gram);
        if (it == rv.end()) continue;
        dot += std::min(w, it->second) * it->second;  // CIDEr-D clipping
      }
      double sim = 0.0;
      if (hnorm > 0.0 && rnorm > 0.0) sim = dot / (hnorm * rnorm);
      score_n_sum += sim * len_penalty;
    }
    corpus += 10.0 * score_n_sum / kMaxN;
  }
  return corpus / static_cast<double>(n_docs);
}

double meteor_simplified(const std::vector<std::string>& hyps,
                         const std::vector<std::string>& refs) {
  check_corpus(hyps, refs);
  double total = 0.0;
  for (size_t i = 0; i < hyps.size(); ++i) {
    const auto h = tokenize(hyps[i]);
    const auto r = tokenize(refs[i]);
    if (h.empty() || r.empty()) continue;

    // Exact-match alignment, left to right; each hypothesis token aligns to
    // an unused reference slot, preferring the one that continues the current
    // chunk, otherwise the leftmost.
    std::map<std::string, std::vector<size_t>> slots;
    for (size_t j = 0; j < r.size(); ++j) slots[r[j]].push_back(j);
    std::vector<bool> used(r.size(), false);
    int matches = 0;
    int chunks = 0;
    long prev_ref = -2;  // -2: outside any chunk
    for (const auto& tok : h) {
      auto it = slots.find(tok);
      if (it == slots.end()) {
        prev_ref = -2;
        continue;
      }
      long pick = -1;
      for (size_t cand : it->second) {
        if (used[cand]) continue;
        if (static_cast<long>(cand) == prev_ref + 1) {
          pick = static_cast<long>(cand);
          break;
        }
        if (pick < 0) pick = static_cast<long>(cand);
      }
      if (pick < 0) {
        prev_ref = -2;
        continue;
      }
      used[static_cast<size_t>(pick)] = true;
      ++matches;
      if (pick != prev_ref + 1) ++chunks;
      prev_ref = pick;
    }
    if (matches == 0) continue;
    const double p = static_cast<double>(matches) / static_cast<double>(h.size());
    const double rec = static_cast<double>(matches) / static_cast<double>(r.size());
    const double fmean = 10.0 * p * rec / (rec + 9.0 * p);
    const double frag = static_cast<double>(chunks) / static_cast<double>(matches);
    const double penalty = 0.5 * frag * frag * frag;
    total += fmean * (1.0 - penalty);
  }
  return total / static_cast<double>(hyps.size());
}

}  // namespace eie
