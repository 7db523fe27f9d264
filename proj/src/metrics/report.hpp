#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "metrics/labeler.hpp"

namespace eie {

struct MetricReport {
  double bleu1 = 0, bleu2 = 0, bleu3 = 0, bleu4 = 0;
  double meteor = 0;  // METEOR-simplified (exact unigram stage only)
  double rouge_l = 0;
  double cider = 0;
  double acc5 = 0, acc14 = 0;
  size_t corpus_size = 0;
  std::vector<int64_t> bleu_matches;  // clipped n-gram matches, n = 1..4
  std::vector<int64_t> bleu_totals;

  nlohmann::json to_json() const;  // stable key set
  std::string table() const;      // human-readable
};

MetricReport evaluate_corpus(const std::vector<std::string>& hyps,
                             const std::vector<std::string>& refs, const LabelerRules& rules);

// Reads {"id", "hypothesis", "reference"} JSONL (as written by generate).
void read_hypotheses_jsonl(const std::filesystem::path& path, std::vector<std::string>* hyps,
                           std::vector<std::string>* refs, std::vector<std::string>* ids);

}  // namespace eie
