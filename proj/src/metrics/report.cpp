#include "metrics/report.hpp"

#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "metrics/nlg.hpp"

namespace eie {

using nlohmann::json;

json MetricReport::to_json() const {
  return {{"bleu1", bleu1},
          {"bleu2", bleu2},
          {"bleu3", bleu3},
          {"bleu4", bleu4},
          {"meteor", meteor},
          {"rouge_l", rouge_l},
          {"cider", cider},
          {"acc5", acc5},
          {"acc14", acc14},
          {"counts",
           {{"corpus_size", corpus_size},
            {"bleu_matches", bleu_matches},
            {"bleu_totals", bleu_totals}}}};
}

std::string MetricReport::table() const {
  std::ostringstream os;
  os << "metric             value\n";
  os << "-----------------  ------\n";
  auto row = [&os](const char* name, double v) {
    os << name;
    for (size_t i = std::string(name).size(); i < 19; ++i) os << ' ';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    os << buf << "\n";
  };
  row("BLEU-1", bleu1);
  row("BLEU-2", bleu2);
  row("BLEU-3", bleu3);
  row("BLEU-4", bleu4);
  row("METEOR-simplified", meteor);
  row("ROUGE-L", rouge_l);
  row("CIDEr", cider);
  row("Acc5", acc5);
  row("Acc14", acc14);
  os << "pairs: " << corpus_size << "\n";
  return os.str();
}

MetricReport evaluate_corpus(const std::vector<std::string>& hyps,
                             const std::vector<std::string>& refs, const LabelerRules& rules) {
  MetricReport r;
  r.corpus_size = hyps.size();
  r.bleu1 = bleu(hyps, refs, 1);
  r.bleu2 = bleu(hyps, refs, 2);
  r.bleu3 = bleu(hyps, refs, 3);
  r.bleu4 = bleu(hyps, refs, 4);
  r.meteor = meteor_simplified(hyps, refs);
  r.rouge_l = rouge_l(hyps, refs);
  r.cider = cider(hyps, refs);
  const BleuCounts counts = bleu_counts(hyps, refs, 4);
  r.bleu_matches = counts.matches;
  r.bleu_totals = counts.totals;
  std::vector<ObservationLabels> hl, rl;
  hl.reserve(hyps.size());
  rl.reserve(refs.size());
  for (size_t i = 0; i < hyps.size(); ++i) {
    hl.push_back(label_extract(hyps[i], rules));
    rl.push_back(label_extract(refs[i], rules));
  }
  r.acc5 = acc5(hl, rl);
  r.acc14 = acc14(hl, rl);
  return r;
}

void read_hypotheses_jsonl(const std::filesystem::path& path, std::vector<std::string>* hyps,
                           std::vector<std::string>* refs, std::vector<std::string>* ids) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open hypotheses: " + path.string());
  std::string line;
  size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed json: " +
                      e.what());
    }
    hyps->push_back(j.at("hypothesis").get<std::string>());
    refs->push_back(j.at("reference").get<std::string>());
    if (ids) ids->push_back(j.value("id", ""));
  }
}

}  // namespace eie
