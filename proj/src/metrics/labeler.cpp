#include "metrics/labeler.hpp"

#include <fstream>

#include "core/error.hpp"
#include "data/clinical_terms.hpp"
#include "data/tokenizer.hpp"

namespace eie {

namespace fs = std::filesystem;
using nlohmann::json;

const LabelerRules& LabelerRules::builtin() {
  static const LabelerRules kRules = [] {
    LabelerRules r;
    r.negators = {"no", "without", "resolved", "cleared"};
    r.uncertainty = {"may", "possible", "cannot exclude"};
    r.phrases = {
        /* pneumonia */ {"pneumonia", "pneumonic infiltrate"},
        /* fracture */ {"fracture", "fractures", "rib fracture"},
        /* consolidation */ {"consolidation", "consolidative opacity"},
        /* enlarged cardiomediastinum */
        {"enlarged cardiomediastinum", "cardiomediastinal enlargement", "widened mediastinum"},
        /* no finding */ {"no finding", "no acute findings"},
        /* pleural other */ {"pleural other", "pleural thickening", "pleural scarring"},
        /* cardiomegaly */ {"cardiomegaly", "enlarged heart", "cardiac silhouette"},
        /* pneumothorax */ {"pneumothorax"},
        /* atelectasis */ {"atelectasis", "atelectatic change"},
        /* support devices */
        {"support devices", "endotracheal tube", "central line", "pacemaker", "catheter"},
        /* edema */ {"edema", "pulmonary edema"},
        /* pleural effusion */ {"pleural effusion", "effusion", "effusions"},
        /* lung lesion */ {"lung lesion", "nodule", "mass"},
        /* lung opacity */ {"lung opacity", "opacity", "opacities", "airspace opacity"},
    };
    return r;
  }();
  return kRules;
}

LabelerRules LabelerRules::load(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open labeler rules: " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed labeler rules: " + std::string(e.what()));
  }
  LabelerRules r;
  r.version = j.value("version", 1);
  r.window = j.value("window", 3);
  r.negators = j.at("negators").get<std::vector<std::string>>();
  r.uncertainty = j.at("uncertainty").get<std::vector<std::string>>();
  const auto& obs = observations14();
  const json& table = j.at("observations");
  r.phrases.resize(obs.size());
  for (size_t i = 0; i < obs.size(); ++i) {
    bool found = false;
    for (const auto& entry : table) {
      if (entry.at("name").get<std::string>() != obs[i]) continue;
      r.phrases[i] = entry.at("phrases").get<std::vector<std::string>>();
      found = true;
      break;
    }
    if (!found) throw DataError("labeler rules lack observation '" + obs[i] + "'");
  }
  return r;
}

json LabelerRules::to_json() const {
  json obs = json::array();
  const auto& names = observations14();
  for (size_t i = 0; i < names.size(); ++i) {
    obs.push_back({{"name", names[i]}, {"phrases", phrases[i]}});
  }
  return {{"version", version},
          {"window", window},
          {"negators", negators},
          {"uncertainty", uncertainty},
          {"observations", obs}};
}

namespace {

// token-level phrase match at position i
bool phrase_at(const std::vector<std::string>& toks, size_t i,
               const std::vector<std::string>& phrase) {
  if (i + phrase.size() > toks.size()) return false;
  for (size_t k = 0; k < phrase.size(); ++k) {
    if (toks[i + k] != phrase[k]) return false;
  }
  return true;
}

bool window_has_marker(const std::vector<std::string>& toks, size_t phrase_start, int window,
                       const std::vector<std::vector<std::string>>& markers) {
  const size_t lo = phrase_start > static_cast<size_t>(window) ? phrase_start - window : 0;
  for (size_t i = lo; i < phrase_start; ++i) {
    for (const auto& m : markers) {
      if (phrase_at(toks, i, m)) return true;
    }
  }
  return false;
}

}  // namespace

ObservationLabels label_extract(const std::string& text, const LabelerRules& rules) {
  ObservationLabels labels{};
  const std::vector<std::string> toks = tokenize(text);
  if (toks.empty()) return labels;  // no mention -> all negative

  std::vector<std::vector<std::string>> markers;
  for (const auto& n : rules.negators) markers.push_back(tokenize(n));
  for (const auto& u : rules.uncertainty) markers.push_back(tokenize(u));

  for (size_t obs = 0; obs < rules.phrases.size() && obs < labels.size(); ++obs) {
    for (const auto& phrase_text : rules.phrases[obs]) {
      const std::vector<std::string> phrase = tokenize(phrase_text);
      if (phrase.empty()) continue;
      for (size_t i = 0; i < toks.size(); ++i) {
        if (!phrase_at(toks, i, phrase)) continue;
        if (window_has_marker(toks, i, rules.window, markers)) continue;
        labels[obs] = true;
        break;
      }
      if (labels[obs]) break;
    }
  }
  return labels;
}

namespace {

void check_labels(const std::vector<ObservationLabels>& hyp,
                  const std::vector<ObservationLabels>& ref) {
  if (hyp.empty()) throw UsageError("accuracy: empty corpus");
  if (hyp.size() != ref.size()) {
    throw DataError("accuracy: label list size mismatch, " + std::to_string(hyp.size()) + " vs " +
                    std::to_string(ref.size()));
  }
}

}  // namespace

double acc5(const std::vector<ObservationLabels>& hyp, const std::vector<ObservationLabels>& ref) {
  check_labels(hyp, ref);
  // indices of the 5 most common observations within the 14-vector
  std::vector<size_t> idx;
  const auto& all = observations14();
  for (const auto& name : observations5()) {
    for (size_t i = 0; i < all.size(); ++i) {
      if (all[i] == name) idx.push_back(i);
    }
  }
  int64_t agree = 0, total = 0;
  for (size_t e = 0; e < hyp.size(); ++e) {
    for (size_t i : idx) {
      agree += hyp[e][i] == ref[e][i] ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(total);
}

double acc14(const std::vector<ObservationLabels>& hyp, const std::vector<ObservationLabels>& ref) {
  check_labels(hyp, ref);
  double total = 0.0;
  for (size_t e = 0; e < hyp.size(); ++e) {
    int agree = 0;
    for (size_t i = 0; i < hyp[e].size(); ++i) agree += hyp[e][i] == ref[e][i] ? 1 : 0;
    total += static_cast<double>(agree) / static_cast<double>(hyp[e].size());
  }
  return total / static_cast<double>(hyp.size());
}

}  // namespace eie
