#include "data/clinical_terms.hpp"

namespace eie {

const std::vector<std::string>& observations14() {
  static const std::vector<std::string> kObs = {
      "pneumonia",       "fracture",        "consolidation", "enlarged cardiomediastinum",
      "no finding",      "pleural other",   "cardiomegaly",  "pneumothorax",
      "atelectasis",     "support devices", "edema",         "pleural effusion",
      "lung lesion",     "lung opacity",
  };
  return kObs;
}

const std::vector<std::string>& observations5() {
  static const std::vector<std::string> kObs = {
      "atelectasis", "cardiomegaly", "consolidation", "edema", "pleural effusion",
  };
  return kObs;
}

const std::vector<std::string>& entity_phrases() {
  static const std::vector<std::string> kEntities = {
      "atelectasis",   "edema",        "pneumothorax",     "cardiomegaly", "consolidation",
      "cardiac silhouette", "fracture", "lung opacity",    "pleural effusion", "pneumonia",
  };
  return kEntities;
}

int guidance_slot(const std::string& phrase, int guidance_dim) {
  const auto& table = guidance_dim == 14 ? observations14() : observations5();
  for (size_t i = 0; i < table.size(); ++i) {
    if (table[i] == phrase) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace eie
