#include "data/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "core/error.hpp"
#include "data/tokenizer.hpp"
#include "json.hpp"

namespace eie {

const std::array<std::string, 8>& SpecialTokens::names() {
  static const std::array<std::string, 8> kNames = {"[PAD]", "[UNK]", "[CLS]",   "[BOS]",
                                                    "[EOS]", "[MASK]", "[Xray1]", "[Xray2]"};
  return kNames;
}

Vocabulary::Vocabulary() {
  for (const auto& name : SpecialTokens::names()) {
    word_to_id_[name] = static_cast<int>(id_to_word_.size());
    id_to_word_.push_back(name);
  }
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus, int min_freq) {
  if (corpus.empty()) throw UsageError("build_vocab: empty corpus");
  std::map<std::string, int64_t> freq;  // ordered map keeps ties lexicographic
  for (const auto& line : corpus) {
    for (const auto& tok : tokenize(line)) ++freq[tok];
  }
  std::vector<std::pair<std::string, int64_t>> entries(freq.begin(), freq.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (const auto& [word, count] : entries) {
    if (count < min_freq) continue;
    v.word_to_id_[word] = static_cast<int>(v.id_to_word_.size());
    v.id_to_word_.push_back(word);
  }
  return v;
}

int Vocabulary::id(const std::string& word) const {
  auto it = word_to_id_.find(word);
  return it == word_to_id_.end() ? SpecialTokens::kUnk : it->second;
}

bool Vocabulary::contains(const std::string& word) const {
  return word_to_id_.find(word) != word_to_id_.end();
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || id >= size()) throw UsageError("vocabulary id " + std::to_string(id) + " out of range");
  return id_to_word_[static_cast<size_t>(id)];
}

std::vector<int> Vocabulary::encode_words(const std::vector<std::string>& words) const {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(id(w));
  return ids;
}

std::vector<std::string> Vocabulary::decode_words(const std::vector<int>& ids) const {
  std::vector<std::string> words;
  words.reserve(ids.size());
  for (int i : ids) words.push_back(word(i));
  return words;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["format"] = "eie-vocab";
  j["version"] = 1;
  j["words"] = std::vector<std::string>(id_to_word_.begin() + SpecialTokens::kFirstWordId,
                                        id_to_word_.end());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write vocabulary: " + path.string());
  f << j.dump(2) << "\n";
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open vocabulary: " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed vocabulary json in " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "eie-vocab") throw DataError("not an eie vocabulary: " + path.string());
  Vocabulary v;
  for (const auto& w : j.at("words")) {
    const std::string word = w.get<std::string>();
    v.word_to_id_[word] = static_cast<int>(v.id_to_word_.size());
    v.id_to_word_.push_back(word);
  }
  return v;
}

}  // namespace eie
