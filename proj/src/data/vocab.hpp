#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace eie {

// Fixed ids for the structural tokens. They occupy the lowest ids; word ids
// start at kFirstWordId.
struct SpecialTokens {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kBos = 3;
  static constexpr int kEos = 4;
  static constexpr int kMask = 5;
  static constexpr int kXray1 = 6;
  static constexpr int kXray2 = 7;
  static constexpr int kFirstWordId = 8;

  static const std::array<std::string, 8>& names();
};

class Vocabulary {
 public:
  Vocabulary();

  // Deterministic: words sorted by (frequency desc, lexicographic asc) after
  // the specials; words below min_freq are dropped and map to [UNK].
  static Vocabulary build(const std::vector<std::string>& corpus, int min_freq = 1);

  int size() const { return static_cast<int>(id_to_word_.size()); }
  int word_count() const { return size() - SpecialTokens::kFirstWordId; }

  // [UNK] for out-of-vocabulary words.
  int id(const std::string& word) const;
  bool contains(const std::string& word) const;
  const std::string& word(int id) const;
  static bool is_word_id(int id) { return id >= SpecialTokens::kFirstWordId; }

  std::vector<int> encode_words(const std::vector<std::string>& words) const;
  std::vector<std::string> decode_words(const std::vector<int>& ids) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return id_to_word_ == other.id_to_word_; }

 private:
  std::vector<std::string> id_to_word_;
  std::unordered_map<std::string, int> word_to_id_;
};

}  // namespace eie
