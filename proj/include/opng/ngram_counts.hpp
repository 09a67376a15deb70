#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "opng/tags.hpp"
#include "opng/textprep.hpp"

namespace opng {

// Corpus token IDs are packed 21 bits per position into one 64-bit key.
inline constexpr unsigned kKeyBits = 21;
inline constexpr std::uint32_t kMaxTokenTypes = 1u << kKeyBits;

inline constexpr std::uint64_t pack(std::uint32_t a, std::uint32_t b) noexcept {
  return (std::uint64_t{a} << kKeyBits) | b;
}
inline constexpr std::uint64_t pack(std::uint32_t a, std::uint32_t b, std::uint32_t c) noexcept {
  return (std::uint64_t{a} << (2 * kKeyBits)) | (std::uint64_t{b} << kKeyBits) | c;
}
inline constexpr std::uint32_t unpack_at(std::uint64_t key, unsigned pos, unsigned order) noexcept {
  return static_cast<std::uint32_t>((key >> ((order - 1 - pos) * kKeyBits)) & (kMaxTokenTypes - 1));
}

// Raw occurrence counts. Token types are interned in order of first
// appearance; the four tags always hold types 0..3.
struct NgramCounts {
  std::vector<std::string> types;
  std::unordered_map<std::string, std::uint32_t> type_index;
  std::vector<std::uint64_t> uni;  // indexed by type
  std::unordered_map<std::uint64_t, std::uint64_t> bi;
  std::unordered_map<std::uint64_t, std::uint64_t> tri;
  std::uint64_t total_tokens = 0;

  std::optional<std::uint32_t> type_of(std::string_view word) const;
  std::uint64_t count(std::string_view w1) const;
  std::uint64_t count(std::string_view w1, std::string_view w2) const;
  std::uint64_t count(std::string_view w1, std::string_view w2, std::string_view w3) const;

  std::size_t distinct_unigrams() const;  // types with count >= 1
  bool empty() const noexcept { return total_tokens == 0; }

  // "w1[ w2[ w3]]\tcount" lines, sorted bytewise.
  void dump(std::ostream& out) const;
};

// Corpus encoded as type IDs, one vector per sentence.
struct EncodedCorpus {
  std::vector<std::string> types;
  std::unordered_map<std::string, std::uint32_t> type_index;
  std::vector<std::vector<std::uint32_t>> sentences;
};

EncodedCorpus encode_corpus(std::span<const Sentence> sentences);

// Counts every within-sentence window of length 1..3. Shards sentences
// across OpenMP threads and merges the per-thread tables.
NgramCounts count_ngrams(std::span<const Sentence> sentences);
NgramCounts count_ngrams(const EncodedCorpus& corpus);

struct ModelCaps {
  std::uint64_t n_uni = 100'000;
  std::uint64_t n_bi = 200'000;
  std::uint64_t n_tri = 250'000;
  static constexpr int order = 3;

  void validate() const;
};

// Frequency-ranked vocabulary. IDs 0..3 are the tags; the remaining IDs are
// ordered by count descending, ties by word ascending.
struct Vocabulary {
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;  // corpus unigram count per ID
  std::unordered_map<std::string, WordId> ids;

  std::size_t size() const noexcept { return words.size(); }
  std::optional<WordId> find(std::string_view word) const;
  // Maps unknown words to <unk>.
  WordId lookup(std::string_view word) const;

  static Vocabulary from_words(std::vector<std::string> words, std::vector<std::uint64_t> counts);
};

Vocabulary select_vocabulary(const NgramCounts& counts, const ModelCaps& caps);

// Share of non-tag token mass covered by the vocabulary's non-tag words.
double coverage(const NgramCounts& counts, const Vocabulary& vocab);

namespace reference {
// Single-threaded counting kept as the oracle for the sharded kernel.
NgramCounts count_ngrams(const EncodedCorpus& corpus);
}  // namespace reference

}  // namespace opng
