#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "opng/ngram_counts.hpp"

namespace opng {

// word -> class label, one label per word ("word<TAB>LABEL" lines).
struct ClassLexicon {
  std::unordered_map<std::string, std::string> entries;
};

ClassLexicon read_lexicon(std::istream& in);

inline constexpr std::size_t kMaxClasses = 256;
inline constexpr const char* kOtherLabel = "OTHER";

struct ClassAssignment {
  std::vector<std::string> labels;     // class ID -> label; last is OTHER
  std::vector<std::uint8_t> word_class;  // vocabulary ID -> class ID

  std::size_t n_classes() const noexcept { return labels.size(); }
  std::uint8_t other() const noexcept { return static_cast<std::uint8_t>(labels.size() - 1); }
};

// The (max_classes - 1) labels with the largest mapped-word count mass get
// IDs 0.. in that order (ties by label); everything else, tags included,
// falls into the trailing OTHER class.
ClassAssignment build_word_class(const ClassLexicon& lexicon, const Vocabulary& vocab, std::size_t max_classes);

struct ClassModel {
  std::vector<std::string> labels;
  std::vector<std::uint8_t> word_class;
  std::size_t k = 0;
  // per class: up to k non-tag word IDs by P(w|C) descending, ID ascending
  std::vector<std::vector<WordId>> topk;
  std::vector<std::vector<double>> emission;  // parallel to topk
  std::vector<std::uint8_t> pair_argmax;     // [ci * n + cj]

  std::size_t n_classes() const noexcept { return labels.size(); }
  std::uint8_t other() const noexcept { return static_cast<std::uint8_t>(labels.size() - 1); }
  std::uint8_t argmax(std::uint8_t ci, std::uint8_t cj) const { return pair_argmax[ci * n_classes() + cj]; }
};

// Emission P(w|C) = c(w) / sum of c(w') over non-tag members of C. Class
// transitions come from the corpus trigram counts mapped to class triples;
// trigrams ending in a tag are skipped. Unseen pairs map to OTHER.
ClassModel build_class_stats(const NgramCounts& counts, const Vocabulary& vocab, const ClassAssignment& assignment,
                             std::size_t k);

// Full emission table P(w|C) for every non-tag word (before top-k
// truncation).
std::vector<double> emission_table(const Vocabulary& vocab, const ClassAssignment& assignment);

// P(w|class(w)) * [class(w) == argmax(ci, cj)], with emission 0 for words
// outside their class's top-k.
double class_probability(WordId w, std::uint8_t ci, std::uint8_t cj, const ClassModel& model);

}  // namespace opng
