#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "opng/ngram_counts.hpp"
#include "opng/pruner.hpp"

namespace opng {

// log10 score written for entries without a usable probability (<s> as a
// prediction, zero-count tags).
inline constexpr double kNoProbLog10 = -99.0;

struct ArpaEntry {
  std::array<WordId, 3> ids{kNoWord, kNoWord, kNoWord};  // first `order` slots used
  double log10_score = 0.0;
};

// Stupid Backoff model in ARPA form: per-order entry lists with log10
// relative frequencies and no backoff column.
struct ArpaModel {
  std::vector<std::string> words;             // ID -> surface form
  std::array<std::vector<ArpaEntry>, 3> orders;  // index 0 = unigrams
  double lambda = 0.4;

  const std::vector<ArpaEntry>& unigrams() const { return orders[0]; }
  const std::vector<ArpaEntry>& bigrams() const { return orders[1]; }
  const std::vector<ArpaEntry>& trigrams() const { return orders[2]; }
};

// Unigram: log10(c(w) / tokens excluding <s>); bigram: log10(c12/c1);
// trigram: log10(c123/c12). Entries sorted by ID tuple.
ArpaModel assign_scores(const PrunedNgrams& pruned, const NgramCounts& counts, double lambda = 0.4);

// Throws Error if the stream goes bad mid-write.
void write_arpa(const ArpaModel& model, std::ostream& out);

// Words are resolved through `vocab`; unknown words map to <unk>.
ArpaModel read_arpa(std::istream& in, const Vocabulary& vocab);

std::string format_score(double log10_score);

}  // namespace opng
