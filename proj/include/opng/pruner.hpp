#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "opng/ngram_counts.hpp"

namespace opng {

struct PruneParams {
  double alpha = 0.4;  // backoff factor inside the trigram importance score
  ModelCaps caps;

  void validate() const;
};

struct Bigram {
  std::array<WordId, 2> ids;
  std::uint64_t count;
  bool operator==(const Bigram&) const = default;
};

struct Trigram {
  std::array<WordId, 3> ids;
  std::uint64_t count;
  bool operator==(const Trigram&) const = default;
};

// Kept n-grams in vocabulary ID space, each list sorted by ID tuple.
struct PrunedNgrams {
  Vocabulary vocab;
  std::vector<Bigram> bigrams;
  std::vector<Trigram> trigrams;
};

struct PruneReport {
  std::size_t bigram_candidates = 0;
  std::size_t bigrams_kept = 0;
  std::size_t trigram_candidates = 0;
  std::size_t trigrams_kept = 0;
  double min_kept_trigram_score = 0.0;

  void print(std::ostream& out) const;
};

// c123 * (c123/c12 - alpha * c12/c1). Throws when a lower-order count is 0
// or exceeds its context.
double trigram_score(std::uint64_t c123, std::uint64_t c12, std::uint64_t c1, double alpha);
double trigram_score(const NgramCounts& counts, std::string_view w1, std::string_view w2, std::string_view w3,
                     double alpha);

struct TrigramCandidate {
  std::array<WordId, 3> ids;
  std::uint64_t c123, c12, c1;
};

// Scores candidates in parallel; output[i] belongs to candidates[i].
std::vector<double> score_trigrams(std::span<const TrigramCandidate> candidates, double alpha);

// Count-pruned bigrams, then score-pruned trigrams whose context bigram
// survived. Closure holds by construction.
PrunedNgrams prune(const NgramCounts& counts, const Vocabulary& vocab, const PruneParams& params,
                   PruneReport* report = nullptr);

// Independent scan for dangling references; empty result means closed.
std::vector<std::string> closure_violations(const PrunedNgrams& pruned);

namespace reference {
std::vector<double> score_trigrams(std::span<const TrigramCandidate> candidates, double alpha);
}  // namespace reference

}  // namespace opng
