#pragma once

// Fixtures, brute-force oracles and synthetic model generators shared by the
// unit tests and the acceptance runner. The oracles deliberately avoid the
// library's index structures: they work on strings, std::map and full scans.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "opng/engine.hpp"
#include "opng/evalkit.hpp"
#include "opng/pipeline.hpp"

namespace opng::test {

std::filesystem::path data_path(const std::string& name);

// SOTU 1961-1971 after cleaning only (no blacklist, no rare tagging).
const std::vector<Sentence>& sotu_clean();
// Leading sentences of sotu_clean() holding at most `max_tokens` tokens,
// framing tags included.
std::vector<Sentence> sotu_prefix(std::size_t max_tokens);

// Bare words of a framed sentence.
std::vector<std::string> words_of(const Sentence& s);

// Deletes itself on scope exit.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Build manifest for the hand-written tiny fixture (absolute paths; output
// left empty).
BuildManifest tiny_manifest();
ModelBundle build_tiny();
Engine engine_of(const ModelBundle& b, std::size_t k = 3);

namespace oracle {

using Gram = std::vector<std::string>;

struct Counts {
  std::map<Gram, std::uint64_t> grams;  // orders 1..3
  std::uint64_t tokens = 0;
  std::uint64_t get(const Gram& g) const;
};
Counts count(std::span<const Sentence> sentences);

struct Pruned {
  std::vector<std::string> vocab;  // tags first, then count desc, word asc
  std::set<std::array<std::string, 2>> bigrams;
  std::set<std::array<std::string, 3>> trigrams;
};
Pruned prune(const Counts& counts, const ModelCaps& caps, double alpha);

// Full-vocabulary evaluation of the backoff cascade straight from the
// decoded file structures.
class Scorer {
 public:
  Scorer(const DataModel& data, const std::optional<ClassTables>& classes, const EngineConfig& config);

  double score(WordId w, WordId c1, WordId c2) const;
  std::vector<std::pair<WordId, double>> predict(WordId c1, WordId c2, std::size_t k) const;
  std::vector<std::pair<WordId, double>> complete(const std::vector<std::string>& words, WordId c1, WordId c2,
                                                  const std::string& prefix, std::size_t k) const;

 private:
  std::vector<std::pair<WordId, double>> rank(const std::vector<WordId>& pool, WordId c1, WordId c2,
                                              std::size_t k) const;

  std::map<std::pair<WordId, WordId>, double> bi_;
  std::map<std::array<WordId, 3>, double> tri_;
  std::vector<double> uni_;
  std::optional<ClassTables> classes_;
  std::vector<double> emission_;
  FwoTables fwo_;
  EngineConfig config_;
};

// Per-word minimum cost search, written independently of simulate_typing.
TypingResult simulate(const std::vector<std::string>& sentence, const SuggestionSource& source, std::size_t k);

}  // namespace oracle

// Synthetic models ----------------------------------------------------------

struct SyntheticSpec {
  std::size_t vocab = 10'000;      // including the four tags
  std::size_t bigrams = 20'000;
  std::size_t trigrams = 25'000;
  std::size_t k = 3;
  std::size_t n_classes = 32;
  std::size_t class_k = 10;
  std::uint64_t seed = 1;
};

struct Synthetic {
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  VocabTrie trie;
  DataModel data;
  ClassTables classes;

  void write(const std::string& basename) const;
  Engine engine(std::size_t k = 3) const;
};

Synthetic make_synthetic(const SyntheticSpec& spec);

// Zipf-ish sentences over a synthetic vocabulary.
TestSet synthetic_testset(const Synthetic& model, std::size_t sentences, std::size_t words_per_sentence,
                          std::uint64_t seed);

}  // namespace opng::test

namespace opng::test {

// Compares `bytes` with tests/data/golden/<name>. With OPNG_UPDATE_GOLDEN set
// in the environment the file is rewritten instead (audit the diff by hand).
bool matches_golden(const std::string& name, const std::vector<std::uint8_t>& bytes);
bool matches_golden(const std::string& name, const std::string& text);

}  // namespace opng::test
