#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "opng/arpa.hpp"
#include "opng/binfmt.hpp"
#include "opng/class_model.hpp"
#include "opng/ngram_counts.hpp"
#include "opng/pruner.hpp"
#include "opng/textprep.hpp"
#include "opng/vocab_trie.hpp"

namespace opng {

// Everything cmd_build needs. Can be read from "key = value" text.
struct BuildManifest {
  std::vector<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> blacklist;
  std::optional<std::filesystem::path> lexicon;
  ModelCaps caps;
  std::uint64_t rare_threshold = 3;
  std::size_t k = 3;
  double lambda = 0.4;
  double r = 0.5;
  double alpha = 0.4;
  std::size_t max_classes = 32;
  std::size_t class_k = 10;  // words kept per class
  std::optional<std::uint64_t> byte_budget;
  bool lowercase = true;
  std::string output;

  // Sets one field from its manifest key; throws Error on unknown keys or
  // malformed values.
  void set(const std::string& key, const std::string& value);
  // Checks ranges and that every referenced input exists.
  void validate() const;

  // Blank lines and '#' comments are ignored. Relative paths resolve
  // against `base_dir`.
  static BuildManifest parse(std::istream& in, const std::filesystem::path& base_dir = {});
  static BuildManifest load(const std::filesystem::path& file);
};

struct BuildReport {
  CleanSummary clean;
  std::uint64_t rare_tagged = 0;
  std::uint64_t blacklisted = 0;
  std::uint64_t total_tokens = 0;
  std::size_t unigram_types = 0;
  std::size_t bigram_types = 0;
  std::size_t trigram_types = 0;
  std::size_t vocab_size = 0;
  PruneReport prune;
  double coverage = 0.0;
  std::size_t n_classes = 0;
  std::uint64_t vocab_bytes = 0, ngram_bytes = 0, class_bytes = 0;
  std::size_t payload_bytes = 0;

  void print(std::ostream& out) const;
};

// In-memory result of the whole build pipeline.
struct ModelBundle {
  NgramCounts counts;
  PrunedNgrams pruned;
  ArpaModel arpa;
  VocabTrie trie;
  DataModel data;
  ClassModel class_model;
  ClassTables classes;
  BuildReport report;

  std::vector<std::uint8_t> vocab_bytes() const { return trie.serialize(); }
  std::vector<std::uint8_t> ngram_bytes() const { return serialize_model(data); }
  std::vector<std::uint8_t> class_bytes() const { return encode_class_file(classes); }
};

// Reads, cleans and tags the corpus files named in the manifest.
std::vector<Sentence> load_corpus(const BuildManifest& manifest, BuildReport* report = nullptr);

// count -> prune -> score -> class build -> binary layout. Sentences must
// already be cleaned and tagged.
ModelBundle build_model(std::span<const Sentence> sentences, const BuildManifest& manifest,
                        const ClassLexicon& lexicon);

// Full build to disk. Files are written under temporary names and renamed
// only once all three exist, so a failure leaves no partial set behind.
BuildReport run_build(const BuildManifest& manifest);

}  // namespace opng
