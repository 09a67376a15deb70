#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opng/binfmt.hpp"
#include "opng/tags.hpp"
#include "opng/vocab_trie.hpp"

namespace opng {

struct EngineConfig {
  std::size_t k = 3;    // suggestions per query
  double lambda = 0.4;  // Stupid Backoff factor
  double r = 0.5;       // class vs unigram mix in the last branch

  void validate() const;
  static EngineConfig from_header(const DataHeader& h, std::size_t k = 3);
};

enum class Branch : std::uint8_t { Tri, Bi, ClassUni };
const char* to_string(Branch b) noexcept;

struct Scored {
  double score;
  Branch branch;
};

struct Suggestion {
  std::string word;
  WordId id;
  double score;
  Branch branch;
};

// Word-level context for one query; kNoWord marks an absent position.
struct Context {
  WordId c1 = kNoWord;
  WordId c2 = kNoWord;
  bool operator==(const Context&) const = default;
};

enum class LoadMode { Parallel, Sequential };

struct LoadOptions {
  LoadMode mode = LoadMode::Parallel;
  // A missing class file disables the class term instead of failing.
  bool lenient_class = false;
};

// Read-only query engine over a loaded model. Queries never mutate state,
// so one instance can serve any number of threads.
class Engine {
 public:
  static Engine load(const ModelPaths& paths, const EngineConfig& config, const LoadOptions& options = {});
  static Engine from_parts(VocabTrie vocab, DataModel data, std::optional<ClassTables> classes,
                           const EngineConfig& config);

  // Next word prediction. The context is prefixed with <s>; only the last
  // two positions are used.
  std::vector<Suggestion> predict(std::span<const std::string> context) const { return predict(context, config_.k); }
  std::vector<Suggestion> predict(std::span<const std::string> context, std::size_t k) const;
  std::vector<Suggestion> predict(Context ctx, std::size_t k) const;

  // Word completion for a non-empty prefix. An empty context ranks purely
  // by unigram frequency.
  std::vector<Suggestion> complete(std::span<const std::string> context, std::string_view prefix) const {
    return complete(context, prefix, config_.k);
  }
  std::vector<Suggestion> complete(std::span<const std::string> context, std::string_view prefix, std::size_t k) const;
  std::vector<Suggestion> complete(Context ctx, std::string_view prefix, std::size_t k) const;

  // Backoff cascade for one candidate: stored trigram, else lambda x stored
  // bigram, else lambda^2 x (r x class term + (1 - r) x unigram).
  Scored score_candidate(WordId w, WordId c1, WordId c2) const;

  Context nwp_context(std::span<const std::string> words) const;
  Context wc_context(std::span<const std::string> words) const;
  WordId lookup(std::string_view word) const;

  const VocabTrie& vocab() const noexcept { return t_.trie; }
  const DataModel& data() const noexcept { return t_.data; }
  const std::optional<ClassTables>& classes() const noexcept { return t_.classes; }
  bool class_enabled() const noexcept { return t_.classes.has_value(); }
  const EngineConfig& config() const noexcept { return config_; }

  double unigram_prob(WordId w) const { return t_.uni_p.at(w); }
  // Stored conditional P(w | c2) / P(w | c1 c2), if present.
  std::optional<double> bigram_prob(WordId c2, WordId w) const;
  std::optional<double> trigram_prob(WordId c1, WordId c2, WordId w) const;
  // Class term P(w|C) x [C == argmax(class(c1), class(c2))].
  double class_term(WordId w, WordId c1, WordId c2) const;

  // Approximate heap footprint of all tables.
  std::uint64_t memory_bytes() const;

  // Structural identity of all loaded and derived tables.
  bool same_state(const Engine& o) const { return t_ == o.t_; }

 private:
  static constexpr std::uint32_t kNone = 0xFFFFFFFF;

  struct Rows {
    std::vector<std::uint32_t> begin;  // row r spans [begin[r], begin[r+1])
    std::vector<WordId> word;          // best-first within a row
    std::vector<double> prob;          // dequantized conditional
    std::vector<std::uint32_t> by_id;  // per row, positions sorted by word
    bool operator==(const Rows&) const = default;

    std::uint32_t find(std::uint32_t row, WordId w) const;
  };

  struct Tables {
    VocabTrie trie;
    DataModel data;
    std::optional<ClassTables> classes;
    std::vector<double> uni_p;
    Rows bi;                                   // row = context word ID
    Rows tri;                                  // row = trigram group index
    std::vector<std::uint32_t> tri_row_of_bigram;  // bigram ordinal -> tri row
    std::vector<double> emission;              // per word, 0 outside its class top-k
    std::vector<WordId> unigram_order;         // non-tag words, best unigram first
    bool operator==(const Tables&) const = default;
  };

  Engine(Tables t, const EngineConfig& config) : t_(std::move(t)), config_(config) {}
  static Tables index(VocabTrie vocab, DataModel data, std::optional<ClassTables> classes);
  std::uint32_t bigram_ordinal(WordId c1, WordId c2) const;
  Suggestion make(WordId w, double score, Branch b) const;

  Tables t_;
  EngineConfig config_;
};

}  // namespace opng
