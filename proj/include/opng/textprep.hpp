#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace opng {

struct PrepConfig {
  std::uint64_t rare_threshold = 3;  // frequency below this becomes <unk>
  std::unordered_set<std::string> blacklist;
  bool lowercase_input = true;
  // Stop reading after this many input bytes (corpus sampling).
  std::optional<std::uint64_t> byte_budget;

  void validate() const;
};

// Token sequence framed by "<s>" ... "<e>".
struct Sentence {
  std::vector<std::string> tokens;

  bool operator==(const Sentence&) const = default;
};

struct CleanSummary {
  std::uint64_t bytes_read = 0;
  std::uint64_t lines = 0;
  std::uint64_t sentences = 0;
  std::uint64_t tokens = 0;  // excluding the framing tags
  std::uint64_t invalid_bytes = 0;
  bool truncated_by_budget = false;
};

using SentenceSink = std::function<void(Sentence&&)>;

// Splits raw text into sentences at newlines and at tokens that end in
// terminal punctuation (. ! ?). Leading/trailing punctuation is stripped from
// every token; intra-word punctuation is kept. Empty sentences are dropped.
CleanSummary clean_corpus(std::istream& raw, const PrepConfig& config, const SentenceSink& sink);
std::vector<Sentence> clean_corpus(std::istream& raw, const PrepConfig& config,
                                   CleanSummary* summary = nullptr);

// Splits one line of text into bare word tokens (no framing tags). Used for
// test-set tokenization so it matches the training path exactly.
std::vector<std::vector<std::string>> split_sentences(const std::string& line, bool lowercase);

void apply_blacklist(std::vector<Sentence>& sentences, const std::unordered_set<std::string>& blacklist);
void apply_blacklist(Sentence& sentence, const std::unordered_set<std::string>& blacklist);

// Two-pass rare-word tagging over a materialized collection. Returns the
// number of substituted tokens.
std::uint64_t tag_rare_words(std::vector<Sentence>& sentences, std::uint64_t rare_threshold);

// clean -> blacklist -> rare tagging.
std::vector<Sentence> preprocess(std::istream& raw, const PrepConfig& config, CleanSummary* summary = nullptr);

std::unordered_set<std::string> read_blacklist(std::istream& in);

void write_sentences(std::ostream& out, const std::vector<Sentence>& sentences);

}  // namespace opng
