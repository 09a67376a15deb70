#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "opng/arpa.hpp"
#include "opng/class_model.hpp"
#include "opng/quantizer.hpp"
#include "opng/vocab_trie.hpp"

namespace opng {

inline constexpr std::uint32_t kNoEntry = 0xFFFFFF;  // 3-byte sentinel
inline constexpr std::uint32_t kMaxId24 = 0xFFFFFE;
inline constexpr std::uint16_t kMaxSuccessors = 0xFFFF;

// Frequent Word Optimisation lists.
struct FwoTables {
  std::vector<WordId> prediction;  // top-k non-tag words by count
  struct Completion {
    char32_t first;
    std::vector<WordId> words;
    bool operator==(const Completion&) const = default;
  };
  std::vector<Completion> completion;  // sorted by first character

  const std::vector<WordId>* completion_for(char32_t c) const;
  bool operator==(const FwoTables&) const = default;
};

FwoTables build_fwo(const Vocabulary& vocab, std::size_t k);

struct Successor {
  WordId word;
  std::uint16_t q;
  bool operator==(const Successor&) const = default;
};

struct BigramGroup {
  WordId context;
  std::vector<Successor> successors;  // best first: q ascending, word ascending
  bool operator==(const BigramGroup&) const = default;
};

struct TrigramGroup {
  std::uint32_t context_bigram;  // ordinal of the (w1,w2) entry in the bigram block
  std::vector<Successor> successors;
  bool operator==(const TrigramGroup&) const = default;
};

struct DataHeader {
  std::uint8_t version = 1;
  std::uint32_t n_uni = 0;
  std::uint32_t n_bi = 0;  // total bigram entries
  std::uint32_t n_tri = 0;
  std::uint8_t k = 3;
  std::uint16_t lambda_milli = 400;
  std::uint16_t r_milli = 500;
  bool operator==(const DataHeader&) const = default;

  static constexpr std::size_t kBytes = 4 + 1 + 4 + 4 + 4 + 1 + 2 + 2;
};

// Parsed contents of a `.ngram` file.
struct DataModel {
  DataHeader header;
  std::vector<std::uint16_t> unigram_q;
  std::vector<BigramGroup> bigrams;   // sorted by context ID
  std::vector<TrigramGroup> trigrams; // sorted by context_bigram
  FwoTables fwo;
  bool operator==(const DataModel&) const = default;
};

struct SerializeOptions {
  QuantParams quant;
  double lambda = 0.4;
  double r = 0.5;
  std::size_t k = 3;
  int compression_level = 9;
};

// Quantizes conditional scores and lays out the groups. Throws BuildError
// naming the context if a field width would overflow.
DataModel build_data_model(const ArpaModel& arpa, const FwoTables& fwo, const SerializeOptions& options);

std::vector<std::uint8_t> encode_data_payload(const DataModel& model);
// Closed-form byte size of each payload block, from the group structure.
struct SectionSizes {
  std::size_t header = 0, unigram = 0, bigram = 0, trigram = 0, fwo_prediction = 0, fwo_completion = 0;
  std::size_t total() const noexcept {
    return header + unigram + bigram + trigram + fwo_prediction + fwo_completion;
  }
};
SectionSizes section_sizes(const DataModel& model);
std::size_t data_payload_size(const DataModel& model);
DataModel decode_data_payload(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> compress(std::span<const std::uint8_t> payload, int level);
std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> bytes);

// Whole `.ngram` file: one zlib stream around the payload.
std::vector<std::uint8_t> serialize_model(const DataModel& model, int compression_level = 9);
DataModel deserialize_model(std::span<const std::uint8_t> bytes);

// Reference checks shared by the decoder and tests: every ID and context
// reference resolves, lists are sorted and deduplicated.
void validate_data_model(const DataModel& model);

// Class tables as stored: fixed-width top-k rows padded with kNoEntry.
struct ClassTables {
  std::uint16_t n_classes = 0;
  std::uint8_t k = 0;
  std::vector<std::uint8_t> word_class;
  std::vector<std::uint32_t> topk;       // n_classes * k, kNoEntry padding
  std::vector<std::uint16_t> emission_q; // parallel to topk, 0xFFFF padding
  std::vector<std::uint8_t> pair_argmax; // n_classes^2
  bool operator==(const ClassTables&) const = default;

  static constexpr std::size_t kHeaderBytes = 4 + 1 + 2 + 1 + 4;
  std::size_t file_size() const;
};

ClassTables to_class_tables(const ClassModel& model, const QuantParams& quant = {});
std::vector<std::uint8_t> encode_class_file(const ClassTables& tables);
// `vocab_size`, when given, must match the stored word count.
ClassTables decode_class_file(std::span<const std::uint8_t> bytes, std::optional<std::size_t> vocab_size = std::nullopt);

// Dequantized ARPA view of a binary model (capped values come back as the
// no-probability sentinel).
ArpaModel to_arpa(const DataModel& model, const VocabTrie& vocab, const QuantParams& quant = {});

struct ModelPaths {
  std::filesystem::path vocab, ngram, classes;
  static ModelPaths from_basename(const std::string& base);
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace opng
