#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opng/tags.hpp"

namespace opng {

// Byte-wise prefix trie over the vocabulary. Nodes are laid out in
// breadth-first order with each node's children contiguous and sorted by
// edge byte, which is also the on-disk order.
class VocabTrie {
 public:
  VocabTrie() = default;

  // IDs follow the order of `words`. Throws on duplicates.
  static VocabTrie build(std::span<const std::string> words);

  std::optional<WordId> find(std::string_view word) const;
  const std::string& word(WordId id) const { return words_.at(id); }
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  // IDs of all words starting with `prefix`, in lexicographic word order.
  std::vector<WordId> prefix_ids(std::string_view prefix) const;
  template <typename F>
  void for_each_prefixed(std::string_view prefix, F&& f) const;

  // "OPNV" | version u8 | n_words u32 | n_nodes u32 | nodes
  // node = label u8 | child_count u16 | first_child u32 | word_id u32
  std::vector<std::uint8_t> serialize() const;
  static VocabTrie deserialize(std::span<const std::uint8_t> bytes);

  std::size_t node_count() const noexcept { return nodes_.size(); }
  bool operator==(const VocabTrie& o) const { return nodes_ == o.nodes_ && words_ == o.words_; }

  static constexpr std::size_t kHeaderBytes = 13;
  static constexpr std::size_t kNodeBytes = 11;

 private:
  struct Node {
    std::uint8_t label = 0;
    std::uint16_t child_count = 0;
    std::uint32_t first_child = 0;
    WordId word = kNoWord;
    bool operator==(const Node&) const = default;
  };

  std::optional<std::uint32_t> walk(std::string_view prefix) const;
  void rebuild_words();

  std::vector<Node> nodes_;
  std::vector<std::string> words_;
};

template <typename F>
void VocabTrie::for_each_prefixed(std::string_view prefix, F&& f) const {
  auto start = walk(prefix);
  if (!start) return;
  // Depth-first, children in byte order, so output is lexicographic.
  std::vector<std::uint32_t> stack{*start};
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    const Node& node = nodes_[n];
    if (node.word != kNoWord) f(node.word);
    for (std::uint32_t c = node.child_count; c-- > 0;) stack.push_back(node.first_child + c);
  }
}

}  // namespace opng
