#include "opng/vocab_trie.hpp"

#include <algorithm>
#include <cstring>
#include <deque>
#include <map>
#include <memory>

#include "opng/bytes.hpp"
#include "opng/errors.hpp"

namespace opng {

namespace {

constexpr char kMagic[4] = {'O', 'P', 'N', 'V'};
constexpr std::uint8_t kVersion = 1;

struct BuildNode {
  WordId word = kNoWord;
  std::map<std::uint8_t, std::unique_ptr<BuildNode>> children;
};

}  // namespace

VocabTrie VocabTrie::build(std::span<const std::string> words) {
  BuildNode root;
  for (std::size_t i = 0; i < words.size(); ++i) {
    BuildNode* n = &root;
    for (unsigned char ch : words[i]) {
      auto& slot = n->children[ch];
      if (!slot) slot = std::make_unique<BuildNode>();
      n = slot.get();
    }
    if (n->word != kNoWord) throw Error("VocabTrie: duplicate word '" + words[i] + "'");
    n->word = static_cast<WordId>(i);
  }

  VocabTrie t;
  std::deque<std::pair<const BuildNode*, std::uint8_t>> queue{{&root, 0}};
  while (!queue.empty()) {
    auto [bn, label] = queue.front();
    queue.pop_front();
    Node n;
    n.label = label;
    n.word = bn->word;
    n.child_count = static_cast<std::uint16_t>(bn->children.size());
    // children are appended after everything already queued
    n.first_child = static_cast<std::uint32_t>(t.nodes_.size() + 1 + queue.size());
    t.nodes_.push_back(n);
    for (const auto& [ch, child] : bn->children) queue.emplace_back(child.get(), ch);
  }
  t.words_.assign(words.begin(), words.end());
  return t;
}

std::optional<std::uint32_t> VocabTrie::walk(std::string_view prefix) const {
  if (nodes_.empty()) return std::nullopt;
  std::uint32_t n = 0;
  for (unsigned char ch : prefix) {
    const Node& node = nodes_[n];
    auto first = nodes_.begin() + node.first_child;
    auto last = first + node.child_count;
    auto it = std::lower_bound(first, last, ch, [](const Node& x, unsigned char c) { return x.label < c; });
    if (it == last || it->label != ch) return std::nullopt;
    n = static_cast<std::uint32_t>(it - nodes_.begin());
  }
  return n;
}

std::optional<WordId> VocabTrie::find(std::string_view word) const {
  auto n = walk(word);
  if (!n || nodes_[*n].word == kNoWord) return std::nullopt;
  return nodes_[*n].word;
}

std::vector<WordId> VocabTrie::prefix_ids(std::string_view prefix) const {
  std::vector<WordId> out;
  for_each_prefixed(prefix, [&](WordId id) { out.push_back(id); });
  return out;
}

std::vector<std::uint8_t> VocabTrie::serialize() const {
  ByteWriter w;
  w.raw(kMagic, 4);
  w.u8(kVersion);
  w.u32(static_cast<std::uint32_t>(words_.size()));
  w.u32(static_cast<std::uint32_t>(nodes_.size()));
  for (const auto& n : nodes_) {
    w.u8(n.label);
    w.u16(n.child_count);
    w.u32(n.first_child);
    w.u32(n.word);
  }
  return w.take();
}

VocabTrie VocabTrie::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::string hdr = "vocab header";
  r.section(hdr);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError(hdr, "bad magic");
  r.skip(4);
  if (r.u8() != kVersion) throw FormatError(hdr, "unsupported version");
  const auto n_words = r.u32();
  const auto n_nodes = r.u32();
  if (n_nodes == 0) throw FormatError(hdr, "empty node table");

  r.section("vocab nodes");
  if (r.remaining() != static_cast<std::size_t>(n_nodes) * kNodeBytes)
    throw FormatError("vocab nodes", r.remaining() < static_cast<std::size_t>(n_nodes) * kNodeBytes
                                         ? "truncated"
                                         : "trailing bytes");
  VocabTrie t;
  t.nodes_.resize(n_nodes);
  for (auto& n : t.nodes_) {
    n.label = r.u8();
    n.child_count = r.u16();
    n.first_child = r.u32();
    n.word = r.u32();
  }

  // Structural checks: children strictly after parent, in range, sorted,
  // each node reached exactly once, IDs form a bijection.
  std::vector<std::uint8_t> reached(n_nodes, 0);
  std::vector<std::uint8_t> id_seen(n_words, 0);
  reached[0] = 1;
  for (std::uint32_t i = 0; i < n_nodes; ++i) {
    const Node& n = t.nodes_[i];
    if (!reached[i]) throw FormatError("vocab nodes", "unreachable node " + std::to_string(i));
    if (n.word != kNoWord) {
      if (n.word >= n_words || id_seen[n.word]) throw FormatError("vocab nodes", "word ID out of range or repeated");
      id_seen[n.word] = 1;
    }
    if (n.child_count == 0) continue;
    if (n.first_child <= i || static_cast<std::uint64_t>(n.first_child) + n.child_count > n_nodes)
      throw FormatError("vocab nodes", "child range out of bounds at node " + std::to_string(i));
    for (std::uint32_t c = 0; c < n.child_count; ++c) {
      const auto ci = n.first_child + c;
      if (reached[ci]) throw FormatError("vocab nodes", "node shared between parents");
      reached[ci] = 1;
      if (c && t.nodes_[ci - 1].label >= t.nodes_[ci].label) throw FormatError("vocab nodes", "children not sorted");
    }
  }
  if (std::find(id_seen.begin(), id_seen.end(), 0) != id_seen.end())
    throw FormatError("vocab nodes", "word IDs do not cover 0..n-1");

  t.words_.resize(n_words);
  t.rebuild_words();
  return t;
}

void VocabTrie::rebuild_words() {
  std::vector<std::pair<std::uint32_t, std::string>> stack{{0, {}}};
  while (!stack.empty()) {
    auto [n, s] = std::move(stack.back());
    stack.pop_back();
    const Node& node = nodes_[n];
    if (node.word != kNoWord) words_[node.word] = s;
    for (std::uint32_t c = 0; c < node.child_count; ++c) {
      const auto ci = node.first_child + c;
      stack.emplace_back(ci, s + static_cast<char>(nodes_[ci].label));
    }
  }
}

}  // namespace opng
