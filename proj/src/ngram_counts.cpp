#include "opng/ngram_counts.hpp"

#include <omp.h>

#include <algorithm>
#include <ostream>

#include "opng/errors.hpp"

namespace opng {

namespace {

using CountMap = std::unordered_map<std::uint64_t, std::uint64_t>;

void count_sentence(std::span<const std::uint32_t> s, std::vector<std::uint64_t>& uni, CountMap& bi, CountMap& tri) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    ++uni[s[i]];
    if (i + 1 < s.size()) ++bi[pack(s[i], s[i + 1])];
    if (i + 2 < s.size()) ++tri[pack(s[i], s[i + 1], s[i + 2])];
  }
}

NgramCounts empty_counts(const EncodedCorpus& corpus) {
  NgramCounts out;
  out.types = corpus.types;
  out.type_index = corpus.type_index;
  out.uni.assign(corpus.types.size(), 0);
  return out;
}

}  // namespace

std::optional<std::uint32_t> NgramCounts::type_of(std::string_view word) const {
  auto it = type_index.find(std::string(word));
  if (it == type_index.end()) return std::nullopt;
  return it->second;
}

std::uint64_t NgramCounts::count(std::string_view w1) const {
  auto a = type_of(w1);
  return a ? uni[*a] : 0;
}

std::uint64_t NgramCounts::count(std::string_view w1, std::string_view w2) const {
  auto a = type_of(w1), b = type_of(w2);
  if (!a || !b) return 0;
  auto it = bi.find(pack(*a, *b));
  return it == bi.end() ? 0 : it->second;
}

std::uint64_t NgramCounts::count(std::string_view w1, std::string_view w2, std::string_view w3) const {
  auto a = type_of(w1), b = type_of(w2), c = type_of(w3);
  if (!a || !b || !c) return 0;
  auto it = tri.find(pack(*a, *b, *c));
  return it == tri.end() ? 0 : it->second;
}

std::size_t NgramCounts::distinct_unigrams() const {
  return static_cast<std::size_t>(std::count_if(uni.begin(), uni.end(), [](auto c) { return c > 0; }));
}

void NgramCounts::dump(std::ostream& out) const {
  std::vector<std::string> lines;
  lines.reserve(distinct_unigrams() + bi.size() + tri.size());
  for (std::size_t t = 0; t < uni.size(); ++t)
    if (uni[t]) lines.push_back(types[t] + '\t' + std::to_string(uni[t]));
  for (auto [k, c] : bi)
    lines.push_back(types[unpack_at(k, 0, 2)] + ' ' + types[unpack_at(k, 1, 2)] + '\t' + std::to_string(c));
  for (auto [k, c] : tri)
    lines.push_back(types[unpack_at(k, 0, 3)] + ' ' + types[unpack_at(k, 1, 3)] + ' ' + types[unpack_at(k, 2, 3)] +
                    '\t' + std::to_string(c));
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) out << l << '\n';
}

EncodedCorpus encode_corpus(std::span<const Sentence> sentences) {
  EncodedCorpus corpus;
  for (std::size_t t = 0; t < kNumTags; ++t) {
    corpus.types.emplace_back(kTagSurface[t]);
    corpus.type_index.emplace(kTagSurface[t], static_cast<std::uint32_t>(t));
  }
  corpus.sentences.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::vector<std::uint32_t> enc;
    enc.reserve(s.tokens.size());
    for (const auto& tok : s.tokens) {
      auto [it, inserted] = corpus.type_index.try_emplace(tok, static_cast<std::uint32_t>(corpus.types.size()));
      if (inserted) {
        if (corpus.types.size() >= kMaxTokenTypes)
          throw BuildError("count", "more than " + std::to_string(kMaxTokenTypes) + " distinct tokens");
        corpus.types.push_back(tok);
      }
      enc.push_back(it->second);
    }
    corpus.sentences.push_back(std::move(enc));
  }
  return corpus;
}

NgramCounts count_ngrams(std::span<const Sentence> sentences) { return count_ngrams(encode_corpus(sentences)); }

NgramCounts count_ngrams(const EncodedCorpus& corpus) {
  NgramCounts out = empty_counts(corpus);
  const auto n = static_cast<std::ptrdiff_t>(corpus.sentences.size());
  const int threads = std::max(1, std::min<int>(omp_get_max_threads(), static_cast<int>(n / 64) + 1));

  std::vector<std::vector<std::uint64_t>> uni(threads, std::vector<std::uint64_t>(corpus.types.size(), 0));
  std::vector<CountMap> bi(threads), tri(threads);

#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const int t = omp_get_thread_num();
    count_sentence(corpus.sentences[i], uni[t], bi[t], tri[t]);
  }

  for (int t = 0; t < threads; ++t) {
    for (std::size_t w = 0; w < out.uni.size(); ++w) out.uni[w] += uni[t][w];
    if (out.bi.empty()) {
      out.bi = std::move(bi[t]);
    } else {
      for (auto [k, c] : bi[t]) out.bi[k] += c;
    }
    if (out.tri.empty()) {
      out.tri = std::move(tri[t]);
    } else {
      for (auto [k, c] : tri[t]) out.tri[k] += c;
    }
  }
  for (auto c : out.uni) out.total_tokens += c;
  return out;
}

namespace reference {

NgramCounts count_ngrams(const EncodedCorpus& corpus) {
  NgramCounts out = empty_counts(corpus);
  for (const auto& s : corpus.sentences) count_sentence(s, out.uni, out.bi, out.tri);
  for (auto c : out.uni) out.total_tokens += c;
  return out;
}

}  // namespace reference

void ModelCaps::validate() const {
  if (n_uni < kNumTags + 1) throw Error("n_uni must be >= 5");
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  auto it = ids.find(std::string(word));
  if (it == ids.end()) return std::nullopt;
  return it->second;
}

WordId Vocabulary::lookup(std::string_view word) const { return find(word).value_or(id_of(Tag::Unknown)); }

Vocabulary Vocabulary::from_words(std::vector<std::string> words, std::vector<std::uint64_t> counts) {
  Vocabulary v;
  v.words = std::move(words);
  v.counts = std::move(counts);
  v.counts.resize(v.words.size(), 0);
  v.ids.reserve(v.words.size());
  for (std::size_t i = 0; i < v.words.size(); ++i)
    if (!v.ids.emplace(v.words[i], static_cast<WordId>(i)).second)
      throw Error("duplicate vocabulary word '" + v.words[i] + "'");
  return v;
}

Vocabulary select_vocabulary(const NgramCounts& counts, const ModelCaps& caps) {
  caps.validate();
  std::vector<std::uint32_t> cand;
  for (std::uint32_t t = kNumTags; t < counts.uni.size(); ++t)
    if (counts.uni[t] > 0) cand.push_back(t);

  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (counts.uni[a] != counts.uni[b]) return counts.uni[a] > counts.uni[b];
    return counts.types[a] < counts.types[b];
  };
  const std::size_t keep = std::min<std::size_t>(cand.size(), caps.n_uni - kNumTags);
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(), better);
  cand.resize(keep);

  std::vector<std::string> words;
  std::vector<std::uint64_t> wc;
  words.reserve(keep + kNumTags);
  for (std::size_t t = 0; t < kNumTags; ++t) {
    words.emplace_back(kTagSurface[t]);
    wc.push_back(t < counts.uni.size() ? counts.uni[t] : 0);
  }
  for (auto t : cand) {
    words.push_back(counts.types[t]);
    wc.push_back(counts.uni[t]);
  }
  return Vocabulary::from_words(std::move(words), std::move(wc));
}

double coverage(const NgramCounts& counts, const Vocabulary& vocab) {
  std::uint64_t total = 0;
  for (std::size_t t = kNumTags; t < counts.uni.size(); ++t) total += counts.uni[t];
  if (total == 0) return 0.0;
  std::uint64_t covered = 0;
  for (std::size_t id = kNumTags; id < vocab.size(); ++id) covered += counts.count(vocab.words[id]);
  return static_cast<double>(covered) / static_cast<double>(total);
}

}  // namespace opng
