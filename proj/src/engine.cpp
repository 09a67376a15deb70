#include "opng/engine.hpp"

#include <algorithm>
#include <filesystem>
#include <future>
#include <unordered_set>

#include "opng/errors.hpp"
#include "opng/topk.hpp"
#include "opng/utf8.hpp"

namespace opng {

void EngineConfig::validate() const {
  if (k < 1 || k > 9) throw Error("K must be in [1, 9]");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error("lambda must be in (0, 1]");
  if (!(r >= 0.0 && r <= 1.0)) throw Error("r must be in [0, 1]");
}

EngineConfig EngineConfig::from_header(const DataHeader& h, std::size_t k) {
  return {k, h.lambda_milli / 1000.0, h.r_milli / 1000.0};
}

const char* to_string(Branch b) noexcept {
  switch (b) {
    case Branch::Tri: return "trigram";
    case Branch::Bi: return "bigram";
    case Branch::ClassUni: return "class+unigram";
  }
  return "?";
}

std::uint32_t Engine::Rows::find(std::uint32_t row, WordId w) const {
  auto first = by_id.begin() + begin[row];
  auto last = by_id.begin() + begin[row + 1];
  auto it = std::lower_bound(first, last, w, [&](std::uint32_t pos, WordId x) { return word[pos] < x; });
  if (it == last || word[*it] != w) return kNone;
  return *it;
}

Engine::Tables Engine::index(VocabTrie vocab, DataModel data, std::optional<ClassTables> classes) {
  const auto n = data.header.n_uni;
  if (vocab.size() != n)
    throw FormatError("model", "vocabulary has " + std::to_string(vocab.size()) + " words, data file expects " +
                                   std::to_string(n));
  if (classes && classes->word_class.size() != n) throw FormatError("class header", "word count does not match vocabulary");

  Tables t;
  t.uni_p.reserve(n);
  for (auto q : data.unigram_q) t.uni_p.push_back(dequantize(q));

  auto fill = [](Rows& rows, auto const& groups, std::size_t n_rows, auto row_of) {
    rows.begin.assign(n_rows + 1, 0);
    for (const auto& g : groups) rows.begin[row_of(g) + 1] = static_cast<std::uint32_t>(g.successors.size());
    for (std::size_t r = 0; r < n_rows; ++r) rows.begin[r + 1] += rows.begin[r];
    for (const auto& g : groups)
      for (const auto& s : g.successors) {
        rows.word.push_back(s.word);
        rows.prob.push_back(dequantize(s.q));
      }
    rows.by_id.resize(rows.word.size());
    for (std::uint32_t i = 0; i < rows.by_id.size(); ++i) rows.by_id[i] = i;
    for (std::size_t r = 0; r < n_rows; ++r)
      std::sort(rows.by_id.begin() + rows.begin[r], rows.by_id.begin() + rows.begin[r + 1],
                [&](std::uint32_t a, std::uint32_t b) { return rows.word[a] < rows.word[b]; });
  };
  fill(t.bi, data.bigrams, n, [](const BigramGroup& g) { return g.context; });
  t.tri_row_of_bigram.assign(data.header.n_bi, kNone);
  std::uint32_t row = 0;
  for (const auto& g : data.trigrams) t.tri_row_of_bigram[g.context_bigram] = row++;
  row = 0;
  fill(t.tri, data.trigrams, data.trigrams.size(), [&row](const TrigramGroup&) { return row++; });

  if (classes) {
    t.emission.assign(n, 0.0);
    for (std::size_t i = 0; i < classes->topk.size(); ++i)
      if (classes->topk[i] != kNoEntry) t.emission[classes->topk[i]] = dequantize(classes->emission_q[i]);
  }

  for (WordId w = kNumTags; w < n; ++w) t.unigram_order.push_back(w);
  std::sort(t.unigram_order.begin(), t.unigram_order.end(), [&](WordId a, WordId b) {
    if (data.unigram_q[a] != data.unigram_q[b]) return data.unigram_q[a] < data.unigram_q[b];
    return a < b;
  });

  t.trie = std::move(vocab);
  t.data = std::move(data);
  t.classes = std::move(classes);
  return t;
}

Engine Engine::from_parts(VocabTrie vocab, DataModel data, std::optional<ClassTables> classes,
                          const EngineConfig& config) {
  config.validate();
  validate_data_model(data);
  return Engine(index(std::move(vocab), std::move(data), std::move(classes)), config);
}

Engine Engine::load(const ModelPaths& paths, const EngineConfig& config, const LoadOptions& options) {
  config.validate();
  const bool want_class = !(options.lenient_class && !std::filesystem::exists(paths.classes));

  auto load_vocab = [&] { return VocabTrie::deserialize(read_file(paths.vocab)); };
  auto load_data = [&] { return deserialize_model(read_file(paths.ngram)); };
  auto load_class = [&]() -> std::optional<ClassTables> {
    if (!want_class) return std::nullopt;
    return decode_class_file(read_file(paths.classes));
  };

  if (options.mode == LoadMode::Sequential) {
    auto v = load_vocab();
    auto d = load_data();
    auto c = load_class();
    return from_parts(std::move(v), std::move(d), std::move(c), config);
  }
  auto fv = std::async(std::launch::async, load_vocab);
  auto fd = std::async(std::launch::async, load_data);
  auto fc = std::async(std::launch::async, load_class);
  // get() all three before rethrowing so no task outlives this frame
  std::exception_ptr err;
  std::optional<VocabTrie> v;
  std::optional<DataModel> d;
  std::optional<ClassTables> c;
  try { v = fv.get(); } catch (...) { err = std::current_exception(); }
  try { d = fd.get(); } catch (...) { if (!err) err = std::current_exception(); }
  try { c = fc.get(); } catch (...) { if (!err) err = std::current_exception(); }
  if (err) std::rethrow_exception(err);
  return from_parts(std::move(*v), std::move(*d), std::move(c), config);
}

WordId Engine::lookup(std::string_view word) const {
  return t_.trie.find(word).value_or(id_of(Tag::Unknown));
}

Context Engine::nwp_context(std::span<const std::string> words) const {
  if (words.empty()) return {kNoWord, id_of(Tag::SentenceStart)};
  if (words.size() == 1) return {id_of(Tag::SentenceStart), lookup(words[0])};
  return {lookup(words[words.size() - 2]), lookup(words.back())};
}

Context Engine::wc_context(std::span<const std::string> words) const {
  if (words.empty()) return {};
  return nwp_context(words);
}

std::uint32_t Engine::bigram_ordinal(WordId c1, WordId c2) const {
  if (c1 >= t_.uni_p.size()) return kNone;
  return t_.bi.find(c1, c2);
}

std::optional<double> Engine::bigram_prob(WordId c2, WordId w) const {
  if (c2 >= t_.uni_p.size()) return std::nullopt;
  const auto pos = t_.bi.find(c2, w);
  if (pos == kNone) return std::nullopt;
  return t_.bi.prob[pos];
}

std::optional<double> Engine::trigram_prob(WordId c1, WordId c2, WordId w) const {
  const auto ord = bigram_ordinal(c1, c2);
  if (ord == kNone) return std::nullopt;
  const auto row = t_.tri_row_of_bigram[ord];
  if (row == kNone) return std::nullopt;
  const auto pos = t_.tri.find(row, w);
  if (pos == kNone) return std::nullopt;
  return t_.tri.prob[pos];
}

double Engine::class_term(WordId w, WordId c1, WordId c2) const {
  if (!t_.classes || c1 == kNoWord || c2 == kNoWord) return 0.0;
  const auto& ct = *t_.classes;
  const auto cw = ct.word_class[w];
  if (cw != ct.pair_argmax[ct.word_class[c1] * std::size_t{ct.n_classes} + ct.word_class[c2]]) return 0.0;
  return t_.emission[w];
}

Scored Engine::score_candidate(WordId w, WordId c1, WordId c2) const {
  if (c1 != kNoWord && c2 != kNoWord)
    if (auto p = trigram_prob(c1, c2, w)) return {*p, Branch::Tri};
  if (c2 != kNoWord)
    if (auto p = bigram_prob(c2, w)) return {config_.lambda * *p, Branch::Bi};
  const double r = t_.classes ? config_.r : 0.0;
  const double lam2 = config_.lambda * config_.lambda;
  return {lam2 * (r * class_term(w, c1, c2) + (1.0 - r) * t_.uni_p[w]), Branch::ClassUni};
}

Suggestion Engine::make(WordId w, double score, Branch b) const { return {t_.trie.word(w), w, score, b}; }

std::vector<Suggestion> Engine::predict(std::span<const std::string> context, std::size_t k) const {
  return predict(nwp_context(context), k);
}

std::vector<Suggestion> Engine::predict(Context ctx, std::size_t k) const {
  const auto [c1, c2] = ctx;
  TopK<Branch> top(k);
  std::unordered_set<WordId> seen;
  auto consider = [&](WordId w) {
    if (is_tag_id(w) || !seen.insert(w).second) return false;
    const auto s = score_candidate(w, c1, c2);
    top.push(s.score, w, s.branch);
    return true;
  };

  // stored trigram successors of (c1, c2)
  if (c1 != kNoWord && c2 != kNoWord) {
    const auto ord = bigram_ordinal(c1, c2);
    if (ord != kNone && t_.tri_row_of_bigram[ord] != kNone) {
      const auto row = t_.tri_row_of_bigram[ord];
      for (auto i = t_.tri.begin[row]; i < t_.tri.begin[row + 1]; ++i) consider(t_.tri.word[i]);
    }
  }
  // stored bigram successors of c2 (for an empty context, c2 = <s>)
  if (c2 != kNoWord && c2 < t_.uni_p.size())
    for (auto i = t_.bi.begin[c2]; i < t_.bi.begin[c2 + 1]; ++i) consider(t_.bi.word[i]);
  // most likely class for (class(c1), class(c2))
  if (t_.classes && c1 != kNoWord && c2 != kNoWord) {
    const auto& ct = *t_.classes;
    const auto ck = ct.pair_argmax[ct.word_class[c1] * std::size_t{ct.n_classes} + ct.word_class[c2]];
    for (std::size_t i = 0; i < ct.k; ++i) {
      const auto w = ct.topk[ck * std::size_t{ct.k} + i];
      if (w == kNoEntry) break;
      consider(w);
    }
  }
  for (auto w : t_.data.fwo.prediction) consider(w);
  // Remaining words all sit on the unigram floor, whose order is fixed;
  // k fresh ones from the front are enough to fill any open slots.
  std::size_t fresh = 0;
  for (auto w : t_.unigram_order) {
    if (fresh >= k) break;
    if (consider(w)) ++fresh;
  }

  std::vector<Suggestion> out;
  for (const auto& e : top.take_sorted()) out.push_back(make(e.id, e.score, e.payload));
  return out;
}

std::vector<Suggestion> Engine::complete(std::span<const std::string> context, std::string_view prefix,
                                         std::size_t k) const {
  return complete(wc_context(context), prefix, k);
}

std::vector<Suggestion> Engine::complete(Context ctx, std::string_view prefix, std::size_t k) const {
  std::vector<Suggestion> out;
  if (prefix.empty()) return out;
  TopK<Branch> top(k);
  auto consider = [&](WordId w) {
    if (is_tag_id(w)) return;
    const auto s = score_candidate(w, ctx.c1, ctx.c2);
    top.push(s.score, w, s.branch);
  };

  const std::vector<WordId>* fwo = nullptr;
  if (utf8::length(prefix) == 1)
    if (auto c = utf8::first(prefix)) fwo = t_.data.fwo.completion_for(*c);
  if (fwo) {
    for (auto w : *fwo) consider(w);
  } else {
    t_.trie.for_each_prefixed(prefix, consider);
  }
  for (const auto& e : top.take_sorted()) out.push_back(make(e.id, e.score, e.payload));
  return out;
}

std::uint64_t Engine::memory_bytes() const {
  auto vec = [](const auto& v) { return std::uint64_t{v.capacity()} * sizeof(v[0]); };
  std::uint64_t n = t_.trie.node_count() * VocabTrie::kNodeBytes;
  for (const auto& w : t_.trie.words()) n += sizeof(std::string) + (w.size() > 15 ? w.size() + 1 : 0);
  n += vec(t_.data.unigram_q) + vec(t_.uni_p) + vec(t_.emission) + vec(t_.unigram_order) + vec(t_.tri_row_of_bigram);
  for (const auto* rows : {&t_.bi, &t_.tri}) n += vec(rows->begin) + vec(rows->word) + vec(rows->prob) + vec(rows->by_id);
  for (const auto& g : t_.data.bigrams) n += sizeof(g) + vec(g.successors);
  for (const auto& g : t_.data.trigrams) n += sizeof(g) + vec(g.successors);
  if (t_.classes) n += vec(t_.classes->word_class) + vec(t_.classes->topk) + vec(t_.classes->emission_q) + vec(t_.classes->pair_argmax);
  return n;
}

}  // namespace opng
