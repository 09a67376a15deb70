#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <unordered_set>

#include "opng/errors.hpp"
#include "opng/quantizer.hpp"
#include "opng/utf8.hpp"

#ifndef OPNG_TEST_DATA
#error "OPNG_TEST_DATA must point at tests/data"
#endif

namespace opng::test {

namespace fs = std::filesystem;

fs::path data_path(const std::string& name) { return fs::path(OPNG_TEST_DATA) / name; }

const std::vector<Sentence>& sotu_clean() {
  static const std::vector<Sentence> sentences = [] {
    std::ifstream in(data_path("sotu_1961_1971.txt"), std::ios::binary);
    if (!in) throw Error("missing SOTU fixture");
    return clean_corpus(in, PrepConfig{});
  }();
  return sentences;
}

std::vector<Sentence> sotu_prefix(std::size_t max_tokens) {
  std::vector<Sentence> out;
  std::size_t n = 0;
  for (const auto& s : sotu_clean()) {
    if (n + s.tokens.size() > max_tokens) break;
    n += s.tokens.size();
    out.push_back(s);
  }
  return out;
}

std::vector<std::string> words_of(const Sentence& s) {
  if (s.tokens.size() < 2) return {};
  return {s.tokens.begin() + 1, s.tokens.end() - 1};
}

TempDir::TempDir() {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto p = fs::temp_directory_path() / ("opng-test-" + std::to_string(rd()));
    if (fs::create_directory(p)) {
      path_ = p;
      return;
    }
  }
  throw Error("cannot create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

BuildManifest tiny_manifest() {
  auto m = BuildManifest::load(data_path("tiny.manifest"));
  m.output.clear();
  return m;
}

ModelBundle build_tiny() {
  const auto m = tiny_manifest();
  const auto sentences = load_corpus(m);
  std::ifstream lex(*m.lexicon);
  return build_model(sentences, m, read_lexicon(lex));
}

Engine engine_of(const ModelBundle& b, std::size_t k) {
  return Engine::from_parts(b.trie, b.data, b.classes, EngineConfig::from_header(b.data.header, k));
}

namespace oracle {

std::uint64_t Counts::get(const Gram& g) const {
  auto it = grams.find(g);
  return it == grams.end() ? 0 : it->second;
}

Counts count(std::span<const Sentence> sentences) {
  Counts c;
  for (const auto& s : sentences) {
    const auto& t = s.tokens;
    c.tokens += t.size();
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t n = 1; n <= 3 && i + n <= t.size(); ++n) ++c.grams[Gram(t.begin() + i, t.begin() + i + n)];
  }
  return c;
}

Pruned prune(const Counts& counts, const ModelCaps& caps, double alpha) {
  Pruned p;
  std::vector<std::pair<std::uint64_t, std::string>> uni;
  for (const auto& [g, c] : counts.grams)
    if (g.size() == 1 && !is_tag(g[0])) uni.emplace_back(c, g[0]);
  std::sort(uni.begin(), uni.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t t = 0; t < kNumTags; ++t) p.vocab.emplace_back(kTagSurface[t]);
  for (std::size_t i = 0; i < uni.size() && p.vocab.size() < caps.n_uni; ++i) p.vocab.push_back(uni[i].second);
  std::map<std::string, std::size_t> id;
  for (std::size_t i = 0; i < p.vocab.size(); ++i) id[p.vocab[i]] = i;

  struct Cand {
    std::vector<std::size_t> ids;
    double key;
    std::uint64_t count;
  };
  std::vector<Cand> bi;
  for (const auto& [g, c] : counts.grams)
    if (g.size() == 2 && id.count(g[0]) && id.count(g[1])) bi.push_back({{id[g[0]], id[g[1]]}, double(c), c});
  auto order = [](const Cand& a, const Cand& b) { return a.key != b.key ? a.key > b.key : a.ids < b.ids; };
  std::sort(bi.begin(), bi.end(), order);
  if (bi.size() > caps.n_bi) bi.resize(caps.n_bi);
  std::map<std::vector<std::size_t>, std::uint64_t> kept_bi;
  for (const auto& b : bi) {
    p.bigrams.insert({p.vocab[b.ids[0]], p.vocab[b.ids[1]]});
    kept_bi[b.ids] = b.count;
  }

  std::vector<Cand> tri;
  for (const auto& [g, c] : counts.grams) {
    if (g.size() != 3 || !id.count(g[0]) || !id.count(g[1]) || !id.count(g[2])) continue;
    auto ctx = kept_bi.find({id[g[0]], id[g[1]]});
    if (ctx == kept_bi.end()) continue;
    const double c123 = double(c), c12 = double(ctx->second), c1 = double(counts.get({g[0]}));
    tri.push_back({{id[g[0]], id[g[1]], id[g[2]]}, c123 * (c123 / c12 - alpha * c12 / c1), c});
  }
  std::sort(tri.begin(), tri.end(), order);
  if (tri.size() > caps.n_tri) tri.resize(caps.n_tri);
  for (const auto& t : tri) p.trigrams.insert({p.vocab[t.ids[0]], p.vocab[t.ids[1]], p.vocab[t.ids[2]]});
  return p;
}

Scorer::Scorer(const DataModel& data, const std::optional<ClassTables>& classes, const EngineConfig& config)
    : classes_(classes), fwo_(data.fwo), config_(config) {
  for (auto q : data.unigram_q) uni_.push_back(dequantize(q));
  std::vector<std::pair<WordId, WordId>> ordinal;
  for (const auto& g : data.bigrams)
    for (const auto& s : g.successors) {
      bi_[{g.context, s.word}] = dequantize(s.q);
      ordinal.emplace_back(g.context, s.word);
    }
  for (const auto& g : data.trigrams) {
    const auto [a, b] = ordinal.at(g.context_bigram);
    for (const auto& s : g.successors) tri_[{a, b, s.word}] = dequantize(s.q);
  }
  emission_.assign(uni_.size(), 0.0);
  if (classes_)
    for (std::size_t i = 0; i < classes_->topk.size(); ++i)
      if (classes_->topk[i] != kNoEntry) emission_[classes_->topk[i]] = dequantize(classes_->emission_q[i]);
}

double Scorer::score(WordId w, WordId c1, WordId c2) const {
  if (c1 != kNoWord && c2 != kNoWord) {
    auto it = tri_.find({c1, c2, w});
    if (it != tri_.end()) return it->second;
  }
  if (c2 != kNoWord) {
    auto it = bi_.find({c2, w});
    if (it != bi_.end()) return config_.lambda * it->second;
  }
  double r = 0.0, class_p = 0.0;
  if (classes_) {
    r = config_.r;
    if (c1 != kNoWord && c2 != kNoWord) {
      const auto& ct = *classes_;
      const auto best = ct.pair_argmax[ct.word_class[c1] * ct.n_classes + ct.word_class[c2]];
      if (ct.word_class[w] == best) class_p = emission_[w];
    }
  }
  const double lam2 = config_.lambda * config_.lambda;
  return lam2 * (r * class_p + (1.0 - r) * uni_[w]);
}

std::vector<std::pair<WordId, double>> Scorer::rank(const std::vector<WordId>& pool, WordId c1, WordId c2,
                                                    std::size_t k) const {
  std::vector<std::pair<WordId, double>> all;
  for (auto w : pool)
    if (w >= kNumTags) all.emplace_back(w, score(w, c1, c2));
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<std::pair<WordId, double>> Scorer::predict(WordId c1, WordId c2, std::size_t k) const {
  std::vector<WordId> pool;
  for (WordId w = 0; w < uni_.size(); ++w) pool.push_back(w);
  return rank(pool, c1, c2, k);
}

std::vector<std::pair<WordId, double>> Scorer::complete(const std::vector<std::string>& words, WordId c1, WordId c2,
                                                        const std::string& prefix, std::size_t k) const {
  if (prefix.empty()) return {};
  std::size_t scalars = 0;
  for (unsigned char ch : prefix) scalars += (ch & 0xC0) != 0x80;
  if (scalars == 1) {
    const char32_t first = utf8::first(prefix).value();
    for (const auto& e : fwo_.completion)
      if (e.first == first) return rank(e.words, c1, c2, k);
  }
  std::vector<WordId> pool;
  for (WordId w = 0; w < words.size(); ++w)
    if (words[w].compare(0, prefix.size(), prefix) == 0) pool.push_back(w);
  return rank(pool, c1, c2, k);
}

TypingResult simulate(const std::vector<std::string>& sentence, const SuggestionSource& source, std::size_t k) {
  TypingResult r;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    const std::string& w = sentence[i];
    const std::vector<std::string> ctx(sentence.begin(), sentence.begin() + i);
    std::vector<std::size_t> cuts;  // byte offset after each code point
    for (std::size_t b = 1; b <= w.size(); ++b)
      if (b == w.size() || (static_cast<unsigned char>(w[b]) & 0xC0) != 0x80) cuts.push_back(b);
    const std::size_t len = cuts.size();
    r.words += 1;
    r.n_c += len + 1;

    auto has = [&](const std::vector<std::string>& list) { return std::count(list.begin(), list.end(), w) > 0; };
    std::uint64_t cost = len + 1;
    if (has(source.predict(ctx, k))) {
      cost = 1;
      r.nwp_hits += 1;
    } else {
      for (std::size_t j = len - 1; j >= 1; --j)
        if (has(source.complete(ctx, w.substr(0, cuts[j - 1]), k))) cost = j + 1;
    }
    r.n_k += cost;
  }
  return r;
}

}  // namespace oracle

// ---------------------------------------------------------------------------

namespace {

class Zipf {
 public:
  Zipf(std::size_t n, double s) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::pow(double(i + 1), s);
    dist_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
  }
  template <typename Rng>
  std::size_t operator()(Rng& rng) {
    return dist_(rng);
  }

 private:
  std::discrete_distribution<std::size_t> dist_;
};

}  // namespace

Synthetic make_synthetic(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  Synthetic s;
  const std::size_t n = spec.vocab;
  std::unordered_set<std::string> seen;
  for (std::size_t t = 0; t < kNumTags; ++t) {
    s.words.emplace_back(kTagSurface[t]);
    seen.insert(s.words.back());
  }
  std::uniform_int_distribution<int> len(3, 10), letter('a', 'z');
  while (s.words.size() < n) {
    std::string w(static_cast<std::size_t>(len(rng)), 'a');
    for (auto& c : w) c = static_cast<char>(letter(rng));
    if (seen.insert(w).second) s.words.push_back(std::move(w));
  }
  s.counts.assign(n, 0);
  s.counts[id_of(Tag::SentenceStart)] = s.counts[id_of(Tag::SentenceEnd)] = 100'000'000 / 20;
  std::uint64_t total = 0;
  for (std::size_t i = kNumTags; i < n; ++i) s.counts[i] = 100'000'000 / (i - kNumTags + 1) + 1;
  for (auto c : s.counts) total += c;
  const auto vocab = Vocabulary::from_words(s.words, s.counts);

  ArpaModel arpa;
  arpa.words = s.words;
  for (WordId id = 0; id < n; ++id) {
    ArpaEntry e;
    e.ids[0] = id;
    e.log10_score = s.counts[id] ? std::log10(double(s.counts[id]) / double(total)) : kNoProbLog10;
    arpa.orders[0].push_back(e);
  }

  Zipf word_dist(n - kNumTags, 1.0);
  std::uniform_real_distribution<double> prob(0.001, 1.0);
  auto word = [&] { return static_cast<WordId>(kNumTags + word_dist(rng)); };

  std::set<std::array<WordId, 2>> bi;
  for (std::size_t i = 0; i < 50 && i + kNumTags < n; ++i) bi.insert({id_of(Tag::SentenceStart), WordId(kNumTags + i)});
  while (bi.size() < spec.bigrams) bi.insert({word(), word()});
  std::vector<std::array<WordId, 2>> bi_list(bi.begin(), bi.end());
  for (const auto& b : bi_list) {
    ArpaEntry e;
    e.ids = {b[0], b[1], kNoWord};
    e.log10_score = std::log10(prob(rng));
    arpa.orders[1].push_back(e);
  }

  Zipf ctx_dist(bi_list.size(), 0.7);
  std::set<std::array<WordId, 3>> tri;
  while (tri.size() < spec.trigrams) {
    const auto& b = bi_list[ctx_dist(rng)];
    tri.insert({b[0], b[1], word()});
  }
  for (const auto& t : tri) {
    ArpaEntry e;
    e.ids = t;
    e.log10_score = std::log10(prob(rng));
    arpa.orders[2].push_back(e);
  }

  SerializeOptions opts;
  opts.k = spec.k;
  s.data = build_data_model(arpa, build_fwo(vocab, spec.k), opts);
  s.trie = VocabTrie::build(s.words);

  auto& ct = s.classes;
  ct.n_classes = static_cast<std::uint16_t>(spec.n_classes);
  ct.k = static_cast<std::uint8_t>(spec.class_k);
  ct.word_class.assign(n, static_cast<std::uint8_t>(spec.n_classes - 1));
  std::uniform_int_distribution<std::size_t> cls(0, spec.n_classes - 1);
  for (std::size_t i = kNumTags; i < n; ++i) ct.word_class[i] = static_cast<std::uint8_t>(cls(rng));
  ct.topk.assign(spec.n_classes * spec.class_k, kNoEntry);
  ct.emission_q.assign(ct.topk.size(), 0xFFFF);
  std::vector<std::size_t> filled(spec.n_classes, 0);
  for (WordId i = kNumTags; i < n; ++i) {
    const auto c = ct.word_class[i];
    if (filled[c] < spec.class_k) {
      ct.topk[c * spec.class_k + filled[c]] = i;
      ct.emission_q[c * spec.class_k + filled[c]] = quantize(prob(rng) / double(filled[c] + 1));
      ++filled[c];
    }
  }
  ct.pair_argmax.resize(spec.n_classes * spec.n_classes);
  for (auto& c : ct.pair_argmax) c = static_cast<std::uint8_t>(cls(rng));
  return s;
}

void Synthetic::write(const std::string& basename) const {
  const auto p = ModelPaths::from_basename(basename);
  write_file(p.vocab, trie.serialize());
  write_file(p.ngram, serialize_model(data));
  write_file(p.classes, encode_class_file(classes));
}

Engine Synthetic::engine(std::size_t k) const {
  return Engine::from_parts(trie, data, classes, EngineConfig{k, 0.4, 0.5});
}

TestSet synthetic_testset(const Synthetic& model, std::size_t sentences, std::size_t words_per_sentence,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Zipf dist(model.words.size() - kNumTags, 1.0);
  std::vector<std::vector<std::string>> out(sentences);
  for (auto& s : out)
    for (std::size_t i = 0; i < words_per_sentence; ++i) s.push_back(model.words[kNumTags + dist(rng)]);
  return make_testset(std::move(out));
}

bool matches_golden(const std::string& name, const std::vector<std::uint8_t>& bytes) {
  const auto path = data_path("golden") / name;
  if (std::getenv("OPNG_UPDATE_GOLDEN")) {
    fs::create_directories(path.parent_path());
    write_file(path, bytes);
    return true;
  }
  if (!fs::exists(path)) return false;
  return read_file(path) == bytes;
}

bool matches_golden(const std::string& name, const std::string& text) {
  return matches_golden(name, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace opng::test
