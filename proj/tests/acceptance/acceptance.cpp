// Acceptance runner: one PASS/FAIL line per criterion. Exit status is
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "opng/errors.hpp"
#include "opng/quantizer.hpp"
#include "support.hpp"

using namespace opng;
using namespace opng::test;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Fixture for the oracle criteria: leading SOTU sentences under 10^4 tokens.
struct OracleFixture {
  std::vector<Sentence> sentences;
  BuildManifest manifest;
  ModelBundle bundle;
};

const OracleFixture& oracle_fixture() {
  static const OracleFixture f = [] {
    OracleFixture o;
    o.sentences = sotu_prefix(10'000);
    tag_rare_words(o.sentences, 2);
    o.manifest.caps = {200, 400, 400};
    std::ifstream lex(data_path("sotu.lex"));
    o.bundle = build_model(o.sentences, o.manifest, read_lexicon(lex));
    return o;
  }();
  return f;
}

Outcome inference_oracle() {
  const auto t0 = Clock::now();
  const auto& b = oracle_fixture().bundle;
  const std::size_t n = b.trie.size();
  std::size_t queries = 0, mismatches = 0;
  for (std::size_t k : {1, 3, 5}) {
    const auto engine = engine_of(b, k);
    const oracle::Scorer scorer(b.data, b.classes, engine.config());
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; j <= n; ++j) {
        const WordId c1 = i == n ? kNoWord : WordId(i), c2 = j == n ? kNoWord : WordId(j);
        const auto got = engine.predict(Context{c1, c2}, k);
        const auto want = scorer.predict(c1, c2, k);
        ++queries;
        bool same = got.size() == want.size();
        for (std::size_t r = 0; same && r < got.size(); ++r)
          same = got[r].id == want[r].first && got[r].score == want[r].second;
        mismatches += !same;
      }
  }
  const double secs = seconds_since(t0);
  std::size_t tokens = 0;
  for (const auto& s : oracle_fixture().sentences) tokens += s.tokens.size();
  return {mismatches == 0 && secs < 30.0 && tokens <= 10'000,
          fmt("%zu tokens, |V|=%zu, %zu context pairs x K in {1,3,5}: %zu mismatches, %.1f s", tokens, n,
              queries / 3, mismatches, secs)};
}

Outcome counting_oracle() {
  const auto& f = oracle_fixture();
  const auto counts = count_ngrams(f.sentences);
  const auto serial = reference::count_ngrams(encode_corpus(f.sentences));
  const auto want = oracle::count(f.sentences);

  std::size_t bad = 0, grams = 0;
  for (const auto& [g, c] : want.grams) {
    ++grams;
    const auto got = g.size() == 1 ? counts.count(g[0])
                     : g.size() == 2 ? counts.count(g[0], g[1])
                                     : counts.count(g[0], g[1], g[2]);
    bad += got != c;
  }
  const std::size_t stored = counts.distinct_unigrams() + counts.bi.size() + counts.tri.size();
  bad += stored != grams;
  bad += counts.total_tokens != want.tokens;
  bad += serial.uni != counts.uni || serial.bi != counts.bi || serial.tri != counts.tri;

  std::size_t prune_bad = 0;
  for (const auto& caps : {f.manifest.caps, ModelCaps{50, 60, 40}, ModelCaps{1'000'000, 1'000'000, 1'000'000}}) {
    const auto p = prune(counts, select_vocabulary(counts, caps), PruneParams{0.4, caps});
    const auto o = oracle::prune(want, caps, 0.4);
    prune_bad += p.vocab.words != o.vocab;
    std::set<std::array<std::string, 2>> bi;
    for (const auto& x : p.bigrams) bi.insert({p.vocab.words[x.ids[0]], p.vocab.words[x.ids[1]]});
    std::set<std::array<std::string, 3>> tri;
    for (const auto& x : p.trigrams)
      tri.insert({p.vocab.words[x.ids[0]], p.vocab.words[x.ids[1]], p.vocab.words[x.ids[2]]});
    prune_bad += bi != o.bigrams;
    prune_bad += tri != o.trigrams;
    prune_bad += !closure_violations(p).empty();
  }
  return {bad == 0 && prune_bad == 0,
          fmt("%zu distinct n-grams checked, %zu count mismatches; 3 cap settings, %zu pruning mismatches", grams, bad,
              prune_bad)};
}

Outcome quantization() {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> lin(0.0, 1.0), logd(-29.999, 0.0);
  double worst = 0.0;
  std::size_t bad = 0;
  for (int i = 0; i < 100'000; ++i) {
    double p = i % 2 ? 1.0 - lin(rng) : std::pow(10.0, logd(rng));  // (0, 1]
    if (p <= 0.0) p = 1.0;
    const double err = std::abs(-std::log10(dequantize(quantize(p))) + std::log10(p));
    worst = std::max(worst, err);
    bad += !(err < 0.001);
  }
  const auto cap = quantize(1e-30);
  return {bad == 0 && cap == 29999,
          fmt("10^5 samples (half uniform, half log-uniform down to 1e-29.999): max error %.6f, %zu over; "
              "quantize(1e-30)=%u",
              worst, bad, unsigned(cap))};
}

Outcome round_trips() {
  std::size_t bad = 0;
  double worst = 0.0;
  std::size_t entries = 0;
  for (const ModelBundle* b : {&oracle_fixture().bundle}) {
    std::ostringstream a1;
    write_arpa(b->arpa, a1);
    std::istringstream in(a1.str());
    const auto back = read_arpa(in, b->pruned.vocab);
    std::ostringstream a2;
    write_arpa(back, a2);
    bad += a1.str() != a2.str();
    for (int o = 0; o < 3; ++o) {
      bad += back.orders[o].size() != b->arpa.orders[o].size();
      for (std::size_t i = 0; i < back.orders[o].size() && i < b->arpa.orders[o].size(); ++i) {
        bad += back.orders[o][i].ids != b->arpa.orders[o][i].ids;
        bad += std::abs(back.orders[o][i].log10_score - b->arpa.orders[o][i].log10_score) > 5e-7;
      }
    }

    bad += !(deserialize_model(serialize_model(b->data)) == b->data);
    bad += !(VocabTrie::deserialize(b->trie.serialize()) == b->trie);
    bad += !(decode_class_file(encode_class_file(b->classes)) == b->classes);

    TempDir dir;
    const auto base = (dir / "m").string();
    write_file(base + ".vocab", b->trie.serialize());
    write_file(base + ".ngram", serialize_model(b->data));
    write_file(base + ".class", encode_class_file(b->classes));
    const auto paths = ModelPaths::from_basename(base);
    const auto cfg = EngineConfig::from_header(b->data.header);
    const auto par = Engine::load(paths, cfg, {LoadMode::Parallel});
    const auto seq = Engine::load(paths, cfg, {LoadMode::Sequential});
    bad += !par.same_state(seq);
    bad += !par.same_state(engine_of(*b));

    const auto re = to_arpa(par.data(), par.vocab());
    for (int o = 0; o < 3; ++o) {
      bad += re.orders[o].size() != b->arpa.orders[o].size();
      for (std::size_t i = 0; i < re.orders[o].size() && i < b->arpa.orders[o].size(); ++i) {
        const auto& src = b->arpa.orders[o][i];
        const auto& got = re.orders[o][i];
        bad += got.ids != src.ids;
        ++entries;
        if (src.log10_score <= -29.999) {
          bad += got.log10_score != kNoProbLog10;
        } else {
          const double d = std::abs(got.log10_score - src.log10_score);
          worst = std::max(worst, d);
          bad += !(d < 0.001);
        }
      }
    }
  }
  return {bad == 0, fmt("ARPA text identity, binary structural identity, parallel == sequential load; "
                        "re-export of %zu entries max |d log10| %.6f; %zu failures",
                        entries, worst, bad)};
}

// Every truncation/corruption must raise FormatError and Engine::load must
// refuse the file set.
Outcome corruption() {
  const auto& b = oracle_fixture().bundle;
  TempDir dir;
  const auto base = (dir / "m").string();
  const auto paths = ModelPaths::from_basename(base);
  const auto vocab = b.trie.serialize();
  const auto payload = encode_data_payload(b.data);
  const auto ngram = compress(payload, 9);
  const auto cls = encode_class_file(b.classes);
  const auto cfg = EngineConfig::from_header(b.data.header);

  std::size_t cases = 0, bad = 0, unnamed = 0;
  auto expect = [&](const std::vector<std::uint8_t>& v, const std::vector<std::uint8_t>& n,
                    const std::vector<std::uint8_t>& c, const std::string& section) {
    ++cases;
    write_file(paths.vocab, v);
    write_file(paths.ngram, n);
    write_file(paths.classes, c);
    for (auto mode : {LoadMode::Parallel, LoadMode::Sequential}) {
      try {
        (void)Engine::load(paths, cfg, {mode});
        ++bad;
      } catch (const FormatError& e) {
        if (e.section().empty() || (!section.empty() && e.section() != section)) ++unnamed;
      } catch (const std::exception&) {
        ++unnamed;
      }
    }
  };
  auto cut = [](const std::vector<std::uint8_t>& v, std::size_t n) {
    return std::vector<std::uint8_t>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n));
  };

  // payload truncated at each section boundary and one byte either side
  const auto sz = section_sizes(b.data);
  const std::vector<std::pair<std::size_t, std::string>> starts = {
      {0, "header"},
      {sz.header, "unigram block"},
      {sz.header + sz.unigram, "bigram block"},
      {sz.header + sz.unigram + sz.bigram, "trigram block"},
      {sz.header + sz.unigram + sz.bigram + sz.trigram, "FWO prediction block"},
      {sz.header + sz.unigram + sz.bigram + sz.trigram + sz.fwo_prediction, "FWO completion block"},
  };
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto [at, name] = starts[i];
    expect(vocab, compress(cut(payload, at), 9), cls, name);
    if (at + 1 < payload.size()) expect(vocab, compress(cut(payload, at + 1), 9), cls, name);
    if (at > 0) expect(vocab, compress(cut(payload, at - 1), 9), cls, i ? starts[i - 1].second : "header");
  }
  expect(vocab, compress(cut(payload, payload.size() - 1), 9), cls, "FWO completion block");
  // compressed stream cut anywhere
  for (std::size_t at = 0; at < ngram.size(); at += std::max<std::size_t>(1, ngram.size() / 40))
    expect(vocab, cut(ngram, at), cls, "");
  // trailing garbage
  {
    auto p = payload;
    p.push_back(0);
    expect(vocab, compress(p, 9), cls, "trailer");
  }
  // vocab file: header and every node boundary
  for (std::size_t at = 0; at < vocab.size(); at += (at < VocabTrie::kHeaderBytes ? 1 : VocabTrie::kNodeBytes))
    expect(cut(vocab, at), ngram, cls, "");
  // class file: every section boundary
  const std::size_t nw = b.classes.word_class.size(), cells = std::size_t{b.classes.n_classes} * b.classes.k;
  for (std::size_t at : {std::size_t{0}, std::size_t{4}, ClassTables::kHeaderBytes, ClassTables::kHeaderBytes + nw,
                         ClassTables::kHeaderBytes + nw + cells * 3, ClassTables::kHeaderBytes + nw + cells * 5,
                         cls.size() - 1})
    expect(vocab, ngram, cut(cls, at), "");

  // value corruptions
  auto flip_magic = [](std::vector<std::uint8_t> v) {
    v[0] ^= 0xFF;
    return v;
  };
  expect(flip_magic(vocab), ngram, cls, "");
  expect(vocab, compress(flip_magic(payload), 9), cls, "header");
  expect(vocab, ngram, flip_magic(cls), "class header");
  {
    auto p = payload;  // first bigram successor ID out of range
    const std::size_t at = sz.header + sz.unigram + 5;
    p[at] = p[at + 1] = p[at + 2] = 0xFE;
    expect(vocab, compress(p, 9), cls, "bigram block");
  }
  {
    auto p = payload;  // first trigram context beyond the bigram count
    const std::size_t at = sz.header + sz.unigram + sz.bigram;
    p[at] = p[at + 1] = p[at + 2] = 0xFE;
    expect(vocab, compress(p, 9), cls, "trigram block");
  }
  {
    auto c = cls;  // word-class entry beyond n_classes
    c[ClassTables::kHeaderBytes + 5] = 0xFF;
    expect(vocab, ngram, c, "word-class block");
  }
  {
    auto p = payload;  // declared unigram count disagrees with the vocabulary
    p[5] = static_cast<std::uint8_t>(p[5] + 1);
    expect(vocab, compress(p, 9), cls, "");
  }
  return {bad == 0 && unnamed == 0,
          fmt("%zu corrupted file sets x 2 load modes: %zu loaded anyway, %zu without the expected named error",
              cases, bad, unnamed)};
}

Outcome class_file_size() {
  SyntheticSpec spec;
  spec.vocab = 100'000;
  spec.bigrams = 1000;
  spec.trigrams = 1000;
  spec.n_classes = 32;
  spec.class_k = 10;
  const auto s = make_synthetic(spec);
  const auto bytes = encode_class_file(s.classes);
  const std::size_t expected = 100'000 + 32 * 10 * (3 + 2) + 1024 + ClassTables::kHeaderBytes;
  const double kb = 102.0 * 1024.0;
  const bool pass = bytes.size() == expected && bytes.size() == s.classes.file_size() &&
                    std::abs(double(bytes.size()) - kb) <= 2048.0;
  return {pass, fmt("%zu bytes (formula %zu, header %zu); 102 KB = %.0f bytes, difference %.0f", bytes.size(),
                    expected, ClassTables::kHeaderBytes, kb, std::abs(double(bytes.size()) - kb))};
}

Outcome ksr_monotone() {
  std::string detail;
  bool pass = true;
  auto sweep = [&](const char* name, const ModelBundle& b, const TestSet& ts) {
    const auto engine = engine_of(b);
    const EngineSource src(engine);
    double prev = -1.0;
    std::uint64_t prev_nk = ~0ull;
    detail += std::string(name) + " KSR";
    for (std::size_t k = 1; k <= 5; ++k) {
      const auto rep = evaluate(ts, src, k);
      pass &= rep.ksr_percent >= prev && rep.totals.n_k <= prev_nk;
      prev = rep.ksr_percent;
      prev_nk = rep.totals.n_k;
      detail += fmt(" %.2f", rep.ksr_percent);
    }
    const SilentSource silent;
    const double k0 = ksr(ts, silent, 3), n0 = nwp_rate(ts, silent, 3);
    pass &= k0 == 0.0 && n0 == 0.0;
    detail += fmt(" (silent: KSR %.1f, NWP %.1f); ", k0, n0);
  };
  const auto tiny = build_tiny();
  std::vector<std::vector<std::string>> tiny_words;
  for (const auto& s : load_corpus(tiny_manifest())) tiny_words.push_back(words_of(s));
  sweep("tiny", tiny, make_testset(tiny_words));

  std::vector<std::vector<std::string>> fx;
  for (const auto& s : sotu_prefix(10'000)) fx.push_back(words_of(s));
  sweep("sotu-10k", oracle_fixture().bundle, make_testset(fx));
  return {pass, detail.substr(0, detail.size() - 2)};
}

Outcome self_training() {
  const auto t0 = Clock::now();
  const auto& all = sotu_clean();
  const std::size_t split = all.size() - all.size() / 10;
  std::vector<Sentence> train(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(split));
  std::size_t train_words = 0;
  for (const auto& s : train) train_words += s.tokens.size() - 2;
  tag_rare_words(train, 3);
  BuildManifest m;
  std::ifstream lex(data_path("sotu.lex"));
  const auto bundle = build_model(train, m, read_lexicon(lex));
  const auto engine = engine_of(bundle, 3);

  std::vector<std::vector<std::string>> held;
  for (std::size_t i = split; i < all.size(); ++i) held.push_back(words_of(all[i]));
  const auto ts = make_testset(held);
  const auto rep = evaluate(ts, EngineSource(engine), 3);
  const double secs = seconds_since(t0);
  return {rep.ksr_percent >= 30.0 && rep.nwp_percent >= 8.0 && secs < 120.0,
          fmt("train %zu words, held-out %llu words: KSR %.2f%% (floor 30), NWP %.2f%% (floor 8), %.1f s",
              train_words, (unsigned long long)ts.stats.words, rep.ksr_percent, rep.nwp_percent, secs)};
}

Outcome load_linearity() {
  TempDir dir;
  std::vector<ModelVariant> variants;
  for (std::size_t scale : {1, 2, 4}) {
    SyntheticSpec spec;
    spec.vocab = 20'000;
    spec.bigrams = 100'000 * scale;
    spec.trigrams = 125'000 * scale;
    spec.seed = scale;
    const auto base = (dir / ("x" + std::to_string(scale))).string();
    make_synthetic(spec).write(base);
    variants.push_back({"x" + std::to_string(scale), ModelPaths::from_basename(base)});
  }
  const auto ts = make_testset({{"a"}});
  const auto rep = bench(variants, ts, EngineConfig{}, 9);
  std::string sizes;
  for (const auto& r : rep.rows) sizes += fmt(" %s=%lluB/%.1fms", r.name.c_str(), (unsigned long long)r.ngram_bytes,
                                              r.load_ms_median);
  const double r2 = rep.load_vs_size ? rep.load_vs_size->r2 : 0.0;
  return {r2 >= 0.9, fmt("median of 9 loads:%s; R^2 %.4f (floor 0.9)", sizes.c_str(), r2)};
}

Outcome latency_scaling() {
  std::vector<double> ms;
  std::vector<std::size_t> sizes = {10'000, 50'000, 100'000};
  std::string detail;
  for (auto v : sizes) {
    SyntheticSpec spec;
    spec.vocab = v;
    spec.bigrams = 2 * v;
    spec.trigrams = 5 * v / 2;
    const auto s = make_synthetic(spec);
    const auto engine = s.engine(3);
    const auto ts = synthetic_testset(s, 300, 10, 99);
    time_queries(engine, ts, 3);  // warm-up
    std::vector<double> runs;
    for (int i = 0; i < 3; ++i) runs.push_back(time_queries(engine, ts, 3).mean_ms().value());
    ms.push_back(median(runs));
    detail += fmt("|V|=%zu: %.4f ms; ", v, ms.back());
  }
  bool pass = true;
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    const double t_ratio = ms[i] / ms[0], v_ratio = double(sizes[i]) / double(sizes[0]);
    pass &= t_ratio < v_ratio;
    detail += fmt("ratio %.2f vs %.0f; ", t_ratio, v_ratio);
  }
  return {pass, detail.substr(0, detail.size() - 2)};
}

Outcome coverage_curve() {
  const auto counts = count_ngrams(sotu_clean());
  const std::size_t types = counts.distinct_unigrams();
  // Steps scaled to the corpus: ten steps across the non-tag vocabulary.
  const std::size_t step = std::max<std::size_t>(1, types / 10);
  std::vector<double> cov;
  for (std::size_t n = kNumTags + step; n < kNumTags + types + step; n += step)
    cov.push_back(coverage(counts, select_vocabulary(counts, ModelCaps{n, 1, 1})));
  bool pass = true;
  std::string detail = fmt("%zu word types, step %zu:", types, step);
  for (std::size_t i = 0; i < cov.size(); ++i) {
    detail += fmt(" %.3f", cov[i]);
    if (i) pass &= cov[i] >= cov[i - 1];
    if (i >= 2) pass &= (cov[i] - cov[i - 1]) <= (cov[i - 1] - cov[i - 2]) + 1e-12;
  }
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"oracle-inference", inference_oracle},
      {"oracle-counting-pruning", counting_oracle},
      {"quantization", quantization},
      {"round-trips", round_trips},
      {"corruption-named-errors", corruption},
      {"class-file-size", class_file_size},
      {"ksr-monotonic", ksr_monotone},
      {"self-training", self_training},
      {"load-linearity", load_linearity},
      {"latency-sublinear", latency_scaling},
      {"coverage-concave", coverage_curve},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
