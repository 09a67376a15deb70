#include "opng/binfmt.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "opng/bytes.hpp"
#include "opng/errors.hpp"
#include "opng/utf8.hpp"

namespace opng {

namespace {

constexpr char kDataMagic[4] = {'O', 'P', 'N', 'G'};
constexpr char kClassMagic[4] = {'O', 'P', 'N', 'C'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint16_t kNoEmission = 0xFFFF;

bool best_first(const Successor& a, const Successor& b) {
  if (a.q != b.q) return a.q < b.q;
  return a.word < b.word;
}

std::uint16_t to_milli(double v, const char* what) {
  const double m = std::round(v * 1000.0);
  if (!(m >= 0 && m <= 65535)) throw BuildError("serialize", std::string(what) + " out of range");
  return static_cast<std::uint16_t>(m);
}

void check_id(std::uint64_t id, const std::string& what) {
  if (id > kMaxId24) throw BuildError("serialize", what + " " + std::to_string(id) + " exceeds 3-byte field");
}

void put_ids(ByteWriter& w, const std::vector<WordId>& ids, std::size_t k) {
  for (std::size_t i = 0; i < k; ++i) w.u24(i < ids.size() ? ids[i] : kNoEntry);
}

std::vector<WordId> get_ids(ByteReader& r, std::size_t k) {
  std::vector<WordId> out;
  bool padding = false;
  for (std::size_t i = 0; i < k; ++i) {
    const auto id = r.u24();
    if (id == kNoEntry) {
      padding = true;
      continue;
    }
    if (padding) throw FormatError(r.section(), "entry after padding");
    out.push_back(id);
  }
  return out;
}

void check_successors(const std::vector<Successor>& s, std::uint32_t n_uni, const std::string& section) {
  if (s.empty()) throw FormatError(section, "empty successor group");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].word >= n_uni) throw FormatError(section, "successor ID " + std::to_string(s[i].word) + " unresolved");
    if (i && !best_first(s[i - 1], s[i])) throw FormatError(section, "successors not in best-first order");
  }
  std::vector<WordId> ids;
  for (const auto& x : s) ids.push_back(x.word);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw FormatError(section, "duplicate successor");
}

}  // namespace

const std::vector<WordId>* FwoTables::completion_for(char32_t c) const {
  auto it = std::lower_bound(completion.begin(), completion.end(), c,
                             [](const Completion& e, char32_t x) { return e.first < x; });
  if (it == completion.end() || it->first != c) return nullptr;
  return &it->words;
}

FwoTables build_fwo(const Vocabulary& vocab, std::size_t k) {
  if (k < 1) throw Error("build_fwo: k must be >= 1");
  std::vector<WordId> order;
  for (WordId id = kNumTags; id < vocab.size(); ++id) order.push_back(id);
  std::stable_sort(order.begin(), order.end(), [&](WordId a, WordId b) { return vocab.counts[a] > vocab.counts[b]; });

  FwoTables fwo;
  fwo.prediction.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(k, order.size())));
  std::map<char32_t, std::vector<WordId>> by_first;
  for (auto id : order) {
    auto c = utf8::first(vocab.words[id]);
    if (!c) continue;
    auto& list = by_first[*c];
    if (list.size() < k) list.push_back(id);
  }
  for (auto& [c, ids] : by_first) fwo.completion.push_back({c, std::move(ids)});
  return fwo;
}

DataModel build_data_model(const ArpaModel& arpa, const FwoTables& fwo, const SerializeOptions& options) {
  if (options.k < 1 || options.k > 255) throw BuildError("serialize", "k must be in [1, 255]");
  DataModel m;
  auto& h = m.header;
  h.n_uni = static_cast<std::uint32_t>(arpa.words.size());
  h.n_bi = static_cast<std::uint32_t>(arpa.bigrams().size());
  h.n_tri = static_cast<std::uint32_t>(arpa.trigrams().size());
  h.k = static_cast<std::uint8_t>(options.k);
  h.lambda_milli = to_milli(options.lambda, "lambda");
  h.r_milli = to_milli(options.r, "r");
  check_id(arpa.words.size(), "vocabulary size");
  check_id(arpa.bigrams().size(), "bigram count");
  check_id(arpa.trigrams().size(), "trigram count");

  if (arpa.unigrams().size() != arpa.words.size())
    throw BuildError("serialize", "unigram section must list every vocabulary word");
  for (std::size_t i = 0; i < arpa.unigrams().size(); ++i) {
    const auto& e = arpa.unigrams()[i];
    if (e.ids[0] != i) throw BuildError("serialize", "unigram section not in ID order");
    m.unigram_q.push_back(quantize_log10(std::min(e.log10_score, 0.0), options.quant));
  }

  auto qscore = [&](const ArpaEntry& e) { return quantize_log10(std::min(e.log10_score, 0.0), options.quant); };

  for (const auto& e : arpa.bigrams()) {
    if (m.bigrams.empty() || m.bigrams.back().context != e.ids[0]) {
      if (!m.bigrams.empty() && m.bigrams.back().context > e.ids[0])
        throw BuildError("serialize", "bigram section not sorted");
      m.bigrams.push_back({e.ids[0], {}});
    }
    m.bigrams.back().successors.push_back({e.ids[1], qscore(e)});
  }
  std::map<std::pair<WordId, WordId>, std::uint32_t> ordinal;
  std::uint32_t next = 0;
  for (auto& g : m.bigrams) {
    if (g.successors.size() > kMaxSuccessors)
      throw BuildError("serialize", "context '" + arpa.words[g.context] + "' has more than 65535 successors");
    std::sort(g.successors.begin(), g.successors.end(), best_first);
    for (const auto& s : g.successors) ordinal[{g.context, s.word}] = next++;
  }

  std::map<std::uint32_t, std::vector<Successor>> tri_groups;
  for (const auto& e : arpa.trigrams()) {
    auto it = ordinal.find({e.ids[0], e.ids[1]});
    if (it == ordinal.end())
      throw BuildError("serialize", "trigram context '" + arpa.words[e.ids[0]] + " " + arpa.words[e.ids[1]] +
                                        "' has no bigram entry");
    tri_groups[it->second].push_back({e.ids[2], qscore(e)});
  }
  for (auto& [ctx, succ] : tri_groups) {
    if (succ.size() > kMaxSuccessors) throw BuildError("serialize", "trigram context " + std::to_string(ctx) + " has more than 65535 successors");
    std::sort(succ.begin(), succ.end(), best_first);
    m.trigrams.push_back({ctx, std::move(succ)});
  }

  m.fwo = fwo;
  if (m.fwo.prediction.size() > options.k) m.fwo.prediction.resize(options.k);
  for (auto& c : m.fwo.completion)
    if (c.words.size() > options.k) c.words.resize(options.k);
  if (m.fwo.completion.size() > 0xFFFF) throw BuildError("serialize", "too many completion entries");
  validate_data_model(m);
  return m;
}

SectionSizes section_sizes(const DataModel& m) {
  const std::size_t k = m.header.k;
  SectionSizes s;
  s.header = DataHeader::kBytes;
  s.unigram = 2 * std::size_t{m.header.n_uni};
  for (const auto& g : m.bigrams) s.bigram += 3 + 2 + 5 * g.successors.size();
  for (const auto& g : m.trigrams) s.trigram += 3 + 2 + 5 * g.successors.size();
  s.fwo_prediction = 3 * k;
  s.fwo_completion = 2 + m.fwo.completion.size() * (4 + 3 * k);
  return s;
}

std::size_t data_payload_size(const DataModel& m) { return section_sizes(m).total(); }

std::vector<std::uint8_t> encode_data_payload(const DataModel& m) {
  ByteWriter w;
  const auto& h = m.header;
  w.raw(kDataMagic, 4);
  w.u8(h.version);
  w.u32(h.n_uni);
  w.u32(h.n_bi);
  w.u32(h.n_tri);
  w.u8(h.k);
  w.u16(h.lambda_milli);
  w.u16(h.r_milli);
  for (auto q : m.unigram_q) w.u16(q);
  for (const auto& g : m.bigrams) {
    w.u24(g.context);
    w.u16(static_cast<std::uint16_t>(g.successors.size()));
    for (const auto& s : g.successors) {
      w.u24(s.word);
      w.u16(s.q);
    }
  }
  for (const auto& g : m.trigrams) {
    w.u24(g.context_bigram);
    w.u16(static_cast<std::uint16_t>(g.successors.size()));
    for (const auto& s : g.successors) {
      w.u24(s.word);
      w.u16(s.q);
    }
  }
  put_ids(w, m.fwo.prediction, h.k);
  w.u16(static_cast<std::uint16_t>(m.fwo.completion.size()));
  for (const auto& c : m.fwo.completion) {
    w.u32(static_cast<std::uint32_t>(c.first));
    put_ids(w, c.words, h.k);
  }
  return w.take();
}

DataModel decode_data_payload(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  DataModel m;
  auto& h = m.header;

  r.section("header");
  if (payload.size() < 4 || std::memcmp(payload.data(), kDataMagic, 4) != 0) throw FormatError("header", "bad magic");
  r.skip(4);
  h.version = r.u8();
  if (h.version != kVersion) throw FormatError("header", "unsupported version " + std::to_string(h.version));
  h.n_uni = r.u32();
  h.n_bi = r.u32();
  h.n_tri = r.u32();
  h.k = r.u8();
  h.lambda_milli = r.u16();
  h.r_milli = r.u16();
  if (h.k == 0) throw FormatError("header", "k must be >= 1");
  if (h.n_uni > kMaxId24 || h.n_bi > kMaxId24 || h.n_tri > kMaxId24) throw FormatError("header", "counts exceed 3-byte range");

  r.section("unigram block");
  if (r.remaining() < 2 * std::size_t{h.n_uni}) throw FormatError("unigram block", "truncated");
  m.unigram_q.reserve(h.n_uni);
  for (std::uint32_t i = 0; i < h.n_uni; ++i) m.unigram_q.push_back(r.u16());

  auto read_groups = [&](const std::string& name, std::uint32_t total, auto&& make) {
    r.section(name);
    std::uint64_t seen = 0;
    while (seen < total) {
      const auto ctx = r.u24();
      const auto count = r.u16();
      if (count == 0) throw FormatError(name, "empty successor group");
      if (seen + count > total) throw FormatError(name, "groups exceed declared entry count");
      std::vector<Successor> succ;
      succ.reserve(count);
      for (std::uint16_t i = 0; i < count; ++i) {
        const auto w = r.u24();
        const auto q = r.u16();
        succ.push_back({w, q});
      }
      make(ctx, std::move(succ));
      seen += count;
    }
  };
  read_groups("bigram block", h.n_bi, [&](std::uint32_t ctx, std::vector<Successor>&& s) {
    m.bigrams.push_back({ctx, std::move(s)});
  });
  read_groups("trigram block", h.n_tri, [&](std::uint32_t ctx, std::vector<Successor>&& s) {
    m.trigrams.push_back({ctx, std::move(s)});
  });

  r.section("FWO prediction block");
  m.fwo.prediction = get_ids(r, h.k);

  r.section("FWO completion block");
  const auto entries = r.u16();
  for (std::uint16_t i = 0; i < entries; ++i) {
    const auto c = r.u32();
    auto ids = get_ids(r, h.k);
    m.fwo.completion.push_back({static_cast<char32_t>(c), std::move(ids)});
  }
  if (r.remaining() != 0) throw FormatError("trailer", std::to_string(r.remaining()) + " trailing bytes");

  validate_data_model(m);
  return m;
}

void validate_data_model(const DataModel& m) {
  const auto& h = m.header;
  const QuantParams quant;
  if (m.unigram_q.size() != h.n_uni) throw FormatError("unigram block", "size mismatch");
  for (auto q : m.unigram_q)
    if (q > quant.c2) throw FormatError("unigram block", "score above cap");

  std::uint64_t total = 0;
  for (std::size_t i = 0; i < m.bigrams.size(); ++i) {
    const auto& g = m.bigrams[i];
    if (g.context >= h.n_uni) throw FormatError("bigram block", "context ID " + std::to_string(g.context) + " unresolved");
    if (i && m.bigrams[i - 1].context >= g.context) throw FormatError("bigram block", "groups not sorted by context");
    check_successors(g.successors, h.n_uni, "bigram block");
    for (const auto& s : g.successors)
      if (s.q > quant.c2) throw FormatError("bigram block", "score above cap");
    total += g.successors.size();
  }
  if (total != h.n_bi) throw FormatError("bigram block", "entry count mismatch");

  total = 0;
  for (std::size_t i = 0; i < m.trigrams.size(); ++i) {
    const auto& g = m.trigrams[i];
    if (g.context_bigram >= h.n_bi)
      throw FormatError("trigram block", "context bigram " + std::to_string(g.context_bigram) + " unresolved");
    if (i && m.trigrams[i - 1].context_bigram >= g.context_bigram)
      throw FormatError("trigram block", "groups not sorted by context");
    check_successors(g.successors, h.n_uni, "trigram block");
    for (const auto& s : g.successors)
      if (s.q > quant.c2) throw FormatError("trigram block", "score above cap");
    total += g.successors.size();
  }
  if (total != h.n_tri) throw FormatError("trigram block", "entry count mismatch");

  if (m.fwo.prediction.size() > h.k) throw FormatError("FWO prediction block", "more than k entries");
  for (auto id : m.fwo.prediction)
    if (id >= h.n_uni) throw FormatError("FWO prediction block", "ID unresolved");
  for (std::size_t i = 0; i < m.fwo.completion.size(); ++i) {
    const auto& c = m.fwo.completion[i];
    if (i && m.fwo.completion[i - 1].first >= c.first) throw FormatError("FWO completion block", "entries not sorted");
    if (c.words.size() > h.k) throw FormatError("FWO completion block", "more than k entries");
    for (auto id : c.words)
      if (id >= h.n_uni) throw FormatError("FWO completion block", "ID unresolved");
  }
}

std::vector<std::uint8_t> compress(std::span<const std::uint8_t> payload, int level) {
  uLongf len = compressBound(static_cast<uLong>(payload.size()));
  std::vector<std::uint8_t> out(len);
  if (compress2(out.data(), &len, payload.data(), static_cast<uLong>(payload.size()), level) != Z_OK)
    throw BuildError("serialize", "zlib compression failed");
  out.resize(len);
  return out;
}

std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> bytes) {
  const std::string sec = "compressed stream";
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw FormatError(sec, "inflateInit failed");
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  std::vector<std::uint8_t> out;
  std::uint8_t chunk[1 << 16];
  int rc;
  do {
    zs.next_out = chunk;
    zs.avail_out = sizeof chunk;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FormatError(sec, rc == Z_BUF_ERROR ? "truncated" : std::string("corrupt (") + (zs.msg ? zs.msg : "zlib error") + ")");
    }
    out.insert(out.end(), chunk, chunk + (sizeof chunk - zs.avail_out));
  } while (rc != Z_STREAM_END);
  const auto leftover = zs.avail_in;
  inflateEnd(&zs);
  if (leftover != 0) throw FormatError(sec, "trailing bytes after stream end");
  return out;
}

std::vector<std::uint8_t> serialize_model(const DataModel& model, int compression_level) {
  return compress(encode_data_payload(model), compression_level);
}

DataModel deserialize_model(std::span<const std::uint8_t> bytes) { return decode_data_payload(decompress(bytes)); }

std::size_t ClassTables::file_size() const {
  return kHeaderBytes + word_class.size() + std::size_t{n_classes} * k * (3 + 2) + std::size_t{n_classes} * n_classes;
}

ClassTables to_class_tables(const ClassModel& model, const QuantParams& quant) {
  if (model.n_classes() < 1 || model.n_classes() > kMaxClasses) throw BuildError("class", "class count out of range");
  if (model.k > 255) throw BuildError("class", "k must be <= 255");
  ClassTables t;
  t.n_classes = static_cast<std::uint16_t>(model.n_classes());
  t.k = static_cast<std::uint8_t>(model.k);
  t.word_class = model.word_class;
  t.topk.assign(std::size_t{t.n_classes} * t.k, kNoEntry);
  t.emission_q.assign(t.topk.size(), kNoEmission);
  for (std::size_t c = 0; c < t.n_classes; ++c)
    for (std::size_t i = 0; i < model.topk[c].size() && i < t.k; ++i) {
      check_id(model.topk[c][i], "class member");
      t.topk[c * t.k + i] = model.topk[c][i];
      t.emission_q[c * t.k + i] = quantize(model.emission[c][i], quant);
    }
  t.pair_argmax = model.pair_argmax;
  return t;
}

std::vector<std::uint8_t> encode_class_file(const ClassTables& t) {
  ByteWriter w;
  w.raw(kClassMagic, 4);
  w.u8(kVersion);
  w.u16(t.n_classes);
  w.u8(t.k);
  w.u32(static_cast<std::uint32_t>(t.word_class.size()));
  w.raw(t.word_class.data(), t.word_class.size());
  for (auto id : t.topk) w.u24(id);
  for (auto q : t.emission_q) w.u16(q);
  w.raw(t.pair_argmax.data(), t.pair_argmax.size());
  return w.take();
}

ClassTables decode_class_file(std::span<const std::uint8_t> bytes, std::optional<std::size_t> vocab_size) {
  ByteReader r(bytes);
  ClassTables t;
  r.section("class header");
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kClassMagic, 4) != 0) throw FormatError("class header", "bad magic");
  r.skip(4);
  if (r.u8() != kVersion) throw FormatError("class header", "unsupported version");
  t.n_classes = r.u16();
  t.k = r.u8();
  const auto n_words = r.u32();
  if (t.n_classes < 1 || t.n_classes > kMaxClasses) throw FormatError("class header", "class count out of range");
  if (vocab_size && n_words != *vocab_size)
    throw FormatError("class header", "covers " + std::to_string(n_words) + " words, vocabulary has " + std::to_string(*vocab_size));

  r.section("word-class block");
  if (r.remaining() < n_words) throw FormatError("word-class block", "truncated");
  t.word_class.resize(n_words);
  for (auto& c : t.word_class) {
    c = r.u8();
    if (c >= t.n_classes) throw FormatError("word-class block", "class ID out of range");
  }

  const std::size_t cells = std::size_t{t.n_classes} * t.k;
  r.section("class top-k block");
  if (r.remaining() < cells * 5) throw FormatError("class top-k block", "truncated");
  t.topk.resize(cells);
  for (auto& id : t.topk) id = r.u24();
  t.emission_q.resize(cells);
  for (auto& q : t.emission_q) q = r.u16();
  for (std::size_t c = 0; c < t.n_classes; ++c) {
    bool padding = false;
    for (std::size_t i = 0; i < t.k; ++i) {
      const auto id = t.topk[c * t.k + i];
      const auto q = t.emission_q[c * t.k + i];
      if (id == kNoEntry) {
        if (q != kNoEmission) throw FormatError("class top-k block", "padding mismatch");
        padding = true;
        continue;
      }
      if (padding) throw FormatError("class top-k block", "entry after padding");
      if (id >= n_words) throw FormatError("class top-k block", "word ID unresolved");
      if (t.word_class[id] != c) throw FormatError("class top-k block", "word listed under the wrong class");
      if (q > QuantParams{}.c2) throw FormatError("class top-k block", "emission above cap");
    }
  }

  r.section("class pair block");
  const std::size_t pairs = std::size_t{t.n_classes} * t.n_classes;
  if (r.remaining() < pairs) throw FormatError("class pair block", "truncated");
  t.pair_argmax.resize(pairs);
  for (auto& c : t.pair_argmax) {
    c = r.u8();
    if (c >= t.n_classes) throw FormatError("class pair block", "class ID out of range");
  }
  if (r.remaining() != 0) throw FormatError("class trailer", std::to_string(r.remaining()) + " trailing bytes");
  return t;
}

ArpaModel to_arpa(const DataModel& model, const VocabTrie& vocab, const QuantParams& quant) {
  ArpaModel a;
  a.words = vocab.words();
  a.lambda = model.header.lambda_milli / 1000.0;
  auto score = [&](std::uint16_t q) { return q >= quant.c2 ? kNoProbLog10 : dequantize_log10(q, quant); };
  for (WordId id = 0; id < model.unigram_q.size(); ++id) {
    ArpaEntry e;
    e.ids[0] = id;
    e.log10_score = score(model.unigram_q[id]);
    a.orders[0].push_back(e);
  }
  std::vector<std::pair<WordId, WordId>> by_ordinal;
  for (const auto& g : model.bigrams)
    for (const auto& s : g.successors) {
      by_ordinal.emplace_back(g.context, s.word);
      a.orders[1].push_back({{g.context, s.word, kNoWord}, score(s.q)});
    }
  for (const auto& g : model.trigrams) {
    const auto [w1, w2] = by_ordinal.at(g.context_bigram);
    for (const auto& s : g.successors) a.orders[2].push_back({{w1, w2, s.word}, score(s.q)});
  }
  for (auto& o : a.orders) std::sort(o.begin(), o.end(), [](const ArpaEntry& x, const ArpaEntry& y) { return x.ids < y.ids; });
  return a;
}

ModelPaths ModelPaths::from_basename(const std::string& base) {
  return {base + ".vocab", base + ".ngram", base + ".class"};
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> buf(size);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error("read failed: " + path.string());
  return buf;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace opng
