#include "opng/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "opng/errors.hpp"

namespace opng {

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw Error("manifest: bad value for " + key + ": '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("manifest: bad value for " + key + ": '" + v + "'");
}

fs::path resolve(const fs::path& base, const std::string& v) {
  fs::path p(v);
  return (p.is_relative() && !base.empty()) ? base / p : p;
}

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const BuildError&) {
    throw;
  } catch (const std::exception& e) {
    throw BuildError(name, e.what());
  }
}

}  // namespace

void BuildManifest::set(const std::string& key, const std::string& value) {
  if (key == "corpus") {
    corpus.emplace_back(value);
  } else if (key == "blacklist") {
    blacklist = value;
  } else if (key == "lexicon") {
    lexicon = value;
  } else if (key == "n_uni") {
    caps.n_uni = parse_number<std::uint64_t>(key, value);
  } else if (key == "n_bi") {
    caps.n_bi = parse_number<std::uint64_t>(key, value);
  } else if (key == "n_tri") {
    caps.n_tri = parse_number<std::uint64_t>(key, value);
  } else if (key == "rare_threshold") {
    rare_threshold = parse_number<std::uint64_t>(key, value);
  } else if (key == "k") {
    k = parse_number<std::size_t>(key, value);
  } else if (key == "lambda") {
    lambda = parse_number<double>(key, value);
  } else if (key == "r") {
    r = parse_number<double>(key, value);
  } else if (key == "alpha") {
    alpha = parse_number<double>(key, value);
  } else if (key == "max_classes") {
    max_classes = parse_number<std::size_t>(key, value);
  } else if (key == "class_k") {
    class_k = parse_number<std::size_t>(key, value);
  } else if (key == "byte_budget") {
    byte_budget = parse_number<std::uint64_t>(key, value);
  } else if (key == "lowercase") {
    lowercase = parse_bool(key, value);
  } else if (key == "output") {
    output = value;
  } else {
    throw Error("manifest: unknown key '" + key + "'");
  }
}

void BuildManifest::validate() const {
  if (corpus.empty()) throw Error("manifest: no corpus given");
  if (output.empty()) throw Error("manifest: no output basename given");
  caps.validate();
  if (rare_threshold < 1) throw Error("manifest: rare_threshold must be >= 1");
  if (k < 1 || k > 9) throw Error("manifest: k must be in [1, 9]");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error("manifest: lambda must be in (0, 1]");
  if (!(r >= 0.0 && r <= 1.0)) throw Error("manifest: r must be in [0, 1]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("manifest: alpha must be in (0, 1]");
  if (max_classes < 1 || max_classes > kMaxClasses) throw Error("manifest: max_classes must be in [1, 256]");
  if (class_k < 1 || class_k > 255) throw Error("manifest: class_k must be in [1, 255]");
  auto need = [](const fs::path& p, const char* what) {
    if (!fs::is_regular_file(p)) throw Error(std::string("manifest: ") + what + " not found: " + p.string());
  };
  for (const auto& c : corpus) need(c, "corpus");
  if (blacklist) need(*blacklist, "blacklist");
  if (lexicon) need(*lexicon, "lexicon");
}

BuildManifest BuildManifest::parse(std::istream& in, const fs::path& base_dir) {
  BuildManifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ParseError(lineno, "expected key = value");
    try {
      if (key == "corpus" || key == "blacklist" || key == "lexicon" || key == "output")
        m.set(key, resolve(base_dir, value).string());
      else
        m.set(key, value);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return m;
}

BuildManifest BuildManifest::load(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open manifest " + file.string());
  return parse(in, file.parent_path());
}

std::vector<Sentence> load_corpus(const BuildManifest& manifest, BuildReport* report) {
  PrepConfig prep;
  prep.rare_threshold = manifest.rare_threshold;
  prep.lowercase_input = manifest.lowercase;
  if (manifest.blacklist) {
    std::ifstream in(*manifest.blacklist);
    if (!in) throw BuildError("textprep", "cannot open blacklist " + manifest.blacklist->string());
    prep.blacklist = read_blacklist(in);
  }

  return stage("textprep", [&] {
    std::vector<Sentence> sentences;
    CleanSummary total;
    for (const auto& path : manifest.corpus) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw Error("cannot open corpus " + path.string());
      auto cfg = prep;
      if (manifest.byte_budget) {
        if (total.bytes_read >= *manifest.byte_budget) {
          total.truncated_by_budget = true;
          break;
        }
        cfg.byte_budget = *manifest.byte_budget - total.bytes_read;
      }
      auto s = clean_corpus(in, cfg, [&](Sentence&& sent) { sentences.push_back(std::move(sent)); });
      total.bytes_read += s.bytes_read;
      total.lines += s.lines;
      total.sentences += s.sentences;
      total.tokens += s.tokens;
      total.invalid_bytes += s.invalid_bytes;
      total.truncated_by_budget |= s.truncated_by_budget;
    }
    if (sentences.empty()) throw Error("corpus contains no sentences");
    apply_blacklist(sentences, prep.blacklist);
    const auto rare = tag_rare_words(sentences, prep.rare_threshold);
    if (report) {
      report->clean = total;
      report->rare_tagged = rare;
      report->blacklisted = 0;
      const auto& bad = surface(Tag::Blacklisted);
      for (const auto& s : sentences)
        for (const auto& t : s.tokens) report->blacklisted += (t == bad);
    }
    return sentences;
  });
}

ModelBundle build_model(std::span<const Sentence> sentences, const BuildManifest& manifest,
                        const ClassLexicon& lexicon) {
  ModelBundle b;
  auto& rep = b.report;

  b.counts = stage("count", [&] { return count_ngrams(sentences); });
  rep.total_tokens = b.counts.total_tokens;
  rep.unigram_types = b.counts.distinct_unigrams();
  rep.bigram_types = b.counts.bi.size();
  rep.trigram_types = b.counts.tri.size();

  b.pruned = stage("prune", [&] {
    PruneParams params{manifest.alpha, manifest.caps};
    params.validate();
    const auto vocab = select_vocabulary(b.counts, manifest.caps);
    return prune(b.counts, vocab, params, &rep.prune);
  });
  const auto& vocab = b.pruned.vocab;
  rep.vocab_size = vocab.size();
  rep.coverage = coverage(b.counts, vocab);

  b.arpa = stage("score", [&] { return assign_scores(b.pruned, b.counts, manifest.lambda); });

  stage("class", [&] {
    const auto assignment = build_word_class(lexicon, vocab, manifest.max_classes);
    b.class_model = build_class_stats(b.counts, vocab, assignment, manifest.class_k);
    b.classes = to_class_tables(b.class_model);
    rep.n_classes = b.class_model.n_classes();
    return 0;
  });

  stage("serialize", [&] {
    b.trie = VocabTrie::build(vocab.words);
    SerializeOptions opts;
    opts.lambda = manifest.lambda;
    opts.r = manifest.r;
    opts.k = manifest.k;
    b.data = build_data_model(b.arpa, build_fwo(vocab, manifest.k), opts);
    rep.payload_bytes = data_payload_size(b.data);
    return 0;
  });
  return b;
}

BuildReport run_build(const BuildManifest& manifest) {
  stage("manifest", [&] {
    manifest.validate();
    return 0;
  });

  BuildReport corpus_report;
  const auto sentences = load_corpus(manifest, &corpus_report);

  ClassLexicon lexicon;
  if (manifest.lexicon) {
    lexicon = stage("class", [&] {
      std::ifstream in(*manifest.lexicon);
      if (!in) throw Error("cannot open lexicon " + manifest.lexicon->string());
      return read_lexicon(in);
    });
  }

  auto bundle = build_model(sentences, manifest, lexicon);
  auto rep = bundle.report;
  rep.clean = corpus_report.clean;
  rep.rare_tagged = corpus_report.rare_tagged;
  rep.blacklisted = corpus_report.blacklisted;

  stage("write", [&] {
    const auto final_paths = ModelPaths::from_basename(manifest.output);
    const std::vector<std::pair<fs::path, std::vector<std::uint8_t>>> files = {
        {final_paths.vocab, bundle.vocab_bytes()},
        {final_paths.ngram, bundle.ngram_bytes()},
        {final_paths.classes, bundle.class_bytes()},
    };
    std::vector<fs::path> temps;
    try {
      for (const auto& [path, bytes] : files) {
        auto tmp = path;
        tmp += ".tmp";
        temps.push_back(tmp);
        write_file(tmp, bytes);
      }
      for (std::size_t i = 0; i < files.size(); ++i) fs::rename(temps[i], files[i].first);
    } catch (...) {
      std::error_code ec;
      for (const auto& t : temps) fs::remove(t, ec);
      throw;
    }
    rep.vocab_bytes = files[0].second.size();
    rep.ngram_bytes = files[1].second.size();
    rep.class_bytes = files[2].second.size();
    return 0;
  });
  return rep;
}

void BuildReport::print(std::ostream& out) const {
  out << "input bytes: " << clean.bytes_read << (clean.truncated_by_budget ? " (budget reached)" : "") << '\n'
      << "lines: " << clean.lines << ", sentences: " << clean.sentences << ", words: " << clean.tokens << '\n';
  if (clean.invalid_bytes) out << "invalid UTF-8 sequences replaced: " << clean.invalid_bytes << '\n';
  out << "blacklisted tokens: " << blacklisted << ", rare tokens tagged <unk>: " << rare_tagged << '\n'
      << "counted tokens: " << total_tokens << '\n'
      << "distinct unigrams: " << unigram_types << ", bigrams: " << bigram_types << ", trigrams: " << trigram_types
      << '\n'
      << "vocabulary: " << vocab_size << " words (" << std::fixed << std::setprecision(2) << coverage * 100.0
      << "% token coverage)\n";
  out.unsetf(std::ios::floatfield);
  prune.print(out);
  out << "classes: " << n_classes << '\n'
      << "files: vocab " << vocab_bytes << " B, ngram " << ngram_bytes << " B (payload " << payload_bytes
      << " B), class " << class_bytes << " B\n";
}

}  // namespace opng
