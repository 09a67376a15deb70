#include "opng/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "opng/engine.hpp"
#include "opng/errors.hpp"
#include "opng/evalkit.hpp"
#include "opng/pipeline.hpp"
#include "opng/textprep.hpp"
#include "opng/utf8.hpp"

namespace opng::cli {

namespace {

namespace fs = std::filesystem;

// Argument problems found after CLI11 parsing; mapped to the usage exit code.
struct UsageError : Error {
  using Error::Error;
};

std::string fmt_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  return f;
}

TestSet load_testset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open test set " + path);
  return read_testset(in);
}

EngineConfig config_for(const ModelPaths& paths, std::size_t k, std::optional<double> lambda, std::optional<double> r) {
  // Peek at the stored header for the build-time lambda and r.
  auto data = deserialize_model(read_file(paths.ngram));
  auto cfg = EngineConfig::from_header(data.header, k);
  if (lambda) cfg.lambda = *lambda;
  if (r) cfg.r = *r;
  cfg.validate();
  return cfg;
}

// ---- build ----------------------------------------------------------------

struct BuildArgs {
  std::string manifest;
  std::string report;
  std::vector<std::string> corpus;
  std::map<std::string, std::string> values;  // manifest key -> flag value
  bool no_lowercase = false;
};

int cmd_build(const BuildArgs& a, std::ostream& out) {
  BuildManifest m = a.manifest.empty() ? BuildManifest{} : BuildManifest::load(a.manifest);
  for (const auto& c : a.corpus) m.corpus.emplace_back(c);
  for (const auto& [key, value] : a.values) m.set(key, value);
  if (a.no_lowercase) m.lowercase = false;
  try {
    m.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto rep = run_build(m);
  rep.print(out);
  if (!a.report.empty()) {
    auto f = open_out(a.report);
    rep.print(f);
  }
  return kExitOk;
}

// ---- suggest --------------------------------------------------------------

struct SuggestArgs {
  std::string model;
  std::size_t k = 3;
  std::vector<std::string> queries;
  bool interactive = false;
  std::optional<double> lambda, r;
};

void answer(const Engine& engine, const std::string& line, std::size_t k, std::ostream& out) {
  const auto bar = line.find('|');
  const std::string ctx_text = line.substr(0, bar);
  std::vector<std::string> ctx;
  for (auto& s : split_sentences(ctx_text, true))
    for (auto& w : s) ctx.push_back(std::move(w));

  std::vector<Suggestion> res;
  if (bar == std::string::npos || bar + 1 == line.size()) {
    res = engine.predict(ctx, k);
  } else {
    std::string prefix = line.substr(bar + 1);
    while (!prefix.empty() && (prefix.back() == ' ' || prefix.back() == '\r')) prefix.pop_back();
    for (auto& c : prefix)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    res = prefix.empty() ? engine.predict(ctx, k) : engine.complete(ctx, prefix, k);
  }
  for (std::size_t i = 0; i < res.size(); ++i)
    out << i + 1 << '\t' << res[i].word << '\t' << fmt_score(res[i].score) << '\t' << to_string(res[i].branch)
        << '\n';
  if (res.empty()) out << "(no suggestions)\n";
}

int cmd_suggest(const SuggestArgs& a, std::istream& in, std::ostream& out) {
  const auto paths = ModelPaths::from_basename(a.model);
  const auto engine = Engine::load(paths, config_for(paths, a.k, a.lambda, a.r), {LoadMode::Parallel, true});
  if (!a.queries.empty()) {
    for (const auto& q : a.queries) {
      out << "> " << q << '\n';
      answer(engine, q, a.k, out);
    }
    return kExitOk;
  }
  std::string line;
  while (true) {
    if (a.interactive) out << "> " << std::flush;
    if (!std::getline(in, line)) break;
    if (!a.interactive) out << "> " << line << '\n';
    answer(engine, line, a.k, out);
  }
  if (a.interactive) out << '\n';
  return kExitOk;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  std::string model, testset, json, table;
  std::size_t k = 3;
  bool timing = false;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto paths = ModelPaths::from_basename(a.model);
  const auto ts = load_testset(a.testset);
  const auto engine = Engine::load(paths, config_for(paths, a.k, {}, {}), {LoadMode::Parallel, true});
  auto rep = evaluate(ts, EngineSource(engine), a.k);
  rep.rom_bytes.emplace_back("vocab", fs::file_size(paths.vocab));
  rep.rom_bytes.emplace_back("ngram", fs::file_size(paths.ngram));
  if (fs::exists(paths.classes)) rep.rom_bytes.emplace_back("class", fs::file_size(paths.classes));
  rep.resident_bytes = resident_estimate(engine);
  if (a.timing) {
    const auto t = time_queries(engine, ts, a.k);
    rep.mean_suggestion_ms = t.mean_ms();
    if (t.nwp_queries) rep.mean_nwp_ms = t.nwp_ms / static_cast<double>(t.nwp_queries);
    if (t.wc_queries) rep.mean_wc_ms = t.wc_ms / static_cast<double>(t.wc_queries);
  }
  rep.write_table(out);
  if (!a.table.empty()) {
    auto f = open_out(a.table);
    rep.write_table(f);
  }
  if (!a.json.empty()) {
    auto f = open_out(a.json);
    rep.write_json(f);
  }
  return kExitOk;
}

// ---- inspect --------------------------------------------------------------

struct InspectArgs {
  std::string model, arpa;
  std::size_t top = 10;
  bool classes = false;
};

void list_successors(const Engine& e, const std::vector<Successor>& s, std::size_t top, std::ostream& out) {
  for (std::size_t i = 0; i < s.size() && i < top; ++i)
    out << (i ? ", " : "") << e.vocab().word(s[i].word) << " (q=" << s[i].q << ')';
  if (s.size() > top) out << ", ... " << s.size() - top << " more";
  out << '\n';
}

int cmd_inspect(const InspectArgs& a, std::ostream& out) {
  const auto paths = ModelPaths::from_basename(a.model);
  const auto ngram_file = read_file(paths.ngram);
  const auto data = deserialize_model(ngram_file);
  const auto engine = Engine::load(paths, EngineConfig::from_header(data.header), {LoadMode::Sequential, true});
  const auto& h = data.header;
  const auto& vocab = engine.vocab();

  out << "header\n"
      << "  version " << int{h.version} << "\n  n_uni " << h.n_uni << "\n  n_bi " << h.n_bi << "\n  n_tri " << h.n_tri
      << "\n  k " << int{h.k} << "\n  lambda " << h.lambda_milli / 1000.0 << "\n  r " << h.r_milli / 1000.0 << '\n';

  const auto sz = section_sizes(data);
  out << "files\n"
      << "  " << paths.vocab.string() << ": " << fs::file_size(paths.vocab) << " B (" << vocab.node_count()
      << " trie nodes)\n"
      << "  " << paths.ngram.string() << ": " << ngram_file.size() << " B compressed, " << sz.total()
      << " B payload\n";
  if (engine.classes())
    out << "  " << paths.classes.string() << ": " << fs::file_size(paths.classes) << " B\n";
  else
    out << "  " << paths.classes.string() << ": absent\n";
  out << "payload sections\n"
      << "  header " << sz.header << "\n  unigram " << sz.unigram << "\n  bigram " << sz.bigram << " ("
      << data.bigrams.size() << " groups)\n  trigram " << sz.trigram << " (" << data.trigrams.size()
      << " groups)\n  fwo prediction " << sz.fwo_prediction << "\n  fwo completion " << sz.fwo_completion << " ("
      << data.fwo.completion.size() << " entries)\n";

  if (a.top > 0) {
    out << "top unigrams\n";
    std::vector<WordId> order(data.unigram_q.size());
    for (WordId i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](WordId x, WordId y) { return data.unigram_q[x] < data.unigram_q[y]; });
    for (std::size_t i = 0; i < order.size() && i < a.top; ++i)
      out << "  " << vocab.word(order[i]) << " q=" << data.unigram_q[order[i]] << '\n';
    out << "bigram groups\n";
    for (std::size_t i = 0; i < data.bigrams.size() && i < a.top; ++i) {
      out << "  " << vocab.word(data.bigrams[i].context) << " -> ";
      list_successors(engine, data.bigrams[i].successors, a.top, out);
    }
    // Map bigram ordinals back to word pairs for readable trigram contexts.
    std::vector<std::pair<WordId, WordId>> pairs;
    for (const auto& g : data.bigrams)
      for (const auto& s : g.successors) pairs.emplace_back(g.context, s.word);
    out << "trigram groups\n";
    for (std::size_t i = 0; i < data.trigrams.size() && i < a.top; ++i) {
      const auto& [w1, w2] = pairs.at(data.trigrams[i].context_bigram);
      out << "  " << vocab.word(w1) << ' ' << vocab.word(w2) << " -> ";
      list_successors(engine, data.trigrams[i].successors, a.top, out);
    }
    out << "fwo prediction:";
    for (auto w : data.fwo.prediction) out << ' ' << vocab.word(w);
    out << "\nfwo completion\n";
    for (std::size_t i = 0; i < data.fwo.completion.size() && i < a.top; ++i) {
      std::string first;
      utf8::append(first, data.fwo.completion[i].first);
      out << "  " << first << ':';
      for (auto w : data.fwo.completion[i].words) out << ' ' << vocab.word(w);
      out << '\n';
    }
  }

  if (a.classes && engine.classes()) {
    const auto& ct = *engine.classes();
    std::vector<std::size_t> members(ct.n_classes, 0);
    for (auto c : ct.word_class) ++members[c];
    out << "classes " << ct.n_classes << " (k=" << int{ct.k} << ")\n";
    for (std::size_t c = 0; c < ct.n_classes; ++c) {
      out << "  class " << c << " (" << members[c] << " words):";
      for (std::size_t i = 0; i < ct.k; ++i) {
        const auto w = ct.topk[c * ct.k + i];
        if (w == kNoEntry) break;
        out << ' ' << vocab.word(w) << "(q=" << ct.emission_q[c * ct.k + i] << ')';
      }
      out << '\n';
    }
    out << "pair argmax\n";
    for (std::size_t i = 0; i < ct.n_classes; ++i) {
      out << ' ';
      for (std::size_t j = 0; j < ct.n_classes; ++j) out << ' ' << int{ct.pair_argmax[i * ct.n_classes + j]};
      out << '\n';
    }
  }

  if (!a.arpa.empty()) {
    const auto arpa = to_arpa(data, vocab);
    if (a.arpa == "-") {
      write_arpa(arpa, out);
    } else {
      auto f = open_out(a.arpa);
      write_arpa(arpa, f);
    }
  }
  return kExitOk;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
  std::vector<std::string> models;
  std::string testset, json;
  std::size_t k = 3, trials = 5;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const auto ts = load_testset(a.testset);
  std::vector<ModelVariant> variants;
  for (const auto& m : a.models) variants.push_back({fs::path(m).filename().string(), ModelPaths::from_basename(m)});
  const auto first = variants.front().paths;
  const auto rep = bench(variants, ts, config_for(first, a.k, {}, {}), a.trials);
  rep.write_table(out);
  if (!a.json.empty()) {
    auto f = open_out(a.json);
    rep.write_json(f);
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"opngram: trigram language model toolkit for keyboard prediction", "opngram"};
  app.require_subcommand(1);
  const auto k_range = CLI::Range(1, 9);

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Train a model from a corpus and write .vocab/.ngram/.class");
  b->add_option("--manifest", build.manifest, "key = value manifest file")->check(CLI::ExistingFile);
  b->add_option("--corpus", build.corpus, "corpus text file (repeatable)");
  b->add_option("--report", build.report, "also write the build report here");
  b->add_flag("--no-lowercase", build.no_lowercase, "keep input case");
  struct Key {
    const char* flag;
    const char* key;
    const char* help;
  };
  static const Key keys[] = {
      {"--blacklist", "blacklist", "one word per line"},
      {"--lexicon", "lexicon", "word<TAB>LABEL class lexicon"},
      {"--n-uni", "n_uni", "unigram cap"},
      {"--n-bi", "n_bi", "bigram cap"},
      {"--n-tri", "n_tri", "trigram cap"},
      {"--rare-threshold", "rare_threshold", "words seen fewer times become <unk>"},
      {"-k,--k", "k", "suggestion count stored in the model (1..9)"},
      {"--lambda", "lambda", "Stupid Backoff factor"},
      {"--r", "r", "class interpolation ratio"},
      {"--alpha", "alpha", "backoff factor in the trigram pruning score"},
      {"--max-classes", "max_classes", "class count including OTHER"},
      {"--class-k", "class_k", "words kept per class"},
      {"--byte-budget", "byte_budget", "read at most this many corpus bytes"},
      {"-o,--output", "output", "output basename"},
  };
  std::map<std::string, std::string> raw_values;
  std::vector<std::pair<const char*, CLI::Option*>> key_opts;
  for (const auto& key : keys) key_opts.emplace_back(key.key, b->add_option(key.flag, raw_values[key.key], key.help));

  SuggestArgs suggest;
  auto* s = app.add_subcommand("suggest", "Answer 'context words|prefix' queries");
  s->add_option("model", suggest.model, "model basename")->required();
  s->add_option("-k,--k", suggest.k, "suggestions per query")->check(k_range);
  s->add_option("-q,--query", suggest.queries, "one-shot query (repeatable); otherwise read stdin");
  s->add_flag("-i,--interactive", suggest.interactive, "prompt for queries until EOF");
  s->add_option("--lambda", suggest.lambda, "override the stored lambda");
  s->add_option("--r", suggest.r, "override the stored r");

  EvaluateArgs evaluate_args;
  auto* e = app.add_subcommand("evaluate", "Keystroke savings and next-word hit rate on a test set");
  e->add_option("model", evaluate_args.model, "model basename")->required();
  e->add_option("testset", evaluate_args.testset, "one sentence per line")->required()->check(CLI::ExistingFile);
  e->add_option("-k,--k", evaluate_args.k, "suggestions per query")->check(k_range);
  e->add_option("--json", evaluate_args.json, "write the JSON report here");
  e->add_option("--table", evaluate_args.table, "also write the table here");
  e->add_flag("--timing", evaluate_args.timing, "time each query (single-threaded replay)");

  InspectArgs inspect;
  auto* i = app.add_subcommand("inspect", "Dump header, section sizes, top entries and class tables");
  i->add_option("model", inspect.model, "model basename")->required();
  i->add_option("--top", inspect.top, "entries shown per block (0 = none)");
  i->add_flag("--classes", inspect.classes, "dump class tables");
  i->add_option("--arpa", inspect.arpa, "write the dequantized ARPA view ('-' for stdout)");

  BenchArgs bench_args;
  auto* bn = app.add_subcommand("bench", "Load time, suggestion time and sizes across models");
  bn->add_option("models", bench_args.models, "model basenames")->required();
  bn->add_option("--testset", bench_args.testset, "queries come from simulating this set")
      ->required()
      ->check(CLI::ExistingFile);
  bn->add_option("-k,--k", bench_args.k, "suggestions per query")->check(k_range);
  bn->add_option("--trials", bench_args.trials, "loads per model (>= 3)")->check(CLI::Range(3, 1000));
  bn->add_option("--json", bench_args.json, "write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*b) {
      for (const auto& [key, opt] : key_opts)
        if (opt->count()) build.values[key] = raw_values[key];
      return cmd_build(build, out);
    }
    if (*s) return cmd_suggest(suggest, in, out);
    if (*e) return cmd_evaluate(evaluate_args, out);
    if (*i) return cmd_inspect(inspect, out);
    if (*bn) return cmd_bench(bench_args, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace opng::cli
