#include "opng/evalkit.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>

#include "opng/errors.hpp"
#include "opng/textprep.hpp"
#include "opng/utf8.hpp"

namespace opng {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<std::string> words_of(const std::vector<Suggestion>& s) {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(x.word);
  return out;
}

bool contains(const std::vector<std::string>& list, const std::string& w) {
  return std::find(list.begin(), list.end(), w) != list.end();
}

void finish(EvalReport& rep) {
  if (rep.totals.n_c == 0) throw Error("evaluation: test set has no words");
  rep.ksr_percent = 100.0 * static_cast<double>(rep.totals.n_c - rep.totals.n_k) / static_cast<double>(rep.totals.n_c);
  rep.nwp_percent = 100.0 * static_cast<double>(rep.totals.nwp_hits) / static_cast<double>(rep.totals.words);
}

class TimedSource final : public SuggestionSource {
 public:
  explicit TimedSource(const Engine& e) : engine_(e) {}
  std::vector<std::string> predict(std::span<const std::string> context, std::size_t k) const override {
    const auto t0 = Clock::now();
    auto r = engine_.predict(context, k);
    timing.nwp_ms += std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    ++timing.nwp_queries;
    return words_of(r);
  }
  std::vector<std::string> complete(std::span<const std::string> context, std::string_view prefix,
                                    std::size_t k) const override {
    const auto t0 = Clock::now();
    auto r = engine_.complete(context, prefix, k);
    timing.wc_ms += std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    ++timing.wc_queries;
    return words_of(r);
  }
  mutable QueryTiming timing;

 private:
  const Engine& engine_;
};

void put_optional(nlohmann::ordered_json& j, const char* key, const std::optional<double>& v) {
  j[key] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::vector<std::string> EngineSource::predict(std::span<const std::string> context, std::size_t k) const {
  return words_of(engine_.predict(context, k));
}

std::vector<std::string> EngineSource::complete(std::span<const std::string> context, std::string_view prefix,
                                                std::size_t k) const {
  return words_of(engine_.complete(context, prefix, k));
}

TestSetStats TestSet::recompute_stats() const {
  TestSetStats s;
  s.lines = lines.size();
  for (const auto& sent : sentences) {
    s.words += sent.size();
    for (const auto& w : sent) s.characters += utf8::length(w);
  }
  return s;
}

TestSet read_testset(std::istream& in, bool lowercase) {
  TestSet ts;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    for (auto& s : split_sentences(line, lowercase)) ts.sentences.push_back(std::move(s));
    ts.lines.push_back(std::move(line));
  }
  ts.stats = ts.recompute_stats();
  return ts;
}

TestSet make_testset(std::vector<std::vector<std::string>> sentences) {
  TestSet ts;
  for (const auto& s : sentences) {
    std::string line;
    for (const auto& w : s) line += (line.empty() ? "" : " ") + w;
    ts.lines.push_back(std::move(line));
  }
  ts.sentences = std::move(sentences);
  ts.stats = ts.recompute_stats();
  return ts;
}

TypingResult& TypingResult::operator+=(const TypingResult& o) {
  n_c += o.n_c;
  n_k += o.n_k;
  words += o.words;
  nwp_hits += o.nwp_hits;
  nwp_queries += o.nwp_queries;
  wc_queries += o.wc_queries;
  return *this;
}

TypingResult simulate_typing(std::span<const std::string> sentence, const SuggestionSource& source, std::size_t k) {
  TypingResult r;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    const auto& w = sentence[i];
    const auto ctx = sentence.first(i);
    const auto len = utf8::length(w);
    r.n_c += len + 1;
    ++r.words;

    ++r.nwp_queries;
    if (contains(source.predict(ctx, k), w)) {
      ++r.nwp_hits;
      r.n_k += 1;
      continue;
    }
    std::uint64_t cost = len + 1;
    // Completing after the last character saves nothing, so stop one short.
    for (std::size_t typed = 1; typed < len; ++typed) {
      ++r.wc_queries;
      const auto prefix = std::string_view(w).substr(0, utf8::prefix_bytes(w, typed));
      if (contains(source.complete(ctx, prefix, k), w)) {
        cost = typed + 1;
        break;
      }
    }
    r.n_k += cost;
  }
  return r;
}

EvalReport evaluate(const TestSet& testset, const SuggestionSource& source, std::size_t k) {
  EvalReport rep;
  rep.k = k;
  rep.testset = testset.stats;
  rep.per_sentence.resize(testset.sentences.size());
  const auto n = static_cast<std::ptrdiff_t>(testset.sentences.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) rep.per_sentence[i] = simulate_typing(testset.sentences[i], source, k);
  for (const auto& r : rep.per_sentence) rep.totals += r;
  finish(rep);
  return rep;
}

namespace reference {

EvalReport evaluate(const TestSet& testset, const SuggestionSource& source, std::size_t k) {
  EvalReport rep;
  rep.k = k;
  rep.testset = testset.stats;
  for (const auto& s : testset.sentences) {
    rep.per_sentence.push_back(simulate_typing(s, source, k));
    rep.totals += rep.per_sentence.back();
  }
  finish(rep);
  return rep;
}

}  // namespace reference

double ksr(const TestSet& testset, const SuggestionSource& source, std::size_t k) {
  return evaluate(testset, source, k).ksr_percent;
}

double nwp_rate(const TestSet& testset, const SuggestionSource& source, std::size_t k) {
  std::uint64_t hits = 0, total = 0;
  const auto n = static_cast<std::ptrdiff_t>(testset.sentences.size());
#pragma omp parallel for schedule(dynamic, 8) reduction(+ : hits, total)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& s = testset.sentences[i];
    for (std::size_t j = 0; j < s.size(); ++j) {
      ++total;
      if (contains(source.predict(std::span(s).first(j), k), s[j])) ++hits;
    }
  }
  if (total == 0) throw Error("evaluation: test set has no words");
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

void EvalReport::write_table(std::ostream& out) const {
  out << std::fixed << std::setprecision(2);
  out << "K                 " << k << '\n'
      << "lines             " << testset.lines << '\n'
      << "words             " << testset.words << '\n'
      << "characters        " << testset.characters << '\n'
      << "n_c               " << totals.n_c << '\n'
      << "n_k               " << totals.n_k << '\n'
      << "KSR (%)           " << ksr_percent << '\n'
      << "NWP (%)           " << nwp_percent << '\n'
      << "NWP queries       " << totals.nwp_queries << '\n'
      << "WC queries        " << totals.wc_queries << '\n';
  if (mean_suggestion_ms) out << "suggestion (ms)   " << std::setprecision(4) << *mean_suggestion_ms << '\n';
  if (load_ms_median) out << "load median (ms)  " << std::setprecision(3) << *load_ms_median << '\n';
  for (const auto& [name, bytes] : rom_bytes) out << "ROM " << name << "  " << bytes << " bytes\n";
  out.unsetf(std::ios::floatfield);
}

void EvalReport::write_json(std::ostream& out) const {
  nlohmann::ordered_json j;
  j["k"] = k;
  j["testset"] = {{"lines", testset.lines}, {"words", testset.words}, {"characters", testset.characters}};
  j["n_c"] = totals.n_c;
  j["n_k"] = totals.n_k;
  j["ksr_percent"] = ksr_percent;
  j["nwp_percent"] = nwp_percent;
  j["nwp_hits"] = totals.nwp_hits;
  j["nwp_queries"] = totals.nwp_queries;
  j["wc_queries"] = totals.wc_queries;
  put_optional(j, "mean_suggestion_ms", mean_suggestion_ms);
  put_optional(j, "mean_nwp_ms", mean_nwp_ms);
  put_optional(j, "mean_wc_ms", mean_wc_ms);
  put_optional(j, "load_ms_median", load_ms_median);
  put_optional(j, "load_ms_mean", load_ms_mean);
  auto rom = nlohmann::ordered_json::object();
  for (const auto& [name, bytes] : rom_bytes) rom[name] = bytes;
  j["rom_bytes"] = rom;
  j["resident_bytes"] = resident_bytes ? nlohmann::ordered_json(*resident_bytes) : nlohmann::ordered_json(nullptr);
  auto per = nlohmann::ordered_json::array();
  for (const auto& r : per_sentence)
    per.push_back({{"words", r.words}, {"n_c", r.n_c}, {"n_k", r.n_k}, {"nwp_hits", r.nwp_hits}});
  j["per_sentence"] = per;
  out << j.dump(2) << '\n';
}

LinearFit fit_linear(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("fit_linear: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

double median(std::vector<double> v) {
  if (v.empty()) throw Error("median of empty sample");
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::optional<double> QueryTiming::mean_ms() const {
  const auto q = nwp_queries + wc_queries;
  if (q == 0) return std::nullopt;
  return (nwp_ms + wc_ms) / static_cast<double>(q);
}

QueryTiming time_queries(const Engine& engine, const TestSet& testset, std::size_t k) {
  TimedSource src(engine);
  for (const auto& s : testset.sentences) simulate_typing(s, src, k);
  return src.timing;
}

std::uint64_t resident_estimate(const Engine& engine) { return engine.memory_bytes(); }

BenchReport bench(std::span<const ModelVariant> variants, const TestSet& testset, const EngineConfig& config,
                  std::size_t trials) {
  if (trials < 3) throw Error("bench: trials must be >= 3");
  BenchReport rep;
  for (const auto& v : variants) {
    BenchRow row;
    row.name = v.name;
    row.vocab_bytes = std::filesystem::file_size(v.paths.vocab);
    row.ngram_bytes = std::filesystem::file_size(v.paths.ngram);
    if (std::filesystem::exists(v.paths.classes)) row.class_bytes = std::filesystem::file_size(v.paths.classes);
    std::optional<Engine> engine;
    for (std::size_t t = 0; t < trials; ++t) {
      engine.reset();
      const auto t0 = Clock::now();
      engine.emplace(Engine::load(v.paths, config, {LoadMode::Parallel, true}));
      row.load_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    row.load_ms_median = median(row.load_ms);
    row.load_ms_mean = std::accumulate(row.load_ms.begin(), row.load_ms.end(), 0.0) / static_cast<double>(trials);
    row.resident_bytes = resident_estimate(*engine);
    const auto timing = time_queries(*engine, testset, config.k);
    row.queries = timing.nwp_queries + timing.wc_queries;
    row.mean_suggestion_ms = timing.mean_ms();
    if (timing.nwp_queries) row.mean_nwp_ms = timing.nwp_ms / static_cast<double>(timing.nwp_queries);
    if (timing.wc_queries) row.mean_wc_ms = timing.wc_ms / static_cast<double>(timing.wc_queries);
    rep.rows.push_back(std::move(row));
  }
  if (rep.rows.size() >= 3) {
    std::vector<double> x, y;
    for (const auto& r : rep.rows) {
      x.push_back(static_cast<double>(r.ngram_bytes));
      y.push_back(r.load_ms_median);
    }
    rep.load_vs_size = fit_linear(x, y);
  }
  return rep;
}

void BenchReport::write_table(std::ostream& out) const {
  out << std::left << std::setw(16) << "model" << std::right << std::setw(12) << "vocab B" << std::setw(12) << "ngram B"
      << std::setw(10) << "class B" << std::setw(12) << "load med ms" << std::setw(12) << "load avg ms" << std::setw(14)
      << "suggest ms" << std::setw(12) << "RAM B" << '\n';
  out << std::fixed;
  for (const auto& r : rows) {
    out << std::left << std::setw(16) << r.name << std::right << std::setw(12) << r.vocab_bytes << std::setw(12)
        << r.ngram_bytes << std::setw(10) << r.class_bytes << std::setprecision(3) << std::setw(12) << r.load_ms_median
        << std::setw(12) << r.load_ms_mean << std::setprecision(5) << std::setw(14);
    if (r.mean_suggestion_ms)
      out << *r.mean_suggestion_ms;
    else
      out << "-";
    out << std::setw(12) << r.resident_bytes << '\n';
  }
  if (load_vs_size)
    out << std::setprecision(4) << "load time vs data size: slope " << load_vs_size->slope * 1e6 << " ms/MB, R^2 "
        << load_vs_size->r2 << '\n';
  out.unsetf(std::ios::floatfield);
}

void BenchReport::write_json(std::ostream& out) const {
  nlohmann::ordered_json j;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["name"] = r.name;
    o["rom_bytes"] = {{"vocab", r.vocab_bytes}, {"ngram", r.ngram_bytes}, {"class", r.class_bytes}};
    o["load_ms"] = r.load_ms;
    o["load_ms_median"] = r.load_ms_median;
    o["load_ms_mean"] = r.load_ms_mean;
    put_optional(o, "mean_suggestion_ms", r.mean_suggestion_ms);
    put_optional(o, "mean_nwp_ms", r.mean_nwp_ms);
    put_optional(o, "mean_wc_ms", r.mean_wc_ms);
    o["queries"] = r.queries;
    o["resident_bytes"] = r.resident_bytes;
    arr.push_back(o);
  }
  j["models"] = arr;
  if (load_vs_size)
    j["load_vs_size"] = {{"slope_ms_per_byte", load_vs_size->slope},
                         {"intercept_ms", load_vs_size->intercept},
                         {"r2", load_vs_size->r2}};
  out << j.dump(2) << '\n';
}

}  // namespace opng
