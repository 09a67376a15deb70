#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opng/engine.hpp"

namespace opng {

// What the typing simulation needs from a predictor.
class SuggestionSource {
 public:
  virtual ~SuggestionSource() = default;
  virtual std::vector<std::string> predict(std::span<const std::string> context, std::size_t k) const = 0;
  virtual std::vector<std::string> complete(std::span<const std::string> context, std::string_view prefix,
                                            std::size_t k) const = 0;
};

class EngineSource final : public SuggestionSource {
 public:
  explicit EngineSource(const Engine& engine) : engine_(engine) {}
  std::vector<std::string> predict(std::span<const std::string> context, std::size_t k) const override;
  std::vector<std::string> complete(std::span<const std::string> context, std::string_view prefix,
                                    std::size_t k) const override;

 private:
  const Engine& engine_;
};

// Never suggests anything.
class SilentSource final : public SuggestionSource {
 public:
  std::vector<std::string> predict(std::span<const std::string>, std::size_t) const override { return {}; }
  std::vector<std::string> complete(std::span<const std::string>, std::string_view, std::size_t) const override {
    return {};
  }
};

struct TestSetStats {
  std::uint64_t lines = 0;
  std::uint64_t words = 0;
  std::uint64_t characters = 0;  // Unicode scalars over all words
  bool operator==(const TestSetStats&) const = default;
};

struct TestSet {
  std::vector<std::string> lines;
  std::vector<std::vector<std::string>> sentences;  // tokenized words, no tags
  TestSetStats stats;

  TestSetStats recompute_stats() const;
};

// One sentence per line; tokenized with the same rules as training text.
TestSet read_testset(std::istream& in, bool lowercase = true);
TestSet make_testset(std::vector<std::vector<std::string>> sentences);

struct TypingResult {
  std::uint64_t n_c = 0;  // characters plus one separator per word
  std::uint64_t n_k = 0;  // simulated keystrokes
  std::uint64_t words = 0;
  std::uint64_t nwp_hits = 0;
  std::uint64_t nwp_queries = 0;
  std::uint64_t wc_queries = 0;

  TypingResult& operator+=(const TypingResult& o);
  bool operator==(const TypingResult&) const = default;
};

// Greedy simulation: a word costs 1 if next-word prediction offers it,
// else i + 1 if completion offers it after typing i characters, else
// |w| + 1.
TypingResult simulate_typing(std::span<const std::string> sentence, const SuggestionSource& source, std::size_t k);

struct EvalReport {
  std::size_t k = 0;
  TestSetStats testset;
  TypingResult totals;
  double ksr_percent = 0.0;
  double nwp_percent = 0.0;
  std::vector<TypingResult> per_sentence;

  // timing (filled by bench)
  std::optional<double> mean_suggestion_ms;
  std::optional<double> mean_nwp_ms;
  std::optional<double> mean_wc_ms;
  std::optional<double> load_ms_median;
  std::optional<double> load_ms_mean;
  std::vector<std::pair<std::string, std::uint64_t>> rom_bytes;
  std::optional<std::uint64_t> resident_bytes;

  void write_table(std::ostream& out) const;
  void write_json(std::ostream& out) const;
};

// Sentences are simulated in parallel; totals are order-independent sums.
EvalReport evaluate(const TestSet& testset, const SuggestionSource& source, std::size_t k);
double ksr(const TestSet& testset, const SuggestionSource& source, std::size_t k);
double nwp_rate(const TestSet& testset, const SuggestionSource& source, std::size_t k);

namespace reference {
EvalReport evaluate(const TestSet& testset, const SuggestionSource& source, std::size_t k);
}  // namespace reference

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit fit_linear(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> v);

struct ModelVariant {
  std::string name;
  ModelPaths paths;
};

struct BenchRow {
  std::string name;
  std::uint64_t vocab_bytes = 0, ngram_bytes = 0, class_bytes = 0;
  std::vector<double> load_ms;  // one per trial
  double load_ms_median = 0.0;
  double load_ms_mean = 0.0;
  std::optional<double> mean_suggestion_ms;  // weighted over NWP and WC queries
  std::optional<double> mean_nwp_ms;
  std::optional<double> mean_wc_ms;
  std::uint64_t queries = 0;
  std::uint64_t resident_bytes = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::optional<LinearFit> load_vs_size;  // load median vs .ngram bytes, >= 3 variants

  void write_table(std::ostream& out) const;
  void write_json(std::ostream& out) const;
};

// Loads each variant `trials` times (>= 3) and replays the typing
// simulation's queries single-threaded for suggestion timing.
BenchReport bench(std::span<const ModelVariant> variants, const TestSet& testset, const EngineConfig& config,
                  std::size_t trials);

// Times the NWP and WC queries issued while simulating `testset`.
struct QueryTiming {
  std::uint64_t nwp_queries = 0, wc_queries = 0;
  double nwp_ms = 0.0, wc_ms = 0.0;
  std::optional<double> mean_ms() const;
};
QueryTiming time_queries(const Engine& engine, const TestSet& testset, std::size_t k);

// Rough resident size of the engine's tables.
std::uint64_t resident_estimate(const Engine& engine);

}  // namespace opng
