#include "opng/pruner.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <string>

#include "opng/errors.hpp"

namespace opng {

void PruneParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("alpha must be in (0, 1]");
  caps.validate();
}

void PruneReport::print(std::ostream& out) const {
  out << "bigrams: " << bigrams_kept << " kept of " << bigram_candidates << " candidates\n"
      << "trigrams: " << trigrams_kept << " kept of " << trigram_candidates << " candidates\n";
  if (trigrams_kept) out << "min kept trigram score: " << min_kept_trigram_score << '\n';
}

double trigram_score(std::uint64_t c123, std::uint64_t c12, std::uint64_t c1, double alpha) {
  if (c123 == 0 || c12 == 0 || c1 == 0) throw Error("trigram_score: counts must be >= 1");
  if (c123 > c12 || c12 > c1) throw Error("trigram_score: count exceeds its context count");
  const double n = static_cast<double>(c123);
  return n * (n / static_cast<double>(c12) - alpha * static_cast<double>(c12) / static_cast<double>(c1));
}

double trigram_score(const NgramCounts& counts, std::string_view w1, std::string_view w2, std::string_view w3,
                     double alpha) {
  return trigram_score(counts.count(w1, w2, w3), counts.count(w1, w2), counts.count(w1), alpha);
}

std::vector<double> score_trigrams(std::span<const TrigramCandidate> candidates, double alpha) {
  std::vector<double> out(candidates.size());
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& c = candidates[i];
    const double c123 = static_cast<double>(c.c123);
    out[i] = c123 * (c123 / static_cast<double>(c.c12) - alpha * static_cast<double>(c.c12) / static_cast<double>(c.c1));
  }
  return out;
}

namespace reference {

std::vector<double> score_trigrams(std::span<const TrigramCandidate> candidates, double alpha) {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(trigram_score(c.c123, c.c12, c.c1, alpha));
  return out;
}

}  // namespace reference

PrunedNgrams prune(const NgramCounts& counts, const Vocabulary& vocab, const PruneParams& params,
                   PruneReport* report) {
  params.validate();
  PruneReport rep;

  // corpus type -> vocabulary ID
  std::vector<WordId> to_vocab(counts.types.size(), kNoWord);
  for (std::size_t t = 0; t < counts.types.size(); ++t)
    if (auto id = vocab.find(counts.types[t])) to_vocab[t] = *id;

  std::vector<Bigram> bigrams;
  for (auto [key, c] : counts.bi) {
    const WordId a = to_vocab[unpack_at(key, 0, 2)], b = to_vocab[unpack_at(key, 1, 2)];
    if (a == kNoWord || b == kNoWord) continue;
    bigrams.push_back({{a, b}, c});
  }
  rep.bigram_candidates = bigrams.size();
  const auto keep_bi = std::min<std::size_t>(bigrams.size(), params.caps.n_bi);
  std::partial_sort(bigrams.begin(), bigrams.begin() + static_cast<std::ptrdiff_t>(keep_bi), bigrams.end(),
                    [](const Bigram& x, const Bigram& y) {
                      if (x.count != y.count) return x.count > y.count;
                      return x.ids < y.ids;
                    });
  bigrams.resize(keep_bi);
  std::sort(bigrams.begin(), bigrams.end(), [](const Bigram& x, const Bigram& y) { return x.ids < y.ids; });
  rep.bigrams_kept = bigrams.size();

  std::vector<TrigramCandidate> cands;
  for (auto [key, c] : counts.tri) {
    const auto ta = unpack_at(key, 0, 3), tb = unpack_at(key, 1, 3);
    const WordId a = to_vocab[ta], b = to_vocab[tb], w = to_vocab[unpack_at(key, 2, 3)];
    if (a == kNoWord || b == kNoWord || w == kNoWord) continue;
    const std::array<WordId, 2> ctx{a, b};
    auto it = std::lower_bound(bigrams.begin(), bigrams.end(), ctx,
                               [](const Bigram& x, const std::array<WordId, 2>& k) { return x.ids < k; });
    if (it == bigrams.end() || it->ids != ctx) continue;
    cands.push_back({{a, b, w}, c, it->count, counts.uni[ta]});
  }
  rep.trigram_candidates = cands.size();

  const auto scores = score_trigrams(cands, params.alpha);
  std::vector<std::uint32_t> order(cands.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto keep_tri = std::min<std::size_t>(order.size(), params.caps.n_tri);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep_tri), order.end(),
                    [&](std::uint32_t x, std::uint32_t y) {
                      if (scores[x] != scores[y]) return scores[x] > scores[y];
                      return cands[x].ids < cands[y].ids;
                    });
  order.resize(keep_tri);

  PrunedNgrams out;
  out.vocab = vocab;
  out.bigrams = std::move(bigrams);
  out.trigrams.reserve(keep_tri);
  rep.min_kept_trigram_score = std::numeric_limits<double>::infinity();
  for (auto i : order) {
    out.trigrams.push_back({cands[i].ids, cands[i].c123});
    rep.min_kept_trigram_score = std::min(rep.min_kept_trigram_score, scores[i]);
  }
  std::sort(out.trigrams.begin(), out.trigrams.end(), [](const Trigram& x, const Trigram& y) { return x.ids < y.ids; });
  rep.trigrams_kept = out.trigrams.size();
  if (report) *report = rep;
  return out;
}

std::vector<std::string> closure_violations(const PrunedNgrams& pruned) {
  std::vector<std::string> out;
  const auto n = pruned.vocab.size();
  std::vector<std::array<WordId, 2>> ctx;
  for (const auto& b : pruned.bigrams) {
    if (b.ids[0] >= n || b.ids[1] >= n)
      out.push_back("bigram (" + std::to_string(b.ids[0]) + "," + std::to_string(b.ids[1]) + ") refers past vocabulary");
    ctx.push_back(b.ids);
  }
  std::sort(ctx.begin(), ctx.end());
  for (const auto& t : pruned.trigrams) {
    if (t.ids[2] >= n) out.push_back("trigram word " + std::to_string(t.ids[2]) + " not in vocabulary");
    if (!std::binary_search(ctx.begin(), ctx.end(), std::array<WordId, 2>{t.ids[0], t.ids[1]}))
      out.push_back("trigram context (" + std::to_string(t.ids[0]) + "," + std::to_string(t.ids[1]) + ") not kept");
  }
  return out;
}

}  // namespace opng
