#include "opng/class_model.hpp"

#include <algorithm>
#include <istream>
#include <map>

#include "opng/errors.hpp"

namespace opng {

ClassLexicon read_lexicon(std::istream& in) {
  ClassLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      throw ParseError(lineno, "lexicon line must be word<TAB>LABEL");
    lex.entries[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return lex;
}

ClassAssignment build_word_class(const ClassLexicon& lexicon, const Vocabulary& vocab, std::size_t max_classes) {
  if (max_classes < 1 || max_classes > kMaxClasses) throw Error("max_classes must be in [1, 256]");

  std::map<std::string, std::uint64_t> mass;
  for (WordId id = kNumTags; id < vocab.size(); ++id) {
    auto it = lexicon.entries.find(vocab.words[id]);
    if (it != lexicon.entries.end()) mass[it->second] += vocab.counts[id];
  }
  std::vector<std::pair<std::string, std::uint64_t>> ranked(mass.begin(), mass.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_classes - 1) ranked.resize(max_classes - 1);

  ClassAssignment out;
  std::unordered_map<std::string, std::uint8_t> label_id;
  for (const auto& [label, m] : ranked) {
    label_id[label] = static_cast<std::uint8_t>(out.labels.size());
    out.labels.push_back(label);
  }
  out.labels.emplace_back(kOtherLabel);
  const auto other = out.other();

  out.word_class.assign(vocab.size(), other);
  for (WordId id = kNumTags; id < vocab.size(); ++id) {
    auto it = lexicon.entries.find(vocab.words[id]);
    if (it == lexicon.entries.end()) continue;
    auto c = label_id.find(it->second);
    if (c != label_id.end()) out.word_class[id] = c->second;
  }
  return out;
}

std::vector<double> emission_table(const Vocabulary& vocab, const ClassAssignment& assignment) {
  std::vector<std::uint64_t> class_mass(assignment.n_classes(), 0);
  for (WordId id = kNumTags; id < vocab.size(); ++id) class_mass[assignment.word_class[id]] += vocab.counts[id];
  std::vector<double> out(vocab.size(), 0.0);
  for (WordId id = kNumTags; id < vocab.size(); ++id) {
    const auto m = class_mass[assignment.word_class[id]];
    if (m) out[id] = static_cast<double>(vocab.counts[id]) / static_cast<double>(m);
  }
  return out;
}

ClassModel build_class_stats(const NgramCounts& counts, const Vocabulary& vocab, const ClassAssignment& assignment,
                             std::size_t k) {
  const std::size_t n = assignment.n_classes();
  if (assignment.word_class.size() != vocab.size()) throw Error("class assignment does not cover the vocabulary");

  ClassModel model;
  model.labels = assignment.labels;
  model.word_class = assignment.word_class;
  model.k = k;
  model.topk.resize(n);
  model.emission.resize(n);

  const auto emission = emission_table(vocab, assignment);
  std::vector<std::vector<WordId>> members(n);
  for (WordId id = kNumTags; id < vocab.size(); ++id)
    if (vocab.counts[id] > 0) members[assignment.word_class[id]].push_back(id);
  for (std::size_t c = 0; c < n; ++c) {
    auto& m = members[c];
    const auto keep = std::min(k, m.size());
    std::partial_sort(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(keep), m.end(), [&](WordId a, WordId b) {
      if (emission[a] != emission[b]) return emission[a] > emission[b];
      return a < b;
    });
    m.resize(keep);
    model.topk[c] = m;
    for (auto w : m) model.emission[c].push_back(emission[w]);
  }

  // corpus type -> class
  const auto other = assignment.other();
  std::vector<std::uint8_t> type_class(counts.types.size(), other);
  std::vector<bool> type_is_tag(counts.types.size(), false);
  for (std::size_t t = 0; t < counts.types.size(); ++t) {
    if (auto id = vocab.find(counts.types[t])) type_class[t] = assignment.word_class[*id];
    type_is_tag[t] = t < kNumTags;
  }
  std::map<std::size_t, std::uint64_t> trans;  // (ci * n + cj) * n + ck
  for (auto [key, c] : counts.tri) {
    const auto w = unpack_at(key, 2, 3);
    if (type_is_tag[w]) continue;
    const std::size_t ci = type_class[unpack_at(key, 0, 3)], cj = type_class[unpack_at(key, 1, 3)];
    trans[(ci * n + cj) * n + type_class[w]] += c;
  }
  model.pair_argmax.assign(n * n, other);
  std::vector<std::uint64_t> best(n * n, 0);
  for (auto [key, c] : trans) {
    const auto pair = key / n;
    if (c > best[pair]) {
      best[pair] = c;
      model.pair_argmax[pair] = static_cast<std::uint8_t>(key % n);
    }
  }
  return model;
}

double class_probability(WordId w, std::uint8_t ci, std::uint8_t cj, const ClassModel& model) {
  const auto cw = model.word_class.at(w);
  if (cw != model.argmax(ci, cj)) return 0.0;
  const auto& list = model.topk[cw];
  for (std::size_t i = 0; i < list.size(); ++i)
    if (list[i] == w) return model.emission[cw][i];
  return 0.0;
}

}  // namespace opng
