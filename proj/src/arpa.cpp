#include "opng/arpa.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "opng/errors.hpp"

namespace opng {

namespace {

double log10_ratio(std::uint64_t num, std::uint64_t den) {
  if (num == 0 || den == 0) return kNoProbLog10;
  return std::log10(static_cast<double>(num) / static_cast<double>(den));
}

bool by_ids(const ArpaEntry& a, const ArpaEntry& b) { return a.ids < b.ids; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::string format_score(double log10_score) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", log10_score == 0.0 ? 0.0 : log10_score);
  return buf;
}

ArpaModel assign_scores(const PrunedNgrams& pruned, const NgramCounts& counts, double lambda) {
  ArpaModel m;
  m.words = pruned.vocab.words;
  m.lambda = lambda;
  const auto& vc = pruned.vocab.counts;
  const std::uint64_t start = vc.empty() ? 0 : vc[id_of(Tag::SentenceStart)];
  const std::uint64_t denom = counts.total_tokens - start;

  m.orders[0].reserve(m.words.size());
  for (WordId id = 0; id < m.words.size(); ++id) {
    ArpaEntry e;
    e.ids[0] = id;
    e.log10_score = id == id_of(Tag::SentenceStart) ? kNoProbLog10 : log10_ratio(vc[id], denom);
    m.orders[0].push_back(e);
  }

  for (const auto& b : pruned.bigrams) {
    ArpaEntry e;
    e.ids = {b.ids[0], b.ids[1], kNoWord};
    e.log10_score = log10_ratio(b.count, vc[b.ids[0]]);
    m.orders[1].push_back(e);
  }

  for (const auto& t : pruned.trigrams) {
    auto it = std::lower_bound(pruned.bigrams.begin(), pruned.bigrams.end(), std::array<WordId, 2>{t.ids[0], t.ids[1]},
                               [](const Bigram& x, const std::array<WordId, 2>& k) { return x.ids < k; });
    if (it == pruned.bigrams.end() || it->ids[0] != t.ids[0] || it->ids[1] != t.ids[1])
      throw BuildError("score", "trigram context bigram missing (closure violated)");
    ArpaEntry e;
    e.ids = t.ids;
    e.log10_score = log10_ratio(t.count, it->count);
    m.orders[2].push_back(e);
  }
  for (auto& o : m.orders) std::sort(o.begin(), o.end(), by_ids);
  return m;
}

void write_arpa(const ArpaModel& model, std::ostream& out) {
  // Free text before \data\ is ignored by ARPA readers; it carries lambda.
  out << "stupid-backoff lambda=" << format_score(model.lambda) << "\n\n";
  out << "\\data\\\n";
  for (int n = 0; n < 3; ++n) out << "ngram " << n + 1 << '=' << model.orders[n].size() << '\n';
  for (int n = 0; n < 3; ++n) {
    out << "\n\\" << n + 1 << "-grams:\n";
    for (const auto& e : model.orders[n]) {
      out << format_score(e.log10_score) << '\t';
      for (int k = 0; k <= n; ++k) {
        if (k) out << ' ';
        out << model.words.at(e.ids[k]);
      }
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
  out.flush();
  if (!out) throw Error("write_arpa: output stream failed; ARPA output is partial");
}

ArpaModel read_arpa(std::istream& in, const Vocabulary& vocab) {
  ArpaModel m;
  m.words = vocab.words;

  std::string line;
  std::size_t lineno = 0;
  auto next = [&](std::string_view& out) {
    while (std::getline(in, line)) {
      ++lineno;
      out = trim(line);
      if (!out.empty()) return true;
    }
    return false;
  };

  std::string_view l;
  // Anything before \data\ is free-form.
  bool found = false;
  while (next(l)) {
    if (l == "\\data\\") {
      found = true;
      break;
    }
    constexpr std::string_view key = "stupid-backoff lambda=";
    if (l.starts_with(key)) {
      auto v = l.substr(key.size());
      if (std::from_chars(v.data(), v.data() + v.size(), m.lambda).ec != std::errc{})
        throw ParseError(lineno, "unparsable lambda");
    }
  }
  if (!found) throw ParseError(lineno, "missing \\data\\ header");

  std::array<std::size_t, 3> declared{0, 0, 0};
  std::array<bool, 3> seen{false, false, false};
  while (true) {
    if (!next(l)) throw ParseError(lineno, "unexpected end of file in header");
    if (!l.starts_with("ngram ")) break;
    auto eq = l.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "malformed ngram count line");
    int order = 0;
    std::size_t count = 0;
    auto o = trim(l.substr(6, eq - 6));
    auto c = trim(l.substr(eq + 1));
    if (std::from_chars(o.data(), o.data() + o.size(), order).ec != std::errc{} ||
        std::from_chars(c.data(), c.data() + c.size(), count).ec != std::errc{})
      throw ParseError(lineno, "malformed ngram count line");
    if (order < 1 || order > 3) throw ParseError(lineno, "unsupported order " + std::to_string(order));
    declared[order - 1] = count;
    seen[order - 1] = true;
  }
  for (int n = 0; n < 3; ++n)
    if (!seen[n]) throw ParseError(lineno, "header lacks ngram " + std::to_string(n + 1) + " count");

  // l holds the first section marker
  while (true) {
    if (l == "\\end\\") break;
    int order = 0;
    if (l.size() == 9 && l[0] == '\\' && l.substr(2) == "-grams:") order = l[1] - '0';
    if (order < 1 || order > 3) throw ParseError(lineno, "expected section marker, got '" + std::string(l) + "'");
    auto& entries = m.orders[order - 1];
    const std::string section = "\\" + std::to_string(order) + "-grams:";
    bool ended = false;
    while (true) {
      if (!next(l)) {
        ended = true;
        break;
      }
      if (l.starts_with('\\')) break;
      auto fields = split_ws(l);
      if (fields.size() != static_cast<std::size_t>(order) + 1 && fields.size() != static_cast<std::size_t>(order) + 2)
        throw ParseError(lineno, section + " wrong field count");
      ArpaEntry e;
      auto s = fields[0];
      auto res = std::from_chars(s.data(), s.data() + s.size(), e.log10_score);
      if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError(lineno, section + " unparsable score '" + std::string(s) + "'");
      for (int k = 0; k < order; ++k) e.ids[k] = vocab.lookup(fields[k + 1]);
      entries.push_back(e);
    }
    if (entries.size() != declared[order - 1])
      throw ParseError(lineno, section + " header declares " + std::to_string(declared[order - 1]) + " entries, found " +
                                   std::to_string(entries.size()));
    if (ended) throw ParseError(lineno, "missing \\end\\");
  }
  for (int n = 0; n < 3; ++n)
    if (m.orders[n].size() != declared[n])
      throw ParseError(lineno, "\\" + std::to_string(n + 1) + "-grams: section missing");
  for (auto& o : m.orders) std::stable_sort(o.begin(), o.end(), by_ids);
  return m;
}

}  // namespace opng
