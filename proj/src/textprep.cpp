#include "opng/textprep.hpp"

#include <istream>
#include <ostream>
#include <unordered_map>

#include "opng/errors.hpp"
#include "opng/tags.hpp"
#include "opng/utf8.hpp"

namespace opng {

namespace {

bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f' || c == 0xA0 ||
         (c >= 0x2000 && c <= 0x200B) || c == 0x3000;
}

bool is_punct(char32_t c) {
  if (c < 0x80) return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
                       (c >= 0x7B && c <= 0x7E);
  return c == 0xA1 || c == 0xAB || c == 0xBB || c == 0xBF || (c >= 0x2010 && c <= 0x205E) || c == 0xFFFD;
}

bool is_terminal(char32_t c) { return c == '.' || c == '!' || c == '?' || c == 0x2026; }

struct Token {
  std::string text;
  bool ends_sentence = false;
};

// Strips edge punctuation from one whitespace-delimited chunk.
Token finish_token(const std::u32string& chunk, bool lowercase) {
  Token tok;
  std::size_t b = 0, e = chunk.size();
  while (b < e && is_punct(chunk[b])) ++b;
  while (e > b && is_punct(chunk[e - 1])) --e;
  for (std::size_t i = e; i < chunk.size(); ++i)
    if (is_terminal(chunk[i])) tok.ends_sentence = true;
  if (b == e) {
    // all punctuation, e.g. "..." or "--"
    for (auto c : chunk)
      if (is_terminal(c)) tok.ends_sentence = true;
    return tok;
  }
  for (std::size_t i = b; i < e; ++i) {
    char32_t c = chunk[i];
    if (lowercase && c >= 'A' && c <= 'Z') c = c - 'A' + 'a';
    utf8::append(tok.text, c);
  }
  return tok;
}

template <typename Emit>
void tokenize_line(std::string_view line, bool lowercase, Emit&& emit_sentence) {
  std::vector<std::string> words;
  std::u32string chunk;
  auto flush_chunk = [&] {
    if (chunk.empty()) return;
    Token t = finish_token(chunk, lowercase);
    chunk.clear();
    if (!t.text.empty()) words.push_back(std::move(t.text));
    if (t.ends_sentence && !words.empty()) {
      emit_sentence(std::move(words));
      words.clear();
    }
  };
  for (std::size_t pos = 0; pos < line.size();) {
    std::size_t len;
    char32_t c = utf8::decode(line, pos, len).value_or(utf8::kReplacement);
    pos += len;
    if (is_space(c))
      flush_chunk();
    else
      chunk.push_back(c);
  }
  flush_chunk();
  if (!words.empty()) emit_sentence(std::move(words));
}

Sentence frame(std::vector<std::string>&& words) {
  Sentence s;
  s.tokens.reserve(words.size() + 2);
  s.tokens.emplace_back(surface(Tag::SentenceStart));
  for (auto& w : words) s.tokens.push_back(std::move(w));
  s.tokens.emplace_back(surface(Tag::SentenceEnd));
  return s;
}

}  // namespace

void PrepConfig::validate() const {
  if (rare_threshold < 1) throw Error("rare_threshold must be >= 1");
}

CleanSummary clean_corpus(std::istream& raw, const PrepConfig& config, const SentenceSink& sink) {
  config.validate();
  CleanSummary summary;
  std::string line, clean;
  while (std::getline(raw, line)) {
    const std::uint64_t line_bytes = line.size() + 1;
    if (config.byte_budget && summary.bytes_read + line_bytes > *config.byte_budget) {
      summary.truncated_by_budget = true;
      break;
    }
    summary.bytes_read += line_bytes;
    ++summary.lines;
    clean.clear();
    summary.invalid_bytes += utf8::sanitize(line, clean);
    tokenize_line(clean, config.lowercase_input, [&](std::vector<std::string>&& words) {
      summary.tokens += words.size();
      ++summary.sentences;
      sink(frame(std::move(words)));
    });
  }
  return summary;
}

std::vector<Sentence> clean_corpus(std::istream& raw, const PrepConfig& config, CleanSummary* summary) {
  std::vector<Sentence> out;
  auto s = clean_corpus(raw, config, [&](Sentence&& sent) { out.push_back(std::move(sent)); });
  if (summary) *summary = s;
  return out;
}

std::vector<std::vector<std::string>> split_sentences(const std::string& line, bool lowercase) {
  std::string clean;
  utf8::sanitize(line, clean);
  std::vector<std::vector<std::string>> out;
  tokenize_line(clean, lowercase, [&](std::vector<std::string>&& words) { out.push_back(std::move(words)); });
  return out;
}

void apply_blacklist(Sentence& sentence, const std::unordered_set<std::string>& blacklist) {
  if (blacklist.empty()) return;
  for (auto& tok : sentence.tokens)
    if (blacklist.count(tok)) tok = surface(Tag::Blacklisted);
}

void apply_blacklist(std::vector<Sentence>& sentences, const std::unordered_set<std::string>& blacklist) {
  for (auto& s : sentences) apply_blacklist(s, blacklist);
}

std::uint64_t tag_rare_words(std::vector<Sentence>& sentences, std::uint64_t rare_threshold) {
  if (rare_threshold <= 1) return 0;
  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& s : sentences)
    for (const auto& tok : s.tokens)
      if (!is_tag(tok)) ++freq[tok];

  std::uint64_t replaced = 0;
  for (auto& s : sentences)
    for (auto& tok : s.tokens) {
      if (is_tag(tok)) continue;
      if (freq[tok] < rare_threshold) {
        tok = surface(Tag::Unknown);
        ++replaced;
      }
    }
  return replaced;
}

std::vector<Sentence> preprocess(std::istream& raw, const PrepConfig& config, CleanSummary* summary) {
  auto sentences = clean_corpus(raw, config, summary);
  apply_blacklist(sentences, config.blacklist);
  tag_rare_words(sentences, config.rare_threshold);
  return sentences;
}

std::unordered_set<std::string> read_blacklist(std::istream& in) {
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.insert(line.substr(b));
  }
  return out;
}

void write_sentences(std::ostream& out, const std::vector<Sentence>& sentences) {
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (i) out << ' ';
      out << s.tokens[i];
    }
    out << '\n';
  }
}

}  // namespace opng
