#include "rsa/chunker.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <mutex>

#include "rsa/csv.hpp"
#include "rsa/errors.hpp"
#include "rsa/util.hpp"

namespace rsa {

const std::vector<std::string>& tagset() {
  static const std::vector<std::string> tags = {
      "DT", "JJ", "JJR", "JJS", "NN", "NNS", "NNP", "NNPS", "VB",  "VBD",  "VBG",
      "VBN", "VBP", "VBZ", "RB", "IN", "CC",  "PRP", "MD",  "CD", "SYM", "PUNCT"};
  return tags;
}

Lexicon Lexicon::load(const std::string& path) {
  Lexicon lex;
  auto rows = csv::parse_file(path);
  if (rows.empty() || rows[0].fields != std::vector<std::string>{"surface", "tag"})
    fail(Errc::parse_error, path + ": expected header surface,tag");
  const auto& tags = tagset();
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 2)
      fail(Errc::parse_error, path + ":" + std::to_string(row.line) + ": expected 2 fields");
    const std::string surface = ascii_lower(row.fields[0]);
    const std::string& tag = row.fields[1];
    if (std::find(tags.begin(), tags.end(), tag) == tags.end())
      fail(Errc::parse_error, path + ":" + std::to_string(row.line) + ": tag outside tagset: " + tag);
    if (lex.entries_.count(surface))
      fail(Errc::duplicate_id, path + ":" + std::to_string(row.line) + ": duplicate surface " + surface);
    lex.entries_.emplace(surface, tag);
  }
  return lex;
}

const Lexicon& Lexicon::builtin() {
  static Lexicon lex = Lexicon::load(std::string(RSA_REPO_DIR) + "/assets/lexicon.csv");
  return lex;
}

const std::string* Lexicon::lookup(const std::string& lower_surface) const {
  auto it = entries_.find(lower_surface);
  return it == entries_.end() ? nullptr : &it->second;
}

bool Lexicon::has(const std::string& lower_surface, std::string_view tag) const {
  const std::string* t = lookup(lower_surface);
  return t && *t == tag;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view piece = text.substr(i, j - i);
    i = j;

    // Peel leading punctuation.
    size_t b = 0;
    while (b < piece.size() && is_ascii_punct(piece[b])) {
      out.emplace_back(1, piece[b]);
      ++b;
    }
    // Find trailing punctuation run (peeled after the core token).
    size_t e = piece.size();
    while (e > b && is_ascii_punct(piece[e - 1])) --e;
    if (e > b) out.emplace_back(piece.substr(b, e - b));
    for (size_t k = e; k < piece.size(); ++k) out.emplace_back(1, piece[k]);
  }
  return out;
}

namespace {

bool all_punct(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return is_ascii_punct(c); });
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  bool digit_seen = false;
  for (char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c))) digit_seen = true;
    else if (c != '.' && c != ',' && c != '-' && c != '+') return false;
  }
  return digit_seen;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool sentence_boundary(const std::string& tok) {
  return tok == "." || tok == "!" || tok == "?" || tok == ";" || tok == ":";
}

// -s words: VBZ when a stem is a lexicon verb, NNS when a stem is a lexicon noun.
std::string tag_s_form(const std::string& lower, const Lexicon& lex) {
  std::vector<std::string> stems;
  if (ends_with(lower, "ies") && lower.size() > 3)
    stems.push_back(lower.substr(0, lower.size() - 3) + "y");
  if (ends_with(lower, "es") && lower.size() > 2)
    stems.push_back(lower.substr(0, lower.size() - 2));
  stems.push_back(lower.substr(0, lower.size() - 1));
  for (const auto& stem : stems)
    if (lex.has(stem, "VB")) return "VBZ";
  for (const auto& stem : stems)
    if (lex.has(stem, "NN")) return "NNS";
  return "";
}

}  // namespace

std::vector<TaggedToken> pos_tag(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
  std::vector<TaggedToken> out;
  out.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    std::string tag;

    if (all_punct(tok)) {
      tag = "PUNCT";
    } else if (const std::string* t = lexicon.lookup(ascii_lower(tok))) {
      tag = *t;
    } else {
      const std::string lower = ascii_lower(tok);
      bool initial = (i == 0) || sentence_boundary(tokens[i - 1]);
      if (!initial && std::isupper(static_cast<unsigned char>(tok[0]))) {
        tag = "NNP";
      } else if (all_digits(tok)) {
        tag = "CD";
      } else if (ends_with(lower, "ly") && lower.size() > 3) {
        tag = "RB";
      } else if (ends_with(lower, "ing") && lower.size() > 4) {
        tag = "VBG";
      } else if (ends_with(lower, "ed") && lower.size() > 3) {
        tag = "VBD";
      } else if (ends_with(lower, "tion") || ends_with(lower, "ment") || ends_with(lower, "ness")) {
        tag = "NN";
      } else if (ends_with(lower, "ous") || ends_with(lower, "ful") || ends_with(lower, "ive")) {
        tag = "JJ";
      } else if (ends_with(lower, "s") && !ends_with(lower, "ss") && lower.size() > 2) {
        tag = tag_s_form(lower, lexicon);
      }
      if (tag.empty()) tag = "NN";
    }

    TaggedToken tt;
    tt.surface = tok;
    tt.tag = tag;
    tt.lemma = lemmatize(tok, tag, lexicon);
    out.push_back(std::move(tt));
  }
  return out;
}

namespace {

const std::map<std::string, std::string>& verb_exceptions() {
  static const std::map<std::string, std::string> map = {
      {"is", "be"},        {"am", "be"},       {"are", "be"},     {"was", "be"},
      {"were", "be"},      {"been", "be"},     {"being", "be"},   {"has", "have"},
      {"had", "have"},     {"having", "have"}, {"does", "do"},    {"did", "do"},
      {"done", "do"},      {"goes", "go"},     {"went", "go"},    {"gone", "go"},
      {"flies", "fly"},    {"flew", "fly"},    {"flown", "fly"},  {"made", "make"},
      {"gave", "give"},    {"given", "give"},  {"took", "take"},  {"taken", "take"},
      {"ran", "run"},      {"sent", "send"},   {"built", "build"},{"kept", "keep"},
      {"left", "leave"},   {"lost", "lose"},   {"met", "meet"},   {"said", "say"},
      {"saw", "see"},      {"seen", "see"},    {"told", "tell"},  {"got", "get"},
      {"came", "come"},    {"became", "become"},{"began", "begin"},{"begun", "begin"},
      {"chose", "choose"}, {"chosen", "choose"},{"drew", "draw"}, {"drawn", "draw"},
      {"found", "find"},   {"held", "hold"},   {"led", "lead"},   {"meant", "mean"},
      {"paid", "pay"},     {"rose", "rise"},   {"risen", "rise"}, {"shown", "show"},
      {"stood", "stand"},  {"understood", "understand"},          {"wrote", "write"},
      {"written", "write"},
  };
  return map;
}

bool double_consonant_tail(const std::string& s) {
  if (s.size() < 2) return false;
  char a = s[s.size() - 2], b = s[s.size() - 1];
  if (a != b) return false;
  static const std::string vowels = "aeiou";
  if (vowels.find(a) != std::string::npos) return false;
  // legitimate doubles kept intact
  return !(a == 's' || a == 'l' || a == 'f' || a == 'z');
}

// Undo -ing/-ed stripping artifacts: doubled consonant ("planning" -> "plan"),
// silent e restored when the e-form is a known verb ("executing" -> "execute").
std::string restore_verb_stem(std::string stem, const Lexicon& lex) {
  if (lex.has(stem, "VB")) return stem;
  if (lex.has(stem + "e", "VB")) return stem + "e";
  if (double_consonant_tail(stem)) {
    std::string undoubled = stem.substr(0, stem.size() - 1);
    if (lex.has(undoubled, "VB")) return undoubled;
    return undoubled;
  }
  return stem;
}

std::string lemmatize_verb(const std::string& lower, const Lexicon& lex) {
  const auto& exc = verb_exceptions();
  if (auto it = exc.find(lower); it != exc.end()) return it->second;
  if (lex.has(lower, "VB")) return lower;  // already base form

  if (ends_with(lower, "ies") && lower.size() > 4)
    return lower.substr(0, lower.size() - 3) + "y";
  if (ends_with(lower, "ing") && lower.size() > 5)
    return restore_verb_stem(lower.substr(0, lower.size() - 3), lex);
  if (ends_with(lower, "ied") && lower.size() > 4)
    return lower.substr(0, lower.size() - 3) + "y";
  if (ends_with(lower, "ed") && lower.size() > 4)
    return restore_verb_stem(lower.substr(0, lower.size() - 2), lex);
  if (ends_with(lower, "es") && lower.size() > 3) {
    std::string s_stem = lower.substr(0, lower.size() - 1);
    if (lex.has(s_stem, "VB")) return s_stem;  // "executes" -> "execute"
    std::string es_stem = lower.substr(0, lower.size() - 2);
    if (lex.has(es_stem, "VB")) return es_stem;  // "passes" -> "pass"
    for (const char* tail : {"s", "x", "z", "ch", "sh"})
      if (ends_with(es_stem, tail)) return es_stem;
    return s_stem;
  }
  if (ends_with(lower, "s") && !ends_with(lower, "ss") && lower.size() > 3)
    return lower.substr(0, lower.size() - 1);
  return lower;
}

std::string lemmatize_plural_noun(const std::string& lower) {
  if (ends_with(lower, "ses") && lower.size() > 4)
    return lower.substr(0, lower.size() - 2);  // buses -> bus
  if (ends_with(lower, "ies") && lower.size() > 4)
    return lower.substr(0, lower.size() - 3) + "y";
  if (ends_with(lower, "s") && !ends_with(lower, "ss") && !ends_with(lower, "us") &&
      !ends_with(lower, "is") && lower.size() > 3)
    return lower.substr(0, lower.size() - 1);
  return lower;
}

}  // namespace

std::string lemmatize(const std::string& surface, const std::string& tag, const Lexicon& lexicon) {
  const std::string lower = ascii_lower(surface);
  if (tag == "NNS" || tag == "NNPS") return lemmatize_plural_noun(lower);
  if (tag.rfind("VB", 0) == 0) return lemmatize_verb(lower, lexicon);
  return lower;
}

std::vector<ChunkSpan> chunk_spans(const std::vector<TaggedToken>& tagged) {
  auto is_adj = [](const std::string& t) { return t == "JJ" || t == "JJR" || t == "JJS"; };
  auto is_noun = [](const std::string& t) {
    return t == "NN" || t == "NNS" || t == "NNP" || t == "NNPS";
  };

  std::vector<ChunkSpan> spans;
  size_t i = 0;
  while (i < tagged.size()) {
    size_t j = i;
    if (j < tagged.size() && tagged[j].tag == "DT") ++j;
    while (j < tagged.size() && is_adj(tagged[j].tag)) ++j;
    size_t noun_begin = j;
    while (j < tagged.size() && is_noun(tagged[j].tag)) ++j;
    if (j > noun_begin) {
      spans.push_back({i, j});
      i = j;
    } else {
      ++i;
    }
  }
  return spans;
}

std::vector<Chunk> extract_chunks(std::string_view text, std::string source_artifact,
                                  const Lexicon& lexicon) {
  auto tagged = pos_tag(tokenize(text), lexicon);
  std::vector<Chunk> chunks;
  for (const auto& span : chunk_spans(tagged)) {
    Chunk c;
    c.source_artifact = source_artifact;
    for (size_t k = span.begin; k < span.end; ++k) {
      if (tagged[k].tag == "DT") continue;  // determiners carry no matchable content
      c.lemmas.push_back(tagged[k].lemma);
    }
    if (!c.lemmas.empty()) chunks.push_back(std::move(c));
  }
  return chunks;
}

}  // namespace rsa
