#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace rsa {

struct TaggedToken {
  std::string surface;
  std::string tag;    // Penn-style tag from the fixed tagset
  std::string lemma;

  bool operator==(const TaggedToken&) const = default;
};

/// Lemmatized noun-phrase fragment from one artifact's text.
struct Chunk {
  std::vector<std::string> lemmas;
  std::string source_artifact;

  bool operator==(const Chunk&) const = default;
};

/// The closed tagset. Everything the tagger emits is drawn from here.
const std::vector<std::string>& tagset();

/// surface -> tag table loaded from the versioned lexicon.csv asset.
/// Lookups are ASCII-lowercased.
class Lexicon {
 public:
  static Lexicon load(const std::string& path);
  static const Lexicon& builtin();  // assets/lexicon.csv, loaded once

  const std::string* lookup(const std::string& lower_surface) const;
  bool has(const std::string& lower_surface, std::string_view tag) const;
  size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::string> entries_;
};

/// Whitespace split with leading/trailing punctuation detached as separate
/// tokens. Intra-word hyphens and underscores are preserved.
std::vector<std::string> tokenize(std::string_view text);

/// Lexicon lookup, then suffix rules, then default NN. Deterministic.
std::vector<TaggedToken> pos_tag(const std::vector<std::string>& tokens,
                                 const Lexicon& lexicon = Lexicon::builtin());

std::string lemmatize(const std::string& surface, const std::string& tag,
                      const Lexicon& lexicon = Lexicon::builtin());

/// Token index ranges [begin, end) matched by the NP grammar
///   NP := (DT)? (JJ|JJR|JJS)* (NN|NNS|NNP|NNPS)+
/// applied greedily left to right.
struct ChunkSpan {
  size_t begin;
  size_t end;
};
std::vector<ChunkSpan> chunk_spans(const std::vector<TaggedToken>& tagged);

/// Full pipeline: tokenize, tag, chunk, lemmatize. Total on any input;
/// no noun phrase yields an empty list.
std::vector<Chunk> extract_chunks(std::string_view text, std::string source_artifact = "",
                                  const Lexicon& lexicon = Lexicon::builtin());

}  // namespace rsa
