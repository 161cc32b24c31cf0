#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rsa/chunker.hpp"
#include "rsa/corpus.hpp"
#include "rsa/nn.hpp"
#include "rsa/util.hpp"

namespace rsa {

/// Token table with fixed specials. Ids are dense 0..size-1.
class Vocab {
 public:
  static constexpr int pad = 0;
  static constexpr int unk = 1;
  static constexpr int cls = 2;
  static constexpr int sep = 3;

  Vocab();

  int id(const std::string& token) const;  // lowercase lookup, unk fallback
  const std::string& token(int id) const { return tokens_.at(id); }
  size_t size() const { return tokens_.size(); }

  void add(const std::string& token);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

/// Tokens of the training texts ranked by frequency then lexicographically,
/// truncated to max_size - 4, specials prepended. Throws empty_corpus.
Vocab build_vocab(const std::vector<std::string>& texts, size_t max_size);

void save_vocab(const std::string& path, const Vocab& vocab);
Vocab load_vocab(const std::string& path);

struct TokenSequence {
  std::vector<int> ids;
  size_t max_len = 0;
};

/// [CLS] r1..rN [SEP] d1,1..d1,N [SEP] d2,1..d2,N [SEP]. When the template
/// exceeds max_len each segment is shrunk to its proportional share, so every
/// [SEP] survives and the result is exactly max_len long.
TokenSequence encode_sat(const RdSet& rd_set, const Vocab& vocab, size_t max_len);

/// One [CLS] req [SEP] design_i [SEP] sequence per design element, labeled
/// linked iff the design id is in the requirement's ground-truth set.
std::vector<std::pair<TokenSequence, bool>> encode_link(const RdSet& rd_set,
                                                        const std::set<std::string>& truth_ids,
                                                        const Vocab& vocab, size_t max_len);

/// Same template over the chunk lemmas of the requirement and each design.
/// An RD-set with no chunks at all degenerates to [CLS][SEP].
TokenSequence encode_chunks(const RdSet& rd_set, const Vocab& chunk_vocab, size_t max_len,
                            const Lexicon& lexicon = Lexicon::builtin());

/// Space-joined chunk lemmas of one artifact text (vocab-building input for
/// the chunk encoder).
std::string chunk_lemma_text(const std::string& text, const Lexicon& lexicon = Lexicon::builtin());

struct EncoderConfig {
  size_t hidden = 32;
  size_t heads = 2;
  size_t layers = 2;
  size_t max_len = 128;
  size_t vocab_size = 1024;
  double ln_eps = 1e-5;
};

/// "paper" preset mirrors BERT-base geometry; "toy" is the desk-scale default.
EncoderConfig encoder_preset(const std::string& name);

struct LayerParams {
  nn::Var wq, wk, wv, wo;      // d×d attention projections
  nn::Var w1, w2;              // d×4d, 4d×d feed-forward
  nn::Var ln1_gain, ln1_bias;  // post-attention layer norm
  nn::Var ln2_gain, ln2_bias;  // post-ffn layer norm
};

struct EncoderParams {
  EncoderConfig cfg;
  nn::Var tok_emb;  // vocab×d
  nn::Var pos_emb;  // max_len×d (learned)
  std::vector<LayerParams> layers;

  /// N(0, 0.02) weights, layer-norm gain 1 / bias 0.
  static EncoderParams init(const EncoderConfig& cfg, Rng& rng);

  std::vector<std::pair<std::string, nn::Var>> named(const std::string& prefix = "") const;
};

/// Per-layer, per-head attention snapshots for inspection in tests.
struct AttnTrace {
  std::vector<nn::Mat> attn;  // layers*heads entries, seq×seq each
  std::vector<uint8_t> valid; // padding mask that was applied
};

/// Post-LN transformer encoder: embeddings, then per layer masked multi-head
/// self-attention + residual + layer-norm, GELU feed-forward + residual +
/// layer-norm. Output is seq_len × hidden.
nn::Var encoder_forward(const TokenSequence& seq, const EncoderParams& params,
                        AttnTrace* trace = nullptr);

// --- checkpoint io --------------------------------------------------------
/// Flat little-endian f64 payload preceded by a JSON header of tensor
/// names/shapes.
void save_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, nn::Var>>& tensors);
void load_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, nn::Var>>& tensors);

}  // namespace rsa
