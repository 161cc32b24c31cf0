#include "rsa/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "rsa/errors.hpp"

namespace rsa {

Vocab::Vocab() {
  for (const char* s : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) add(s);
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(ascii_lower(token));
  return it == index_.end() ? unk : it->second;
}

void Vocab::add(const std::string& token) {
  if (index_.count(token)) fail(Errc::duplicate_id, "duplicate vocab token " + token);
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

Vocab build_vocab(const std::vector<std::string>& texts, size_t max_size) {
  if (texts.empty()) fail(Errc::empty_corpus, "vocab over empty text corpus");
  if (max_size < 4) fail(Errc::config_error, "vocab max_size must cover the 4 specials");
  std::map<std::string, size_t> counts;
  for (const auto& text : texts)
    for (const auto& tok : tokenize(text)) ++counts[ascii_lower(tok)];

  std::vector<std::pair<std::string, size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab vocab;
  for (size_t i = 0; i < ranked.size() && vocab.size() < max_size; ++i) vocab.add(ranked[i].first);
  return vocab;
}

void save_vocab(const std::string& path, const Vocab& vocab) {
  std::string out;
  for (size_t i = 0; i < vocab.size(); ++i) {
    out += vocab.token(static_cast<int>(i));
    out += '\t';
    out += std::to_string(i);
    out += '\n';
  }
  write_file(path, out);
}

Vocab load_vocab(const std::string& path) {
  std::string content = read_file(path);
  Vocab vocab;
  size_t pos = 0;
  int expected = 0;
  while (pos < content.size()) {
    size_t end = content.find('\n', pos);
    if (end == std::string::npos) end = content.size();
    std::string line = content.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) fail(Errc::parse_error, path + ": missing tab in vocab line");
    std::string token = line.substr(0, tab);
    int id = std::stoi(line.substr(tab + 1));
    if (id != expected) fail(Errc::parse_error, path + ": vocab ids must be dense");
    if (expected >= 4) vocab.add(token);  // specials are implicit
    ++expected;
  }
  return vocab;
}

namespace {

std::vector<int> token_ids(const std::string& text, const Vocab& vocab) {
  std::vector<int> ids;
  for (const auto& tok : tokenize(text)) ids.push_back(vocab.id(tok));
  return ids;
}

/// Shrinks segments to proportional floor shares of the token budget, then
/// hands leftover slots to the earliest still-truncated segments so the final
/// sequence is exactly max_len.
std::vector<size_t> allocate_budget(const std::vector<size_t>& lengths, size_t budget) {
  size_t total = 0;
  for (size_t len : lengths) total += len;
  if (total <= budget) return lengths;

  std::vector<size_t> alloc(lengths.size());
  size_t used = 0;
  for (size_t i = 0; i < lengths.size(); ++i) {
    alloc[i] = budget * lengths[i] / total;
    used += alloc[i];
  }
  size_t leftover = budget - used;
  while (leftover > 0) {
    bool progressed = false;
    for (size_t i = 0; i < alloc.size() && leftover > 0; ++i) {
      if (alloc[i] < lengths[i]) {
        ++alloc[i];
        --leftover;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return alloc;
}

TokenSequence assemble(const std::vector<std::vector<int>>& segments, size_t max_len) {
  const size_t overhead = 1 + segments.size();  // [CLS] plus one [SEP] per segment
  if (max_len < overhead)
    fail(Errc::sequence_too_short,
         "max_len " + std::to_string(max_len) + " cannot fit " + std::to_string(segments.size()) +
             " segments");
  std::vector<size_t> lengths;
  lengths.reserve(segments.size());
  for (const auto& s : segments) lengths.push_back(s.size());
  std::vector<size_t> alloc = allocate_budget(lengths, max_len - overhead);

  TokenSequence seq;
  seq.max_len = max_len;
  seq.ids.push_back(Vocab::cls);
  for (size_t i = 0; i < segments.size(); ++i) {
    seq.ids.insert(seq.ids.end(), segments[i].begin(), segments[i].begin() + alloc[i]);
    seq.ids.push_back(Vocab::sep);
  }
  return seq;
}

}  // namespace

TokenSequence encode_sat(const RdSet& rd_set, const Vocab& vocab, size_t max_len) {
  std::vector<std::vector<int>> segments;
  segments.push_back(token_ids(rd_set.requirement.text, vocab));
  for (const auto& d : rd_set.designs) segments.push_back(token_ids(d.text, vocab));
  return assemble(segments, max_len);
}

std::vector<std::pair<TokenSequence, bool>> encode_link(const RdSet& rd_set,
                                                        const std::set<std::string>& truth_ids,
                                                        const Vocab& vocab, size_t max_len) {
  std::vector<std::pair<TokenSequence, bool>> out;
  std::vector<int> req_ids = token_ids(rd_set.requirement.text, vocab);
  for (const auto& d : rd_set.designs) {
    std::vector<std::vector<int>> segments{req_ids, token_ids(d.text, vocab)};
    out.emplace_back(assemble(segments, max_len), truth_ids.count(d.id) > 0);
  }
  return out;
}

std::string chunk_lemma_text(const std::string& text, const Lexicon& lexicon) {
  std::string out;
  for (const auto& chunk : extract_chunks(text, "", lexicon))
    for (const auto& lemma : chunk.lemmas) {
      if (!out.empty()) out.push_back(' ');
      out += lemma;
    }
  return out;
}

TokenSequence encode_chunks(const RdSet& rd_set, const Vocab& chunk_vocab, size_t max_len,
                            const Lexicon& lexicon) {
  std::vector<std::vector<int>> segments;
  size_t total = 0;
  auto lemma_ids = [&](const std::string& text) {
    std::vector<int> ids;
    for (const auto& chunk : extract_chunks(text, "", lexicon))
      for (const auto& lemma : chunk.lemmas) ids.push_back(chunk_vocab.id(lemma));
    total += ids.size();
    return ids;
  };
  segments.push_back(lemma_ids(rd_set.requirement.text));
  for (const auto& d : rd_set.designs) segments.push_back(lemma_ids(d.text));
  if (total == 0) {
    TokenSequence seq;
    seq.max_len = max_len;
    seq.ids = {Vocab::cls, Vocab::sep};
    return seq;
  }
  return assemble(segments, max_len);
}

EncoderConfig encoder_preset(const std::string& name) {
  if (name == "toy") return EncoderConfig{};
  if (name == "paper") {
    EncoderConfig cfg;
    cfg.hidden = 768;
    cfg.heads = 12;
    cfg.layers = 12;
    cfg.max_len = 512;
    cfg.vocab_size = 30522;
    return cfg;
  }
  fail(Errc::config_error, "unknown encoder preset: " + name);
}

namespace {

nn::Var init_mat(size_t rows, size_t cols, Rng& rng, double std_dev) {
  nn::Mat m(rows, cols);
  for (double& v : m.a) v = rng.normal() * std_dev;
  return nn::leaf(std::move(m));
}

nn::Var const_row(size_t cols, double value) {
  nn::Mat m(1, cols);
  for (double& v : m.a) v = value;
  return nn::leaf(std::move(m));
}

}  // namespace

EncoderParams EncoderParams::init(const EncoderConfig& cfg, Rng& rng) {
  if (cfg.hidden % cfg.heads != 0)
    fail(Errc::config_error, "hidden size must be divisible by the head count");
  EncoderParams p;
  p.cfg = cfg;
  const double std_dev = 0.02;
  p.tok_emb = init_mat(cfg.vocab_size, cfg.hidden, rng, std_dev);
  p.pos_emb = init_mat(cfg.max_len, cfg.hidden, rng, std_dev);
  for (size_t l = 0; l < cfg.layers; ++l) {
    LayerParams layer;
    layer.wq = init_mat(cfg.hidden, cfg.hidden, rng, std_dev);
    layer.wk = init_mat(cfg.hidden, cfg.hidden, rng, std_dev);
    layer.wv = init_mat(cfg.hidden, cfg.hidden, rng, std_dev);
    layer.wo = init_mat(cfg.hidden, cfg.hidden, rng, std_dev);
    layer.w1 = init_mat(cfg.hidden, 4 * cfg.hidden, rng, std_dev);
    layer.w2 = init_mat(4 * cfg.hidden, cfg.hidden, rng, std_dev);
    layer.ln1_gain = const_row(cfg.hidden, 1.0);
    layer.ln1_bias = const_row(cfg.hidden, 0.0);
    layer.ln2_gain = const_row(cfg.hidden, 1.0);
    layer.ln2_bias = const_row(cfg.hidden, 0.0);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

std::vector<std::pair<std::string, nn::Var>> EncoderParams::named(const std::string& prefix) const {
  std::vector<std::pair<std::string, nn::Var>> out;
  out.emplace_back(prefix + "tok_emb", tok_emb);
  out.emplace_back(prefix + "pos_emb", pos_emb);
  for (size_t l = 0; l < layers.size(); ++l) {
    std::string base = prefix + "layer" + std::to_string(l) + ".";
    const LayerParams& layer = layers[l];
    out.emplace_back(base + "wq", layer.wq);
    out.emplace_back(base + "wk", layer.wk);
    out.emplace_back(base + "wv", layer.wv);
    out.emplace_back(base + "wo", layer.wo);
    out.emplace_back(base + "w1", layer.w1);
    out.emplace_back(base + "w2", layer.w2);
    out.emplace_back(base + "ln1_gain", layer.ln1_gain);
    out.emplace_back(base + "ln1_bias", layer.ln1_bias);
    out.emplace_back(base + "ln2_gain", layer.ln2_gain);
    out.emplace_back(base + "ln2_bias", layer.ln2_bias);
  }
  return out;
}

nn::Var encoder_forward(const TokenSequence& seq, const EncoderParams& params, AttnTrace* trace) {
  using namespace nn;
  const EncoderConfig& cfg = params.cfg;
  if (seq.ids.empty()) fail(Errc::config_error, "empty token sequence");
  if (seq.ids.size() > cfg.max_len)
    fail(Errc::id_out_of_range, "sequence exceeds encoder max_len");

  std::vector<uint8_t> valid(seq.ids.size());
  for (size_t i = 0; i < seq.ids.size(); ++i) valid[i] = seq.ids[i] != Vocab::pad;
  if (trace) trace->valid = valid;

  Var x = embedding(params.tok_emb, params.pos_emb, seq.ids);
  const size_t head_dim = cfg.hidden / cfg.heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  for (const LayerParams& layer : params.layers) {
    Var q = matmul(x, layer.wq);
    Var k = matmul(x, layer.wk);
    Var v = matmul(x, layer.wv);

    std::vector<Var> head_outputs;
    for (size_t h = 0; h < cfg.heads; ++h) {
      Var qh = slice_cols(q, h * head_dim, head_dim);
      Var kh = slice_cols(k, h * head_dim, head_dim);
      Var vh = slice_cols(v, h * head_dim, head_dim);
      Var scores = scale(matmul_nt(qh, kh), att_scale);
      Var attn = softmax_rows_masked(scores, valid);
      if (trace) trace->attn.push_back(attn->val);
      head_outputs.push_back(matmul(attn, vh));
    }
    Var attn_out = matmul(concat_cols(head_outputs), layer.wo);
    x = layer_norm(add(x, attn_out), layer.ln1_gain, layer.ln1_bias, cfg.ln_eps);

    Var ffn = matmul(gelu(matmul(x, layer.w1)), layer.w2);
    x = layer_norm(add(x, ffn), layer.ln2_gain, layer.ln2_bias, cfg.ln_eps);
  }
  return x;
}

namespace {

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t get_u32(const std::string& s, size_t off) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
  return v;
}

void put_f64(std::string& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64(const std::string& s, size_t off) {
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<uint64_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

constexpr char kMagic[4] = {'R', 'S', 'A', 'T'};

}  // namespace

void save_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, nn::Var>>& tensors) {
  nlohmann::ordered_json header;
  header["tensors"] = nlohmann::ordered_json::array();
  for (const auto& [name, var] : tensors) {
    nlohmann::ordered_json t;
    t["name"] = name;
    t["rows"] = var->val.rows;
    t["cols"] = var->val.cols;
    header["tensors"].push_back(t);
  }
  std::string header_str = header.dump();

  std::string out;
  out.append(kMagic, 4);
  put_u32(out, static_cast<uint32_t>(header_str.size()));
  out += header_str;
  for (const auto& [_, var] : tensors)
    for (double d : var->val.a) put_f64(out, d);
  write_file(path, out);
}

void load_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, nn::Var>>& tensors) {
  std::string content = read_file(path);
  if (content.size() < 8 || std::memcmp(content.data(), kMagic, 4) != 0)
    fail(Errc::parse_error, path + ": not a checkpoint file");
  uint32_t header_len = get_u32(content, 4);
  if (content.size() < 8 + header_len) fail(Errc::parse_error, path + ": truncated header");
  nlohmann::json header = nlohmann::json::parse(content.substr(8, header_len), nullptr, false);
  if (header.is_discarded()) fail(Errc::parse_error, path + ": bad checkpoint header");

  const auto& listed = header.at("tensors");
  if (listed.size() != tensors.size())
    fail(Errc::parse_error, path + ": tensor count mismatch");
  size_t off = 8 + header_len;
  for (size_t i = 0; i < tensors.size(); ++i) {
    const auto& [name, var] = tensors[i];
    if (listed[i].at("name").get<std::string>() != name ||
        listed[i].at("rows").get<size_t>() != var->val.rows ||
        listed[i].at("cols").get<size_t>() != var->val.cols)
      fail(Errc::parse_error, path + ": tensor layout mismatch at " + name);
    if (off + 8 * var->val.size() > content.size())
      fail(Errc::parse_error, path + ": truncated tensor data");
    for (double& d : var->val.a) {
      d = get_f64(content, off);
      off += 8;
    }
  }
}

}  // namespace rsa
