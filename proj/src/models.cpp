#include "rsa/models.hpp"

#include <algorithm>
#include <cmath>

#include "rsa/errors.hpp"
#include "rsa/legacy.hpp"
#include "rsa/metrics.hpp"

namespace rsa {

int num_classes(Challenge challenge) { return challenge == Challenge::c3 ? 3 : 2; }

int class_index(Challenge challenge, Label label) {
  switch (label) {
    case Label::complete: return 0;
    case Label::corrupt:
      if (challenge == Challenge::c2) fail(Errc::config_error, "corrupt label in a C2 dataset");
      return 1;
    case Label::incomplete:
      if (challenge == Challenge::c1) fail(Errc::config_error, "incomplete label in a C1 dataset");
      return challenge == Challenge::c2 ? 1 : 2;
  }
  fail(Errc::config_error, "bad label");
}

const char* class_name(Challenge challenge, int index) {
  if (index == 0) return "complete";
  if (challenge == Challenge::c2) return "incomplete";
  if (index == 1) return "corrupt";
  return "incomplete";
}

double cross_entropy(const std::vector<double>& probs, size_t target) {
  if (target >= probs.size()) fail(Errc::config_error, "cross_entropy target out of range");
  return -std::log(std::max(probs[target], 1e-12));
}

HeadParams HeadParams::init(size_t d_in, size_t d_hidden, size_t classes, Rng& rng) {
  HeadParams h;
  auto randn = [&rng](size_t r, size_t c) {
    nn::Mat m(r, c);
    for (double& v : m.a) v = rng.normal() * 0.02;
    return nn::leaf(std::move(m));
  };
  h.w1 = randn(d_in, d_hidden);
  h.b1 = nn::leaf(nn::Mat(1, d_hidden));
  h.w2 = randn(d_hidden, classes);
  h.b2 = nn::leaf(nn::Mat(1, classes));
  return h;
}

std::vector<std::pair<std::string, nn::Var>> HeadParams::named(const std::string& prefix) const {
  return {{prefix + "w1", w1}, {prefix + "b1", b1}, {prefix + "w2", w2}, {prefix + "b2", b2}};
}

nn::Var head_logits(const HeadParams& head, const nn::Var& pooled) {
  using namespace nn;
  Var hidden = gelu(add_rowvec(matmul(pooled, head.w1), head.b1));
  return add_rowvec(matmul(hidden, head.w2), head.b2);
}

namespace {

std::vector<double> softmax_row(const nn::Var& logits) {
  std::vector<double> out(logits->val.cols);
  double m = *std::max_element(logits->val.a.begin(), logits->val.a.end());
  double sum = 0.0;
  for (size_t j = 0; j < out.size(); ++j) {
    out[j] = std::exp(logits->val.at(0, j) - m);
    sum += out[j];
  }
  for (double& v : out) v /= sum;
  return out;
}

TokenSequence padded(const TokenSequence& seq, size_t target_len) {
  if (seq.ids.size() > target_len)
    fail(Errc::id_out_of_range, "sequence longer than the encoder max_len");
  TokenSequence out = seq;
  out.max_len = target_len;
  out.ids.resize(target_len, Vocab::pad);
  return out;
}

}  // namespace

EncodedSample encode_sample(const RdSet& rd_set, const Corpus& corpus, Challenge challenge,
                            const Vocab& vocab, size_t max_len, const Vocab* chunk_vocab,
                            size_t chunk_max_len) {
  EncodedSample s;
  s.sat = encode_sat(rd_set, vocab, max_len);

  auto truth_it = corpus.rtm.find(rd_set.requirement.id);
  if (truth_it == corpus.rtm.end())
    fail(Errc::dangling_link, "requirement " + rd_set.requirement.id + " missing from the rtm");
  std::set<std::string> truth_ids(truth_it->second.begin(), truth_it->second.end());
  s.links = encode_link(rd_set, truth_ids, vocab, max_len);
  if (chunk_vocab) s.chunks = encode_chunks(rd_set, *chunk_vocab, chunk_max_len);

  s.target = class_index(challenge, rd_set.label);
  s.label = rd_set.label;
  s.req_id = rd_set.requirement.id;
  s.provenance = rd_set.provenance;
  s.truth_dlength = truth_it->second.size();
  return s;
}

std::vector<EncodedSample> encode_samples(const std::vector<RdSet>& samples, const Corpus& corpus,
                                          Challenge challenge, const Vocab& vocab, size_t max_len,
                                          const Vocab* chunk_vocab, size_t chunk_max_len) {
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const auto& rd : samples)
    out.push_back(encode_sample(rd, corpus, challenge, vocab, max_len, chunk_vocab, chunk_max_len));
  return out;
}

const char* arch_name(Arch a) {
  switch (a) {
    case Arch::sat: return "sat";
    case Arch::msat: return "msat";
    case Arch::dsat: return "dsat";
  }
  return "?";
}

// --- Sat -------------------------------------------------------------------

SatModel::SatModel(const EncoderConfig& cfg, int classes, Rng& rng)
    : encoder(EncoderParams::init(cfg, rng)),
      head(HeadParams::init(cfg.hidden, cfg.hidden / 2, classes, rng)) {}

std::vector<std::pair<std::string, nn::Var>> SatModel::named_params() const {
  auto out = encoder.named("encoder.");
  auto h = head.named("head.");
  out.insert(out.end(), h.begin(), h.end());
  return out;
}

nn::Var SatModel::loss_graph(const EncodedSample& sample, MultitaskLoss* parts) {
  using namespace nn;
  Var hidden = encoder_forward(sample.sat, encoder);
  Var logits = head_logits(head, take_row(hidden, 0));
  Var loss = softmax_cross_entropy(logits, sample.target);
  if (parts) *parts = combine_multitask(loss->val.at(0, 0), 0.0, 0.0);
  return loss;
}

std::vector<double> SatModel::predict(const EncodedSample& sample) {
  nn::Var hidden = encoder_forward(sample.sat, encoder);
  return softmax_row(head_logits(head, nn::take_row(hidden, 0)));
}

// --- MSat ------------------------------------------------------------------

MSatModel::MSatModel(const EncoderConfig& cfg, int classes, double lambda_, Rng& rng)
    : encoder(EncoderParams::init(cfg, rng)),
      sat_head(HeadParams::init(cfg.hidden, cfg.hidden / 2, classes, rng)),
      link_head(HeadParams::init(cfg.hidden, cfg.hidden / 2, 2, rng)),
      lambda(lambda_) {}

std::vector<std::pair<std::string, nn::Var>> MSatModel::named_params() const {
  auto out = encoder.named("encoder.");
  auto s = sat_head.named("sat_head.");
  auto l = link_head.named("link_head.");
  out.insert(out.end(), s.begin(), s.end());
  out.insert(out.end(), l.begin(), l.end());
  return out;
}

nn::Var MSatModel::loss_graph(const EncodedSample& sample, MultitaskLoss* parts) {
  using namespace nn;
  Var sat_hidden = encoder_forward(sample.sat, encoder);
  Var l_sat = softmax_cross_entropy(head_logits(sat_head, take_row(sat_hidden, 0)), sample.target);

  std::vector<Var> link_losses;
  for (const auto& [seq, linked] : sample.links) {
    Var hidden = encoder_forward(seq, encoder);
    Var logits = head_logits(link_head, take_row(hidden, 0));
    link_losses.push_back(softmax_cross_entropy(logits, linked ? 1 : 0));
  }
  Var l_link = mean_all(link_losses);
  Var total = add_scaled(l_sat, l_link, lambda);
  if (parts) *parts = combine_multitask(l_sat->val.at(0, 0), l_link->val.at(0, 0), lambda);
  return total;
}

std::vector<double> MSatModel::predict(const EncodedSample& sample) {
  nn::Var hidden = encoder_forward(sample.sat, encoder);
  return softmax_row(head_logits(sat_head, nn::take_row(hidden, 0)));
}

// --- DSat ------------------------------------------------------------------

DSatModel::DSatModel(const EncoderConfig& raw_cfg, const EncoderConfig& chunk_cfg, int classes,
                     Rng& rng)
    : raw_encoder(EncoderParams::init(raw_cfg, rng)),
      chunk_encoder(EncoderParams::init(chunk_cfg, rng)),
      head(HeadParams::init(2 * raw_cfg.hidden, raw_cfg.hidden / 2, classes, rng)) {
  if (raw_cfg.hidden != chunk_cfg.hidden)
    fail(Errc::config_error, "dual encoders must share the hidden size");
}

std::vector<std::pair<std::string, nn::Var>> DSatModel::named_params() const {
  auto out = raw_encoder.named("raw.");
  auto c = chunk_encoder.named("chunk.");
  auto h = head.named("head.");
  out.insert(out.end(), c.begin(), c.end());
  out.insert(out.end(), h.begin(), h.end());
  return out;
}

nn::Var DSatModel::hidden_graph(const EncodedSample& sample) {
  nn::Var raw_hidden = encoder_forward(padded(sample.sat, raw_encoder.cfg.max_len), raw_encoder);
  nn::Var chunk_hidden =
      encoder_forward(padded(sample.chunks, chunk_encoder.cfg.max_len), chunk_encoder);
  return nn::concat_rows(raw_hidden, chunk_hidden);
}

nn::Var DSatModel::loss_graph(const EncodedSample& sample, MultitaskLoss* parts) {
  using namespace nn;
  Var hidden = hidden_graph(sample);
  // [CLS] rows of both encoders: row 0 and the first chunk row.
  Var pooled = concat_cols({take_row(hidden, 0), take_row(hidden, raw_encoder.cfg.max_len)});
  Var loss = softmax_cross_entropy(head_logits(head, pooled), sample.target);
  if (parts) *parts = combine_multitask(loss->val.at(0, 0), 0.0, 0.0);
  return loss;
}

std::vector<double> DSatModel::predict(const EncodedSample& sample) {
  using namespace nn;
  Var hidden = hidden_graph(sample);
  Var pooled = concat_cols({take_row(hidden, 0), take_row(hidden, raw_encoder.cfg.max_len)});
  return softmax_row(head_logits(head, pooled));
}

std::unique_ptr<Model> make_model(Arch arch, Challenge challenge, const EncoderConfig& raw_cfg,
                                  const EncoderConfig& chunk_cfg, double lambda, Rng& rng) {
  int classes = num_classes(challenge);
  switch (arch) {
    case Arch::sat: return std::make_unique<SatModel>(raw_cfg, classes, rng);
    case Arch::msat: return std::make_unique<MSatModel>(raw_cfg, classes, lambda, rng);
    case Arch::dsat: return std::make_unique<DSatModel>(raw_cfg, chunk_cfg, classes, rng);
  }
  fail(Errc::config_error, "bad arch");
}

// --- optimizer & trainer -----------------------------------------------------

Adam::Adam(std::vector<std::pair<std::string, nn::Var>> params) : params_(std::move(params)) {
  for (const auto& [_, var] : params_) {
    m_.emplace_back(var->val.rows, var->val.cols);
    v_.emplace_back(var->val.rows, var->val.cols);
  }
}

void Adam::zero_grads() {
  for (auto& [_, var] : params_) var->zero_grad();
}

void Adam::step(double lr, size_t window_size) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (size_t p = 0; p < params_.size(); ++p) {
    nn::Node& node = *params_[p].second;
    node.ensure_grad();
    for (size_t i = 0; i < node.val.size(); ++i) {
      double g = node.grad.a[i] / static_cast<double>(window_size);
      m_[p].a[i] = beta1 * m_[p].a[i] + (1.0 - beta1) * g;
      v_[p].a[i] = beta2 * v_[p].a[i] + (1.0 - beta2) * g * g;
      double mhat = m_[p].a[i] / bc1;
      double vhat = v_[p].a[i] / bc2;
      node.val.a[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

double validation_metric(Model& model, const std::vector<EncodedSample>& samples,
                         Challenge challenge) {
  const int classes = num_classes(challenge);
  std::vector<ConfusionCounts> counts(classes);
  for (const auto& sample : samples) {
    std::vector<double> probs = model.predict(sample);
    int pred = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    if (pred == sample.target) {
      ++counts[pred].tp;
    } else {
      ++counts[pred].fp;
      ++counts[sample.target].fn;
    }
  }
  if (challenge == Challenge::c3) return macro_f1(counts);
  return f_beta(counts[0], 2.0);
}

TrainResult train(Model& model, const std::vector<EncodedSample>& train_set,
                  const std::vector<EncodedSample>& valid_set, Challenge challenge,
                  const TrainConfig& config) {
  if (train_set.empty()) fail(Errc::empty_split, "empty training split");
  if (valid_set.empty()) fail(Errc::empty_split, "empty validation split");

  auto params = model.named_params();
  Adam optimizer(params);
  Rng shuffle_rng(config.seed);

  const size_t window = config.batch_size * config.grad_accum;
  const size_t updates_per_epoch = (train_set.size() + window - 1) / window;
  const size_t total_updates = config.epochs * updates_per_epoch;

  TrainResult result;
  std::vector<nn::Mat> best_snapshot;
  size_t step = 0;

  std::vector<size_t> indices(train_set.size());
  for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;

  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(indices);
    for (size_t begin = 0; begin < indices.size(); begin += window) {
      size_t end = std::min(begin + window, indices.size());
      optimizer.zero_grads();
      double sum_loss = 0.0, sum_sat = 0.0, sum_link = 0.0;
      for (size_t i = begin; i < end; ++i) {
        MultitaskLoss parts;
        nn::Var loss = model.loss_graph(train_set[indices[i]], &parts);
        if (!std::isfinite(loss->val.at(0, 0)))
          fail(Errc::non_finite_loss, "non-finite loss at step " + std::to_string(step) +
                                          ", sample " + train_set[indices[i]].req_id + "/" +
                                          train_set[indices[i]].provenance);
        nn::backward(loss);
        sum_loss += parts.total;
        sum_sat += parts.l_sat;
        sum_link += parts.l_link;
      }
      double lr = config.lr * (1.0 - static_cast<double>(step) / static_cast<double>(total_updates));
      optimizer.step(lr, end - begin);
      double n = static_cast<double>(end - begin);
      result.log.push_back({step + 1, lr, sum_loss / n, sum_sat / n, sum_link / n});
      ++step;
    }

    double metric = validation_metric(model, valid_set, challenge);
    result.valid_history.push_back(metric);
    if (best_snapshot.empty() || metric > result.best_metric) {
      result.best_metric = metric;
      result.best_epoch = epoch;
      best_snapshot.clear();
      for (const auto& [_, var] : params) best_snapshot.push_back(var->val);
    }
  }

  for (size_t p = 0; p < params.size(); ++p) params[p].second->val = best_snapshot[p];
  return result;
}

double score_for_ranking(const std::vector<double>& probs) { return probs.at(0); }

}  // namespace rsa
