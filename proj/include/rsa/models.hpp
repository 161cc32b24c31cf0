#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rsa/encoder.hpp"
#include "rsa/sampling.hpp"

namespace rsa {

/// Complete is class 0 in every challenge so P(Complete) is always probs[0].
int num_classes(Challenge challenge);
int class_index(Challenge challenge, Label label);
const char* class_name(Challenge challenge, int index);

/// -ln(probs[target]), probability floored at 1e-12.
double cross_entropy(const std::vector<double>& probs, size_t target);

struct MultitaskLoss {
  double l_sat = 0.0;
  double l_link = 0.0;
  double lambda = 0.5;
  double total = 0.0;
};

inline MultitaskLoss combine_multitask(double l_sat, double l_link, double lambda) {
  return {l_sat, l_link, lambda, l_sat + lambda * l_link};
}

/// Pooled-vector classification head: d_in -> d_hidden -> classes with GELU.
struct HeadParams {
  nn::Var w1, b1, w2, b2;

  static HeadParams init(size_t d_in, size_t d_hidden, size_t classes, Rng& rng);
  std::vector<std::pair<std::string, nn::Var>> named(const std::string& prefix) const;
};

nn::Var head_logits(const HeadParams& head, const nn::Var& pooled);

/// Everything a model consumes for one RD-set, tokenized once up front.
struct EncodedSample {
  TokenSequence sat;
  std::vector<std::pair<TokenSequence, bool>> links;
  TokenSequence chunks;
  int target = 0;
  Label label = Label::complete;
  std::string req_id;
  std::string provenance;
  size_t truth_dlength = 0;
};

EncodedSample encode_sample(const RdSet& rd_set, const Corpus& corpus, Challenge challenge,
                            const Vocab& vocab, size_t max_len, const Vocab* chunk_vocab,
                            size_t chunk_max_len);

std::vector<EncodedSample> encode_samples(const std::vector<RdSet>& samples, const Corpus& corpus,
                                          Challenge challenge, const Vocab& vocab, size_t max_len,
                                          const Vocab* chunk_vocab, size_t chunk_max_len);

enum class Arch { sat, msat, dsat };
const char* arch_name(Arch a);

/// Shared face of the three architectures for the trainer and the evaluator.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::vector<std::pair<std::string, nn::Var>> named_params() const = 0;
  virtual nn::Var loss_graph(const EncodedSample& sample, MultitaskLoss* parts = nullptr) = 0;
  virtual std::vector<double> predict(const EncodedSample& sample) = 0;
};

class SatModel : public Model {
 public:
  SatModel(const EncoderConfig& cfg, int classes, Rng& rng);

  std::vector<std::pair<std::string, nn::Var>> named_params() const override;
  nn::Var loss_graph(const EncodedSample& sample, MultitaskLoss* parts) override;
  std::vector<double> predict(const EncodedSample& sample) override;

  EncoderParams encoder;
  HeadParams head;
};

class MSatModel : public Model {
 public:
  MSatModel(const EncoderConfig& cfg, int classes, double lambda, Rng& rng);

  std::vector<std::pair<std::string, nn::Var>> named_params() const override;
  nn::Var loss_graph(const EncodedSample& sample, MultitaskLoss* parts) override;
  std::vector<double> predict(const EncodedSample& sample) override;

  EncoderParams encoder;  // shared by both task heads
  HeadParams sat_head;
  HeadParams link_head;   // binary linked/unlinked
  double lambda;
};

class DSatModel : public Model {
 public:
  DSatModel(const EncoderConfig& raw_cfg, const EncoderConfig& chunk_cfg, int classes, Rng& rng);

  std::vector<std::pair<std::string, nn::Var>> named_params() const override;
  nn::Var loss_graph(const EncodedSample& sample, MultitaskLoss* parts) override;
  std::vector<double> predict(const EncodedSample& sample) override;

  /// Raw and chunk hidden matrices stacked along the sequence axis:
  /// (L1+L2) × d, both inputs padded to their max_len.
  nn::Var hidden_graph(const EncodedSample& sample);

  EncoderParams raw_encoder;
  EncoderParams chunk_encoder;
  HeadParams head;
};

std::unique_ptr<Model> make_model(Arch arch, Challenge challenge, const EncoderConfig& raw_cfg,
                                  const EncoderConfig& chunk_cfg, double lambda, Rng& rng);

struct TrainConfig {
  size_t epochs = 1;
  size_t batch_size = 4;
  size_t grad_accum = 8;  // effective batch = batch_size * grad_accum = 32
  double lr = 5e-5;
  double lambda = 0.5;
  uint64_t seed = 42;
};

struct TrainLogRow {
  size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double l_sat = 0.0;
  double l_link = 0.0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  std::vector<double> valid_history;  // metric after each epoch
  double best_metric = 0.0;
  size_t best_epoch = 0;
};

/// Adam with the standard constants. Gradients accumulated on the leaves are
/// averaged over the window size passed to step().
class Adam {
 public:
  explicit Adam(std::vector<std::pair<std::string, nn::Var>> params);
  void step(double lr, size_t window_size);
  void zero_grads();

 private:
  std::vector<std::pair<std::string, nn::Var>> params_;
  std::vector<nn::Mat> m_, v_;
  size_t t_ = 0;
};

/// Validation metric used for checkpoint selection: F2 of the Complete class
/// for C1/C2, macro-F1 for C3.
double validation_metric(Model& model, const std::vector<EncodedSample>& samples,
                         Challenge challenge);

/// One-epoch-style training: gradient accumulation windows of
/// batch_size*grad_accum samples, one optimizer update per window, linear LR
/// decay to zero, best-validation checkpoint restored at the end.
TrainResult train(Model& model, const std::vector<EncodedSample>& train_set,
                  const std::vector<EncodedSample>& valid_set, Challenge challenge,
                  const TrainConfig& config);

/// Ranking score for MAP: the probability of the Complete class.
double score_for_ranking(const std::vector<double>& probs);

}  // namespace rsa
