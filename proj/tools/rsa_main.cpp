// rsa — requirements-satisfaction-assessment experiment harness CLI.
//
// Verbs:
//   rsa gen       generate a challenge dataset (plus optional split files)
//   rsa legacy    score RD-sets with the chunk-coverage baseline
//   rsa train     train a sat/msat/dsat model on a generated split
//   rsa eval      recompute metrics from a scores.csv (optionally per dlength)
//   rsa run-grid  full experiment sweep from a config file or manifest
//
// Exit codes: 0 success, 2 config error, 3 data error.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "rsa/csv.hpp"
#include "rsa/errors.hpp"
#include "rsa/legacy.hpp"
#include "rsa/metrics.hpp"
#include "rsa/models.hpp"
#include "rsa/runner.hpp"
#include "rsa/sampling.hpp"
#include "rsa/util.hpp"

namespace fs = std::filesystem;
using namespace rsa;

namespace {

struct CorpusArgs {
  std::string requirements, designs, rtm;

  void attach(CLI::App* app) {
    app->add_option("--requirements", requirements, "requirements CSV (id,text)")->required();
    app->add_option("--designs", designs, "design elements CSV (id,text)")->required();
    app->add_option("--rtm", rtm, "trace matrix CSV (req_id,design_id)")->required();
  }

  Corpus load() const { return load_corpus(requirements, designs, rtm); }
};

ChallengeDataset generate(const Corpus& corpus, const std::string& challenge, uint64_t k,
                          uint64_t seed, size_t max_replacements) {
  switch (challenge_from_name(challenge)) {
    case Challenge::c1: return generate_c1(corpus, k, seed, max_replacements);
    case Challenge::c2: return generate_c2(corpus);
    case Challenge::c3: return generate_c3(corpus, k, seed, max_replacements);
  }
  fail(Errc::config_error, "bad challenge");
}

int cmd_gen(const CorpusArgs& corpus_args, const std::string& challenge, uint64_t k, uint64_t seed,
            const std::string& split_name, size_t max_replacements, const std::string& out_dir) {
  Corpus corpus = corpus_args.load();
  ChallengeDataset dataset = generate(corpus, challenge, k, seed, max_replacements);
  fs::create_directories(out_dir);
  write_jsonl((fs::path(out_dir) / "dataset.jsonl").string(), dataset.samples);

  if (!split_name.empty()) {
    SplitSpec spec;
    spec.strategy = strategy_from_name(split_name);
    spec.seed = seed;
    SplitResult splits = split(dataset, spec);
    write_jsonl((fs::path(out_dir) / "train.jsonl").string(), splits.train);
    write_jsonl((fs::path(out_dir) / "valid.jsonl").string(), splits.valid);
    write_jsonl((fs::path(out_dir) / "test.jsonl").string(), splits.test);
    std::cout << "wrote " << dataset.samples.size() << " samples (train " << splits.train.size()
              << ", valid " << splits.valid.size() << ", test " << splits.test.size() << ") to "
              << out_dir << "\n";
  } else {
    std::cout << "wrote " << dataset.samples.size() << " samples to " << out_dir << "\n";
  }
  return 0;
}

int cmd_legacy(const CorpusArgs& corpus_args, const std::string& mode_name, double threshold,
               const std::string& eval_path, const std::vector<std::string>& fit_paths,
               const std::string& out_path) {
  Corpus corpus = corpus_args.load();
  LegacyMode mode = mode_name == "rate" ? LegacyMode::rate : LegacyMode::score;
  if (mode_name != "rate" && mode_name != "score")
    fail(Errc::config_error, "--mode must be rate or score");

  std::vector<RdSet> eval_set = read_jsonl(eval_path, corpus);

  // idf fit over the chunk documents of every artifact referenced by the fit
  // partitions (train+valid); falls back to the eval set when none given.
  std::vector<RdSet> fit_set;
  for (const auto& path : fit_paths) {
    auto part = read_jsonl(path, corpus);
    fit_set.insert(fit_set.end(), part.begin(), part.end());
  }
  if (fit_set.empty()) fit_set = eval_set;

  std::map<std::string, std::string> texts;
  for (const auto& rd : fit_set) {
    texts[rd.requirement.id] = rd.requirement.text;
    for (const auto& d : rd.designs) texts[d.id] = d.text;
  }
  std::vector<Chunk> docs;
  for (const auto& [_, text] : texts) {
    auto cs = extract_chunks(text);
    docs.insert(docs.end(), cs.begin(), cs.end());
  }
  IdfTable idf = build_idf_table(docs);

  std::string out = "req_id,provenance,label,score\n";
  for (const auto& rd : eval_set) {
    double score = legacy_assess(rd, idf, mode, threshold);
    out += csv::join_row(
        {rd.requirement.id, rd.provenance, label_name(rd.label), format_double(score)});
  }
  if (out_path.empty()) std::cout << out;
  else write_file(out_path, out);
  return 0;
}

int cmd_train(const CorpusArgs& corpus_args, const std::string& challenge_name_,
              const std::string& arch, const std::string& config_path,
              const std::string& data_dir, const std::string& out_dir) {
  ExperimentConfig config;
  if (!config_path.empty()) {
    auto j = nlohmann::json::parse(read_file(config_path), nullptr, false);
    if (j.is_discarded()) fail(Errc::parse_error, config_path + ": invalid JSON");
    GridConfig grid = grid_config_from_json(j);
    config = grid.base;
  }
  config.requirements_path = corpus_args.requirements;
  config.designs_path = corpus_args.designs;
  config.rtm_path = corpus_args.rtm;
  config.challenge = challenge_from_name(challenge_name_);
  config.arch = arch;

  Corpus corpus = corpus_args.load();
  std::vector<RdSet> train_set = read_jsonl((fs::path(data_dir) / "train.jsonl").string(), corpus);
  std::vector<RdSet> valid_set = read_jsonl((fs::path(data_dir) / "valid.jsonl").string(), corpus);

  std::map<std::string, std::string> texts;
  for (const auto* part : {&train_set, &valid_set})
    for (const auto& rd : *part) {
      texts[rd.requirement.id] = rd.requirement.text;
      for (const auto& d : rd.designs) texts[d.id] = d.text;
    }
  std::vector<std::string> fit_texts;
  for (const auto& [_, text] : texts) fit_texts.push_back(text);

  EncoderConfig raw_cfg = config.encoder;
  EncoderConfig chunk_cfg = config.encoder;
  chunk_cfg.max_len = config.chunk_max_len;
  Vocab vocab = build_vocab(fit_texts, raw_cfg.vocab_size);
  raw_cfg.vocab_size = vocab.size();

  Vocab chunk_vocab;
  const Vocab* chunk_ptr = nullptr;
  if (arch == "dsat") {
    std::vector<std::string> lemma_texts;
    for (const auto& t : fit_texts) lemma_texts.push_back(chunk_lemma_text(t));
    chunk_vocab = build_vocab(lemma_texts, chunk_cfg.vocab_size);
    chunk_cfg.vocab_size = chunk_vocab.size();
    chunk_ptr = &chunk_vocab;
  }

  Challenge challenge = config.challenge;
  auto train_enc = encode_samples(train_set, corpus, challenge, vocab, raw_cfg.max_len, chunk_ptr,
                                  chunk_cfg.max_len);
  auto valid_enc = encode_samples(valid_set, corpus, challenge, vocab, raw_cfg.max_len, chunk_ptr,
                                  chunk_cfg.max_len);

  Arch model_arch;
  if (arch == "sat") model_arch = Arch::sat;
  else if (arch == "msat") model_arch = Arch::msat;
  else if (arch == "dsat") model_arch = Arch::dsat;
  else fail(Errc::config_error, "unknown arch: " + arch);

  Rng rng(config.train.seed);
  auto model = make_model(model_arch, challenge, raw_cfg, chunk_cfg, config.train.lambda, rng);

  TrainResult result = train(*model, train_enc, valid_enc, challenge, config.train);

  fs::create_directories(out_dir);
  save_vocab((fs::path(out_dir) / "vocab.tsv").string(), vocab);
  if (chunk_ptr) save_vocab((fs::path(out_dir) / "vocab_chunk.tsv").string(), chunk_vocab);
  save_tensors((fs::path(out_dir) / "checkpoint.bin").string(), model->named_params());
  std::string log = "step,lr,loss,l_sat,l_link\n";
  for (const auto& row : result.log)
    log += csv::join_row({std::to_string(row.step), format_double(row.lr),
                          format_double(row.loss), format_double(row.l_sat),
                          format_double(row.l_link)});
  write_file((fs::path(out_dir) / "train_log.csv").string(), log);
  std::cout << "best validation metric " << format_double(result.best_metric) << " at epoch "
            << result.best_epoch << "\n";
  return 0;
}

int cmd_eval(const std::string& scores_path, const std::string& challenge_name_, size_t dlength,
             const std::string& out_path) {
  Challenge challenge = challenge_from_name(challenge_name_);
  auto rows = csv::parse_file(scores_path);
  if (rows.empty() || rows[0].fields.empty() || rows[0].fields[0] != "req_id")
    fail(Errc::parse_error, scores_path + ": expected a scores.csv header");

  std::vector<ScoredSample> scores;
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    if (f.size() != 6) fail(Errc::parse_error, scores_path + ": expected 6 columns");
    ScoredSample s;
    s.req_id = f[0];
    s.provenance = f[1];
    s.label = label_from_name(f[2]);
    s.dlength = std::stoul(f[3]);
    s.score = std::stod(f[4]);
    s.target = class_index(challenge, s.label);
    if (!f[5].empty()) {
      for (int c = 0; c < num_classes(challenge); ++c)
        if (f[5] == class_name(challenge, c)) s.predicted = c;
    }
    scores.push_back(std::move(s));
  }

  if (dlength > 0) {
    std::vector<ScoredSample> filtered;
    for (const auto& s : scores)
      if (s.dlength == dlength) filtered.push_back(s);
    if (filtered.empty())
      fail(Errc::no_such_group, "no scored RD-set has design length " + std::to_string(dlength));
    scores = std::move(filtered);
  }

  bool has_predictions = !scores.empty() && std::all_of(scores.begin(), scores.end(),
                                                        [](const ScoredSample& s) { return s.predicted >= 0; });
  MetricRow row = metrics_from_scores(scores, challenge, has_predictions);
  row.challenge = challenge_name_;

  std::string out = metrics_csv_header() + metrics_row_csv(row);
  if (out_path.empty()) std::cout << out;
  else write_file(out_path, out);
  return 0;
}

int cmd_run_grid(const std::string& config_path, const std::string& manifest_path,
                 const std::string& out_override) {
  GridConfig grid;
  if (!manifest_path.empty()) {
    grid = grid_config_from_manifest(manifest_path);
  } else if (!config_path.empty()) {
    auto j = nlohmann::json::parse(read_file(config_path), nullptr, false);
    if (j.is_discarded()) fail(Errc::parse_error, config_path + ": invalid JSON");
    grid = grid_config_from_json(j);
  } else {
    fail(Errc::config_error, "run-grid needs --config or --manifest");
  }
  if (!out_override.empty()) grid.base.out_dir = out_override;
  run_grid(grid);
  std::cout << "grid complete; metrics at " << (fs::path(grid.base.out_dir) / "metrics.csv").string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"requirements-satisfaction-assessment experiment harness"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a challenge dataset");
  CorpusArgs gen_corpus;
  gen_corpus.attach(gen);
  std::string gen_challenge = "c1", gen_split, gen_out = "out/gen";
  uint64_t gen_k = 100, gen_seed = 42;
  size_t gen_max_repl = 1;
  gen->add_option("--challenge", gen_challenge, "c1|c2|c3");
  gen->add_option("--k", gen_k, "negative-sample budget (c1/c3)");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--split", gen_split, "by-req|by-dlength (also writes split files)");
  gen->add_option("--max-replacements", gen_max_repl, "positions replaced per corrupt sample");
  gen->add_option("--out", gen_out, "output directory");

  // legacy
  auto* legacy = app.add_subcommand("legacy", "score RD-sets with the chunk-coverage baseline");
  CorpusArgs legacy_corpus;
  legacy_corpus.attach(legacy);
  std::string legacy_mode = "score", legacy_eval, legacy_out;
  std::vector<std::string> legacy_fit;
  double legacy_threshold = 0.5;
  legacy->add_option("--mode", legacy_mode, "rate|score");
  legacy->add_option("--threshold", legacy_threshold, "cosine coverage threshold");
  legacy->add_option("--eval", legacy_eval, "dataset.jsonl to score")->required();
  legacy->add_option("--fit", legacy_fit, "jsonl partitions for the idf fit (train, valid)");
  legacy->add_option("--out", legacy_out, "scores CSV path (stdout when omitted)");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a sat/msat/dsat model");
  CorpusArgs train_corpus;
  train_corpus.attach(train_cmd);
  std::string train_arch = "sat", train_challenge = "c1", train_config, train_data, train_out = "out/train";
  train_cmd->add_option("--arch", train_arch, "sat|msat|dsat");
  train_cmd->add_option("--challenge", train_challenge, "c1|c2|c3");
  train_cmd->add_option("--config", train_config, "config JSON (encoder/train sections)");
  train_cmd->add_option("--data", train_data, "directory with train.jsonl/valid.jsonl")->required();
  train_cmd->add_option("--out", train_out, "output directory");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "metrics from a scores.csv");
  std::string eval_scores, eval_challenge = "c1", eval_out;
  size_t eval_dlength = 0;
  eval_cmd->add_option("--scores", eval_scores, "scores.csv from a run")->required();
  eval_cmd->add_option("--challenge", eval_challenge, "c1|c2|c3");
  eval_cmd->add_option("--dlength", eval_dlength, "restrict to this ground-truth design count");
  eval_cmd->add_option("--out", eval_out, "metrics CSV path (stdout when omitted)");

  // run-grid
  auto* grid_cmd = app.add_subcommand("run-grid", "full experiment sweep");
  std::string grid_config, grid_manifest, grid_out;
  grid_cmd->add_option("--config", grid_config, "grid config JSON");
  grid_cmd->add_option("--manifest", grid_manifest, "manifest.json from a previous run");
  grid_cmd->add_option("--out", grid_out, "output directory override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*gen)
      return cmd_gen(gen_corpus, gen_challenge, gen_k, gen_seed, gen_split, gen_max_repl, gen_out);
    if (*legacy)
      return cmd_legacy(legacy_corpus, legacy_mode, legacy_threshold, legacy_eval, legacy_fit,
                        legacy_out);
    if (*train_cmd)
      return cmd_train(train_corpus, train_challenge, train_arch, train_config, train_data,
                       train_out);
    if (*eval_cmd) return cmd_eval(eval_scores, eval_challenge, eval_dlength, eval_out);
    if (*grid_cmd) return cmd_run_grid(grid_config, grid_manifest, grid_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
