#include "rsa/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "rsa/csv.hpp"
#include "rsa/errors.hpp"
#include "rsa/legacy.hpp"
#include "rsa/metrics.hpp"
#include "rsa/util.hpp"

namespace fs = std::filesystem;

namespace rsa {

SplitSpec::Strategy forced_strategy(Challenge challenge) {
  return challenge == Challenge::c2 ? SplitSpec::Strategy::by_dlength
                                    : SplitSpec::Strategy::by_requirements;
}

std::optional<std::string> normalize_config(ExperimentConfig& config,
                                            std::optional<SplitSpec::Strategy> requested) {
  SplitSpec::Strategy forced = forced_strategy(config.challenge);
  if (requested && *requested != forced) {
    return std::string("split strategy ") + strategy_name(*requested) + " overridden to " +
           strategy_name(forced) + " for challenge " + challenge_name(config.challenge);
  }
  return std::nullopt;
}

namespace {

bool is_legacy(const std::string& arch) {
  return arch == "legacy-rate" || arch == "legacy-score";
}

Arch arch_from_string(const std::string& arch) {
  if (arch == "sat") return Arch::sat;
  if (arch == "msat") return Arch::msat;
  if (arch == "dsat") return Arch::dsat;
  fail(Errc::config_error, "unknown arch: " + arch);
}

ChallengeDataset generate_dataset(const Corpus& corpus, const ExperimentConfig& config,
                                  uint64_t seed, std::optional<uint64_t> k) {
  switch (config.challenge) {
    case Challenge::c1:
      return generate_c1(corpus, *k, seed, config.max_replacements);
    case Challenge::c2:
      return generate_c2(corpus);
    case Challenge::c3:
      return generate_c3(corpus, *k, seed, config.max_replacements);
  }
  fail(Errc::config_error, "bad challenge");
}

struct FitArtifacts {
  std::vector<std::string> texts;       // requirement+design texts, fit partition only
  std::set<std::string> req_ids;
  std::set<std::string> design_ids;
};

FitArtifacts collect_fit_artifacts(const std::vector<RdSet>& train,
                                   const std::vector<RdSet>& valid) {
  // Gathered per artifact id (map order) so text order is stable.
  std::map<std::string, std::string> req_texts, design_texts;
  FitArtifacts fit;
  for (const auto* part : {&train, &valid}) {
    for (const auto& rd : *part) {
      req_texts[rd.requirement.id] = rd.requirement.text;
      fit.req_ids.insert(rd.requirement.id);
      for (const auto& d : rd.designs) {
        design_texts[d.id] = d.text;
        fit.design_ids.insert(d.id);
      }
    }
  }
  for (const auto& [_, text] : req_texts) fit.texts.push_back(text);
  for (const auto& [_, text] : design_texts) fit.texts.push_back(text);
  return fit;
}

/// Split-by-requirements guarantees this; the runner still asserts it so a
/// split regression cannot silently leak test requirements into the vocab or
/// idf fit.
void assert_no_test_leakage(const FitArtifacts& fit, const std::vector<RdSet>& test) {
  for (const auto& rd : test)
    if (fit.req_ids.count(rd.requirement.id))
      fail(Errc::config_error,
           "test requirement " + rd.requirement.id + " leaked into the fit partition");
}

std::vector<Chunk> chunk_documents(const FitArtifacts& fit) {
  std::vector<Chunk> docs;
  for (const auto& text : fit.texts) {
    auto cs = extract_chunks(text);
    docs.insert(docs.end(), cs.begin(), cs.end());
  }
  return docs;
}

size_t truth_dlength(const Corpus& corpus, const std::string& req_id) {
  auto it = corpus.rtm.find(req_id);
  if (it == corpus.rtm.end()) fail(Errc::dangling_link, "requirement missing from rtm: " + req_id);
  return it->second.size();
}

std::string scores_csv(const std::vector<ScoredSample>& scores, Challenge challenge) {
  std::string out = "req_id,provenance,label,dlength,score,predicted\n";
  for (const auto& s : scores) {
    std::string predicted = s.predicted < 0 ? "" : class_name(challenge, s.predicted);
    out += csv::join_row({s.req_id, s.provenance, label_name(s.label), std::to_string(s.dlength),
                          format_double(s.score), predicted});
  }
  return out;
}

std::string train_log_csv(const TrainResult& result) {
  std::string out = "step,lr,loss,l_sat,l_link\n";
  for (const auto& row : result.log)
    out += csv::join_row({std::to_string(row.step), format_double(row.lr),
                          format_double(row.loss), format_double(row.l_sat),
                          format_double(row.l_link)});
  return out;
}

}  // namespace

double calibrate_threshold(const std::vector<ScoredSample>& calibration) {
  std::set<double> uniq;
  for (const auto& s : calibration) uniq.insert(s.score);
  std::vector<double> sorted(uniq.begin(), uniq.end());

  std::vector<double> candidates;
  candidates.push_back(sorted.empty() ? 0.0 : sorted.front() - 1.0);
  for (size_t i = 0; i + 1 < sorted.size(); ++i)
    candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));

  double best_threshold = candidates.front();
  double best_f2 = -1.0;
  for (double threshold : candidates) {
    ConfusionCounts counts;
    for (const auto& s : calibration) {
      bool predicted_complete = s.score > threshold;
      bool is_complete = s.label == Label::complete;
      if (predicted_complete && is_complete) ++counts.tp;
      else if (predicted_complete) ++counts.fp;
      else if (is_complete) ++counts.fn;
    }
    double f2 = counts.tp + counts.fp + counts.fn == 0 ? 0.0 : f_beta(counts, 2.0);
    if (f2 > best_f2) {
      best_f2 = f2;
      best_threshold = threshold;
    }
  }
  return best_threshold;
}

MetricRow metrics_from_scores(const std::vector<ScoredSample>& scores, Challenge challenge,
                              bool has_predictions) {
  MetricRow row;

  std::map<std::string, RankedGroup> groups;
  for (const auto& s : scores)
    groups[s.req_id].items.emplace_back(s.score, s.label == Label::complete);
  std::vector<RankedGroup> group_list;
  group_list.reserve(groups.size());
  for (auto& [_, g] : groups) group_list.push_back(std::move(g));
  row.map = mean_average_precision(group_list);

  if (has_predictions) {
    const int classes = num_classes(challenge);
    std::vector<ConfusionCounts> counts(classes);
    for (const auto& s : scores) {
      if (s.predicted == s.target) {
        ++counts[s.predicted].tp;
      } else {
        ++counts[s.predicted].fp;
        ++counts[s.target].fn;
      }
    }
    if (challenge == Challenge::c3) row.macro_f1 = macro_f1(counts);
    else row.f_beta = f_beta(counts[0], 2.0);
  }
  return row;
}

MetricRow aggregate_rows(const std::vector<MetricRow>& rows) {
  MetricRow agg;
  if (rows.empty()) fail(Errc::config_error, "aggregate over zero rows");
  agg.challenge = rows[0].challenge;
  agg.arch = rows[0].arch;
  agg.dataset = rows[0].dataset;
  agg.seed = "mean";
  agg.k = "";
  auto mean_of = [&rows](std::optional<double> MetricRow::* field) -> std::optional<double> {
    double sum = 0.0;
    size_t n = 0;
    for (const auto& row : rows) {
      if (row.*field) {
        sum += *(row.*field);
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  agg.f_beta = mean_of(&MetricRow::f_beta);
  agg.map = mean_of(&MetricRow::map);
  agg.macro_f1 = mean_of(&MetricRow::macro_f1);
  return agg;
}

std::string metrics_csv_header() { return "challenge,arch,dataset,seed,k,f_beta,map,macro_f1\n"; }

std::string metrics_row_csv(const MetricRow& row) {
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  return csv::join_row({row.challenge, row.arch, row.dataset, row.seed, row.k, cell(row.f_beta),
                        cell(row.map), cell(row.macro_f1)});
}

void write_metrics_csv(const std::string& path, const EvalReport& report) {
  std::string out = metrics_csv_header();
  for (const auto& row : report.rows) out += metrics_row_csv(row);
  out += metrics_row_csv(report.aggregate);
  write_file(path, out);
}

RunResult run(const ExperimentConfig& config) {
  Corpus corpus = load_corpus(config.requirements_path, config.designs_path, config.rtm_path);
  std::vector<uint64_t> seeds = repeat_with_seeds(config.base_seed, config.num_seeds);

  std::vector<std::optional<uint64_t>> k_values;
  if (config.challenge == Challenge::c2) k_values.push_back(std::nullopt);
  else
    for (uint64_t k : config.ks) k_values.push_back(k);
  if (k_values.empty()) fail(Errc::config_error, "no k values configured");

  RunResult result;
  for (uint64_t seed : seeds) {
    for (const auto& k : k_values) {
      ChallengeDataset dataset = generate_dataset(corpus, config, seed, k);
      SplitSpec spec;
      spec.strategy = forced_strategy(config.challenge);
      spec.seed = seed;
      SplitResult splits = split(dataset, spec);

      fs::path cell_dir = fs::path(config.out_dir) / challenge_name(config.challenge) /
                          config.arch / ("seed-" + std::to_string(seed));
      if (k) cell_dir /= "k-" + std::to_string(*k);
      fs::create_directories(cell_dir);
      write_jsonl((cell_dir / "dataset.jsonl").string(), dataset.samples);
      write_jsonl((cell_dir / "train.jsonl").string(), splits.train);
      write_jsonl((cell_dir / "valid.jsonl").string(), splits.valid);
      write_jsonl((cell_dir / "test.jsonl").string(), splits.test);

      FitArtifacts fit = collect_fit_artifacts(splits.train, splits.valid);
      assert_no_test_leakage(fit, splits.test);

      CellResult cell;
      cell.seed = seed;
      cell.k = k;

      if (is_legacy(config.arch)) {
        LegacyMode mode = config.arch == "legacy-rate" ? LegacyMode::rate : LegacyMode::score;
        IdfTable idf = build_idf_table(chunk_documents(fit));

        auto score_set = [&](const std::vector<RdSet>& rds) {
          std::vector<ScoredSample> out;
          for (const auto& rd : rds) {
            ScoredSample s;
            s.req_id = rd.requirement.id;
            s.provenance = rd.provenance;
            s.label = rd.label;
            s.dlength = truth_dlength(corpus, rd.requirement.id);
            s.score = legacy_assess(rd, idf, mode, config.legacy_threshold);
            s.target = class_index(config.challenge, rd.label);
            out.push_back(std::move(s));
          }
          return out;
        };

        std::vector<ScoredSample> calibration = score_set(splits.train);
        std::vector<ScoredSample> valid_scored = score_set(splits.valid);
        calibration.insert(calibration.end(), valid_scored.begin(), valid_scored.end());
        cell.scores = score_set(splits.test);

        if (config.challenge != Challenge::c3) {
          double threshold = calibrate_threshold(calibration);
          for (auto& s : cell.scores) s.predicted = s.score > threshold ? 0 : 1;
        }
        cell.row = metrics_from_scores(cell.scores, config.challenge,
                                       config.challenge != Challenge::c3);
      } else {
        Arch arch = arch_from_string(config.arch);
        EncoderConfig raw_cfg = config.encoder;
        EncoderConfig chunk_cfg = config.encoder;
        chunk_cfg.max_len = config.chunk_max_len;

        Vocab vocab = build_vocab(fit.texts, raw_cfg.vocab_size);
        raw_cfg.vocab_size = vocab.size();
        save_vocab((cell_dir / "vocab.tsv").string(), vocab);

        Vocab chunk_vocab;
        const Vocab* chunk_vocab_ptr = nullptr;
        if (arch == Arch::dsat) {
          std::vector<std::string> lemma_texts;
          for (const auto& text : fit.texts) lemma_texts.push_back(chunk_lemma_text(text));
          bool any = std::any_of(lemma_texts.begin(), lemma_texts.end(),
                                 [](const std::string& t) { return !t.empty(); });
          if (any) chunk_vocab = build_vocab(lemma_texts, chunk_cfg.vocab_size);
          chunk_cfg.vocab_size = chunk_vocab.size();
          chunk_vocab_ptr = &chunk_vocab;
          save_vocab((cell_dir / "vocab_chunk.tsv").string(), chunk_vocab);
        }

        auto encode_split = [&](const std::vector<RdSet>& rds) {
          return encode_samples(rds, corpus, config.challenge, vocab, raw_cfg.max_len,
                                chunk_vocab_ptr, chunk_cfg.max_len);
        };
        std::vector<EncodedSample> train_enc = encode_split(splits.train);
        std::vector<EncodedSample> valid_enc = encode_split(splits.valid);
        std::vector<EncodedSample> test_enc = encode_split(splits.test);

        TrainConfig train_cfg = config.train;
        train_cfg.seed = seed;
        Rng init_rng(seed);
        std::unique_ptr<Model> model =
            make_model(arch, config.challenge, raw_cfg, chunk_cfg, train_cfg.lambda, init_rng);
        TrainResult trained = train(*model, train_enc, valid_enc, config.challenge, train_cfg);
        write_file((cell_dir / "train_log.csv").string(), train_log_csv(trained));
        save_tensors((cell_dir / "checkpoint.bin").string(), model->named_params());

        for (const auto& sample : test_enc) {
          std::vector<double> probs = model->predict(sample);
          ScoredSample s;
          s.req_id = sample.req_id;
          s.provenance = sample.provenance;
          s.label = sample.label;
          s.dlength = sample.truth_dlength;
          s.score = score_for_ranking(probs);
          s.predicted =
              static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
          s.target = sample.target;
          cell.scores.push_back(std::move(s));
        }
        cell.row = metrics_from_scores(cell.scores, config.challenge, true);
      }

      cell.row.challenge = challenge_name(config.challenge);
      cell.row.arch = config.arch;
      cell.row.dataset = config.dataset_name;
      cell.row.seed = std::to_string(seed);
      cell.row.k = k ? std::to_string(*k) : "";
      cell.row.train_size = splits.train.size();
      cell.row.valid_size = splits.valid.size();
      cell.row.test_size = splits.test.size();
      write_file((cell_dir / "scores.csv").string(), scores_csv(cell.scores, config.challenge));
      write_file((cell_dir / "splits.csv").string(),
                 "train,valid,test\n" + csv::join_row({std::to_string(splits.train.size()),
                                                       std::to_string(splits.valid.size()),
                                                       std::to_string(splits.test.size())}));

      result.report.rows.push_back(cell.row);
      result.cells.push_back(std::move(cell));
    }
  }

  result.report.aggregate = aggregate_rows(result.report.rows);
  fs::path report_dir = fs::path(config.out_dir) / challenge_name(config.challenge) / config.arch;
  fs::create_directories(report_dir);
  write_metrics_csv((report_dir / "metrics.csv").string(), result.report);
  return result;
}

EvalReport report_by_dlength(const RunResult& result, size_t dlength) {
  EvalReport report;
  bool any = false;
  for (const auto& cell : result.cells) {
    std::vector<ScoredSample> filtered;
    for (const auto& s : cell.scores)
      if (s.dlength == dlength) filtered.push_back(s);
    if (filtered.empty()) continue;
    any = true;
    bool has_predictions = std::all_of(filtered.begin(), filtered.end(),
                                       [](const ScoredSample& s) { return s.predicted >= 0; });
    Challenge challenge = challenge_from_name(cell.row.challenge);
    MetricRow row = metrics_from_scores(filtered, challenge, has_predictions);
    row.challenge = cell.row.challenge;
    row.arch = cell.row.arch;
    row.dataset = cell.row.dataset;
    row.seed = cell.row.seed;
    row.k = cell.row.k;
    row.test_size = filtered.size();
    report.rows.push_back(row);
  }
  if (!any)
    fail(Errc::no_such_group, "no test RD-set has design length " + std::to_string(dlength));
  report.aggregate = aggregate_rows(report.rows);
  return report;
}

// --- grid --------------------------------------------------------------------

namespace {

ExperimentConfig base_config_from_json(const nlohmann::json& j) {
  ExperimentConfig config;
  config.dataset_name = j.value("dataset_name", config.dataset_name);
  config.requirements_path = j.value("requirements", config.requirements_path);
  config.designs_path = j.value("designs", config.designs_path);
  config.rtm_path = j.value("rtm", config.rtm_path);
  if (j.contains("ks")) config.ks = j.at("ks").get<std::vector<uint64_t>>();
  config.num_seeds = j.value("seeds", config.num_seeds);
  config.base_seed = j.value("base_seed", config.base_seed);
  config.max_replacements = j.value("max_replacements", config.max_replacements);
  config.legacy_threshold = j.value("legacy_threshold", config.legacy_threshold);
  config.out_dir = j.value("out", config.out_dir);

  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    if (e.contains("preset")) config.encoder = encoder_preset(e.at("preset").get<std::string>());
    config.encoder.hidden = e.value("hidden", config.encoder.hidden);
    config.encoder.heads = e.value("heads", config.encoder.heads);
    config.encoder.layers = e.value("layers", config.encoder.layers);
    config.encoder.max_len = e.value("max_len", config.encoder.max_len);
    config.encoder.vocab_size = e.value("vocab_size", config.encoder.vocab_size);
    config.chunk_max_len = e.value("chunk_max_len", config.chunk_max_len);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    config.train.epochs = t.value("epochs", config.train.epochs);
    config.train.batch_size = t.value("batch_size", config.train.batch_size);
    config.train.grad_accum = t.value("grad_accum", config.train.grad_accum);
    config.train.lr = t.value("lr", config.train.lr);
    config.train.lambda = t.value("lambda", config.train.lambda);
  }
  return config;
}

}  // namespace

GridConfig grid_config_from_json(const nlohmann::json& j) {
  GridConfig grid;
  grid.base = base_config_from_json(j);

  grid.challenges.clear();
  if (j.contains("challenges"))
    for (const auto& c : j.at("challenges"))
      grid.challenges.push_back(challenge_from_name(c.get<std::string>()));
  else
    grid.challenges.push_back(challenge_from_name(j.value("challenge", "c1")));

  grid.archs.clear();
  if (j.contains("archs"))
    for (const auto& a : j.at("archs")) grid.archs.push_back(a.get<std::string>());
  else
    grid.archs.push_back(j.value("arch", "legacy-score"));

  std::optional<SplitSpec::Strategy> requested;
  if (j.contains("split")) requested = strategy_from_name(j.at("split").get<std::string>());
  for (Challenge c : grid.challenges) {
    ExperimentConfig probe = grid.base;
    probe.challenge = c;
    if (auto warning = normalize_config(probe, requested))
      std::cerr << "warning: " << *warning << "\n";
  }
  return grid;
}

nlohmann::ordered_json grid_config_to_json(const GridConfig& config) {
  // out_dir is intentionally not echoed: the manifest lives inside it, and a
  // rerun into a different directory must still be byte-identical.
  nlohmann::ordered_json j;
  j["dataset_name"] = config.base.dataset_name;
  j["requirements"] = config.base.requirements_path;
  j["designs"] = config.base.designs_path;
  j["rtm"] = config.base.rtm_path;
  j["challenges"] = nlohmann::ordered_json::array();
  for (Challenge c : config.challenges) j["challenges"].push_back(challenge_name(c));
  j["archs"] = config.archs;
  j["ks"] = config.base.ks;
  j["seeds"] = config.base.num_seeds;
  j["base_seed"] = config.base.base_seed;
  j["max_replacements"] = config.base.max_replacements;
  j["legacy_threshold"] = config.base.legacy_threshold;
  j["encoder"] = {{"hidden", config.base.encoder.hidden},
                  {"heads", config.base.encoder.heads},
                  {"layers", config.base.encoder.layers},
                  {"max_len", config.base.encoder.max_len},
                  {"vocab_size", config.base.encoder.vocab_size},
                  {"chunk_max_len", config.base.chunk_max_len}};
  j["train"] = {{"epochs", config.base.train.epochs},
                {"batch_size", config.base.train.batch_size},
                {"grad_accum", config.base.train.grad_accum},
                {"lr", config.base.train.lr},
                {"lambda", config.base.train.lambda}};
  return j;
}

void write_manifest(const GridConfig& config) {
  nlohmann::ordered_json echo = grid_config_to_json(config);
  nlohmann::ordered_json manifest;
  manifest["format"] = "rsa-manifest-v1";
  manifest["config"] = echo;
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a(echo.dump())));
  manifest["config_hash"] = hash;
  manifest["seeds"] = repeat_with_seeds(config.base.base_seed, config.base.num_seeds);
  fs::create_directories(config.base.out_dir);
  write_file((fs::path(config.base.out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

GridConfig grid_config_from_manifest(const std::string& manifest_path) {
  nlohmann::json manifest = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("config"))
    fail(Errc::parse_error, manifest_path + ": not a manifest");
  return grid_config_from_json(manifest.at("config"));
}

void run_grid(const GridConfig& config) {
  write_manifest(config);
  EvalReport combined;
  std::vector<MetricRow> aggregates;
  for (Challenge challenge : config.challenges) {
    for (const auto& arch : config.archs) {
      ExperimentConfig cell = config.base;
      cell.challenge = challenge;
      cell.arch = arch;
      normalize_config(cell, std::nullopt);
      RunResult result = run(cell);
      for (const auto& row : result.report.rows) combined.rows.push_back(row);
      aggregates.push_back(result.report.aggregate);
    }
  }
  std::string out = metrics_csv_header();
  for (const auto& row : combined.rows) out += metrics_row_csv(row);
  for (const auto& agg : aggregates) out += metrics_row_csv(agg);
  write_file((fs::path(config.base.out_dir) / "metrics.csv").string(), out);
}

}  // namespace rsa
