#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsa/corpus.hpp"
#include "rsa/models.hpp"
#include "rsa/sampling.hpp"

namespace rsa {

/// One experiment: a (challenge, arch) pair swept over seeds (and k for
/// C1/C3). Split strategy is normalized: C1/C3 run split-by-requirements,
/// C2 split-by-dlength.
struct ExperimentConfig {
  std::string dataset_name = "toy";
  std::string requirements_path;
  std::string designs_path;
  std::string rtm_path;

  Challenge challenge = Challenge::c1;
  std::string arch = "legacy-score";  // legacy-rate | legacy-score | sat | msat | dsat

  std::vector<uint64_t> ks = {100, 300, 500};
  size_t num_seeds = 5;
  uint64_t base_seed = 42;
  size_t max_replacements = 1;

  EncoderConfig encoder;        // raw encoder geometry; also the vocab budget
  size_t chunk_max_len = 64;    // dsat chunk encoder sequence cap
  TrainConfig train;
  double legacy_threshold = 0.5;

  std::string out_dir = "out";
};

/// Applies challenge/strategy coupling; returns a warning string when an
/// explicitly requested strategy had to be overridden.
std::optional<std::string> normalize_config(ExperimentConfig& config,
                                            std::optional<SplitSpec::Strategy> requested);

SplitSpec::Strategy forced_strategy(Challenge challenge);

struct ScoredSample {
  std::string req_id;
  std::string provenance;
  Label label = Label::complete;
  size_t dlength = 0;  // ground-truth design count of the requirement
  double score = 0.0;  // higher = more satisfied
  int predicted = -1;  // class index, -1 when the arch cannot classify
  int target = 0;
};

struct MetricRow {
  std::string challenge;
  std::string arch;
  std::string dataset;
  std::string seed;  // decimal, or "mean" for the aggregate
  std::string k;     // decimal, empty for C2 and the aggregate
  size_t train_size = 0, valid_size = 0, test_size = 0;
  std::optional<double> f_beta;
  std::optional<double> map;
  std::optional<double> macro_f1;
};

struct CellResult {
  uint64_t seed = 0;
  std::optional<uint64_t> k;
  std::vector<ScoredSample> scores;  // test split, input order
  MetricRow row;
};

struct EvalReport {
  std::vector<MetricRow> rows;
  MetricRow aggregate;
};

struct RunResult {
  EvalReport report;
  std::vector<CellResult> cells;
};

/// Metrics for one cell's scored test samples. MAP groups per requirement;
/// F2 of the Complete class for C1/C2; macro-F1 for C3 when class predictions
/// exist.
MetricRow metrics_from_scores(const std::vector<ScoredSample>& scores, Challenge challenge,
                              bool has_predictions);

MetricRow aggregate_rows(const std::vector<MetricRow>& rows);

/// Threshold maximizing F2 of the Complete class over calibration scores
/// (predict Complete iff score > threshold); lowest threshold wins ties.
double calibrate_threshold(const std::vector<ScoredSample>& calibration);

/// Runs the full seed×k grid for one config and persists datasets, scores,
/// checkpoints and metrics under out_dir.
RunResult run(const ExperimentConfig& config);

/// Restrict a C2 run to test RD-sets whose ground-truth design count equals
/// dlength. Throws no_such_group when the dlength never occurs.
EvalReport report_by_dlength(const RunResult& result, size_t dlength);

void write_metrics_csv(const std::string& path, const EvalReport& report);
std::string metrics_csv_header();
std::string metrics_row_csv(const MetricRow& row);

// --- grid ------------------------------------------------------------------

/// Multi-experiment sweep: the config carries lists of challenges and archs;
/// everything else is shared. Parsed from JSON (see config_to_json for the
/// schema), CLI flags override file values.
struct GridConfig {
  ExperimentConfig base;
  std::vector<Challenge> challenges = {Challenge::c1};
  std::vector<std::string> archs = {"legacy-score"};
};

GridConfig grid_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json grid_config_to_json(const GridConfig& config);

/// Runs every challenge×arch cell, writes out/metrics.csv plus a manifest
/// that reproduces the run byte-for-byte.
void run_grid(const GridConfig& config);

void write_manifest(const GridConfig& config);
GridConfig grid_config_from_manifest(const std::string& manifest_path);

}  // namespace rsa
