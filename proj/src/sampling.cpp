#include "rsa/sampling.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "rsa/errors.hpp"
#include "rsa/util.hpp"

namespace rsa {

const char* challenge_name(Challenge c) {
  switch (c) {
    case Challenge::c1: return "c1";
    case Challenge::c2: return "c2";
    case Challenge::c3: return "c3";
  }
  return "?";
}

Challenge challenge_from_name(const std::string& name) {
  if (name == "c1") return Challenge::c1;
  if (name == "c2") return Challenge::c2;
  if (name == "c3") return Challenge::c3;
  fail(Errc::config_error, "unknown challenge: " + name);
}

const char* strategy_name(SplitSpec::Strategy s) {
  return s == SplitSpec::Strategy::by_requirements ? "by-req" : "by-dlength";
}

SplitSpec::Strategy strategy_from_name(const std::string& name) {
  if (name == "by-req" || name == "by-requirements") return SplitSpec::Strategy::by_requirements;
  if (name == "by-dlength") return SplitSpec::Strategy::by_dlength;
  fail(Errc::config_error, "unknown split strategy: " + name);
}

namespace {

RdSet make_sample(const Corpus& corpus, const std::string& req_id,
                  const std::vector<std::string>& design_ids, Label label,
                  std::string provenance) {
  RdSet rd;
  rd.requirement = corpus.requirements.at(req_id);
  for (const auto& id : design_ids) rd.designs.push_back(corpus.designs.at(id));
  rd.label = label;
  rd.provenance = std::move(provenance);
  return rd;
}

std::vector<std::string> unlinked_pool(const Corpus& corpus, const std::vector<std::string>& truth) {
  std::set<std::string> linked(truth.begin(), truth.end());
  std::vector<std::string> pool;
  for (const auto& [id, _] : corpus.designs)
    if (!linked.count(id)) pool.push_back(id);
  return pool;  // map order, already sorted
}

/// Single-position corruption: position j gets floor(k/n) replacements
/// (+1 for the first k mod n positions), each a distinct unlinked design.
void corrupt_single(const Corpus& corpus, const std::string& req_id,
                    const std::vector<std::string>& truth, uint64_t k, Rng& rng,
                    std::vector<RdSet>& out) {
  std::vector<std::string> pool = unlinked_pool(corpus, truth);
  if (pool.empty())
    fail(Errc::insufficient_pool, "no unlinked design available for requirement " + req_id);

  const uint64_t n = truth.size();
  const uint64_t base = k / n;
  const uint64_t rem = k % n;
  for (uint64_t j = 0; j < n; ++j) {
    uint64_t budget = std::min<uint64_t>(base + (j < rem ? 1 : 0), pool.size());
    std::vector<std::string> candidates = pool;
    rng.shuffle(candidates);
    for (uint64_t t = 0; t < budget; ++t) {
      std::vector<std::string> ids = truth;
      ids[j] = candidates[t];
      out.push_back(make_sample(corpus, req_id, ids, Label::corrupt,
                                "replace:pos=" + std::to_string(j) + ":with=" + candidates[t]));
    }
  }
}

/// Multi-position variant behind --max-replacements: each negative replaces
/// 1..max_repl positions; duplicates are rejected and generation stops early
/// once the combination space is exhausted.
void corrupt_multi(const Corpus& corpus, const std::string& req_id,
                   const std::vector<std::string>& truth, uint64_t k, size_t max_repl, Rng& rng,
                   std::vector<RdSet>& out) {
  std::vector<std::string> pool = unlinked_pool(corpus, truth);
  if (pool.empty())
    fail(Errc::insufficient_pool, "no unlinked design available for requirement " + req_id);

  const size_t n = truth.size();
  std::set<std::vector<std::string>> seen;
  uint64_t misses = 0;
  const uint64_t miss_limit = 50 * std::max<uint64_t>(k, 1);
  while (seen.size() < k && misses < miss_limit) {
    size_t r = 1 + static_cast<size_t>(rng.below(std::min(max_repl, n)));
    std::vector<size_t> positions(n);
    for (size_t i = 0; i < n; ++i) positions[i] = i;
    rng.shuffle(positions);
    positions.resize(r);
    std::sort(positions.begin(), positions.end());

    std::vector<std::string> ids = truth;
    std::vector<std::string> candidates = pool;
    rng.shuffle(candidates);
    std::string prov = "replace-multi:";
    for (size_t t = 0; t < r; ++t) {
      ids[positions[t]] = candidates[t % candidates.size()];
      if (t) prov += ",";
      prov += "pos=" + std::to_string(positions[t]) + ":with=" + candidates[t % candidates.size()];
    }
    std::vector<std::string> key = ids;
    std::sort(key.begin(), key.end());
    if (!seen.insert(key).second) {
      ++misses;
      continue;
    }
    out.push_back(make_sample(corpus, req_id, ids, Label::corrupt, prov));
  }
}

void removal_batch(const Corpus& corpus, const std::string& req_id,
                   const std::vector<std::string>& truth, std::vector<RdSet>& out) {
  const size_t n = truth.size();
  if (n < 2) return;  // leave-one-out of a singleton would be empty
  for (size_t j = 0; j < n; ++j) {
    std::vector<std::string> ids;
    for (size_t i = 0; i < n; ++i)
      if (i != j) ids.push_back(truth[i]);
    out.push_back(make_sample(corpus, req_id, ids, Label::incomplete,
                              "remove:pos=" + std::to_string(j)));
  }
}

}  // namespace

ChallengeDataset generate_c1(const Corpus& corpus, uint64_t k, uint64_t seed,
                             size_t max_replacements) {
  if (k < 1) fail(Errc::config_error, "c1 requires k >= 1");
  ChallengeDataset ds;
  ds.challenge = Challenge::c1;
  ds.k = k;
  ds.seed = seed;
  for (const auto& [req_id, truth] : corpus.rtm) {
    ds.samples.push_back(make_sample(corpus, req_id, truth, Label::complete, "truth"));
    Rng rng(seed ^ fnv1a(req_id));
    if (max_replacements <= 1)
      corrupt_single(corpus, req_id, truth, k, rng, ds.samples);
    else
      corrupt_multi(corpus, req_id, truth, k, max_replacements, rng, ds.samples);
  }
  return ds;
}

ChallengeDataset generate_c2(const Corpus& corpus) {
  ChallengeDataset ds;
  ds.challenge = Challenge::c2;
  for (const auto& [req_id, truth] : corpus.rtm) {
    const size_t n = truth.size();
    if (n < 2) continue;
    ds.samples.push_back(make_sample(corpus, req_id, truth, Label::complete, "truth"));
    const uint64_t full = (uint64_t{1} << n) - 1;
    for (uint64_t mask = 1; mask < full; ++mask) {
      std::vector<std::string> ids;
      std::string kept;
      for (size_t i = 0; i < n; ++i) {
        if (mask & (uint64_t{1} << i)) {
          ids.push_back(truth[i]);
          if (!kept.empty()) kept += ".";
          kept += std::to_string(i);
        }
      }
      ds.samples.push_back(
          make_sample(corpus, req_id, ids, Label::incomplete, "subset:keep=" + kept));
    }
  }
  return ds;
}

ChallengeDataset generate_c3(const Corpus& corpus, uint64_t k, uint64_t seed,
                             size_t max_replacements) {
  if (k < 1) fail(Errc::config_error, "c3 requires k >= 1");
  ChallengeDataset ds;
  ds.challenge = Challenge::c3;
  ds.k = k;
  ds.seed = seed;
  for (const auto& [req_id, truth] : corpus.rtm) {
    ds.samples.push_back(make_sample(corpus, req_id, truth, Label::complete, "truth"));
    Rng rng(seed ^ fnv1a(req_id));
    if (max_replacements <= 1)
      corrupt_single(corpus, req_id, truth, k, rng, ds.samples);
    else
      corrupt_multi(corpus, req_id, truth, k, max_replacements, rng, ds.samples);
    removal_batch(corpus, req_id, truth, ds.samples);
  }
  return ds;
}

namespace {

// Ground-truth design count per requirement, taken from the Complete sample.
std::map<std::string, size_t> truth_dlengths(const ChallengeDataset& dataset) {
  std::map<std::string, size_t> out;
  for (const auto& s : dataset.samples)
    if (s.label == Label::complete) out[s.requirement.id] = s.designs.size();
  for (const auto& s : dataset.samples)
    if (!out.count(s.requirement.id))
      fail(Errc::too_few_requirements,
           "requirement " + s.requirement.id + " has no Complete sample; cannot group by dlength");
  return out;
}

enum class Partition { train, valid, test };

Partition fold_partition(int fold, const SplitSpec& spec) {
  if (fold < spec.train_folds) return Partition::train;
  if (fold < spec.train_folds + spec.valid_folds) return Partition::valid;
  return Partition::test;
}

void deal_group(std::vector<std::string> ids, uint64_t seed, const SplitSpec& spec,
                std::map<std::string, Partition>& assignment) {
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(ids);
  for (size_t i = 0; i < ids.size(); ++i) {
    int fold = static_cast<int>(i % spec.folds);
    assignment[ids[i]] = fold_partition(fold, spec);
  }
}

}  // namespace

SplitResult split(const ChallengeDataset& dataset, const SplitSpec& spec) {
  if (spec.train_folds + spec.valid_folds + spec.test_folds != spec.folds)
    fail(Errc::config_error, "split ratio does not sum to the fold count");

  std::set<std::string> req_ids;
  for (const auto& s : dataset.samples) req_ids.insert(s.requirement.id);

  std::map<std::string, Partition> assignment;
  if (spec.strategy == SplitSpec::Strategy::by_requirements) {
    if (req_ids.size() < static_cast<size_t>(spec.folds))
      fail(Errc::too_few_requirements, "split-by-requirements needs at least " +
                                           std::to_string(spec.folds) + " requirements, got " +
                                           std::to_string(req_ids.size()));
    deal_group({req_ids.begin(), req_ids.end()}, spec.seed, spec, assignment);
  } else {
    auto dlengths = truth_dlengths(dataset);
    std::map<size_t, std::vector<std::string>> groups;
    for (const auto& id : req_ids) groups[dlengths.at(id)].push_back(id);
    for (const auto& [dlength, ids] : groups) {
      uint64_t group_seed = spec.seed ^ fnv1a("dlength:" + std::to_string(dlength));
      deal_group(ids, group_seed, spec, assignment);
    }
  }

  SplitResult result;
  for (const auto& s : dataset.samples) {
    switch (assignment.at(s.requirement.id)) {
      case Partition::train: result.train.push_back(s); break;
      case Partition::valid: result.valid.push_back(s); break;
      case Partition::test: result.test.push_back(s); break;
    }
  }
  return result;
}

std::vector<uint64_t> repeat_with_seeds(uint64_t base_seed, size_t runs) {
  if (runs < 1) fail(Errc::config_error, "need at least one run");
  std::vector<uint64_t> out(runs);
  for (size_t i = 0; i < runs; ++i) out[i] = base_seed + i;
  return out;
}

std::string to_jsonl(const std::vector<RdSet>& samples) {
  std::string out;
  for (const auto& s : samples) {
    nlohmann::ordered_json line;
    line["req_id"] = s.requirement.id;
    nlohmann::ordered_json ids = nlohmann::ordered_json::array();
    for (const auto& d : s.designs) ids.push_back(d.id);
    line["design_ids"] = ids;
    line["label"] = label_name(s.label);
    line["provenance"] = s.provenance;
    out += line.dump();
    out.push_back('\n');
  }
  return out;
}

void write_jsonl(const std::string& path, const std::vector<RdSet>& samples) {
  write_file(path, to_jsonl(samples));
}

std::vector<RdSet> read_jsonl(const std::string& path, const Corpus& corpus) {
  std::string content = read_file(path);
  std::vector<RdSet> out;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos < content.size()) {
    size_t end = content.find('\n', pos);
    if (end == std::string::npos) end = content.size();
    std::string line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail(Errc::parse_error, path + ":" + std::to_string(line_no) + ": invalid JSON");
    try {
      std::string req_id = j.at("req_id").get<std::string>();
      if (!corpus.requirements.count(req_id))
        fail(Errc::dangling_link, path + ":" + std::to_string(line_no) + ": unknown requirement " + req_id);
      RdSet rd;
      rd.requirement = corpus.requirements.at(req_id);
      for (const auto& id : j.at("design_ids")) {
        std::string des_id = id.get<std::string>();
        if (!corpus.designs.count(des_id))
          fail(Errc::dangling_link, path + ":" + std::to_string(line_no) + ": unknown design " + des_id);
        rd.designs.push_back(corpus.designs.at(des_id));
      }
      rd.label = label_from_name(j.at("label").get<std::string>());
      rd.provenance = j.value("provenance", "");
      out.push_back(std::move(rd));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::parse_error, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace rsa
