#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsa/corpus.hpp"

namespace rsa {

enum class Challenge { c1, c2, c3 };

const char* challenge_name(Challenge c);
Challenge challenge_from_name(const std::string& name);

struct ChallengeDataset {
  Challenge challenge = Challenge::c1;
  std::vector<RdSet> samples;
  uint64_t k = 0;     // negative-sample budget, C1/C3 only
  uint64_t seed = 0;
};

/// One Complete sample per requirement plus up to k Corrupt samples built by
/// replacing each design position in equal proportion with designs not linked
/// to that requirement (remainder goes to the earliest positions; replacements
/// are drawn without replacement per position). Throws insufficient_pool when
/// no unlinked design exists. max_replacements > 1 switches to the
/// multi-position corruption variant.
ChallengeDataset generate_c1(const Corpus& corpus, uint64_t k, uint64_t seed,
                             size_t max_replacements = 1);

/// For each requirement with n >= 2 linked designs: one Complete sample plus
/// all 2^n - 2 strict nonempty subsets labeled Incomplete. Requirements with a
/// single design are skipped entirely.
ChallengeDataset generate_c2(const Corpus& corpus);

/// Three-class hybrid: Complete + the C1 corrupt batch + the leave-one-out
/// removal batch labeled Incomplete.
ChallengeDataset generate_c3(const Corpus& corpus, uint64_t k, uint64_t seed,
                             size_t max_replacements = 1);

struct SplitSpec {
  enum class Strategy { by_requirements, by_dlength };
  Strategy strategy = Strategy::by_requirements;
  int folds = 10;
  int train_folds = 8;  // 8:1:1
  int valid_folds = 1;
  int test_folds = 1;
  uint64_t seed = 0;
};

const char* strategy_name(SplitSpec::Strategy s);
SplitSpec::Strategy strategy_from_name(const std::string& name);

struct SplitResult {
  std::vector<RdSet> train, valid, test;
};

/// Requirements are shuffled with the spec seed and dealt round-robin into
/// folds; all RD-sets of one requirement land in the same partition.
/// by_dlength applies the same procedure independently per ground-truth
/// design-count group, then merges. Throws too_few_requirements.
SplitResult split(const ChallengeDataset& dataset, const SplitSpec& spec);

/// Derived seeds base, base+1, ..., base+runs-1.
std::vector<uint64_t> repeat_with_seeds(uint64_t base_seed, size_t runs);

/// JSONL persistence: one RD-set per line,
/// {"req_id":..., "design_ids":[...], "label":..., "provenance":...}.
std::string to_jsonl(const std::vector<RdSet>& samples);
void write_jsonl(const std::string& path, const std::vector<RdSet>& samples);
std::vector<RdSet> read_jsonl(const std::string& path, const Corpus& corpus);

}  // namespace rsa
