#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "rsa/errors.hpp"
#include "rsa/sampling.hpp"
#include "rsa/util.hpp"
#include "test_util.hpp"

using namespace rsa;

namespace {

/// Corpus with the given design count per requirement and a shared design
/// pool of pool_size elements (linked ids are assigned round-robin).
Corpus make_corpus(const std::vector<size_t>& dlengths, size_t pool_size) {
  Corpus corpus;
  for (size_t d = 0; d < pool_size; ++d) {
    std::string id = "D" + std::to_string(d + 1);
    corpus.designs[id] = {id, "design text " + std::to_string(d + 1), ArtifactKind::design};
  }
  size_t next = 0;
  for (size_t r = 0; r < dlengths.size(); ++r) {
    std::string id = "R" + std::to_string(r + 1);
    corpus.requirements[id] = {id, "requirement text " + std::to_string(r + 1),
                               ArtifactKind::requirement};
    for (size_t j = 0; j < dlengths[r]; ++j) {
      corpus.rtm[id].push_back("D" + std::to_string(next % pool_size + 1));
      ++next;
    }
  }
  return corpus;
}

std::set<std::vector<std::string>> design_id_sets(const std::vector<RdSet>& samples, Label label) {
  std::set<std::vector<std::string>> out;
  for (const auto& s : samples) {
    if (s.label != label) continue;
    std::vector<std::string> ids;
    for (const auto& d : s.designs) ids.push_back(d.id);
    std::sort(ids.begin(), ids.end());
    out.insert(ids);
  }
  return out;
}

size_t count_label(const std::vector<RdSet>& samples, Label label) {
  return std::count_if(samples.begin(), samples.end(),
                       [label](const RdSet& s) { return s.label == label; });
}

}  // namespace

TEST_CASE("c1 worked example: k=100 over two positions replaces each 50 times") {
  Corpus corpus = make_corpus({2}, 60);  // 58 unlinked candidates per position
  ChallengeDataset ds = generate_c1(corpus, 100, 42);
  CHECK(count_label(ds.samples, Label::complete) == 1);
  CHECK(count_label(ds.samples, Label::corrupt) == 100);

  const auto truth = corpus.rtm.at("R1");
  size_t replaced_pos0 = 0, replaced_pos1 = 0;
  for (const auto& s : ds.samples) {
    if (s.label != Label::corrupt) continue;
    REQUIRE(s.designs.size() == 2);
    if (s.designs[0].id != truth[0]) ++replaced_pos0;
    if (s.designs[1].id != truth[1]) ++replaced_pos1;
  }
  CHECK(replaced_pos0 == 50);
  CHECK(replaced_pos1 == 50);
}

TEST_CASE("c1 caps at the maximum number of distinct corruptions") {
  // 2 linked + 3 unlinked designs, so at most 2*3 = 6 distinct corruptions
  Corpus corpus = make_corpus({2}, 5);
  ChallengeDataset ds = generate_c1(corpus, 1000, 7);
  CHECK(count_label(ds.samples, Label::corrupt) == 6);

  // exhaustive enumeration oracle at exactly k = 6
  ChallengeDataset exact = generate_c1(corpus, 6, 7);
  auto got = design_id_sets(exact.samples, Label::corrupt);
  std::set<std::vector<std::string>> expected;
  const auto truth = corpus.rtm.at("R1");
  std::vector<std::string> pool = {"D3", "D4", "D5"};
  for (size_t pos = 0; pos < 2; ++pos)
    for (const auto& repl : pool) {
      std::vector<std::string> ids = truth;
      ids[pos] = repl;
      std::sort(ids.begin(), ids.end());
      expected.insert(ids);
    }
  CHECK(got == expected);
}

TEST_CASE("c1 corrupt samples keep the truth length, differ from it, and never duplicate") {
  Corpus corpus = make_corpus({3, 2, 4, 1}, 20);
  ChallengeDataset ds = generate_c1(corpus, 12, 3);
  std::map<std::string, std::set<std::vector<std::string>>> per_req;
  for (const auto& s : ds.samples) {
    const auto& truth = corpus.rtm.at(s.requirement.id);
    if (s.label == Label::complete) continue;
    REQUIRE(s.label == Label::corrupt);
    CHECK(s.designs.size() == truth.size());
    std::vector<std::string> ids;
    for (const auto& d : s.designs) ids.push_back(d.id);
    CHECK(ids != truth);
    std::sort(ids.begin(), ids.end());
    CHECK(per_req[s.requirement.id].insert(ids).second);  // no duplicates
  }
}

TEST_CASE("c1 with no unlinked design available fails") {
  Corpus corpus = make_corpus({2}, 2);  // both designs linked
  CHECK_THROWS_AS(generate_c1(corpus, 4, 1), Error);
}

TEST_CASE("c2 enumerates every strict nonempty subset") {
  Corpus corpus = make_corpus({3}, 6);
  ChallengeDataset ds = generate_c2(corpus);
  CHECK(count_label(ds.samples, Label::complete) == 1);
  CHECK(count_label(ds.samples, Label::incomplete) == 6);

  const auto truth = corpus.rtm.at("R1");
  std::set<std::vector<std::string>> expected;
  for (uint64_t mask = 1; mask < 7; ++mask) {
    std::vector<std::string> ids;
    for (size_t i = 0; i < 3; ++i)
      if (mask & (1u << i)) ids.push_back(truth[i]);
    std::sort(ids.begin(), ids.end());
    expected.insert(ids);
  }
  CHECK(design_id_sets(ds.samples, Label::incomplete) == expected);
}

TEST_CASE("c2 skips single-design requirements entirely") {
  Corpus corpus = make_corpus({1, 3}, 8);
  ChallengeDataset ds = generate_c2(corpus);
  for (const auto& s : ds.samples) CHECK(s.requirement.id != "R1");
  CHECK(ds.samples.size() == 1 + 6);
}

TEST_CASE("c2 counts match brute-force subset enumeration for n in 2..6") {
  for (size_t n = 2; n <= 6; ++n) {
    Corpus corpus = make_corpus({n}, n + 2);
    ChallengeDataset ds = generate_c2(corpus);
    size_t expected = (size_t{1} << n) - 2;
    CHECK(count_label(ds.samples, Label::incomplete) == expected);  // 2^n - 2
    CHECK(design_id_sets(ds.samples, Label::incomplete).size() == expected);
    for (const auto& s : ds.samples) {
      if (s.label != Label::incomplete) continue;
      CHECK(!s.designs.empty());
      CHECK(s.designs.size() < n);  // strict subset
    }
  }
}

TEST_CASE("c3 mixes the corrupt batch with leave-one-out removals") {
  Corpus corpus = make_corpus({3, 2}, 12);
  ChallengeDataset ds = generate_c3(corpus, 4, 5);

  auto for_req = [&](const std::string& id, Label label) {
    size_t n = 0;
    for (const auto& s : ds.samples)
      if (s.requirement.id == id && s.label == label) ++n;
    return n;
  };
  CHECK(for_req("R1", Label::complete) == 1);
  CHECK(for_req("R1", Label::corrupt) == 4);
  CHECK(for_req("R1", Label::incomplete) == 3);
  CHECK(for_req("R2", Label::complete) == 1);
  CHECK(for_req("R2", Label::corrupt) == 4);
  CHECK(for_req("R2", Label::incomplete) == 2);

  // removal batch = exactly the leave-one-out subsets
  const auto truth = corpus.rtm.at("R1");
  std::set<std::vector<std::string>> expected;
  for (size_t skip = 0; skip < truth.size(); ++skip) {
    std::vector<std::string> ids;
    for (size_t i = 0; i < truth.size(); ++i)
      if (i != skip) ids.push_back(truth[i]);
    std::sort(ids.begin(), ids.end());
    expected.insert(ids);
  }
  std::set<std::vector<std::string>> got;
  for (const auto& s : ds.samples)
    if (s.requirement.id == "R1" && s.label == Label::incomplete) {
      std::vector<std::string> ids;
      for (const auto& d : s.designs) ids.push_back(d.id);
      std::sort(ids.begin(), ids.end());
      got.insert(ids);
    }
  CHECK(got == expected);
}

TEST_CASE("c3 single-design requirement keeps its corrupt batch, removal batch empty") {
  Corpus corpus = make_corpus({1}, 6);
  ChallengeDataset ds = generate_c3(corpus, 3, 5);
  CHECK(count_label(ds.samples, Label::complete) == 1);
  CHECK(count_label(ds.samples, Label::corrupt) == 3);
  CHECK(count_label(ds.samples, Label::incomplete) == 0);
}

TEST_CASE("split by requirements: 10 requirements give exactly 8/1/1") {
  Corpus corpus = make_corpus(std::vector<size_t>(10, 2), 30);
  ChallengeDataset ds = generate_c1(corpus, 4, 9);
  SplitSpec spec;
  spec.seed = 9;
  SplitResult splits = split(ds, spec);

  auto req_ids = [](const std::vector<RdSet>& part) {
    std::set<std::string> ids;
    for (const auto& s : part) ids.insert(s.requirement.id);
    return ids;
  };
  CHECK(req_ids(splits.train).size() == 8);
  CHECK(req_ids(splits.valid).size() == 1);
  CHECK(req_ids(splits.test).size() == 1);
}

TEST_CASE("split on a cm1-shaped requirement count approximates table II") {
  Corpus corpus = make_corpus(std::vector<size_t>(155, 1), 310);
  ChallengeDataset ds = generate_c1(corpus, 2, 1);
  SplitSpec spec;
  spec.seed = 1;
  SplitResult splits = split(ds, spec);

  auto req_count = [](const std::vector<RdSet>& part) {
    std::set<std::string> ids;
    for (const auto& s : part) ids.insert(s.requirement.id);
    return ids.size();
  };
  size_t train = req_count(splits.train), valid = req_count(splits.valid),
         test = req_count(splits.test);
  CHECK(train + valid + test == 155);
  CHECK(train >= 123);
  CHECK(train <= 126);
  CHECK(valid >= 15);
  CHECK(valid <= 16);
  CHECK(test >= 15);
  CHECK(test <= 16);
}

TEST_CASE("split by dlength deals each group independently") {
  std::vector<size_t> dlengths(30, 2);
  for (size_t i = 20; i < 30; ++i) dlengths[i] = 3;
  Corpus corpus = make_corpus(dlengths, 90);
  ChallengeDataset ds = generate_c2(corpus);
  SplitSpec spec;
  spec.strategy = SplitSpec::Strategy::by_dlength;
  spec.seed = 3;
  SplitResult splits = split(ds, spec);

  auto group_counts = [&](const std::vector<RdSet>& part) {
    std::map<size_t, std::set<std::string>> by_n;
    for (const auto& s : part) by_n[corpus.rtm.at(s.requirement.id).size()].insert(s.requirement.id);
    return by_n;
  };
  auto train_groups = group_counts(splits.train);
  CHECK(train_groups[2].size() == 16);
  CHECK(train_groups[3].size() == 8);
  CHECK(group_counts(splits.valid)[2].size() == 2);
  CHECK(group_counts(splits.valid)[3].size() == 1);
  CHECK(group_counts(splits.test)[2].size() == 2);
  CHECK(group_counts(splits.test)[3].size() == 1);
}

TEST_CASE("partitions are disjoint, exhaustive, and never split a requirement") {
  Rng rng(2024);
  for (int round = 0; round < 50; ++round) {
    size_t nreqs = 10 + rng.below(30);
    std::vector<size_t> dlengths;
    for (size_t i = 0; i < nreqs; ++i) dlengths.push_back(1 + rng.below(4));
    Corpus corpus = make_corpus(dlengths, 40);
    ChallengeDataset ds = generate_c1(corpus, 3, round);
    SplitSpec spec;
    spec.seed = round * 31 + 1;
    SplitResult splits = split(ds, spec);

    CHECK(splits.train.size() + splits.valid.size() + splits.test.size() == ds.samples.size());
    std::map<std::string, int> owner;
    int part = 0;
    for (const auto* p : {&splits.train, &splits.valid, &splits.test}) {
      for (const auto& s : *p) {
        auto [it, inserted] = owner.emplace(s.requirement.id, part);
        if (!inserted) CHECK(it->second == part);
      }
      ++part;
    }
  }
}

TEST_CASE("too few requirements is an error for split-by-requirements") {
  Corpus corpus = make_corpus({2, 2, 2}, 10);
  ChallengeDataset ds = generate_c1(corpus, 2, 1);
  SplitSpec spec;
  CHECK_THROWS_AS(split(ds, spec), Error);
}

TEST_CASE("datasets are byte-for-byte deterministic in (corpus, k, seed)") {
  Corpus corpus = make_corpus({3, 2, 4, 2, 3}, 25);
  std::string a = to_jsonl(generate_c1(corpus, 10, 77).samples);
  std::string b = to_jsonl(generate_c1(corpus, 10, 77).samples);
  CHECK(a == b);
  std::string c = to_jsonl(generate_c1(corpus, 10, 78).samples);
  CHECK(a != c);
  CHECK(to_jsonl(generate_c3(corpus, 5, 3).samples) == to_jsonl(generate_c3(corpus, 5, 3).samples));
}

TEST_CASE("jsonl round trip preserves the samples") {
  Corpus corpus = make_corpus({3, 2}, 12);
  ChallengeDataset ds = generate_c3(corpus, 4, 5);
  test::TempDir dir("sampling_jsonl");
  std::string path = dir.file("samples.jsonl");
  write_jsonl(path, ds.samples);
  auto back = read_jsonl(path, corpus);
  REQUIRE(back.size() == ds.samples.size());
  for (size_t i = 0; i < back.size(); ++i) CHECK(back[i] == ds.samples[i]);
}

TEST_CASE("repeat_with_seeds is base + i") {
  CHECK(repeat_with_seeds(42, 5) == std::vector<uint64_t>{42, 43, 44, 45, 46});
  CHECK(repeat_with_seeds(7, 1) == std::vector<uint64_t>{7});
  CHECK(repeat_with_seeds(7, 3) == repeat_with_seeds(7, 3));
}

TEST_CASE("multi-replacement variant produces distinct corrupt samples") {
  Corpus corpus = make_corpus({3}, 12);
  ChallengeDataset ds = generate_c1(corpus, 8, 21, 2);
  CHECK(count_label(ds.samples, Label::corrupt) == 8);
  auto sets = design_id_sets(ds.samples, Label::corrupt);
  CHECK(sets.size() == 8);
  for (const auto& s : ds.samples) {
    if (s.label != Label::corrupt) continue;
    CHECK(s.designs.size() == 3);
  }
}
