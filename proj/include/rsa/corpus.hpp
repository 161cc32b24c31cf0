#pragma once

#include <map>
#include <string>
#include <vector>

namespace rsa {

enum class ArtifactKind { requirement, design };

struct Artifact {
  std::string id;
  std::string text;
  ArtifactKind kind = ArtifactKind::requirement;

  bool operator==(const Artifact&) const = default;
};

/// Requirements, design elements and the trace matrix binding them.
/// Immutable after load; safe for concurrent reads.
struct Corpus {
  std::map<std::string, Artifact> requirements;
  std::map<std::string, Artifact> designs;
  // requirement id -> linked design ids, file row order preserved
  std::map<std::string, std::vector<std::string>> rtm;

  bool operator==(const Corpus&) const = default;
};

enum class Label { complete, corrupt, incomplete };

const char* label_name(Label l);
Label label_from_name(const std::string& name);

/// One requirement plus an ordered set of design elements — the atomic
/// classification sample.
struct RdSet {
  Artifact requirement;
  std::vector<Artifact> designs;
  Label label = Label::complete;
  std::string provenance;

  bool operator==(const RdSet&) const = default;
};

/// Loads the three CSV files (id,text artifacts; req_id,design_id pairs)
/// and validates every Corpus invariant.
/// Throws: parse_error, duplicate_id, dangling_link.
Corpus load_corpus(const std::string& req_path, const std::string& des_path,
                   const std::string& rtm_path);

/// Inverse of load_corpus; rows written in map order so a round trip is stable.
void save_corpus(const Corpus& corpus, const std::string& req_path,
                 const std::string& des_path, const std::string& rtm_path);

/// One Complete-labeled RdSet per rtm entry, design order as listed.
std::vector<RdSet> ground_truth_rd_sets(const Corpus& corpus);

}  // namespace rsa
