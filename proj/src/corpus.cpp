#include "rsa/corpus.hpp"

#include <set>

#include "rsa/csv.hpp"
#include "rsa/errors.hpp"
#include "rsa/util.hpp"

namespace rsa {

const char* label_name(Label l) {
  switch (l) {
    case Label::complete: return "complete";
    case Label::corrupt: return "corrupt";
    case Label::incomplete: return "incomplete";
  }
  return "?";
}

Label label_from_name(const std::string& name) {
  if (name == "complete") return Label::complete;
  if (name == "corrupt") return Label::corrupt;
  if (name == "incomplete") return Label::incomplete;
  fail(Errc::parse_error, "unknown label: " + name);
}

namespace {

std::map<std::string, Artifact> load_artifacts(const std::string& path, ArtifactKind kind) {
  auto rows = csv::parse_file(path);
  if (rows.empty()) fail(Errc::parse_error, path + ": empty file, expected header id,text");
  if (rows[0].fields.size() != 2 || rows[0].fields[0] != "id" || rows[0].fields[1] != "text")
    fail(Errc::parse_error, path + ":" + std::to_string(rows[0].line) + ": expected header id,text");

  std::map<std::string, Artifact> out;
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 2)
      fail(Errc::parse_error, path + ":" + std::to_string(row.line) + ": expected 2 fields, got " +
                                  std::to_string(row.fields.size()));
    const std::string& id = row.fields[0];
    const std::string& text = row.fields[1];
    if (id.empty())
      fail(Errc::parse_error, path + ":" + std::to_string(row.line) + ": empty id");
    if (trim(text).empty())
      fail(Errc::parse_error, path + ":" + std::to_string(row.line) + ": empty text for id " + id);
    if (out.count(id))
      fail(Errc::duplicate_id, path + ":" + std::to_string(row.line) + ": duplicate id " + id);
    out.emplace(id, Artifact{id, text, kind});
  }
  return out;
}

}  // namespace

Corpus load_corpus(const std::string& req_path, const std::string& des_path,
                   const std::string& rtm_path) {
  Corpus corpus;
  corpus.requirements = load_artifacts(req_path, ArtifactKind::requirement);
  corpus.designs = load_artifacts(des_path, ArtifactKind::design);

  auto rows = csv::parse_file(rtm_path);
  if (rows.empty()) fail(Errc::parse_error, rtm_path + ": empty file, expected header req_id,design_id");
  if (rows[0].fields.size() != 2 || rows[0].fields[0] != "req_id" || rows[0].fields[1] != "design_id")
    fail(Errc::parse_error, rtm_path + ":" + std::to_string(rows[0].line) + ": expected header req_id,design_id");

  std::set<std::pair<std::string, std::string>> seen;
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 2)
      fail(Errc::parse_error, rtm_path + ":" + std::to_string(row.line) + ": expected 2 fields");
    const std::string& req_id = row.fields[0];
    const std::string& des_id = row.fields[1];
    if (!corpus.requirements.count(req_id))
      fail(Errc::dangling_link, rtm_path + ":" + std::to_string(row.line) + ": unknown requirement id " + req_id);
    if (!corpus.designs.count(des_id))
      fail(Errc::dangling_link, rtm_path + ":" + std::to_string(row.line) + ": unknown design id " + des_id);
    if (!seen.insert({req_id, des_id}).second)
      fail(Errc::duplicate_id, rtm_path + ":" + std::to_string(row.line) + ": duplicate rtm pair " + req_id + "," + des_id);
    corpus.rtm[req_id].push_back(des_id);
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& req_path,
                 const std::string& des_path, const std::string& rtm_path) {
  auto dump_artifacts = [](const std::map<std::string, Artifact>& arts) {
    std::string out = "id,text\n";
    for (const auto& [id, a] : arts) out += csv::join_row({id, a.text});
    return out;
  };
  write_file(req_path, dump_artifacts(corpus.requirements));
  write_file(des_path, dump_artifacts(corpus.designs));

  std::string out = "req_id,design_id\n";
  for (const auto& [req_id, links] : corpus.rtm)
    for (const auto& des_id : links) out += csv::join_row({req_id, des_id});
  write_file(rtm_path, out);
}

std::vector<RdSet> ground_truth_rd_sets(const Corpus& corpus) {
  std::vector<RdSet> out;
  out.reserve(corpus.rtm.size());
  for (const auto& [req_id, links] : corpus.rtm) {
    RdSet rd;
    rd.requirement = corpus.requirements.at(req_id);
    for (const auto& des_id : links) rd.designs.push_back(corpus.designs.at(des_id));
    rd.label = Label::complete;
    rd.provenance = "truth";
    out.push_back(std::move(rd));
  }
  return out;
}

}  // namespace rsa
