#include "rsa/legacy.hpp"

#include <algorithm>
#include <cmath>

#include "rsa/errors.hpp"

namespace rsa {

double IdfTable::idf(const std::string& lemma) const {
  auto it = scores.find(lemma);
  if (it != scores.end()) return it->second;
  return std::log(static_cast<double>(num_docs));  // unseen term: df treated as 1
}

namespace {

double norm(const SparseTermVector& v) {
  double s = 0.0;
  for (const auto& [_, w] : v.entries) s += w * w;
  return std::sqrt(s);
}

double dot(const SparseTermVector& a, const SparseTermVector& b) {
  const auto& small = a.entries.size() <= b.entries.size() ? a : b;
  const auto& large = a.entries.size() <= b.entries.size() ? b : a;
  double s = 0.0;
  for (const auto& [term, w] : small.entries) {
    auto it = large.entries.find(term);
    if (it != large.entries.end()) s += w * it->second;
  }
  return s;
}

}  // namespace

double cosine(const SparseTermVector& a, const SparseTermVector& b) {
  double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) fail(Errc::zero_vector, "cosine of zero-norm vector");
  return dot(a, b) / (na * nb);
}

SparseTermVector term_vector(const Chunk& chunk, const IdfTable* idf_weights) {
  SparseTermVector v;
  for (const auto& lemma : chunk.lemmas) {
    double w = idf_weights ? idf_weights->idf(lemma) : 1.0;
    if (w != 0.0) v.entries[lemma] += w;
  }
  // drop entries that cancelled to zero (idf can be exactly 0)
  for (auto it = v.entries.begin(); it != v.entries.end();) {
    if (it->second == 0.0) it = v.entries.erase(it);
    else ++it;
  }
  return v;
}

std::set<size_t> covered_chunks(const std::vector<Chunk>& req_chunks,
                                const std::vector<Chunk>& design_chunks, double threshold,
                                const IdfTable* idf_weights) {
  std::vector<SparseTermVector> design_vecs;
  design_vecs.reserve(design_chunks.size());
  for (const auto& c : design_chunks) design_vecs.push_back(term_vector(c, idf_weights));

  std::set<size_t> covered;
  for (size_t i = 0; i < req_chunks.size(); ++i) {
    SparseTermVector rv = term_vector(req_chunks[i], idf_weights);
    double rn = norm(rv);
    if (rn == 0.0) continue;
    for (const auto& dv : design_vecs) {
      double dn = norm(dv);
      if (dn == 0.0) continue;
      if (dot(rv, dv) / (rn * dn) > threshold) {
        covered.insert(i);
        break;
      }
    }
  }
  return covered;
}

double coverage_rate(size_t covered, size_t total) {
  if (total == 0) fail(Errc::no_chunks, "coverage rate over zero requirement chunks");
  return static_cast<double>(covered) / static_cast<double>(total);
}

IdfTable build_idf_table(const std::vector<Chunk>& chunk_docs) {
  if (chunk_docs.empty()) fail(Errc::empty_corpus, "idf over empty chunk-document list");
  std::map<std::string, size_t> df;
  for (const auto& doc : chunk_docs) {
    std::set<std::string> uniq(doc.lemmas.begin(), doc.lemmas.end());
    for (const auto& lemma : uniq) ++df[lemma];
  }
  IdfTable table;
  table.num_docs = chunk_docs.size();
  double n = static_cast<double>(table.num_docs);
  for (const auto& [lemma, count] : df)
    table.scores[lemma] = std::log(n / static_cast<double>(count));
  return table;
}

std::vector<double> softmax(const std::vector<double>& xs) {
  double m = *std::max_element(xs.begin(), xs.end());
  std::vector<double> out(xs.size());
  double sum = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    out[i] = std::exp(xs[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double coverage_score(const std::vector<double>& req_chunk_idfs, const std::set<size_t>& covered) {
  if (req_chunk_idfs.empty()) fail(Errc::no_chunks, "coverage score over zero requirement chunks");
  std::vector<double> probs = softmax(req_chunk_idfs);
  double mass = 0.0;
  for (size_t idx : covered) mass += probs.at(idx);
  return std::exp(mass);
}

double chunk_idf(const Chunk& chunk, const IdfTable& idf) {
  double s = 0.0;
  for (const auto& lemma : chunk.lemmas) s += idf.idf(lemma);
  return s;
}

double legacy_assess(const RdSet& rd_set, const IdfTable& idf, LegacyMode mode, double threshold,
                     const Lexicon& lexicon) {
  std::vector<Chunk> req_chunks = extract_chunks(rd_set.requirement.text, rd_set.requirement.id, lexicon);
  if (req_chunks.empty())
    fail(Errc::no_chunks, "requirement " + rd_set.requirement.id + " has no extractable chunks");

  std::vector<Chunk> design_chunks;
  for (const auto& d : rd_set.designs) {
    auto cs = extract_chunks(d.text, d.id, lexicon);
    design_chunks.insert(design_chunks.end(), cs.begin(), cs.end());
  }

  const IdfTable* weights = mode == LegacyMode::score ? &idf : nullptr;
  std::set<size_t> covered = covered_chunks(req_chunks, design_chunks, threshold, weights);

  if (mode == LegacyMode::rate) return coverage_rate(covered.size(), req_chunks.size());

  std::vector<double> idfs;
  idfs.reserve(req_chunks.size());
  for (const auto& c : req_chunks) idfs.push_back(chunk_idf(c, idf));
  return coverage_score(idfs, covered);
}

}  // namespace rsa
