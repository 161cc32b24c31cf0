#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "rsa/chunker.hpp"
#include "rsa/corpus.hpp"

namespace rsa {

/// lemma -> non-negative weight; zero weights are never stored.
struct SparseTermVector {
  std::map<std::string, double> entries;
};

/// idf(t) = ln(num_docs / df(t)), each chunk counted as one document.
/// Terms absent from the table are treated as df = 1.
struct IdfTable {
  std::map<std::string, double> scores;
  size_t num_docs = 0;

  double idf(const std::string& lemma) const;
};

struct CoverageResult {
  std::set<size_t> covered;
  double coverage_rate = 0.0;
  double coverage_score = 1.0;
};

/// Standard cosine over shared lemma dimensions. Throws zero_vector if
/// either vector has zero norm.
double cosine(const SparseTermVector& a, const SparseTermVector& b);

SparseTermVector term_vector(const Chunk& chunk, const IdfTable* idf_weights = nullptr);

/// Requirement chunk i is covered iff its best cosine against any design
/// chunk is strictly above the threshold. Zero-norm pairs count as 0.
std::set<size_t> covered_chunks(const std::vector<Chunk>& req_chunks,
                                const std::vector<Chunk>& design_chunks, double threshold,
                                const IdfTable* idf_weights = nullptr);

/// |covered| / total. Throws no_chunks when total == 0.
double coverage_rate(size_t covered, size_t total);

/// Throws empty_corpus on an empty document list.
IdfTable build_idf_table(const std::vector<Chunk>& chunk_docs);

/// Numerically stable (max-subtracted) softmax; output sums to 1.
std::vector<double> softmax(const std::vector<double>& xs);

/// exp of the softmax mass carried by the covered chunks; always in [1, e].
double coverage_score(const std::vector<double>& req_chunk_idfs, const std::set<size_t>& covered);

enum class LegacyMode { rate, score };

/// Chunk idf = sum of the lemma idfs of its members.
double chunk_idf(const Chunk& chunk, const IdfTable& idf);

/// End-to-end score of one RD-set: Rate mode uses raw-count vectors and
/// returns the coverage rate; Score mode uses idf-weighted vectors and
/// returns the coverage score. Higher = more satisfied.
double legacy_assess(const RdSet& rd_set, const IdfTable& idf, LegacyMode mode,
                     double threshold = 0.5, const Lexicon& lexicon = Lexicon::builtin());

}  // namespace rsa
