#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latent/core.hpp"
#include "latent/preprocess.hpp"

namespace latent {

struct EmbeddingVector {
    std::string participant_id;
    Date date;
    std::vector<double> values;
};

/// Deterministic per-day embedding: L1-normalized slot-token counts, a
/// per-token occupancy histogram over six 4-hour bands, and hashed token
/// bigram counts in the remaining coordinates; the whole vector is
/// L2-normalized. Stands in for the external language-model encoder.
std::vector<double> builtin_embed(const DailyActivitySequence& seq, const Vocabulary& vocab,
                                  int dim);

/// Minimum dimension that fits the count and band components.
int builtin_embed_min_dim(const Vocabulary& vocab);

std::vector<EmbeddingVector> import_embeddings(const std::string& path);
void write_embeddings(const std::vector<EmbeddingVector>& vecs, const std::string& path);

// ---------------------------------------------------------------------------
// Triplet selection over a day corpus with one-hot cluster labels.

struct DayRef {
    std::string participant_id;
    Date date;
};

struct Triplet {
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
};

struct TripletSelection {
    std::vector<Triplet> triplets;
    std::size_t skipped_anchors = 0;  // days with no eligible positive (or negative)
};

/// A positive shares the anchor's participant and cluster and lies within
/// `window_days` calendar days (the anchor itself excluded); a negative is a
/// uniform draw over days violating at least one criterion. Deterministic
/// given the seed.
TripletSelection select_triplets(const std::vector<DayRef>& days,
                                 const std::vector<int>& cluster_labels, int window_days,
                                 std::size_t n, std::uint64_t seed);

/// Positions of the anchor's eligible positives; exposed so callers can audit
/// selections exhaustively.
std::vector<std::size_t> eligible_positives(const std::vector<DayRef>& days,
                                            const std::vector<int>& cluster_labels,
                                            int window_days, std::size_t anchor);

double triplet_loss(const std::vector<double>& anchor, const std::vector<double>& positive,
                    const std::vector<double>& negative, double margin);

/// Mean triplet loss over a corpus. Vector i belongs to day i.
double corpus_loss(const std::vector<Triplet>& triplets,
                   const std::vector<std::vector<double>>& vectors, double margin);

}  // namespace latent
