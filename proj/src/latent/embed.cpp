#include "latent/embed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "latent/csv.hpp"
#include "latent/linalg.hpp"

namespace latent {

int builtin_embed_min_dim(const Vocabulary& vocab) {
    return static_cast<int>(vocab.slot_tokens().size()) * 7;  // counts + 6 bands
}

std::vector<double> builtin_embed(const DailyActivitySequence& seq, const Vocabulary& vocab,
                                  int dim) {
    const auto tokens = vocab.slot_tokens();
    const int m = static_cast<int>(tokens.size());
    const int n_slots = static_cast<int>(seq.slots.size());
    if (dim < builtin_embed_min_dim(vocab)) {
        throw ConfigError("embedding dimension " + std::to_string(dim) +
                          " too small; need at least " +
                          std::to_string(builtin_embed_min_dim(vocab)));
    }
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);

    // (a) token counts, L1-normalized over the day
    for (const auto& s : seq.slots) {
        int idx = vocab.slot_index(s);
        if (idx < 0) throw DomainError("token outside vocabulary: " + s);
        v[static_cast<std::size_t>(idx)] += 1.0 / n_slots;
    }
    // (b) token-by-band occupancy over six 4-hour bands
    for (int t = 0; t < n_slots; ++t) {
        int idx = vocab.slot_index(seq.slots[static_cast<std::size_t>(t)]);
        int band = t * 6 / n_slots;
        v[static_cast<std::size_t>(m + idx * 6 + band)] += 1.0 / n_slots;
    }
    // (c) hashed bigram counts in the remaining coordinates
    const int hash_dim = dim - 7 * m;
    if (hash_dim > 0 && n_slots > 1) {
        for (int t = 0; t + 1 < n_slots; ++t) {
            std::string key = seq.slots[static_cast<std::size_t>(t)];
            key += '\x1f';
            key += seq.slots[static_cast<std::size_t>(t) + 1];
            auto h = fnv1a64(key) % static_cast<std::uint64_t>(hash_dim);
            v[static_cast<std::size_t>(7 * m) + h] += 1.0 / (n_slots - 1);
        }
    }

    double norm = l2_norm(v);
    if (norm > 0.0) {
        for (auto& x : v) x /= norm;
    }
    return v;  // all-zero stays all-zero; callers flag it
}

std::vector<EmbeddingVector> import_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    CsvReader reader(in);
    CsvRow row;
    if (!reader.next(row)) throw ParseError(path + ": empty embeddings file");
    if (row.fields.size() < 3 || row.fields[0] != "participant_id" || row.fields[1] != "date") {
        throw ParseError(path + ": header must be participant_id,date,v0..v{d-1}");
    }
    const std::size_t dim = row.fields.size() - 2;
    for (std::size_t i = 0; i < dim; ++i) {
        if (row.fields[i + 2] != "v" + std::to_string(i)) {
            throw ParseError(path + ": header must be participant_id,date,v0..v{d-1}");
        }
    }
    std::vector<EmbeddingVector> out;
    while (reader.next(row)) {
        if (row.fields.size() != dim + 2) {
            throw ParseError("line " + std::to_string(row.line_no) +
                             ": dimension mismatch (expected " + std::to_string(dim) +
                             " values, got " + std::to_string(row.fields.size() - 2) + ")");
        }
        EmbeddingVector v;
        v.participant_id = row.fields[0];
        auto date = parse_date(row.fields[1]);
        if (!date) {
            throw ParseError("line " + std::to_string(row.line_no) + ": malformed date '" +
                             row.fields[1] + "'");
        }
        v.date = *date;
        v.values.resize(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            try {
                v.values[i] = std::stod(row.fields[i + 2]);
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(row.line_no) + ": malformed value '" +
                                 row.fields[i + 2] + "'");
            }
            if (!std::isfinite(v.values[i])) {
                throw ParseError("line " + std::to_string(row.line_no) +
                                 ": non-finite embedding entry");
            }
        }
        out.push_back(std::move(v));
    }
    return out;
}

void write_embeddings(const std::vector<EmbeddingVector>& vecs, const std::string& path) {
    std::string body = "participant_id,date";
    const std::size_t dim = vecs.empty() ? 0 : vecs.front().values.size();
    for (std::size_t i = 0; i < dim; ++i) body += ",v" + std::to_string(i);
    body += '\n';
    for (const auto& v : vecs) {
        body += csv_escape(v.participant_id);
        body += ',';
        body += to_string(v.date);
        for (double x : v.values) {
            body += ',';
            body += fmt_double(x);
        }
        body += '\n';
    }
    write_file_atomic(path, body);
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> eligible_positives(const std::vector<DayRef>& days,
                                            const std::vector<int>& cluster_labels,
                                            int window_days, std::size_t anchor) {
    std::vector<std::size_t> out;
    const auto& a = days[anchor];
    for (std::size_t j = 0; j < days.size(); ++j) {
        if (j == anchor) continue;
        const auto& d = days[j];
        if (d.participant_id != a.participant_id) continue;
        if (std::abs(d.date.days - a.date.days) > window_days) continue;
        if (d.date == a.date) continue;  // the anchor day itself is never a positive
        if (cluster_labels[j] != cluster_labels[anchor]) continue;
        out.push_back(j);
    }
    return out;
}

TripletSelection select_triplets(const std::vector<DayRef>& days,
                                 const std::vector<int>& cluster_labels, int window_days,
                                 std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DomainError("select_triplets: n must be positive");
    if (days.empty()) throw DomainError("select_triplets: empty corpus");
    if (days.size() != cluster_labels.size()) {
        throw DomainError("select_triplets: labels do not match corpus");
    }

    // Per-anchor positive lists; anchors lacking a positive or a negative are
    // skipped up front and counted.
    std::vector<std::vector<std::size_t>> positives(days.size());
    std::vector<std::size_t> anchors;
    TripletSelection sel;
    for (std::size_t i = 0; i < days.size(); ++i) {
        positives[i] = eligible_positives(days, cluster_labels, window_days, i);
        bool has_negative = positives[i].size() + 1 < days.size();
        if (positives[i].empty() || !has_negative) {
            ++sel.skipped_anchors;
        } else {
            anchors.push_back(i);
        }
    }
    if (anchors.empty()) return sel;

    Rng g(seed);
    sel.triplets.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        std::size_t a = anchors[uniform_below(g, anchors.size())];
        const auto& pos = positives[a];
        std::size_t p = pos[uniform_below(g, pos.size())];
        // negatives: anything that is not the anchor and not an eligible positive
        std::size_t neg;
        while (true) {
            neg = uniform_below(g, days.size());
            if (neg == a) continue;
            if (std::binary_search(pos.begin(), pos.end(), neg)) continue;
            break;
        }
        sel.triplets.push_back(Triplet{a, p, neg});
    }
    return sel;
}

double triplet_loss(const std::vector<double>& anchor, const std::vector<double>& positive,
                    const std::vector<double>& negative, double margin) {
    if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
        throw DomainError("triplet_loss: dimension mismatch");
    }
    double loss = l1_distance(anchor, positive) - l1_distance(anchor, negative) + margin;
    return std::max(0.0, loss);
}

double corpus_loss(const std::vector<Triplet>& triplets,
                   const std::vector<std::vector<double>>& vectors, double margin) {
    if (triplets.empty()) throw DomainError("corpus_loss: no triplets");
    double sum = 0.0;
    for (const auto& t : triplets) {
        if (t.anchor >= vectors.size() || t.positive >= vectors.size() ||
            t.negative >= vectors.size()) {
            throw DomainError("corpus_loss: triplet references a missing vector");
        }
        sum += triplet_loss(vectors[t.anchor], vectors[t.positive], vectors[t.negative], margin);
    }
    return sum / static_cast<double>(triplets.size());
}

}  // namespace latent
