#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <string_view>
#include <vector>

#include "ctxrec/model.hpp"

namespace ctxrec::cf {

struct SimilarityScore {
    double value;         ///< in [-1, 1]
    std::size_t overlap;  ///< co-rated items (user measures) or co-rating users (item measure)

    friend bool operator==(const SimilarityScore&, const SimilarityScore&) = default;
};

/// Mean rating per raw id; ids without ratings have no entry.
class MeanTable {
public:
    MeanTable() = default;
    explicit MeanTable(std::vector<std::pair<std::uint32_t, double>> means);

    std::optional<double> find(std::uint32_t id) const;
    double at(std::uint32_t id) const;  ///< throws NotFoundError

private:
    std::vector<std::pair<std::uint32_t, double>> means_;  // ascending id
};

// ---------------------------------------------------------------------------
// Similarity measures over sparse rating vectors (ascending keys)

/// Centered Pearson correlation over co-rated keys, with means taken over the
/// co-rated sub-vectors. Undefined below `min_overlap` or on zero variance.
std::optional<SimilarityScore> pearson(const RatingVector& a, const RatingVector& b, std::size_t min_overlap = 2);

/// Uncentered cosine over co-rated keys. Undefined on no overlap, fewer than
/// `min_overlap` co-rated keys, or a zero-norm sub-vector.
std::optional<SimilarityScore> cosine(const RatingVector& a, const RatingVector& b, std::size_t min_overlap = 1);

/// Pearson correlation of average ranks, ranked within each co-rated sub-vector.
std::optional<SimilarityScore> spearman(const RatingVector& a, const RatingVector& b, std::size_t min_overlap = 2);

/// Item-item cosine of user-mean-centered columns (columns keyed by user).
/// `user_means` must hold each user's mean over all of that user's ratings.
std::optional<SimilarityScore> item_adjusted_cosine(const RatingVector& item_a, const RatingVector& item_b,
                                                    const MeanTable& user_means, std::size_t min_overlap = 2);

enum class Measure { pearson, cosine, spearman, item_adjusted_cosine };

std::string_view to_string(Measure m);
std::optional<Measure> measure_from_string(std::string_view s);  ///< "pearson", "cosine", "spearman", "itemcos"

inline bool is_item_based(Measure m) { return m == Measure::item_adjusted_cosine; }

// ---------------------------------------------------------------------------
// Rating matrix

/// Sparse user x item view of a dataset, with repeated ratings of one
/// (user, item) pair averaged into a single cell.
class RatingMatrix {
public:
    explicit RatingMatrix(const Dataset& d);

    const RatingVector& user_row(UserId u) const;     ///< empty for users without ratings
    const RatingVector& item_column(ItemId i) const;  ///< empty for items without ratings
    std::optional<double> rating(UserId u, ItemId i) const;

    /// Users and items with at least one rating, ascending.
    const std::vector<UserId>& users() const noexcept { return users_; }
    const std::vector<ItemId>& items() const noexcept { return items_; }

    const MeanTable& user_means() const noexcept { return user_means_; }
    const MeanTable& item_means() const noexcept { return item_means_; }
    double global_mean() const noexcept { return global_mean_; }

private:
    std::vector<RatingVector> rows_;     // parallel to users_
    std::vector<RatingVector> columns_;  // parallel to items_
    std::vector<UserId> users_;
    std::vector<ItemId> items_;
    MeanTable user_means_;
    MeanTable item_means_;
    double global_mean_ = 0.0;
};

/// Similarity between two users under a user measure, or two items under the item measure.
std::optional<SimilarityScore> user_similarity(const RatingMatrix& m, UserId a, UserId b, Measure measure,
                                               std::size_t min_overlap);
std::optional<SimilarityScore> item_similarity(const RatingMatrix& m, ItemId a, ItemId b, std::size_t min_overlap);

// ---------------------------------------------------------------------------
// Neighborhoods

template <class IdT>
struct Neighbor {
    IdT id;
    SimilarityScore score;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Neighbors ordered by descending similarity, ties by ascending id; at most k entries.
template <class IdT>
struct NeighborSet {
    IdT target;
    std::vector<Neighbor<IdT>> neighbors;
    std::size_t k = 0;
};

struct KnnOptions {
    std::size_t k = 30;
    std::size_t min_overlap = 2;
    bool exclude_negative = false;
};

template <class IdT>
bool neighbor_before(const Neighbor<IdT>& a, const Neighbor<IdT>& b) {
    if (a.score.value != b.score.value) return a.score.value > b.score.value;
    return a.id < b.id;
}

/// Top-k candidates by similarity to `target`. Candidates equal to the target,
/// with undefined similarity, or with overlap below `min_overlap` are skipped.
template <class IdT, class SimilarityFn>
NeighborSet<IdT> knn(IdT target, std::span<const IdT> candidates, SimilarityFn&& similarity_to,
                     const KnnOptions& options) {
    NeighborSet<IdT> out{target, {}, options.k};
    for (IdT c : candidates) {
        if (c == target) continue;
        const std::optional<SimilarityScore> s = similarity_to(c);
        if (!s || s->overlap < options.min_overlap) continue;
        if (options.exclude_negative && s->value < 0.0) continue;
        out.neighbors.push_back({c, *s});
    }
    const auto keep = std::min(options.k, out.neighbors.size());
    std::partial_sort(out.neighbors.begin(), out.neighbors.begin() + static_cast<std::ptrdiff_t>(keep),
                      out.neighbors.end(), neighbor_before<IdT>);
    out.neighbors.resize(keep);
    return out;
}

NeighborSet<UserId> knn_users(const RatingMatrix& m, UserId target, Measure measure, const KnnOptions& options);
NeighborSet<ItemId> knn_items(const RatingMatrix& m, ItemId target, const KnnOptions& options);

// ---------------------------------------------------------------------------
// Prediction

enum class Variant { plain, mean_centered };
enum class Fallback { none, user_mean, item_mean, global_mean };

std::string_view to_string(Variant v);
std::optional<Variant> variant_from_string(std::string_view s);  ///< "plain", "mean-centered"
std::string_view to_string(Fallback f);

struct Prediction {
    UserId user;
    ItemId item;
    double value;         ///< clamped to [1, 5]
    std::size_t support;  ///< neighbors that contributed
    Fallback fallback;
};

struct PredictOptions {
    Variant variant = Variant::mean_centered;
    /// Divide by the plain sum of similarities instead of the sum of magnitudes.
    bool signed_denominator = false;
};

/// Weighted neighbor average. plain: sum(s*r)/sum|s|; mean_centered:
/// mean(target) + sum(s*(r - mean(neighbor)))/sum|s|. Neighbors that did not
/// rate `item` are ignored. Degenerate cases fall back to the user mean,
/// then the item mean, then the global mean.
Prediction predict_user_based(const RatingMatrix& m, UserId user, ItemId item, const NeighborSet<UserId>& neighbors,
                              const PredictOptions& options = {});

/// mean(item) + sum(s(i,j)*(r_uj - mean(j)))/sum|s(i,j)| over neighbor items j
/// the user rated. Degenerate cases fall back to the item mean, then the user
/// mean, then the global mean.
Prediction predict_item_based(const RatingMatrix& m, UserId user, ItemId item, const NeighborSet<ItemId>& neighbors,
                              const PredictOptions& options = {});

// ---------------------------------------------------------------------------
// Batch prediction

struct EngineConfig {
    Measure measure = Measure::pearson;
    Variant variant = Variant::mean_centered;
    std::size_t k = 30;
    std::size_t min_overlap = 2;
    bool exclude_negative = false;
    bool signed_denominator = false;
};

/// Predicts many items for one user, reusing one similarity pass. For user
/// measures the neighborhood of each item is the k most similar users who
/// rated it; for the item measure it is the k most similar items the user rated.
class Predictor {
public:
    Predictor(const RatingMatrix& m, const EngineConfig& config);

    std::vector<Prediction> predict(UserId user, std::span<const ItemId> items) const;

    /// Users other than `user` sharing at least min_overlap co-rated items with it.
    std::size_t viable_neighbor_count(UserId user) const;

private:
    std::vector<Prediction> predict_user_based_batch(UserId user, std::span<const ItemId> items) const;
    std::vector<Prediction> predict_item_based_batch(UserId user, std::span<const ItemId> items) const;
    std::optional<SimilarityScore> cached_item_similarity(std::size_t a, std::size_t b) const;

    const RatingMatrix* matrix_;
    EngineConfig config_;
    // Dense item x item similarities (positions in matrix_->items()); only for the item measure.
    std::vector<double> item_sim_value_;
    std::vector<std::uint32_t> item_sim_overlap_;  // 0 = undefined
};

// ---------------------------------------------------------------------------
// All-pairs similarity and its cache file

struct SimilarityTriple {
    std::uint32_t a;
    std::uint32_t b;
    SimilarityScore score;

    friend bool operator==(const SimilarityTriple&, const SimilarityTriple&) = default;
};

/// Every defined similarity with a < b, sorted by (a, b). Work is split over
/// `workers` threads; the result does not depend on the split.
std::vector<SimilarityTriple> all_pairs(const RatingMatrix& m, Measure measure, std::size_t min_overlap,
                                        unsigned workers = 1);

/// Similarity cache file:
///   line 1: "ctxrec-simcache v1 measure=<name> min_overlap=<n>"
///   then one "<a>\t<b>\t<value>\t<overlap>" line per triple, value printed
///   with round-trip precision.
void write_similarity_cache(const std::filesystem::path& file, Measure measure, std::size_t min_overlap,
                            std::span<const SimilarityTriple> triples);

struct SimilarityCache {
    Measure measure;
    std::size_t min_overlap;
    std::vector<SimilarityTriple> triples;
};

SimilarityCache read_similarity_cache(const std::filesystem::path& file);

}  // namespace ctxrec::cf
