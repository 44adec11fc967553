#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctxrec/ahp.hpp"
#include "ctxrec/cf.hpp"
#include "ctxrec/contextfilter.hpp"
#include "ctxrec/model.hpp"

namespace ctxrec {

// ---------------------------------------------------------------------------
// Genre weights

enum class WeightProvenance { eigen_from_judgments, eigen_from_frequency, external_table };

std::string_view to_string(WeightProvenance p);

/// One weight per genre of a dataset's catalog, in catalog order.
struct GenreWeights {
    std::vector<double> weights;
    std::vector<std::string> names;
    bool normalized = true;
    WeightProvenance provenance = WeightProvenance::external_table;
    /// Present when derived from a matrix whose order the random index table covers.
    std::optional<ahp::ConsistencyReport> consistency;
    /// Sum of the weights before normalization (1 for eigenvectors).
    double raw_sum = 1.0;
    std::vector<std::string> warnings;
};

/// Per catalog genre, the number of ratings whose item carries it.
std::vector<std::size_t> genre_frequencies(const Dataset& d);

/// Pairwise matrix of quantized frequency ratios. For f(g) >= f(h) > 0 the
/// ratio r = f(g)/f(h) becomes round(min(r, 5)) on approach5 and the nearest
/// odd degree (ties up, at most 9) on saaty9. A genre with zero frequency is
/// judged 1/scale_max against every rated genre. Warnings go to `warnings`
/// when given. Throws PreconditionError on an empty catalog or no ratings.
ahp::ComparisonMatrix genre_matrix_from_frequencies(const Dataset& d, ahp::Scale scale,
                                                    std::vector<std::string>* warnings = nullptr);

/// Degree for a frequency ratio r >= 1 under the rule above.
int quantize_ratio(double r, ahp::Scale scale);

GenreWeights weights_from_frequencies(const Dataset& d, ahp::Scale scale = ahp::Scale::approach5,
                                      ahp::RandomIndexTable table = ahp::RandomIndexTable::extended);

/// Principal eigenvector of a judgment matrix over the catalog genres.
/// Throws DomainError when the order differs from the catalog size.
GenreWeights weights_from_matrix(const std::vector<std::string>& catalog, const ahp::ComparisonMatrix& m,
                                 ahp::RandomIndexTable table = ahp::RandomIndexTable::extended);

/// Table text: one "<genre name> <weight>" line per genre (the last token is
/// the weight), '#' comments. Weights are normalized and a raw sum other than
/// 1 is logged. Throws IntegrityError when a catalog genre is missing.
GenreWeights weights_from_table(const std::vector<std::string>& catalog, std::string_view text);
GenreWeights read_weight_table(const std::vector<std::string>& catalog, const std::filesystem::path& file);

enum class GenreAggregation { mean, max };

/// Mean (or max) of the item's genre weights over the largest weight in the
/// table, so a pure top-genre item scores 1. Items without genres score 0
/// with a warning. Throws DomainError when `w` is not normalized.
double genre_score(const Movie& item, const GenreWeights& w, GenreAggregation aggregation = GenreAggregation::mean);

// ---------------------------------------------------------------------------
// Recommendation

struct RecommendConfig {
    cf::EngineConfig engine;
    double alpha = 0.7;
    std::size_t n = 10;
    GenreAggregation aggregation = GenreAggregation::mean;
};

struct RecommendationEntry {
    ItemId item;
    double fused;         ///< alpha * (cf - 1) / 4 + (1 - alpha) * genre
    double cf;            ///< predicted rating in [1, 5]
    double genre;         ///< genre score in [0, 1]
    std::size_t support;  ///< CF neighbors behind the prediction
    cf::Fallback fallback;
};

struct RecommendationList {
    UserId user;
    ContextQuery context;
    std::size_t n = 0;
    std::vector<RecommendationEntry> entries;  ///< descending fused, ties by ascending item id
};

/// alpha * (cf - 1) / 4 + (1 - alpha) * genre.
double fuse(double alpha, double cf_prediction, double genre);

/// Pre-filters once and keeps the rating matrix and predictor for repeated
/// per-user requests. Safe to share across threads once built.
class Recommender {
public:
    /// Throws DomainError for alpha outside [0,1], n = 0, or weights that do
    /// not cover the catalog.
    Recommender(const Dataset& d, ContextQuery q, GenreWeights weights, RecommendConfig config);

    /// Throws NotFoundError for users outside the catalog and ColdStartError
    /// when the filtered corpus leaves the user without ratings or without
    /// any neighbor sharing min_overlap co-rated items.
    RecommendationList recommend(UserId user) const;

    const Dataset& corpus() const noexcept { return filtered_; }
    const RecommendConfig& config() const noexcept { return config_; }
    const GenreWeights& weights() const noexcept { return weights_; }

private:
    const Dataset* source_;
    ContextQuery query_;
    GenreWeights weights_;
    RecommendConfig config_;
    Dataset filtered_;
    std::unique_ptr<cf::RatingMatrix> matrix_;
    std::unique_ptr<cf::Predictor> predictor_;
    std::vector<ItemId> active_items_;
    std::vector<double> genre_scores_;  // parallel to filtered_.movies()
};

RecommendationList recommend(const Dataset& d, UserId user, const ContextQuery& q, const GenreWeights& weights,
                             const RecommendConfig& config = {});

/// Tab-separated with a header row: rank, item_id, title, fused_score,
/// cf_prediction, genre_score, genres ('|'-joined).
std::string format_recommendations(const RecommendationList& list, const Dataset& d);

/// One JSON object per entry with the same fields.
std::string format_recommendations_jsonl(const RecommendationList& list, const Dataset& d);

}  // namespace ctxrec
