#include "ctxrec/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ctxrec/error.hpp"
#include "ctxrec/io.hpp"
#include "ctxrec/log.hpp"
#include "parse_util.hpp"

namespace ctxrec {

std::string_view to_string(WeightProvenance p) {
    switch (p) {
        case WeightProvenance::eigen_from_judgments: return "eigen_from_judgments";
        case WeightProvenance::eigen_from_frequency: return "eigen_from_frequency";
        case WeightProvenance::external_table: return "external_table";
    }
    return "external_table";
}

std::vector<std::size_t> genre_frequencies(const Dataset& d) {
    std::vector<std::size_t> freq(d.genre_catalog().size(), 0);
    for (const auto& r : d.ratings()) {
        for (auto g : d.movie(r.item).genres) ++freq[g];
    }
    return freq;
}

int quantize_ratio(double r, ahp::Scale scale) {
    if (!(r >= 1.0)) throw DomainError(fmt::format("frequency ratio {} below 1", r));
    const int top = ahp::scale_max(scale);
    const double capped = std::min(r, static_cast<double>(top));
    if (scale == ahp::Scale::approach5) return static_cast<int>(std::lround(capped));
    const int degree = 2 * static_cast<int>(std::floor((capped - 1.0) / 2.0 + 0.5)) + 1;
    return std::min(degree, top);
}

ahp::ComparisonMatrix genre_matrix_from_frequencies(const Dataset& d, ahp::Scale scale,
                                                    std::vector<std::string>* warnings) {
    const auto& catalog = d.genre_catalog();
    if (catalog.empty()) throw PreconditionError("genre catalog is empty");
    if (d.ratings().empty()) throw PreconditionError("no ratings to count genre frequencies from");
    const auto freq = genre_frequencies(d);
    const std::size_t n = catalog.size();
    const int top = ahp::scale_max(scale);

    for (std::size_t g = 0; g < n; ++g) {
        if (freq[g] != 0) continue;
        auto msg = fmt::format("genre '{}' has no ratings; judged 1/{} against every rated genre", catalog[g], top);
        logger()->warn("{}", msg);
        if (warnings) warnings->push_back(std::move(msg));
    }

    ahp::ComparisonMatrix m(n);
    for (std::size_t g = 0; g < n; ++g) {
        for (std::size_t h = g + 1; h < n; ++h) {
            const double fg = static_cast<double>(freq[g]);
            const double fh = static_cast<double>(freq[h]);
            if (fg == fh) continue;  // includes both zero
            double degree;
            if (fh == 0) {
                degree = top;
            } else if (fg == 0) {
                degree = 1.0 / top;
            } else if (fg > fh) {
                degree = quantize_ratio(fg / fh, scale);
            } else {
                degree = 1.0 / quantize_ratio(fh / fg, scale);
            }
            if (degree != 1.0) m.set_judgment(g, h, degree);
        }
    }
    return m;
}

namespace {

std::optional<ahp::ConsistencyReport> try_consistency(const ahp::ComparisonMatrix& m, ahp::RandomIndexTable table,
                                                      std::vector<std::string>& warnings) {
    try {
        auto report = ahp::consistency(m, table);
        if (!report.acceptable) {
            warnings.push_back(fmt::format("consistency ratio {:.1f}% exceeds {:.0f}%", report.cr, ahp::kAcceptableCr));
        }
        return report;
    } catch (const DomainError&) {
        warnings.push_back(
            fmt::format("no random consistency index for order {}; consistency not reported", m.order()));
        return std::nullopt;
    }
}

GenreWeights from_matrix(const std::vector<std::string>& catalog, const ahp::ComparisonMatrix& m,
                         ahp::RandomIndexTable table, WeightProvenance provenance,
                         std::vector<std::string> warnings) {
    if (m.order() != catalog.size()) {
        throw DomainError(fmt::format("judgment matrix of order {} for {} genres", m.order(), catalog.size()));
    }
    const auto eig = ahp::principal_eigenpair(m);
    GenreWeights w;
    w.weights = eig.priorities.weights();
    w.names = catalog;
    w.normalized = true;
    w.provenance = provenance;
    w.consistency = try_consistency(m, table, warnings);
    w.raw_sum = 1.0;
    w.warnings = std::move(warnings);
    for (const auto& msg : w.warnings) logger()->warn("{}", msg);
    return w;
}

}  // namespace

GenreWeights weights_from_frequencies(const Dataset& d, ahp::Scale scale, ahp::RandomIndexTable table) {
    std::vector<std::string> warnings;
    const auto m = genre_matrix_from_frequencies(d, scale, &warnings);
    // The matrix builder already logged its own warnings.
    auto w = from_matrix(d.genre_catalog(), m, table, WeightProvenance::eigen_from_frequency, {});
    w.warnings.insert(w.warnings.begin(), warnings.begin(), warnings.end());
    return w;
}

GenreWeights weights_from_matrix(const std::vector<std::string>& catalog, const ahp::ComparisonMatrix& m,
                                 ahp::RandomIndexTable table) {
    return from_matrix(catalog, m, table, WeightProvenance::eigen_from_judgments, {});
}

GenreWeights weights_from_table(const std::vector<std::string>& catalog, std::string_view text) {
    std::vector<std::optional<double>> raw(catalog.size());
    GenreWeights w;
    std::size_t line_no = 0;
    for (auto line : io::split_lines(text)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = io::trim(line);
        if (line.empty()) continue;
        const detail::LineError where{"weights", line_no};
        const auto cut = line.find_last_of(" \t");
        if (cut == std::string_view::npos) where.fail("expected '<genre> <weight>'");
        const auto name = io::trim(line.substr(0, cut));
        const auto value = detail::parse_real(line.substr(cut + 1));
        if (!value || !(*value >= 0.0) || !std::isfinite(*value)) where.fail("weight must be a nonnegative number");
        const auto it = std::find(catalog.begin(), catalog.end(), name);
        if (it == catalog.end()) {
            w.warnings.push_back(fmt::format("weight table names unknown genre '{}'; ignored", name));
            continue;
        }
        auto& slot = raw[static_cast<std::size_t>(it - catalog.begin())];
        if (slot) where.fail(fmt::format("genre '{}' listed twice", name));
        slot = *value;
    }
    std::vector<std::string> missing;
    for (std::size_t g = 0; g < catalog.size(); ++g) {
        if (!raw[g]) missing.push_back(catalog[g]);
    }
    if (!missing.empty()) {
        throw IntegrityError(fmt::format("weight table lacks genres: {}", fmt::join(missing, ", ")));
    }
    double sum = 0;
    for (const auto& v : raw) sum += *v;
    if (!(sum > 0)) throw DomainError("weight table sums to zero");
    for (const auto& v : raw) w.weights.push_back(*v / sum);
    w.names = catalog;
    w.normalized = true;
    w.provenance = WeightProvenance::external_table;
    w.raw_sum = sum;
    if (std::abs(sum - 1.0) > 1e-9) w.warnings.push_back(fmt::format("weight table sums to {}; normalized", sum));
    for (const auto& msg : w.warnings) logger()->warn("{}", msg);
    return w;
}

GenreWeights read_weight_table(const std::vector<std::string>& catalog, const std::filesystem::path& file) {
    return weights_from_table(catalog, io::read_file(file));
}

namespace {

double score_of(const Movie& item, const GenreWeights& w, GenreAggregation aggregation, double top) {
    if (item.genres.empty() || top <= 0) return 0.0;
    double agg = 0;
    for (auto g : item.genres) {
        if (g >= w.weights.size()) throw DomainError(fmt::format("genre index {} has no weight", g));
        agg = aggregation == GenreAggregation::mean ? agg + w.weights[g] : std::max(agg, w.weights[g]);
    }
    if (aggregation == GenreAggregation::mean) agg /= static_cast<double>(item.genres.size());
    return std::clamp(agg / top, 0.0, 1.0);
}

double top_weight(const GenreWeights& w) {
    if (!w.normalized) throw DomainError("genre weights must be normalized");
    return w.weights.empty() ? 0.0 : *std::max_element(w.weights.begin(), w.weights.end());
}

}  // namespace

double genre_score(const Movie& item, const GenreWeights& w, GenreAggregation aggregation) {
    const double top = top_weight(w);
    if (item.genres.empty()) logger()->warn("item {} has no genres; genre score 0", item.id.value());
    return score_of(item, w, aggregation, top);
}

double fuse(double alpha, double cf_prediction, double genre) {
    return alpha * ((cf_prediction - 1.0) / 4.0) + (1.0 - alpha) * genre;
}

// ---------------------------------------------------------------------------

Recommender::Recommender(const Dataset& d, ContextQuery q, GenreWeights weights, RecommendConfig config)
    : source_(&d), query_(std::move(q)), weights_(std::move(weights)), config_(config) {
    if (!(config_.alpha >= 0.0 && config_.alpha <= 1.0)) {
        throw DomainError(fmt::format("alpha {} outside [0,1]", config_.alpha));
    }
    if (config_.n == 0) throw DomainError("n must be positive");
    if (weights_.weights.size() != d.genre_catalog().size()) {
        throw DomainError(fmt::format("{} genre weights for a catalog of {} genres", weights_.weights.size(),
                                      d.genre_catalog().size()));
    }
    filtered_ = prefilter(d, query_);
    matrix_ = std::make_unique<cf::RatingMatrix>(filtered_);
    predictor_ = std::make_unique<cf::Predictor>(*matrix_, config_.engine);
    active_items_ = matrix_->items();

    const double top = top_weight(weights_);
    std::size_t bare = 0;
    genre_scores_.reserve(filtered_.movies().size());
    for (const auto& m : filtered_.movies()) {
        bare += m.genres.empty();
        genre_scores_.push_back(score_of(m, weights_, config_.aggregation, top));
    }
    if (bare > 0) logger()->warn("{} items have no genres; their genre score is 0", bare);
}

RecommendationList Recommender::recommend(UserId user) const {
    if (!source_->find_user(user)) throw NotFoundError(fmt::format("unknown user {}", user.value()));
    const auto& row = matrix_->user_row(user);
    if (row.empty()) {
        throw ColdStartError(fmt::format("user {} has no ratings in context '{}'", user.value(), query_.to_string()));
    }
    if (predictor_->viable_neighbor_count(user) == 0) {
        throw ColdStartError(fmt::format("user {} shares fewer than {} co-rated items with every other user in "
                                         "context '{}'",
                                         user.value(), config_.engine.min_overlap, query_.to_string()));
    }

    std::vector<ItemId> candidates;
    std::size_t r = 0;
    for (ItemId item : active_items_) {
        while (r < row.size() && row[r].key < item.value()) ++r;
        if (r < row.size() && row[r].key == item.value()) continue;
        candidates.push_back(item);
    }
    const auto predictions = predictor_->predict(user, candidates);

    const auto movies = filtered_.movies();
    std::vector<RecommendationEntry> entries;
    entries.reserve(predictions.size());
    for (const auto& p : predictions) {
        const auto it = std::lower_bound(movies.begin(), movies.end(), p.item,
                                         [](const Movie& m, ItemId id) { return m.id < id; });
        const double g = genre_scores_[static_cast<std::size_t>(it - movies.begin())];
        entries.push_back({p.item, fuse(config_.alpha, p.value, g), p.value, g, p.support, p.fallback});
    }
    const auto keep = std::min(config_.n, entries.size());
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep), entries.end(),
                      [](const RecommendationEntry& a, const RecommendationEntry& b) {
                          if (a.fused != b.fused) return a.fused > b.fused;
                          return a.item < b.item;
                      });
    entries.resize(keep);
    return RecommendationList{user, query_, config_.n, std::move(entries)};
}

RecommendationList recommend(const Dataset& d, UserId user, const ContextQuery& q, const GenreWeights& weights,
                             const RecommendConfig& config) {
    return Recommender(d, q, weights, config).recommend(user);
}

namespace {

std::vector<std::string> genre_names(const Movie& m, const Dataset& d) {
    std::vector<std::string> out;
    for (auto g : m.genres) out.push_back(d.genre_catalog()[g]);
    return out;
}

}  // namespace

std::string format_recommendations(const RecommendationList& list, const Dataset& d) {
    std::string out = "rank\titem_id\ttitle\tfused_score\tcf_prediction\tgenre_score\tgenres\n";
    std::size_t rank = 0;
    for (const auto& e : list.entries) {
        const Movie& m = d.movie(e.item);
        fmt::format_to(std::back_inserter(out), "{}\t{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\t{}\n", ++rank, e.item.value(),
                       m.title, e.fused, e.cf, e.genre, fmt::join(genre_names(m, d), "|"));
    }
    return out;
}

std::string format_recommendations_jsonl(const RecommendationList& list, const Dataset& d) {
    std::string out;
    std::size_t rank = 0;
    for (const auto& e : list.entries) {
        const Movie& m = d.movie(e.item);
        nlohmann::ordered_json j;
        j["rank"] = ++rank;
        j["user_id"] = list.user.value();
        j["context"] = list.context.to_string();
        j["item_id"] = e.item.value();
        j["title"] = m.title;
        j["fused_score"] = e.fused;
        j["cf_prediction"] = e.cf;
        j["genre_score"] = e.genre;
        j["support"] = e.support;
        j["fallback"] = std::string(cf::to_string(e.fallback));
        j["genres"] = genre_names(m, d);
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace ctxrec
