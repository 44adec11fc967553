#include "ctxrec/cf.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include <fmt/format.h>

#include "ctxrec/error.hpp"
#include "ctxrec/io.hpp"
#include "parse_util.hpp"

namespace ctxrec::cf {

namespace {

constexpr double kTiny = 1e-12;

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

// Walks two ascending sparse vectors and calls fn(x, y) per shared key.
template <class Fn>
std::size_t for_each_common(const RatingVector& a, const RatingVector& b, Fn&& fn) {
    std::size_t n = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (i->key < j->key) {
            ++i;
        } else if (j->key < i->key) {
            ++j;
        } else {
            fn(i->key, i->value, j->value);
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

std::size_t overlap_count(const RatingVector& a, const RatingVector& b) {
    return for_each_common(a, b, [](std::uint32_t, double, double) {});
}

std::optional<SimilarityScore> correlation(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= kTiny || syy <= kTiny) return std::nullopt;
    return SimilarityScore{clamp_unit(sxy / std::sqrt(sxx * syy)), x.size()};
}

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

template <class IdT>
std::optional<std::size_t> position_of(const std::vector<IdT>& ids, IdT id) {
    const auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ids.begin());
}

const RatingVector kEmpty;

double clamp_rating(double v) { return std::clamp(v, 1.0, 5.0); }

}  // namespace

// ---------------------------------------------------------------------------

MeanTable::MeanTable(std::vector<std::pair<std::uint32_t, double>> means) : means_(std::move(means)) {
    std::sort(means_.begin(), means_.end());
    const auto dup = std::adjacent_find(means_.begin(), means_.end(),
                                        [](const auto& a, const auto& b) { return a.first == b.first; });
    if (dup != means_.end()) throw DomainError(fmt::format("mean table lists id {} twice", dup->first));
}

std::optional<double> MeanTable::find(std::uint32_t id) const {
    const auto it = std::lower_bound(means_.begin(), means_.end(), id,
                                     [](const auto& e, std::uint32_t k) { return e.first < k; });
    if (it == means_.end() || it->first != id) return std::nullopt;
    return it->second;
}

double MeanTable::at(std::uint32_t id) const {
    if (auto v = find(id)) return *v;
    throw NotFoundError(fmt::format("no mean for id {}", id));
}

// ---------------------------------------------------------------------------

std::optional<SimilarityScore> pearson(const RatingVector& a, const RatingVector& b, std::size_t min_overlap) {
    std::vector<double> x, y;
    for_each_common(a, b, [&](std::uint32_t, double u, double v) {
        x.push_back(u);
        y.push_back(v);
    });
    if (x.empty() || x.size() < min_overlap) return std::nullopt;
    return correlation(x, y);
}

std::optional<SimilarityScore> cosine(const RatingVector& a, const RatingVector& b, std::size_t min_overlap) {
    double dot = 0, na = 0, nb = 0;
    const std::size_t n = for_each_common(a, b, [&](std::uint32_t, double u, double v) {
        dot += u * v;
        na += u * u;
        nb += v * v;
    });
    if (n == 0 || n < min_overlap || na <= kTiny || nb <= kTiny) return std::nullopt;
    return SimilarityScore{clamp_unit(dot / std::sqrt(na * nb)), n};
}

std::optional<SimilarityScore> spearman(const RatingVector& a, const RatingVector& b, std::size_t min_overlap) {
    std::vector<double> x, y;
    for_each_common(a, b, [&](std::uint32_t, double u, double v) {
        x.push_back(u);
        y.push_back(v);
    });
    if (x.empty() || x.size() < min_overlap) return std::nullopt;
    return correlation(average_ranks(x), average_ranks(y));
}

std::optional<SimilarityScore> item_adjusted_cosine(const RatingVector& item_a, const RatingVector& item_b,
                                                    const MeanTable& user_means, std::size_t min_overlap) {
    double dot = 0, na = 0, nb = 0;
    const std::size_t n = for_each_common(item_a, item_b, [&](std::uint32_t user, double u, double v) {
        const double mean = user_means.at(user);
        const double du = u - mean;
        const double dv = v - mean;
        dot += du * dv;
        na += du * du;
        nb += dv * dv;
    });
    if (n == 0 || n < min_overlap || na <= kTiny || nb <= kTiny) return std::nullopt;
    return SimilarityScore{clamp_unit(dot / std::sqrt(na * nb)), n};
}

std::string_view to_string(Measure m) {
    switch (m) {
        case Measure::pearson: return "pearson";
        case Measure::cosine: return "cosine";
        case Measure::spearman: return "spearman";
        case Measure::item_adjusted_cosine: return "itemcos";
    }
    return "pearson";
}

std::optional<Measure> measure_from_string(std::string_view s) {
    for (Measure m : {Measure::pearson, Measure::cosine, Measure::spearman, Measure::item_adjusted_cosine}) {
        if (s == to_string(m)) return m;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

RatingMatrix::RatingMatrix(const Dataset& d) {
    // Average repeats per (user, item) cell.
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<double, int>> cells;
    for (const auto& r : d.ratings()) {
        auto& c = cells[{r.user.value(), r.item.value()}];
        c.first += r.rating.value();
        c.second += 1;
    }

    std::vector<std::pair<std::uint32_t, std::uint32_t>> keys;
    keys.reserve(cells.size());
    for (const auto& [key, _] : cells) {
        if (users_.empty() || users_.back().value() != key.first) users_.emplace_back(key.first);
        keys.push_back(key);
    }
    for (const auto& [u, i] : keys) items_.emplace_back(i);
    std::sort(items_.begin(), items_.end());
    items_.erase(std::unique(items_.begin(), items_.end()), items_.end());

    rows_.resize(users_.size());
    columns_.resize(items_.size());
    double total = 0;
    for (const auto& [key, acc] : cells) {
        const double v = acc.first / acc.second;
        total += v;
        // cells iterate by (user, item), so rows and columns come out ascending.
        rows_[*position_of(users_, UserId(key.first))].push_back({key.second, v});
        columns_[*position_of(items_, ItemId(key.second))].push_back({key.first, v});
    }

    auto means_of = [](const std::vector<RatingVector>& vectors, const auto& ids) {
        std::vector<std::pair<std::uint32_t, double>> out;
        out.reserve(vectors.size());
        for (std::size_t p = 0; p < vectors.size(); ++p) {
            double s = 0;
            for (const auto& e : vectors[p]) s += e.value;
            out.emplace_back(ids[p].value(), s / static_cast<double>(vectors[p].size()));
        }
        return out;
    };
    user_means_ = MeanTable(means_of(rows_, users_));
    item_means_ = MeanTable(means_of(columns_, items_));
    // An empty matrix predicts the scale midpoint.
    global_mean_ = cells.empty() ? 3.0 : total / static_cast<double>(cells.size());
}

const RatingVector& RatingMatrix::user_row(UserId u) const {
    const auto p = position_of(users_, u);
    return p ? rows_[*p] : kEmpty;
}

const RatingVector& RatingMatrix::item_column(ItemId i) const {
    const auto p = position_of(items_, i);
    return p ? columns_[*p] : kEmpty;
}

std::optional<double> RatingMatrix::rating(UserId u, ItemId i) const {
    const auto& row = user_row(u);
    const auto it = std::lower_bound(row.begin(), row.end(), i.value(),
                                     [](const RatingEntry& e, std::uint32_t k) { return e.key < k; });
    if (it == row.end() || it->key != i.value()) return std::nullopt;
    return it->value;
}

std::optional<SimilarityScore> user_similarity(const RatingMatrix& m, UserId a, UserId b, Measure measure,
                                               std::size_t min_overlap) {
    const auto& ra = m.user_row(a);
    const auto& rb = m.user_row(b);
    switch (measure) {
        case Measure::pearson: return pearson(ra, rb, min_overlap);
        case Measure::cosine: return cosine(ra, rb, min_overlap);
        case Measure::spearman: return spearman(ra, rb, min_overlap);
        case Measure::item_adjusted_cosine: break;
    }
    throw DomainError("itemcos is an item-item measure");
}

std::optional<SimilarityScore> item_similarity(const RatingMatrix& m, ItemId a, ItemId b, std::size_t min_overlap) {
    return item_adjusted_cosine(m.item_column(a), m.item_column(b), m.user_means(), min_overlap);
}

NeighborSet<UserId> knn_users(const RatingMatrix& m, UserId target, Measure measure, const KnnOptions& options) {
    return knn(target, std::span<const UserId>(m.users()),
               [&](UserId c) { return user_similarity(m, target, c, measure, options.min_overlap); }, options);
}

NeighborSet<ItemId> knn_items(const RatingMatrix& m, ItemId target, const KnnOptions& options) {
    return knn(target, std::span<const ItemId>(m.items()),
               [&](ItemId c) { return item_similarity(m, target, c, options.min_overlap); }, options);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Variant v) { return v == Variant::plain ? "plain" : "mean-centered"; }

std::optional<Variant> variant_from_string(std::string_view s) {
    if (s == "plain") return Variant::plain;
    if (s == "mean-centered") return Variant::mean_centered;
    return std::nullopt;
}

std::string_view to_string(Fallback f) {
    switch (f) {
        case Fallback::none: return "none";
        case Fallback::user_mean: return "user-mean";
        case Fallback::item_mean: return "item-mean";
        case Fallback::global_mean: return "global-mean";
    }
    return "none";
}

namespace {

struct Chain {
    std::optional<double> first;
    Fallback first_kind;
    std::optional<double> second;
    Fallback second_kind;
};

Prediction fall_back(UserId user, ItemId item, std::size_t support, const Chain& chain, double global) {
    if (chain.first) return {user, item, clamp_rating(*chain.first), support, chain.first_kind};
    if (chain.second) return {user, item, clamp_rating(*chain.second), support, chain.second_kind};
    return {user, item, clamp_rating(global), support, Fallback::global_mean};
}

}  // namespace

Prediction predict_user_based(const RatingMatrix& m, UserId user, ItemId item, const NeighborSet<UserId>& neighbors,
                              const PredictOptions& options) {
    const auto user_mean = m.user_means().find(user.value());
    const Chain chain{user_mean, Fallback::user_mean, m.item_means().find(item.value()), Fallback::item_mean};

    double num = 0, den = 0;
    std::size_t support = 0;
    for (const auto& n : neighbors.neighbors) {
        const auto r = m.rating(n.id, item);
        if (!r) continue;
        const double s = n.score.value;
        if (options.variant == Variant::plain) {
            num += s * *r;
        } else {
            num += s * (*r - m.user_means().at(n.id.value()));
        }
        den += options.signed_denominator ? s : std::abs(s);
        ++support;
    }
    if (support == 0 || std::abs(den) < kTiny) return fall_back(user, item, support, chain, m.global_mean());
    if (options.variant == Variant::plain) return {user, item, clamp_rating(num / den), support, Fallback::none};
    if (!user_mean) return fall_back(user, item, support, chain, m.global_mean());
    return {user, item, clamp_rating(*user_mean + num / den), support, Fallback::none};
}

Prediction predict_item_based(const RatingMatrix& m, UserId user, ItemId item, const NeighborSet<ItemId>& neighbors,
                              const PredictOptions& options) {
    const auto item_mean = m.item_means().find(item.value());
    const Chain chain{item_mean, Fallback::item_mean, m.user_means().find(user.value()), Fallback::user_mean};

    double num = 0, den = 0;
    std::size_t support = 0;
    for (const auto& n : neighbors.neighbors) {
        const auto r = m.rating(user, n.id);
        if (!r) continue;
        const double s = n.score.value;
        if (options.variant == Variant::plain) {
            num += s * *r;
        } else {
            num += s * (*r - m.item_means().at(n.id.value()));
        }
        den += options.signed_denominator ? s : std::abs(s);
        ++support;
    }
    if (support == 0 || std::abs(den) < kTiny) return fall_back(user, item, support, chain, m.global_mean());
    if (options.variant == Variant::plain) return {user, item, clamp_rating(num / den), support, Fallback::none};
    if (!item_mean) return fall_back(user, item, support, chain, m.global_mean());
    return {user, item, clamp_rating(*item_mean + num / den), support, Fallback::none};
}

// ---------------------------------------------------------------------------

Predictor::Predictor(const RatingMatrix& m, const EngineConfig& config) : matrix_(&m), config_(config) {
    if (config.k == 0) throw DomainError("k must be positive");
    if (!is_item_based(config.measure)) return;

    const std::size_t n = m.items().size();
    item_sim_value_.assign(n * n, 0.0);
    item_sim_overlap_.assign(n * n, 0);
    const auto triples = all_pairs(m, config.measure, config.min_overlap,
                                   std::max(1u, std::thread::hardware_concurrency()));
    for (const auto& t : triples) {
        const auto a = *position_of(m.items(), ItemId(t.a));
        const auto b = *position_of(m.items(), ItemId(t.b));
        for (auto idx : {a * n + b, b * n + a}) {
            item_sim_value_[idx] = t.score.value;
            item_sim_overlap_[idx] = static_cast<std::uint32_t>(t.score.overlap);
        }
    }
}

std::optional<SimilarityScore> Predictor::cached_item_similarity(std::size_t a, std::size_t b) const {
    const std::size_t idx = a * matrix_->items().size() + b;
    if (item_sim_overlap_[idx] == 0) return std::nullopt;
    return SimilarityScore{item_sim_value_[idx], item_sim_overlap_[idx]};
}

std::vector<Prediction> Predictor::predict(UserId user, std::span<const ItemId> items) const {
    return is_item_based(config_.measure) ? predict_item_based_batch(user, items)
                                          : predict_user_based_batch(user, items);
}

std::vector<Prediction> Predictor::predict_user_based_batch(UserId user, std::span<const ItemId> items) const {
    const RatingMatrix& m = *matrix_;
    const PredictOptions popts{config_.variant, config_.signed_denominator};

    // Rank every eligible user once; each item then picks the best-ranked raters.
    KnnOptions all{m.users().size(), config_.min_overlap, config_.exclude_negative};
    const auto ranked = knn_users(m, user, config_.measure, all);
    std::vector<std::size_t> rank_of(m.users().size(), std::numeric_limits<std::size_t>::max());
    for (std::size_t r = 0; r < ranked.neighbors.size(); ++r) {
        rank_of[*position_of(m.users(), ranked.neighbors[r].id)] = r;
    }

    std::vector<Prediction> out;
    out.reserve(items.size());
    std::vector<std::size_t> picked;
    for (ItemId item : items) {
        picked.clear();
        for (const auto& e : m.item_column(item)) {
            const auto p = position_of(m.users(), UserId(e.key));
            if (p && rank_of[*p] != std::numeric_limits<std::size_t>::max()) picked.push_back(rank_of[*p]);
        }
        const auto keep = std::min(config_.k, picked.size());
        std::partial_sort(picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(keep), picked.end());
        NeighborSet<UserId> set{user, {}, config_.k};
        for (std::size_t t = 0; t < keep; ++t) set.neighbors.push_back(ranked.neighbors[picked[t]]);
        out.push_back(predict_user_based(m, user, item, set, popts));
    }
    return out;
}

std::vector<Prediction> Predictor::predict_item_based_batch(UserId user, std::span<const ItemId> items) const {
    const RatingMatrix& m = *matrix_;
    const PredictOptions popts{config_.variant, config_.signed_denominator};
    const auto& row = m.user_row(user);

    std::vector<ItemId> rated;
    std::vector<std::size_t> rated_pos;
    for (const auto& e : row) {
        rated.emplace_back(e.key);
        rated_pos.push_back(*position_of(m.items(), ItemId(e.key)));
    }
    const KnnOptions kopts{config_.k, config_.min_overlap, config_.exclude_negative};

    std::vector<Prediction> out;
    out.reserve(items.size());
    for (ItemId item : items) {
        const auto target = position_of(m.items(), item);
        NeighborSet<ItemId> set{item, {}, config_.k};
        if (target) {
            std::size_t t = 0;
            set = knn(item, std::span<const ItemId>(rated),
                      [&](ItemId c) {
                          // `rated` is walked in order, so the position cursor stays in step.
                          while (rated[t] != c) ++t;
                          return cached_item_similarity(*target, rated_pos[t]);
                      },
                      kopts);
        }
        out.push_back(predict_item_based(m, user, item, set, popts));
    }
    return out;
}

std::size_t Predictor::viable_neighbor_count(UserId user) const {
    const auto& row = matrix_->user_row(user);
    std::size_t count = 0;
    for (UserId other : matrix_->users()) {
        if (other == user) continue;
        const std::size_t overlap = overlap_count(row, matrix_->user_row(other));
        if (overlap > 0 && overlap >= config_.min_overlap) ++count;
    }
    return count;
}

// ---------------------------------------------------------------------------

std::vector<SimilarityTriple> all_pairs(const RatingMatrix& m, Measure measure, std::size_t min_overlap,
                                        unsigned workers) {
    const bool items = is_item_based(measure);
    const std::size_t n = items ? m.items().size() : m.users().size();
    auto similarity = [&](std::size_t a, std::size_t b) {
        return items ? item_similarity(m, m.items()[a], m.items()[b], min_overlap)
                     : user_similarity(m, m.users()[a], m.users()[b], measure, min_overlap);
    };
    auto id_of = [&](std::size_t p) { return items ? m.items()[p].value() : m.users()[p].value(); };

    workers = std::max(1u, workers);
    // Rows are dealt round-robin so the triangular workload evens out.
    std::vector<std::vector<std::vector<SimilarityTriple>>> per_row(workers);
    auto run = [&](unsigned w) {
        auto& mine = per_row[w];
        for (std::size_t a = w; a < n; a += workers) {
            std::vector<SimilarityTriple> row;
            for (std::size_t b = a + 1; b < n; ++b) {
                if (auto s = similarity(a, b); s && s->overlap >= min_overlap) row.push_back({id_of(a), id_of(b), *s});
            }
            mine.push_back(std::move(row));
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::jthread> threads;
        for (unsigned w = 0; w < workers; ++w) threads.emplace_back(run, w);
    }

    std::vector<SimilarityTriple> out;
    for (std::size_t a = 0; a < n; ++a) {
        auto& row = per_row[a % workers][a / workers];
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

void write_similarity_cache(const std::filesystem::path& file, Measure measure, std::size_t min_overlap,
                            std::span<const SimilarityTriple> triples) {
    std::string text = fmt::format("ctxrec-simcache v1 measure={} min_overlap={}\n", to_string(measure), min_overlap);
    for (const auto& t : triples) {
        fmt::format_to(std::back_inserter(text), "{}\t{}\t{}\t{}\n", t.a, t.b, t.score.value, t.score.overlap);
    }
    io::write_file_atomically(file, text);
}

SimilarityCache read_similarity_cache(const std::filesystem::path& file) {
    const std::string text = io::read_file(file);
    const auto lines = io::split_lines(text);
    if (lines.empty()) throw ParseError(fmt::format("{}: empty similarity cache", file.filename().string()));

    SimilarityCache cache{Measure::pearson, 0, {}};
    {
        const detail::LineError where{file, 1};
        const auto fields = io::split_fields(io::trim(lines[0]), ' ');
        if (fields.size() != 4 || fields[0] != "ctxrec-simcache" || fields[1] != "v1" ||
            !fields[2].starts_with("measure=") || !fields[3].starts_with("min_overlap=")) {
            where.fail("not a similarity cache header");
        }
        const auto measure = measure_from_string(fields[2].substr(8));
        if (!measure) where.fail(fmt::format("unknown measure '{}'", fields[2].substr(8)));
        const auto overlap = detail::parse_integer(fields[3].substr(12));
        if (!overlap || *overlap < 0) where.fail("bad min_overlap");
        cache.measure = *measure;
        cache.min_overlap = static_cast<std::size_t>(*overlap);
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (io::trim(lines[i]).empty()) continue;
        const detail::LineError where{file, i + 1};
        const auto f = io::split_fields(lines[i], '\t');
        if (f.size() != 4) where.fail(fmt::format("expected 4 tab-separated fields, got {}", f.size()));
        const auto a = detail::parse_integer(f[0]);
        const auto b = detail::parse_integer(f[1]);
        const auto value = detail::parse_real(f[2]);
        const auto overlap = detail::parse_integer(f[3]);
        if (!a || !b || *a <= 0 || *b <= 0) where.fail("bad id");
        if (!value || !(*value >= -1.0 && *value <= 1.0)) where.fail("similarity outside [-1, 1]");
        if (!overlap || *overlap <= 0) where.fail("bad overlap");
        cache.triples.push_back({static_cast<std::uint32_t>(*a), static_cast<std::uint32_t>(*b),
                                 {*value, static_cast<std::size_t>(*overlap)}});
    }
    return cache;
}

}  // namespace ctxrec::cf
