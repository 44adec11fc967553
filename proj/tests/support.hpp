#pragma once

// Fixture builders and brute-force reference implementations shared by the
// test binaries. The references work on dense matrices with NaN for missing
// cells and deliberately avoid the library's sparse code paths.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ctxrec/cf.hpp"
#include "ctxrec/model.hpp"

namespace testing_support {

using ctxrec::ItemId;
using ctxrec::UserId;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// users x items, row u is user id u+1, column i is item id i+1.
using Dense = std::vector<std::vector<double>>;

inline bool has(double v) { return !std::isnan(v); }

inline Dense random_dense(std::mt19937_64& rng, std::size_t users, std::size_t items, double density) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> stars(1, 5);
    Dense m(users, std::vector<double>(items, kNaN));
    for (auto& row : m) {
        for (auto& cell : row) {
            if (unit(rng) < density) cell = stars(rng);
        }
    }
    return m;
}

inline std::vector<std::string> genre_names(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t g = 0; g < n; ++g) out.push_back("G" + std::to_string(g + 1));
    return out;
}

/// Dataset with every user and item of `m` in its catalogs, item i carrying
/// genres {i mod genres}.
inline ctxrec::Dataset to_dataset(const Dense& m, std::size_t genres = 3) {
    std::vector<ctxrec::UserProfile> users;
    std::vector<ctxrec::Movie> movies;
    std::vector<ctxrec::RatingRecord> ratings;
    const std::size_t items = m.empty() ? 0 : m.front().size();
    for (std::size_t u = 0; u < m.size(); ++u) users.push_back({UserId(static_cast<std::uint32_t>(u + 1))});
    for (std::size_t i = 0; i < items; ++i) {
        ctxrec::Movie mv;
        mv.id = ItemId(static_cast<std::uint32_t>(i + 1));
        mv.title = "Movie " + std::to_string(i + 1);
        mv.genres = {static_cast<std::uint16_t>(i % genres)};
        movies.push_back(std::move(mv));
    }
    for (std::size_t u = 0; u < m.size(); ++u) {
        for (std::size_t i = 0; i < items; ++i) {
            if (!has(m[u][i])) continue;
            ratings.push_back({UserId(static_cast<std::uint32_t>(u + 1)), ItemId(static_cast<std::uint32_t>(i + 1)),
                               ctxrec::Rating(static_cast<int>(m[u][i])), std::nullopt, std::nullopt});
        }
    }
    return ctxrec::make_dataset(std::move(users), std::move(movies), std::move(ratings), genre_names(genres));
}

/// Random corpus with a context on most ratings (some dimensions missing).
inline ctxrec::Dataset random_context_dataset(std::mt19937_64& rng, std::size_t users, std::size_t items,
                                              std::size_t ratings, double missing_rate = 0.1) {
    std::uniform_int_distribution<std::uint32_t> pick_user(1, static_cast<std::uint32_t>(users));
    std::uniform_int_distribution<std::uint32_t> pick_item(1, static_cast<std::uint32_t>(items));
    std::uniform_int_distribution<int> stars(1, 5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<ctxrec::UserProfile> us;
    std::vector<ctxrec::Movie> ms;
    for (std::uint32_t u = 1; u <= users; ++u) us.push_back({UserId(u)});
    for (std::uint32_t i = 1; i <= items; ++i) {
        ctxrec::Movie mv;
        mv.id = ItemId(i);
        mv.title = "Film " + std::to_string(i);
        mv.genres = {static_cast<std::uint16_t>(i % 4)};
        ms.push_back(std::move(mv));
    }
    std::vector<ctxrec::RatingRecord> rs;
    for (std::size_t n = 0; n < ratings; ++n) {
        std::array<int, ctxrec::kContextDimCount> codes{};
        for (std::size_t k = 0; k < codes.size(); ++k) {
            // Small code ranges keep matches frequent.
            const int card = std::min(3, ctxrec::context_dim_cardinality(ctxrec::kAllContextDims[k]));
            codes[k] = unit(rng) < missing_rate ? -1 : std::uniform_int_distribution<int>(1, card)(rng);
        }
        ctxrec::RatingRecord r{UserId(pick_user(rng)), ItemId(pick_item(rng)), ctxrec::Rating(stars(rng)),
                               ctxrec::ContextVector::from_codes(codes), static_cast<std::int64_t>(n)};
        // A record without context now and then (MovieLens-style).
        if (unit(rng) < 0.05) r.context.reset();
        rs.push_back(r);
    }
    return ctxrec::make_dataset(std::move(us), std::move(ms), std::move(rs), genre_names(4));
}

// ---------------------------------------------------------------------------
// Reference similarities

struct Ref {
    double value;
    std::size_t overlap;
};

inline std::vector<std::size_t> common(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (has(a[j]) && has(b[j])) idx.push_back(j);
    }
    return idx;
}

/// Computational form: (nΣxy − ΣxΣy) / sqrt((nΣx² − (Σx)²)(nΣy² − (Σy)²)).
inline std::optional<Ref> ref_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    const double vx = n * sxx - sx * sx;
    const double vy = n * syy - sy * sy;
    if (vx <= 1e-9 || vy <= 1e-9) return std::nullopt;
    return Ref{std::clamp((n * sxy - sx * sy) / std::sqrt(vx * vy), -1.0, 1.0), x.size()};
}

inline std::optional<Ref> ref_pearson(const std::vector<double>& a, const std::vector<double>& b,
                                      std::size_t min_overlap = 2) {
    const auto idx = common(a, b);
    if (idx.empty() || idx.size() < min_overlap) return std::nullopt;
    std::vector<double> x, y;
    for (auto j : idx) {
        x.push_back(a[j]);
        y.push_back(b[j]);
    }
    return ref_correlation(x, y);
}

inline std::optional<Ref> ref_cosine(const std::vector<double>& a, const std::vector<double>& b,
                                     std::size_t min_overlap = 1) {
    const auto idx = common(a, b);
    if (idx.empty() || idx.size() < min_overlap) return std::nullopt;
    double dot = 0, na = 0, nb = 0;
    for (auto j : idx) {
        dot += a[j] * b[j];
        na += a[j] * a[j];
        nb += b[j] * b[j];
    }
    if (na == 0 || nb == 0) return std::nullopt;
    return Ref{dot / (std::sqrt(na) * std::sqrt(nb)), idx.size()};
}

/// Rank by counting: rank(x) = #{y < x} + (#{y == x} + 1) / 2.
inline std::vector<double> ref_ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0, equal = 0;
        for (double w : v) {
            less += w < v[i];
            equal += w == v[i];
        }
        r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
}

inline std::optional<Ref> ref_spearman(const std::vector<double>& a, const std::vector<double>& b,
                                       std::size_t min_overlap = 2) {
    const auto idx = common(a, b);
    if (idx.empty() || idx.size() < min_overlap) return std::nullopt;
    std::vector<double> x, y;
    for (auto j : idx) {
        x.push_back(a[j]);
        y.push_back(b[j]);
    }
    return ref_correlation(ref_ranks(x), ref_ranks(y));
}

inline double ref_row_mean(const std::vector<double>& row) {
    double s = 0, n = 0;
    for (double v : row) {
        if (has(v)) {
            s += v;
            n += 1;
        }
    }
    return n > 0 ? s / n : kNaN;
}

inline double ref_column_mean(const Dense& m, std::size_t i) {
    double s = 0, n = 0;
    for (const auto& row : m) {
        if (has(row[i])) {
            s += row[i];
            n += 1;
        }
    }
    return n > 0 ? s / n : kNaN;
}

/// Cosine of user-mean-centered columns i and j over users who rated both.
inline std::optional<Ref> ref_adjusted_cosine(const Dense& m, std::size_t i, std::size_t j,
                                              std::size_t min_overlap = 2) {
    double dot = 0, ni = 0, nj = 0;
    std::size_t overlap = 0;
    for (const auto& row : m) {
        if (!has(row[i]) || !has(row[j])) continue;
        const double mean = ref_row_mean(row);
        dot += (row[i] - mean) * (row[j] - mean);
        ni += (row[i] - mean) * (row[i] - mean);
        nj += (row[j] - mean) * (row[j] - mean);
        ++overlap;
    }
    if (overlap == 0 || overlap < min_overlap || ni <= 1e-9 || nj <= 1e-9) return std::nullopt;
    return Ref{std::clamp(dot / std::sqrt(ni * nj), -1.0, 1.0), overlap};
}

inline std::optional<Ref> ref_user_similarity(const Dense& m, std::size_t a, std::size_t b, ctxrec::cf::Measure measure,
                                              std::size_t min_overlap) {
    switch (measure) {
        case ctxrec::cf::Measure::pearson: return ref_pearson(m[a], m[b], min_overlap);
        case ctxrec::cf::Measure::cosine: return ref_cosine(m[a], m[b], min_overlap);
        case ctxrec::cf::Measure::spearman: return ref_spearman(m[a], m[b], min_overlap);
        default: return std::nullopt;
    }
}

// ---------------------------------------------------------------------------
// Reference predictions

struct RefPrediction {
    double value;
    std::size_t support;
    ctxrec::cf::Fallback fallback;
    /// The k-th and (k+1)-th candidates are within rounding of each other, so
    /// which one is kept depends on the last bits of the similarity.
    bool ambiguous = false;
};

struct RefNeighbor {
    std::size_t index;
    double sim;
};

/// Sort by similarity descending then index ascending, keep k.
inline std::vector<RefNeighbor> ref_top_k(std::vector<RefNeighbor> all, std::size_t k, bool* ambiguous = nullptr) {
    std::sort(all.begin(), all.end(), [](const RefNeighbor& a, const RefNeighbor& b) {
        return a.sim != b.sim ? a.sim > b.sim : a.index < b.index;
    });
    if (all.size() > k) {
        if (ambiguous) *ambiguous = std::fabs(all[k - 1].sim - all[k].sim) < 1e-9;
        all.resize(k);
    }
    return all;
}

inline double ref_global_mean(const Dense& m) {
    double s = 0, n = 0;
    for (const auto& row : m) {
        for (double v : row) {
            if (has(v)) {
                s += v;
                n += 1;
            }
        }
    }
    return n > 0 ? s / n : 3.0;
}

/// User-based prediction for (u, i) with the neighborhood drawn from users who rated i.
inline RefPrediction ref_predict_user(const Dense& m, std::size_t u, std::size_t i, const ctxrec::cf::EngineConfig& c) {
    std::vector<RefNeighbor> raters;
    bool near_zero = false;
    for (std::size_t v = 0; v < m.size(); ++v) {
        if (v == u || !has(m[v][i])) continue;
        const auto s = ref_user_similarity(m, u, v, c.measure, c.min_overlap);
        if (!s || s->overlap < c.min_overlap) continue;
        // A similarity within rounding of zero sits on the exclusion boundary.
        if (c.exclude_negative && std::fabs(s->value) < 1e-9) near_zero = true;
        if (c.exclude_negative && s->value < 0) continue;
        raters.push_back({v, s->value});
    }
    bool ambiguous = false;
    const auto nbrs = ref_top_k(raters, c.k, &ambiguous);
    ambiguous |= near_zero;
    double num = 0, den = 0;
    for (const auto& n : nbrs) {
        const double r = m[n.index][i];
        num += c.variant == ctxrec::cf::Variant::plain ? n.sim * r : n.sim * (r - ref_row_mean(m[n.index]));
        den += c.signed_denominator ? n.sim : std::fabs(n.sim);
    }
    const double um = ref_row_mean(m[u]);
    const double im = ref_column_mean(m, i);
    auto clamp = [](double v) { return std::clamp(v, 1.0, 5.0); };
    if (nbrs.empty() || std::fabs(den) < 1e-12 || (c.variant == ctxrec::cf::Variant::mean_centered && !has(um))) {
        if (has(um)) return {clamp(um), nbrs.size(), ctxrec::cf::Fallback::user_mean, ambiguous};
        if (has(im)) return {clamp(im), nbrs.size(), ctxrec::cf::Fallback::item_mean, ambiguous};
        return {clamp(ref_global_mean(m)), nbrs.size(), ctxrec::cf::Fallback::global_mean, ambiguous};
    }
    const double v = c.variant == ctxrec::cf::Variant::plain ? num / den : um + num / den;
    return {clamp(v), nbrs.size(), ctxrec::cf::Fallback::none, ambiguous};
}

/// Item-based prediction for (u, i) with the neighborhood drawn from items u rated.
inline RefPrediction ref_predict_item(const Dense& m, std::size_t u, std::size_t i, const ctxrec::cf::EngineConfig& c) {
    std::vector<RefNeighbor> rated;
    bool near_zero = false;
    for (std::size_t j = 0; j < m[u].size(); ++j) {
        if (j == i || !has(m[u][j])) continue;
        const auto s = ref_adjusted_cosine(m, i, j, c.min_overlap);
        if (!s || s->overlap < c.min_overlap) continue;
        if (c.exclude_negative && std::fabs(s->value) < 1e-9) near_zero = true;
        if (c.exclude_negative && s->value < 0) continue;
        rated.push_back({j, s->value});
    }
    bool ambiguous = false;
    const auto nbrs = ref_top_k(rated, c.k, &ambiguous);
    ambiguous |= near_zero;
    double num = 0, den = 0;
    for (const auto& n : nbrs) {
        const double r = m[u][n.index];
        num += c.variant == ctxrec::cf::Variant::plain ? n.sim * r : n.sim * (r - ref_column_mean(m, n.index));
        den += c.signed_denominator ? n.sim : std::fabs(n.sim);
    }
    const double um = ref_row_mean(m[u]);
    const double im = ref_column_mean(m, i);
    auto clamp = [](double v) { return std::clamp(v, 1.0, 5.0); };
    if (nbrs.empty() || std::fabs(den) < 1e-12 || (c.variant == ctxrec::cf::Variant::mean_centered && !has(im))) {
        if (has(im)) return {clamp(im), nbrs.size(), ctxrec::cf::Fallback::item_mean, ambiguous};
        if (has(um)) return {clamp(um), nbrs.size(), ctxrec::cf::Fallback::user_mean, ambiguous};
        return {clamp(ref_global_mean(m)), nbrs.size(), ctxrec::cf::Fallback::global_mean, ambiguous};
    }
    const double v = c.variant == ctxrec::cf::Variant::plain ? num / den : im + num / den;
    return {clamp(v), nbrs.size(), ctxrec::cf::Fallback::none, ambiguous};
}

}  // namespace testing_support
