#include "ctxrec/model.hpp"

#include <algorithm>
#include <tuple>

#include <fmt/format.h>

#include "ctxrec/error.hpp"

namespace ctxrec {

Rating::Rating(int stars) {
    if (stars < 1 || stars > 5) {
        throw DomainError(fmt::format("rating {} outside [1,5]", stars));
    }
    stars_ = static_cast<std::uint8_t>(stars);
}

// ---------------------------------------------------------------------------
// Context codebooks

namespace {

struct Codebook {
    std::string_view name;
    std::vector<std::string_view> labels;
};

const std::array<Codebook, kContextDimCount>& codebooks() {
    static const std::array<Codebook, kContextDimCount> books = {{
        {"time", {"Morning", "Afternoon", "Evening", "Night"}},
        {"daytype", {"Working day", "Weekend", "Holiday"}},
        {"season", {"Spring", "Summer", "Autumn", "Winter"}},
        {"location", {"Home", "Public place", "Friend's house"}},
        {"weather", {"Sunny / clear", "Rainy", "Stormy", "Snowy", "Cloudy"}},
        {"social", {"Alone", "My partner", "Friends", "Colleagues", "Parents", "Public", "My family"}},
        {"endEmo", {"Sad", "Happy", "Scared", "Surprised", "Angry", "Disgusted", "Neutral"}},
        {"dominantEmo", {"Sad", "Happy", "Scared", "Surprised", "Angry", "Disgusted", "Neutral"}},
        {"mood", {"Positive", "Neutral", "Negative"}},
        {"physical", {"Healthy", "Ill"}},
        {"decision", {"User decided which movie to watch", "User was given a movie"}},
        {"interaction", {"first interaction with a movie", "n-th interaction with a movie"}},
    }};
    return books;
}

std::size_t index_of(ContextDim dim) { return static_cast<std::size_t>(dim); }

}  // namespace

std::string_view context_dim_name(ContextDim dim) { return codebooks()[index_of(dim)].name; }

std::optional<ContextDim> context_dim_from_name(std::string_view name) {
    for (ContextDim dim : kAllContextDims) {
        if (context_dim_name(dim) == name) return dim;
    }
    return std::nullopt;
}

int context_dim_cardinality(ContextDim dim) {
    return static_cast<int>(codebooks()[index_of(dim)].labels.size());
}

std::string_view context_value_label(ContextDim dim, int code) {
    const auto& book = codebooks()[index_of(dim)];
    if (code < 1 || code > static_cast<int>(book.labels.size())) {
        throw DomainError(fmt::format("{} code {} outside 1..{}", book.name, code, book.labels.size()));
    }
    return book.labels[static_cast<std::size_t>(code - 1)];
}

ContextVector::ContextVector() = default;

ContextVector ContextVector::from_codes(std::span<const int, kContextDimCount> codes) {
    ContextVector v;
    for (std::size_t i = 0; i < kContextDimCount; ++i) {
        const int code = codes[i];
        if (code == kMissingCode) continue;
        const ContextDim dim = kAllContextDims[i];
        if (code < 1 || code > context_dim_cardinality(dim)) {
            throw DomainError(fmt::format("{} code {} outside 1..{} and not {}", context_dim_name(dim),
                                          code, context_dim_cardinality(dim), kMissingCode));
        }
        v.codes_[i] = static_cast<std::uint8_t>(code);
    }
    return v;
}

std::optional<int> ContextVector::get(ContextDim dim) const {
    const auto code = codes_[index_of(dim)];
    if (code == 0) return std::nullopt;
    return code;
}

ContextVector ContextVector::with(ContextDim dim, std::optional<int> code) const {
    auto raw = codes();
    raw[index_of(dim)] = code.value_or(kMissingCode);
    return from_codes(raw);
}

std::array<int, kContextDimCount> ContextVector::codes() const {
    std::array<int, kContextDimCount> out{};
    for (std::size_t i = 0; i < kContextDimCount; ++i) {
        out[i] = codes_[i] == 0 ? kMissingCode : codes_[i];
    }
    return out;
}

std::string_view to_string(SourceTag tag) {
    switch (tag) {
        case SourceTag::comoda: return "comoda";
        case SourceTag::movielens: return "movielens";
        case SourceTag::synthetic: return "synthetic";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Dataset

namespace {

// Duplicate identity: everything but the rating value.
auto identity_key(const RatingRecord& r) {
    return std::tie(r.user, r.item, r.context, r.timestamp);
}

bool canonical_less(const RatingRecord& a, const RatingRecord& b) {
    const auto ka = identity_key(a);
    const auto kb = identity_key(b);
    if (ka != kb) return ka < kb;
    return a.rating < b.rating;
}

std::string describe(const RatingRecord& r) {
    std::string out = fmt::format("(user {}, item {}, rating {}", r.user.value(), r.item.value(),
                                  r.rating.value());
    if (r.timestamp) out += fmt::format(", ts {}", *r.timestamp);
    if (r.context) {
        const auto c = r.context->codes();
        out += fmt::format(", context [{}]", fmt::join(c, ","));
    }
    return out + ")";
}

template <class T, class IdT>
std::ptrdiff_t position_of(const std::vector<T>& sorted, IdT id) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), id,
                               [](const T& x, IdT v) { return x.id < v; });
    if (it == sorted.end() || it->id != id) return -1;
    return it - sorted.begin();
}

}  // namespace

Dataset make_dataset(std::vector<UserProfile> users, std::vector<Movie> movies,
                     std::vector<RatingRecord> ratings, std::vector<std::string> genre_catalog,
                     SourceTag source) {
    std::sort(users.begin(), users.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::sort(movies.begin(), movies.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

    for (std::size_t i = 0; i < users.size(); ++i) {
        if (users[i].id.value() == 0) throw IntegrityError("user id 0 is not a positive id");
        if (i > 0 && users[i].id == users[i - 1].id) {
            throw IntegrityError(fmt::format("duplicate user id {}", users[i].id.value()));
        }
    }
    for (std::size_t i = 0; i < movies.size(); ++i) {
        const Movie& m = movies[i];
        if (m.id.value() == 0) throw IntegrityError("item id 0 is not a positive id");
        if (i > 0 && m.id == movies[i - 1].id) {
            throw IntegrityError(fmt::format("duplicate item id {}", m.id.value()));
        }
        for (std::size_t g = 0; g < m.genres.size(); ++g) {
            if (m.genres[g] >= genre_catalog.size()) {
                throw IntegrityError(fmt::format("item {} references genre index {} outside a catalog of {}",
                                                 m.id.value(), m.genres[g], genre_catalog.size()));
            }
            if (std::find(m.genres.begin(), m.genres.begin() + static_cast<std::ptrdiff_t>(g),
                          m.genres[g]) != m.genres.begin() + static_cast<std::ptrdiff_t>(g)) {
                throw IntegrityError(fmt::format("item {} lists genre '{}' twice", m.id.value(),
                                                 genre_catalog[m.genres[g]]));
            }
        }
    }

    std::sort(ratings.begin(), ratings.end(), canonical_less);

    Dataset d;
    d.user_ranges_.assign(users.size(), {});
    d.item_ranges_.assign(movies.size(), {});
    std::vector<std::size_t> item_counts(movies.size(), 0);
    std::vector<std::ptrdiff_t> item_pos_of_rating(ratings.size());

    std::ptrdiff_t current_user_pos = -1;
    for (std::size_t i = 0; i < ratings.size(); ++i) {
        const RatingRecord& r = ratings[i];
        if (i > 0 && identity_key(ratings[i - 1]) == identity_key(r)) {
            throw DuplicateError("duplicate rating " + describe(r));
        }
        if (current_user_pos < 0 || users[static_cast<std::size_t>(current_user_pos)].id != r.user) {
            current_user_pos = position_of(users, r.user);
            if (current_user_pos < 0) {
                throw IntegrityError("rating references unknown user " + describe(r));
            }
            d.user_ranges_[static_cast<std::size_t>(current_user_pos)].begin = i;
        }
        d.user_ranges_[static_cast<std::size_t>(current_user_pos)].end = i + 1;

        const auto item_pos = position_of(movies, r.item);
        if (item_pos < 0) throw IntegrityError("rating references unknown item " + describe(r));
        item_pos_of_rating[i] = item_pos;
        ++item_counts[static_cast<std::size_t>(item_pos)];
    }

    // Counting sort of rating indices by item keeps the per-item order by user.
    std::size_t offset = 0;
    for (std::size_t m = 0; m < movies.size(); ++m) {
        d.item_ranges_[m] = {offset, offset};
        offset += item_counts[m];
    }
    d.item_order_.resize(ratings.size());
    for (std::size_t i = 0; i < ratings.size(); ++i) {
        auto& range = d.item_ranges_[static_cast<std::size_t>(item_pos_of_rating[i])];
        d.item_order_[range.end++] = static_cast<std::uint32_t>(i);
    }

    d.users_ = std::move(users);
    d.movies_ = std::move(movies);
    d.ratings_ = std::move(ratings);
    d.genre_catalog_ = std::move(genre_catalog);
    d.source_ = source;
    return d;
}

const UserProfile* Dataset::find_user(UserId id) const {
    const auto pos = position_of(users_, id);
    return pos < 0 ? nullptr : &users_[static_cast<std::size_t>(pos)];
}

const Movie* Dataset::find_movie(ItemId id) const {
    const auto pos = position_of(movies_, id);
    return pos < 0 ? nullptr : &movies_[static_cast<std::size_t>(pos)];
}

const UserProfile& Dataset::user(UserId id) const {
    if (const auto* u = find_user(id)) return *u;
    throw NotFoundError(fmt::format("unknown user {}", id.value()));
}

const Movie& Dataset::movie(ItemId id) const {
    if (const auto* m = find_movie(id)) return *m;
    throw NotFoundError(fmt::format("unknown item {}", id.value()));
}

std::span<const RatingRecord> Dataset::ratings_of_user(UserId id) const {
    const auto pos = position_of(users_, id);
    if (pos < 0) throw NotFoundError(fmt::format("unknown user {}", id.value()));
    const Range& r = user_ranges_[static_cast<std::size_t>(pos)];
    return std::span<const RatingRecord>(ratings_).subspan(r.begin, r.end - r.begin);
}

std::vector<const RatingRecord*> Dataset::ratings_of_item(ItemId id) const {
    const auto pos = position_of(movies_, id);
    if (pos < 0) throw NotFoundError(fmt::format("unknown item {}", id.value()));
    const Range& r = item_ranges_[static_cast<std::size_t>(pos)];
    std::vector<const RatingRecord*> out;
    out.reserve(r.end - r.begin);
    for (std::size_t k = r.begin; k < r.end; ++k) out.push_back(&ratings_[item_order_[k]]);
    return out;
}

bool Dataset::is_active(UserId id) const {
    const auto pos = position_of(users_, id);
    if (pos < 0) return false;
    const Range& r = user_ranges_[static_cast<std::size_t>(pos)];
    return r.end > r.begin;
}

bool Dataset::is_active(ItemId id) const {
    const auto pos = position_of(movies_, id);
    if (pos < 0) return false;
    const Range& r = item_ranges_[static_cast<std::size_t>(pos)];
    return r.end > r.begin;
}

std::size_t Dataset::active_user_count() const {
    return static_cast<std::size_t>(
        std::count_if(user_ranges_.begin(), user_ranges_.end(), [](const Range& r) { return r.end > r.begin; }));
}

std::size_t Dataset::active_item_count() const {
    return static_cast<std::size_t>(
        std::count_if(item_ranges_.begin(), item_ranges_.end(), [](const Range& r) { return r.end > r.begin; }));
}

Dataset Dataset::with_ratings(std::vector<RatingRecord> ratings) const {
    return make_dataset(users_, movies_, std::move(ratings), genre_catalog_, source_);
}

bool operator==(const Dataset& a, const Dataset& b) {
    // Indexes are a pure function of the members compared here.
    return a.source_ == b.source_ && a.genre_catalog_ == b.genre_catalog_ && a.users_ == b.users_ &&
           a.movies_ == b.movies_ && a.ratings_ == b.ratings_;
}

RatingVector user_vector(const Dataset& d, UserId user) {
    RatingVector out;
    std::size_t repeats = 0;
    // Ratings of a user are sorted by item first, so repeats are adjacent.
    for (const RatingRecord& r : d.ratings_of_user(user)) {
        const auto key = r.item.value();
        if (!out.empty() && out.back().key == key) {
            ++repeats;
            out.back().value += (r.rating.value() - out.back().value) / static_cast<double>(repeats + 1);
        } else {
            repeats = 0;
            out.push_back({key, static_cast<double>(r.rating.value())});
        }
    }
    return out;
}

}  // namespace ctxrec
