#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctxrec {

/// Opaque positive integer identifier, tagged so user and item ids cannot be mixed up.
template <class Tag>
class Id {
public:
    using value_type = std::uint32_t;

    constexpr Id() = default;
    constexpr explicit Id(value_type v) : value_(v) {}

    constexpr value_type value() const noexcept { return value_; }

    friend constexpr auto operator<=>(Id, Id) = default;

private:
    value_type value_ = 0;
};

struct UserTag {};
struct ItemTag {};
using UserId = Id<UserTag>;
using ItemId = Id<ItemTag>;

/// Star rating on the 1..5 scale.
class Rating {
public:
    /// Throws DomainError outside [1,5].
    explicit Rating(int stars);

    constexpr int value() const noexcept { return stars_; }

    friend constexpr auto operator<=>(Rating, Rating) = default;

private:
    std::uint8_t stars_;
};

// ---------------------------------------------------------------------------
// Context

/// The twelve LDOS-CoMoDa context dimensions, in file column order.
enum class ContextDim : std::uint8_t {
    time,
    daytype,
    season,
    location,
    weather,
    social,
    end_emo,
    dominant_emo,
    mood,
    physical,
    decision,
    interaction,
};

inline constexpr std::size_t kContextDimCount = 12;

inline constexpr std::array<ContextDim, kContextDimCount> kAllContextDims = {
    ContextDim::time,     ContextDim::daytype, ContextDim::season,       ContextDim::location,
    ContextDim::weather,  ContextDim::social,  ContextDim::end_emo,      ContextDim::dominant_emo,
    ContextDim::mood,     ContextDim::physical, ContextDim::decision,    ContextDim::interaction,
};

/// Column / query name, e.g. "endEmo".
std::string_view context_dim_name(ContextDim dim);
std::optional<ContextDim> context_dim_from_name(std::string_view name);

/// Number of codes in the dimension's codebook; valid codes are 1..cardinality.
int context_dim_cardinality(ContextDim dim);

/// Human label of a code, e.g. (daytype, 2) -> "Weekend". Throws DomainError on a bad code.
std::string_view context_value_label(ContextDim dim, int code);

/// Coded situation in which a rating was given. Every stored code is either
/// missing or within its dimension's codebook.
class ContextVector {
public:
    /// Marker used by the source files for a missing value.
    static constexpr int kMissingCode = -1;

    /// All dimensions missing.
    ContextVector();

    /// Builds from raw file codes; -1 becomes missing. Throws DomainError on out-of-range codes.
    static ContextVector from_codes(std::span<const int, kContextDimCount> codes);

    std::optional<int> get(ContextDim dim) const;

    /// Copy with one dimension replaced (nullopt = missing).
    ContextVector with(ContextDim dim, std::optional<int> code) const;

    /// Raw codes with -1 for missing.
    std::array<int, kContextDimCount> codes() const;

    friend auto operator<=>(const ContextVector&, const ContextVector&) = default;

private:
    // 0 encodes missing internally so there is exactly one representation.
    std::array<std::uint8_t, kContextDimCount> codes_{};
};

// ---------------------------------------------------------------------------
// Records

struct RatingRecord {
    UserId user;
    ItemId item;
    Rating rating{1};
    std::optional<ContextVector> context;
    std::optional<std::int64_t> timestamp;

    friend auto operator<=>(const RatingRecord&, const RatingRecord&) = default;
};

enum class Sex : std::uint8_t { male, female };

struct UserProfile {
    UserId id;
    std::optional<int> age;
    std::optional<Sex> sex;
    std::optional<std::string> occupation;
    std::optional<std::string> zip;
    std::optional<std::string> city;
    std::optional<std::string> country;

    friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

struct Movie {
    ItemId id;
    std::string title;
    /// Indices into the owning dataset's genre catalog, in source order.
    std::vector<std::uint16_t> genres;

    // MovieLens metadata
    std::string release_date;
    std::string video_release_date;
    std::string url;

    // CoMoDa metadata
    std::optional<std::string> director;
    std::optional<std::string> country;
    std::optional<std::string> language;
    std::optional<int> year;
    std::vector<std::string> actors;
    std::optional<double> budget;

    friend bool operator==(const Movie&, const Movie&) = default;
};

enum class SourceTag : std::uint8_t { comoda, movielens, synthetic };

std::string_view to_string(SourceTag tag);

/// Flat sparse vector keyed by raw id, ascending. Used for user rows (keyed
/// by item) and item columns (keyed by user).
struct RatingEntry {
    std::uint32_t key;
    double value;

    friend bool operator==(const RatingEntry&, const RatingEntry&) = default;
};
using RatingVector = std::vector<RatingEntry>;

// ---------------------------------------------------------------------------
// Dataset

/// Immutable indexed rating corpus. Users and movies are sorted by id and
/// ratings are kept in a canonical order (user, item, context, timestamp,
/// rating), so construction is independent of input order.
class Dataset {
public:
    Dataset() = default;

    std::span<const UserProfile> users() const noexcept { return users_; }
    std::span<const Movie> movies() const noexcept { return movies_; }
    std::span<const RatingRecord> ratings() const noexcept { return ratings_; }
    const std::vector<std::string>& genre_catalog() const noexcept { return genre_catalog_; }
    SourceTag source() const noexcept { return source_; }

    const UserProfile* find_user(UserId id) const;
    const Movie* find_movie(ItemId id) const;

    /// Throws NotFoundError for unknown ids.
    const UserProfile& user(UserId id) const;
    const Movie& movie(ItemId id) const;

    /// Ratings of one user, in canonical order. Throws NotFoundError for unknown users.
    std::span<const RatingRecord> ratings_of_user(UserId id) const;

    /// Ratings of one item, ordered by user. Throws NotFoundError for unknown items.
    std::vector<const RatingRecord*> ratings_of_item(ItemId id) const;

    /// A catalog entry with at least one rating.
    bool is_active(UserId id) const;
    bool is_active(ItemId id) const;

    std::size_t active_user_count() const;
    std::size_t active_item_count() const;

    /// Same catalogs, different rating set. Used by pre-filtering and splitting.
    Dataset with_ratings(std::vector<RatingRecord> ratings) const;

    friend bool operator==(const Dataset& a, const Dataset& b);

private:
    friend Dataset make_dataset(std::vector<UserProfile>, std::vector<Movie>,
                                std::vector<RatingRecord>, std::vector<std::string>, SourceTag);

    struct Range {
        std::size_t begin = 0;
        std::size_t end = 0;
        friend bool operator==(const Range&, const Range&) = default;
    };

    std::vector<UserProfile> users_;
    std::vector<Movie> movies_;
    std::vector<RatingRecord> ratings_;
    std::vector<std::string> genre_catalog_;
    SourceTag source_ = SourceTag::synthetic;

    std::vector<Range> user_ranges_;          // parallel to users_, into ratings_
    std::vector<std::uint32_t> item_order_;   // rating indices sorted by (item, position)
    std::vector<Range> item_ranges_;          // parallel to movies_, into item_order_
};

/// Validates and indexes a corpus.
/// Throws IntegrityError on dangling references, duplicate user/movie ids or
/// genre indices outside the catalog, and DuplicateError when two ratings
/// share (user, item, context, timestamp).
Dataset make_dataset(std::vector<UserProfile> users, std::vector<Movie> movies,
                     std::vector<RatingRecord> ratings, std::vector<std::string> genre_catalog,
                     SourceTag source = SourceTag::synthetic);

/// A user's ratings keyed by item, ascending. Repeated ratings of the same
/// item (CoMoDa re-watches) are averaged into one entry.
RatingVector user_vector(const Dataset& d, UserId user);

}  // namespace ctxrec

template <class Tag>
struct std::hash<ctxrec::Id<Tag>> {
    std::size_t operator()(ctxrec::Id<Tag> id) const noexcept {
        return std::hash<std::uint32_t>{}(id.value());
    }
};
