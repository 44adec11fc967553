#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxrec/model.hpp"

namespace ctxrec::ingest {

/// Summary of a load, printed line by line to standard error by the CLI.
struct LoadReport {
    std::string format;
    std::string path;
    char delimiter = '\0';
    std::size_t users = 0;
    std::size_t items = 0;
    std::size_t ratings = 0;
    std::vector<std::string> warnings;

    std::string to_text() const;
};

/// Genre list of the LDOS-CoMoDa movie catalog, in the order used for numeric genre codes.
const std::vector<std::string>& comoda_genres();

// ---------------------------------------------------------------------------
// MovieLens ml-100k

/// Loads u.data, u.item, u.user and u.genre from `dir`; cross-checks u.info when present.
/// Throws ParseError (with file name and line number) on malformed lines and
/// IntegrityError when u.info disagrees with the parsed counts.
Dataset load_movielens(const std::filesystem::path& dir, LoadReport* report = nullptr);

/// Parses a 4-column tab-separated rating file (u.data, uK.base, ua.test, ...).
std::vector<RatingRecord> read_movielens_ratings(const std::filesystem::path& file);

/// Writes u.data, u.item, u.user, u.genre, u.occupation and u.info.
void write_movielens(const Dataset& d, const std::filesystem::path& dir);

/// Writes ratings in the 4-column format, sorted by (user, item) like the shipped split files.
void write_movielens_ratings(std::span<const RatingRecord> ratings, const std::filesystem::path& file);

// ---------------------------------------------------------------------------
// LDOS-CoMoDa

/// Loads a delimited CoMoDa export. The header row names the columns
/// (userID, itemID, rating, age, sex, city, country, the twelve context
/// dimensions, director, movieCountry, movieLanguage, movieYear,
/// genre1..genre3, actor1..actor3, budget; optional title and versionDate).
/// The delimiter (comma or tab) is detected from the header.
/// Throws ParseError on out-of-range context codes or ratings.
Dataset load_comoda(const std::filesystem::path& file, LoadReport* report = nullptr);

/// Writes a CoMoDa-format file with a header row. Inverse of load_comoda.
void write_comoda(const Dataset& d, const std::filesystem::path& file, char delimiter = ',');

// ---------------------------------------------------------------------------
// Splits

enum class SplitName { u1, u2, u3, u4, u5, ua, ub, custom };

std::string_view to_string(SplitName name);

/// How to cut a dataset into train and test. Build through the factories,
/// which pin the conventions: uK folds hold out 20%, ua/ub hold out ten
/// ratings per user.
struct SplitSpec {
    SplitName name = SplitName::u1;
    double train_fraction = 0.8;
    std::size_t per_user_test_count = 10;
    std::uint64_t seed = 0;

    static SplitSpec fold(int k, std::uint64_t seed = kDefaultSeed);
    static SplitSpec ua(std::uint64_t seed = kDefaultSeed);
    static SplitSpec ub(std::uint64_t seed = kDefaultSeed);
    static SplitSpec custom(double train_fraction, std::uint64_t seed = kDefaultSeed);

    /// "u1".."u5", "ua", "ub" or "custom:<fraction>". Throws ParseError.
    static SplitSpec parse(std::string_view text, std::uint64_t seed = kDefaultSeed);

    static constexpr std::uint64_t kDefaultSeed = 1998;
};

struct Split {
    Dataset train;
    Dataset test;
};

/// Partitions the ratings of `d`.
///  - uK: one seeded permutation of all ratings is cut into five blocks of
///    floor(N/5); fold K tests on block K. Folds built from the same seed are disjoint.
///  - ua/ub: each user's ratings are permuted with the seed; ua tests on the
///    first ten, ub on the next ten.
///  - custom: seeded permutation, test size floor(N * (1 - train_fraction)).
/// Throws PreconditionError listing users with too few ratings for ua/ub.
Split generate_splits(const Dataset& d, const SplitSpec& spec);

/// Reads uK.base/uK.test (or ua/ub) shipped next to u.data and rebinds them to
/// the catalogs of `full`. Returns nullopt when the pair is absent.
std::optional<Split> load_shipped_split(const Dataset& full, const std::filesystem::path& dir,
                                        SplitName name);

}  // namespace ctxrec::ingest
