#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "ctxrec/error.hpp"
#include "ctxrec/model.hpp"
#include "support.hpp"

using namespace ctxrec;

namespace {

RatingRecord rec(std::uint32_t u, std::uint32_t i, int stars, std::optional<std::int64_t> ts = std::nullopt) {
    return RatingRecord{UserId(u), ItemId(i), Rating(stars), std::nullopt, ts};
}

Movie movie(std::uint32_t id, std::vector<std::uint16_t> genres = {0}) {
    Movie m;
    m.id = ItemId(id);
    m.title = "m" + std::to_string(id);
    m.genres = std::move(genres);
    return m;
}

}  // namespace

TEST(Rating, RejectsOutOfScale) {
    EXPECT_THROW(Rating(0), DomainError);
    EXPECT_THROW(Rating(6), DomainError);
    EXPECT_EQ(Rating(1).value(), 1);
    EXPECT_EQ(Rating(5).value(), 5);
}

TEST(ContextVector, MissingCodeRoundTrips) {
    std::array<int, kContextDimCount> codes{};
    codes.fill(ContextVector::kMissingCode);
    codes[0] = 3;   // time = Evening
    codes[1] = 2;   // daytype = Weekend
    const auto c = ContextVector::from_codes(codes);
    EXPECT_EQ(c.get(ContextDim::time), 3);
    EXPECT_EQ(c.get(ContextDim::daytype), 2);
    EXPECT_FALSE(c.get(ContextDim::weather).has_value());
    EXPECT_EQ(c.codes(), codes);
    EXPECT_EQ(ContextVector().with(ContextDim::time, 3).with(ContextDim::daytype, 2).with(ContextDim::time, 3),
              ContextVector::from_codes(codes).with(ContextDim::time, 3));
}

TEST(ContextVector, RejectsCodesOutsideCodebook) {
    std::array<int, kContextDimCount> codes{};
    codes.fill(-1);
    codes[static_cast<std::size_t>(ContextDim::physical)] = 3;  // only Healthy / Ill
    EXPECT_THROW(ContextVector::from_codes(codes), DomainError);
    codes[static_cast<std::size_t>(ContextDim::physical)] = 0;
    EXPECT_THROW(ContextVector::from_codes(codes), DomainError);
}

TEST(ContextDims, NamesAndCodebooks) {
    EXPECT_EQ(context_dim_name(ContextDim::end_emo), "endEmo");
    EXPECT_EQ(context_dim_from_name("dominantEmo"), ContextDim::dominant_emo);
    EXPECT_FALSE(context_dim_from_name("weekday").has_value());
    EXPECT_EQ(context_value_label(ContextDim::daytype, 2), "Weekend");
    EXPECT_EQ(context_dim_cardinality(ContextDim::social), 7);
    EXPECT_EQ(context_dim_cardinality(ContextDim::interaction), 2);
    EXPECT_THROW(context_value_label(ContextDim::mood, 4), DomainError);
}

TEST(Dataset, RejectsDanglingReferences) {
    EXPECT_THROW(make_dataset({{UserId(1)}}, {movie(1)}, {rec(2, 1, 3)}, {"g"}), IntegrityError);
    EXPECT_THROW(make_dataset({{UserId(1)}}, {movie(1)}, {rec(1, 9, 3)}, {"g"}), IntegrityError);
    EXPECT_THROW(make_dataset({{UserId(1)}}, {movie(1, {4})}, {}, {"g"}), IntegrityError);
    EXPECT_THROW(make_dataset({{UserId(1)}, {UserId(1)}}, {movie(1)}, {}, {"g"}), IntegrityError);
}

TEST(Dataset, RejectsDuplicateRatings) {
    EXPECT_THROW(make_dataset({{UserId(1)}}, {movie(1)}, {rec(1, 1, 3, 10), rec(1, 1, 4, 10)}, {"g"}),
                 DuplicateError);
    // A different timestamp is a re-rating, not a duplicate.
    EXPECT_NO_THROW(make_dataset({{UserId(1)}}, {movie(1)}, {rec(1, 1, 3, 10), rec(1, 1, 4, 11)}, {"g"}));
}

TEST(Dataset, CanonicalOrderIsIndependentOfInputOrder) {
    std::mt19937_64 rng(7);
    const auto d = testing_support::random_context_dataset(rng, 8, 12, 60);
    std::vector<RatingRecord> shuffled(d.ratings().begin(), d.ratings().end());
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::vector<UserProfile> users(d.users().begin(), d.users().end());
    std::vector<Movie> movies(d.movies().begin(), d.movies().end());
    std::reverse(users.begin(), users.end());
    std::reverse(movies.begin(), movies.end());
    const auto again = make_dataset(users, movies, shuffled, d.genre_catalog());
    EXPECT_EQ(again, d);
}

TEST(Dataset, IndexesByUserAndItem) {
    const auto d = make_dataset({{UserId(1)}, {UserId(2)}, {UserId(3)}}, {movie(10), movie(20), movie(30)},
                                {rec(2, 20, 4), rec(1, 20, 5), rec(1, 10, 3)}, {"g"});
    ASSERT_EQ(d.ratings_of_user(UserId(1)).size(), 2u);
    EXPECT_EQ(d.ratings_of_user(UserId(1))[0].item, ItemId(10));
    const auto item20 = d.ratings_of_item(ItemId(20));
    ASSERT_EQ(item20.size(), 2u);
    EXPECT_EQ(item20[0]->user, UserId(1));
    EXPECT_EQ(item20[1]->user, UserId(2));
    EXPECT_TRUE(d.is_active(UserId(2)));
    EXPECT_FALSE(d.is_active(UserId(3)));
    EXPECT_FALSE(d.is_active(ItemId(30)));
    EXPECT_EQ(d.active_user_count(), 2u);
    EXPECT_EQ(d.active_item_count(), 2u);
    EXPECT_THROW(d.user(UserId(4)), NotFoundError);
    EXPECT_THROW(d.ratings_of_item(ItemId(99)), NotFoundError);
}

TEST(Dataset, WithRatingsKeepsCatalogs) {
    const auto d = make_dataset({{UserId(1)}, {UserId(2)}}, {movie(1), movie(2)}, {rec(1, 1, 3), rec(2, 2, 4)},
                                {"g"});
    const auto sub = d.with_ratings({rec(1, 1, 3)});
    EXPECT_EQ(sub.users().size(), 2u);
    EXPECT_EQ(sub.movies().size(), 2u);
    EXPECT_FALSE(sub.is_active(UserId(2)));
    EXPECT_EQ(d.ratings().size(), 2u);
}

TEST(UserVector, AveragesRepeatedRatings) {
    const auto d = make_dataset({{UserId(1)}}, {movie(1), movie(2)},
                                {rec(1, 1, 2, 1), rec(1, 1, 5, 2), rec(1, 2, 4, 3)}, {"g"});
    const auto v = user_vector(d, UserId(1));
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0].key, 1u);
    EXPECT_DOUBLE_EQ(v[0].value, 3.5);
    EXPECT_DOUBLE_EQ(v[1].value, 4.0);
}
