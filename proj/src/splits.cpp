#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "ctxrec/error.hpp"
#include "ctxrec/ingest.hpp"
#include "random.hpp"

namespace ctxrec::ingest {

namespace fs = std::filesystem;

std::string_view to_string(SplitName name) {
    switch (name) {
        case SplitName::u1: return "u1";
        case SplitName::u2: return "u2";
        case SplitName::u3: return "u3";
        case SplitName::u4: return "u4";
        case SplitName::u5: return "u5";
        case SplitName::ua: return "ua";
        case SplitName::ub: return "ub";
        case SplitName::custom: return "custom";
    }
    return "custom";
}

SplitSpec SplitSpec::fold(int k, std::uint64_t seed) {
    if (k < 1 || k > 5) throw DomainError(fmt::format("fold {} outside 1..5", k));
    return SplitSpec{static_cast<SplitName>(k - 1), 0.8, 10, seed};
}

SplitSpec SplitSpec::ua(std::uint64_t seed) { return SplitSpec{SplitName::ua, 0.8, 10, seed}; }

SplitSpec SplitSpec::ub(std::uint64_t seed) { return SplitSpec{SplitName::ub, 0.8, 10, seed}; }

SplitSpec SplitSpec::custom(double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DomainError(fmt::format("train fraction {} outside (0,1)", train_fraction));
    }
    return SplitSpec{SplitName::custom, train_fraction, 10, seed};
}

SplitSpec SplitSpec::parse(std::string_view text, std::uint64_t seed) {
    for (int k = 1; k <= 5; ++k) {
        if (text == fmt::format("u{}", k)) return fold(k, seed);
    }
    if (text == "ua") return ua(seed);
    if (text == "ub") return ub(seed);
    if (text.starts_with("custom:")) {
        const std::string frac(text.substr(7));
        char* end = nullptr;
        const double f = std::strtod(frac.c_str(), &end);
        if (end == frac.c_str() || *end != '\0') throw ParseError(fmt::format("bad split fraction '{}'", frac));
        try {
            return custom(f, seed);
        } catch (const DomainError& e) {
            throw ParseError(e.what());
        }
    }
    throw ParseError(fmt::format("unknown split '{}' (expected u1..u5, ua, ub or custom:<fraction>)", text));
}

namespace {

Split materialize(const Dataset& d, const std::vector<bool>& in_test) {
    std::vector<RatingRecord> train;
    std::vector<RatingRecord> test;
    const auto ratings = d.ratings();
    for (std::size_t i = 0; i < ratings.size(); ++i) (in_test[i] ? test : train).push_back(ratings[i]);
    return Split{d.with_ratings(std::move(train)), d.with_ratings(std::move(test))};
}

void validate(const SplitSpec& spec) {
    switch (spec.name) {
        case SplitName::u1:
        case SplitName::u2:
        case SplitName::u3:
        case SplitName::u4:
        case SplitName::u5:
            if (spec.train_fraction != 0.8) throw DomainError("uK splits hold out exactly 20% (train fraction 0.8)");
            break;
        case SplitName::ua:
        case SplitName::ub:
            if (spec.per_user_test_count != 10) throw DomainError("ua/ub splits hold out exactly 10 ratings per user");
            break;
        case SplitName::custom:
            if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
                throw DomainError(fmt::format("train fraction {} outside (0,1)", spec.train_fraction));
            }
            break;
    }
}

}  // namespace

Split generate_splits(const Dataset& d, const SplitSpec& spec) {
    validate(spec);
    const std::size_t n = d.ratings().size();
    std::vector<bool> in_test(n, false);
    detail::SeededRng rng(spec.seed);

    switch (spec.name) {
        case SplitName::u1:
        case SplitName::u2:
        case SplitName::u3:
        case SplitName::u4:
        case SplitName::u5: {
            std::vector<std::size_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            rng.shuffle(std::span<std::size_t>(perm));
            const std::size_t block = n / 5;
            const auto k = static_cast<std::size_t>(spec.name);
            for (std::size_t i = k * block; i < (k + 1) * block; ++i) in_test[perm[i]] = true;
            break;
        }
        case SplitName::ua:
        case SplitName::ub: {
            const std::size_t skip = spec.name == SplitName::ua ? 0 : spec.per_user_test_count;
            const std::size_t needed = skip + spec.per_user_test_count;
            std::vector<std::string> short_users;
            for (const auto& u : d.users()) {
                const auto size = d.ratings_of_user(u.id).size();
                if (size > 0 && size < needed) short_users.push_back(fmt::format("{} ({})", u.id.value(), size));
            }
            if (!short_users.empty()) {
                throw PreconditionError(fmt::format("{} split needs at least {} ratings per user; too few: {}",
                                                    to_string(spec.name), needed, fmt::join(short_users, ", ")));
            }
            const RatingRecord* base = d.ratings().data();
            for (const auto& u : d.users()) {
                const auto mine = d.ratings_of_user(u.id);
                if (mine.empty()) continue;
                std::vector<std::size_t> idx(mine.size());
                for (std::size_t i = 0; i < mine.size(); ++i) idx[i] = static_cast<std::size_t>(&mine[i] - base);
                rng.shuffle(std::span<std::size_t>(idx));
                for (std::size_t i = skip; i < needed; ++i) in_test[idx[i]] = true;
            }
            break;
        }
        case SplitName::custom: {
            std::vector<std::size_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            rng.shuffle(std::span<std::size_t>(perm));
            // Floor of the test share; the epsilon absorbs 1 - 0.8 != 0.2 in binary.
            const auto test_count = static_cast<std::size_t>(
                std::floor(static_cast<double>(n) * (1.0 - spec.train_fraction) + 1e-9));
            for (std::size_t i = 0; i < test_count; ++i) in_test[perm[i]] = true;
            break;
        }
    }
    return materialize(d, in_test);
}

std::optional<Split> load_shipped_split(const Dataset& full, const fs::path& dir, SplitName name) {
    if (name == SplitName::custom) return std::nullopt;
    const auto stem = std::string(to_string(name));
    const auto base = dir / (stem + ".base");
    const auto test = dir / (stem + ".test");
    if (!fs::exists(base) || !fs::exists(test)) return std::nullopt;
    return Split{full.with_ratings(read_movielens_ratings(base)), full.with_ratings(read_movielens_ratings(test))};
}

}  // namespace ctxrec::ingest
