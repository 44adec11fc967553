#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "ctxrec/model.hpp"

namespace ctxrec {

/// How a constrained dimension treats a rating whose value is missing.
enum class MatchPolicy { strict, permissive };

std::string_view to_string(MatchPolicy p);

/// Exact-value constraints over any subset of the twelve context dimensions.
class ContextQuery {
public:
    ContextQuery() = default;

    /// "time=3,social=2"; whitespace around tokens is ignored, "" is the
    /// empty query. Throws ParseError on unknown names, repeated dimensions
    /// or codes outside a codebook.
    static ContextQuery parse(std::string_view text, MatchPolicy policy = MatchPolicy::strict);

    /// Adds or replaces a constraint. Throws DomainError on a code outside the codebook.
    ContextQuery& require(ContextDim dim, int code);

    std::optional<int> constraint(ContextDim dim) const { return constraints_[static_cast<std::size_t>(dim)]; }
    bool empty() const;
    std::size_t size() const;

    MatchPolicy policy() const noexcept { return policy_; }
    void set_policy(MatchPolicy p) noexcept { policy_ = p; }

    /// Canonical text, dimensions in column order; parse(to_string()) round-trips.
    std::string to_string() const;

    friend bool operator==(const ContextQuery&, const ContextQuery&) = default;

private:
    std::array<std::optional<int>, kContextDimCount> constraints_{};
    MatchPolicy policy_ = MatchPolicy::strict;
};

/// A record without context (MovieLens) matches only the empty query.
bool matches(const RatingRecord& r, const ContextQuery& q);

/// Ratings matching `q`; catalogs are kept whole so ids stay valid, with
/// filtered-out users and items left inactive. Logs a warning when nothing survives.
Dataset prefilter(const Dataset& d, const ContextQuery& q);

}  // namespace ctxrec
