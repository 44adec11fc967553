#include "ctxrec/contextfilter.hpp"

#include <fmt/format.h>

#include "ctxrec/error.hpp"
#include "ctxrec/io.hpp"
#include "ctxrec/log.hpp"
#include "parse_util.hpp"

namespace ctxrec {

std::string_view to_string(MatchPolicy p) { return p == MatchPolicy::strict ? "strict" : "permissive"; }

ContextQuery ContextQuery::parse(std::string_view text, MatchPolicy policy) {
    ContextQuery q;
    q.policy_ = policy;
    if (io::trim(text).empty()) return q;
    for (auto token : io::split_fields(text, ',')) {
        token = io::trim(token);
        const auto eq = token.find('=');
        if (eq == std::string_view::npos) throw ParseError(fmt::format("context term '{}' is not name=value", token));
        const auto name = io::trim(token.substr(0, eq));
        const auto value = io::trim(token.substr(eq + 1));
        const auto dim = context_dim_from_name(name);
        if (!dim) throw ParseError(fmt::format("unknown context dimension '{}'", name));
        if (q.constraint(*dim)) throw ParseError(fmt::format("context dimension '{}' given twice", name));
        const auto code = detail::parse_integer(value);
        if (!code || *code < 1 || *code > context_dim_cardinality(*dim)) {
            throw ParseError(fmt::format("{}={} outside codebook 1..{}", name, value, context_dim_cardinality(*dim)));
        }
        q.require(*dim, static_cast<int>(*code));
    }
    return q;
}

ContextQuery& ContextQuery::require(ContextDim dim, int code) {
    if (code < 1 || code > context_dim_cardinality(dim)) {
        throw DomainError(fmt::format("{}={} outside codebook 1..{}", context_dim_name(dim), code,
                                      context_dim_cardinality(dim)));
    }
    constraints_[static_cast<std::size_t>(dim)] = code;
    return *this;
}

bool ContextQuery::empty() const { return size() == 0; }

std::size_t ContextQuery::size() const {
    std::size_t n = 0;
    for (const auto& c : constraints_) n += c.has_value();
    return n;
}

std::string ContextQuery::to_string() const {
    std::string out;
    for (ContextDim dim : kAllContextDims) {
        if (const auto c = constraint(dim)) {
            if (!out.empty()) out += ',';
            out += fmt::format("{}={}", context_dim_name(dim), *c);
        }
    }
    return out;
}

bool matches(const RatingRecord& r, const ContextQuery& q) {
    if (q.empty()) return true;
    if (!r.context) return false;
    for (ContextDim dim : kAllContextDims) {
        const auto want = q.constraint(dim);
        if (!want) continue;
        const auto have = r.context->get(dim);
        if (!have) {
            if (q.policy() == MatchPolicy::strict) return false;
            continue;
        }
        if (*have != *want) return false;
    }
    return true;
}

Dataset prefilter(const Dataset& d, const ContextQuery& q) {
    std::vector<RatingRecord> kept;
    for (const auto& r : d.ratings()) {
        if (matches(r, q)) kept.push_back(r);
    }
    if (kept.empty() && !d.ratings().empty()) {
        logger()->warn("context '{}' ({}) matches none of {} ratings", q.to_string(), to_string(q.policy()),
                       d.ratings().size());
    }
    return d.with_ratings(std::move(kept));
}

}  // namespace ctxrec
