#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ctxrec/ingest.hpp"
#include "ctxrec/pipeline.hpp"

namespace ctxrec::eval {

/// 2pr/(p+r), 0 when p + r = 0. Throws DomainError outside [0,1].
double fmeasure(double p, double r);

struct Counts {
    std::size_t n_retrieved = 0;  ///< N
    std::size_t n_relevant = 0;   ///< Np
    std::size_t n_hit = 0;        ///< Nt

    Counts& operator+=(const Counts& o);
    friend bool operator==(const Counts&, const Counts&) = default;
};

struct Metrics {
    double precision = 0;
    double recall = 0;
    double fmeasure = 0;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// P = Nt/N, R = Nt/Np, F from both; each 0 on a zero denominator.
Metrics metrics_from(const Counts& c);

struct UserResult {
    UserId user;
    Counts counts;
    Metrics metrics;
};

struct EvalConfig {
    RecommendConfig recommend;
    ContextQuery context;
    double threshold = 4.0;  ///< test ratings at or above are relevant
    std::string split = "custom";
    unsigned workers = 1;
};

struct EvalReport {
    Counts counts;             ///< summed over evaluated users
    Metrics micro;             ///< from the summed counts (headline)
    Metrics macro;             ///< mean of per-user metrics
    std::vector<UserResult> per_user;  ///< ascending user id
    std::size_t test_users = 0;
    std::size_t skipped_absent = 0;      ///< test users without training ratings
    std::size_t skipped_cold_start = 0;  ///< users the filtered corpus cannot serve
    EvalConfig config;
};

/// For each user with test ratings in the context, recommends n items from
/// `train` and counts hits against the user's relevant test items.
/// Throws PreconditionError when `test` holds no ratings.
EvalReport evaluate_topn(const Dataset& train, const Dataset& test, const GenreWeights& weights,
                         const EvalConfig& config);

struct MetricSummary {
    double mean = 0;
    double stddev = 0;  ///< sample standard deviation; 0 for a single report
};

struct SplitOutcome {
    std::string split;
    std::optional<EvalReport> report;
    std::optional<std::string> error;
};

struct CrossValidation {
    std::vector<SplitOutcome> splits;
    MetricSummary precision;
    MetricSummary recall;
    MetricSummary fmeasure;
    std::size_t succeeded = 0;
};

MetricSummary summarize(const std::vector<double>& values);

/// Weights used for one split, computed from its training part.
using WeightSource = std::function<GenreWeights(const Dataset& train)>;

/// Produces the train/test pair for one spec.
using SplitSource = std::function<ingest::Split(const ingest::SplitSpec&)>;

/// Evaluates each split and summarizes micro metrics over the splits that
/// succeeded. Library errors are attached to their split.
CrossValidation cross_validate(const std::vector<ingest::SplitSpec>& specs, const SplitSource& splits,
                               const WeightSource& weights, const EvalConfig& config);

/// Same, with every split generated from `d`.
CrossValidation cross_validate(const Dataset& d, const std::vector<ingest::SplitSpec>& specs,
                               const WeightSource& weights, const EvalConfig& config);

inline constexpr std::string_view kSchemaTag = "ctxrec.eval/1";

/// JSON lines: one "summary" record, then one "user" record per evaluated user.
std::string to_jsonl(const EvalReport& report, bool per_user = true);
std::string to_jsonl(const CrossValidation& cv);

/// Human-readable table.
std::string to_table(const EvalReport& report);
std::string to_table(const CrossValidation& cv);

}  // namespace ctxrec::eval
