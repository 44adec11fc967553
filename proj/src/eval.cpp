#include "ctxrec/eval.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ctxrec/error.hpp"
#include "ctxrec/log.hpp"

namespace ctxrec::eval {

double fmeasure(double p, double r) {
    if (!(p >= 0.0 && p <= 1.0) || !(r >= 0.0 && r <= 1.0)) {
        throw DomainError(fmt::format("precision {} and recall {} must lie in [0,1]", p, r));
    }
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

Counts& Counts::operator+=(const Counts& o) {
    n_retrieved += o.n_retrieved;
    n_relevant += o.n_relevant;
    n_hit += o.n_hit;
    return *this;
}

Metrics metrics_from(const Counts& c) {
    Metrics m;
    if (c.n_retrieved > 0) m.precision = static_cast<double>(c.n_hit) / static_cast<double>(c.n_retrieved);
    if (c.n_relevant > 0) m.recall = static_cast<double>(c.n_hit) / static_cast<double>(c.n_relevant);
    m.fmeasure = fmeasure(m.precision, m.recall);
    return m;
}

namespace {

enum class Outcome { evaluated, absent, cold_start };

struct Slot {
    Outcome outcome = Outcome::evaluated;
    UserResult result;
};

}  // namespace

EvalReport evaluate_topn(const Dataset& train, const Dataset& test, const GenreWeights& weights,
                         const EvalConfig& config) {
    if (test.ratings().empty()) throw PreconditionError("test set holds no ratings");

    const Recommender recommender(train, config.context, weights, config.recommend);
    const Dataset filtered_test = prefilter(test, config.context);
    const cf::RatingMatrix truth(filtered_test);

    const auto& users = truth.users();
    std::vector<Slot> slots(users.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < users.size(); i = next++) {
            const UserId u = users[i];
            Slot& slot = slots[i];
            slot.result.user = u;
            if (!recommender.corpus().is_active(u)) {
                slot.outcome = Outcome::absent;
                continue;
            }
            RecommendationList list;
            try {
                list = recommender.recommend(u);
            } catch (const ColdStartError&) {
                slot.outcome = Outcome::cold_start;
                continue;
            }
            Counts c;
            c.n_retrieved = list.entries.size();
            const auto& row = truth.user_row(u);
            for (const auto& e : row) c.n_relevant += e.value >= config.threshold;
            for (const auto& entry : list.entries) {
                const auto r = truth.rating(u, entry.item);
                c.n_hit += r && *r >= config.threshold;
            }
            slot.result.counts = c;
            slot.result.metrics = metrics_from(c);
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(users.size())));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    EvalReport report;
    report.config = config;
    report.test_users = users.size();
    Metrics sum;
    for (const auto& s : slots) {
        switch (s.outcome) {
            case Outcome::absent: ++report.skipped_absent; break;
            case Outcome::cold_start: ++report.skipped_cold_start; break;
            case Outcome::evaluated:
                report.counts += s.result.counts;
                sum.precision += s.result.metrics.precision;
                sum.recall += s.result.metrics.recall;
                sum.fmeasure += s.result.metrics.fmeasure;
                report.per_user.push_back(s.result);
                break;
        }
    }
    report.micro = metrics_from(report.counts);
    if (!report.per_user.empty()) {
        const auto n = static_cast<double>(report.per_user.size());
        report.macro = {sum.precision / n, sum.recall / n, sum.fmeasure / n};
    }
    if (report.skipped_absent + report.skipped_cold_start > 0) {
        logger()->info("skipped {} test users without training ratings and {} cold-start users",
                       report.skipped_absent, report.skipped_cold_start);
    }
    return report;
}

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    if (values.empty()) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

CrossValidation cross_validate(const std::vector<ingest::SplitSpec>& specs, const SplitSource& splits,
                               const WeightSource& weights, const EvalConfig& config) {
    CrossValidation cv;
    std::vector<double> p, r, f;
    for (const auto& spec : specs) {
        SplitOutcome outcome{std::string(ingest::to_string(spec.name)), std::nullopt, std::nullopt};
        try {
            const auto split = splits(spec);
            EvalConfig c = config;
            c.split = outcome.split;
            outcome.report = evaluate_topn(split.train, split.test, weights(split.train), c);
            p.push_back(outcome.report->micro.precision);
            r.push_back(outcome.report->micro.recall);
            f.push_back(outcome.report->micro.fmeasure);
            ++cv.succeeded;
        } catch (const Error& e) {
            outcome.error = e.what();
            logger()->error("split {}: {}", outcome.split, e.what());
        }
        cv.splits.push_back(std::move(outcome));
    }
    cv.precision = summarize(p);
    cv.recall = summarize(r);
    cv.fmeasure = summarize(f);
    return cv;
}

CrossValidation cross_validate(const Dataset& d, const std::vector<ingest::SplitSpec>& specs,
                               const WeightSource& weights, const EvalConfig& config) {
    return cross_validate(
        specs, [&](const ingest::SplitSpec& spec) { return ingest::generate_splits(d, spec); }, weights, config);
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json config_json(const EvalConfig& c) {
    const auto& e = c.recommend.engine;
    nlohmann::ordered_json j;
    j["split"] = c.split;
    j["context"] = c.context.to_string();
    j["match_policy"] = std::string(to_string(c.context.policy()));
    j["k"] = e.k;
    j["min_overlap"] = e.min_overlap;
    j["measure"] = std::string(cf::to_string(e.measure));
    j["variant"] = std::string(cf::to_string(e.variant));
    j["exclude_negative"] = e.exclude_negative;
    j["signed_denominator"] = e.signed_denominator;
    j["alpha"] = c.recommend.alpha;
    j["n"] = c.recommend.n;
    j["genre_aggregation"] = c.recommend.aggregation == GenreAggregation::mean ? "mean" : "max";
    j["threshold"] = c.threshold;
    return j;
}

nlohmann::ordered_json metrics_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["fmeasure"] = m.fmeasure;
    return j;
}

nlohmann::ordered_json summary_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["schema"] = kSchemaTag;
    j["record"] = "summary";
    j["n_retrieved"] = r.counts.n_retrieved;
    j["n_relevant"] = r.counts.n_relevant;
    j["n_hit"] = r.counts.n_hit;
    j["precision"] = r.micro.precision;
    j["recall"] = r.micro.recall;
    j["fmeasure"] = r.micro.fmeasure;
    j["macro"] = metrics_json(r.macro);
    j["test_users"] = r.test_users;
    j["evaluated_users"] = r.per_user.size();
    j["skipped_absent"] = r.skipped_absent;
    j["skipped_cold_start"] = r.skipped_cold_start;
    j["config"] = config_json(r.config);
    return j;
}

}  // namespace

std::string to_jsonl(const EvalReport& report, bool per_user) {
    std::string out = summary_json(report).dump() + "\n";
    if (!per_user) return out;
    for (const auto& u : report.per_user) {
        nlohmann::ordered_json j;
        j["schema"] = kSchemaTag;
        j["record"] = "user";
        j["split"] = report.config.split;
        j["user_id"] = u.user.value();
        j["n_retrieved"] = u.counts.n_retrieved;
        j["n_relevant"] = u.counts.n_relevant;
        j["n_hit"] = u.counts.n_hit;
        j["precision"] = u.metrics.precision;
        j["recall"] = u.metrics.recall;
        j["fmeasure"] = u.metrics.fmeasure;
        out += j.dump() + "\n";
    }
    return out;
}

std::string to_jsonl(const CrossValidation& cv) {
    std::string out;
    for (const auto& s : cv.splits) {
        if (s.report) {
            out += to_jsonl(*s.report, false);
        } else {
            nlohmann::ordered_json j;
            j["schema"] = kSchemaTag;
            j["record"] = "split_error";
            j["split"] = s.split;
            j["error"] = s.error.value_or("");
            out += j.dump() + "\n";
        }
    }
    nlohmann::ordered_json j;
    j["schema"] = kSchemaTag;
    j["record"] = "cv_summary";
    j["splits"] = cv.splits.size();
    j["succeeded"] = cv.succeeded;
    for (const auto& [name, m] : {std::pair{"precision", cv.precision}, std::pair{"recall", cv.recall},
                                  std::pair{"fmeasure", cv.fmeasure}}) {
        j[name] = {{"mean", m.mean}, {"stddev", m.stddev}};
    }
    out += j.dump() + "\n";
    return out;
}

std::string to_table(const EvalReport& r) {
    const auto& e = r.config.recommend.engine;
    std::string out;
    auto line = [&](std::string_view k, const std::string& v) { out += fmt::format("{:<20} {}\n", k, v); };
    line("split", r.config.split);
    line("context", r.config.context.empty() ? "(none)" : r.config.context.to_string());
    line("measure", std::string(cf::to_string(e.measure)));
    line("variant", std::string(cf::to_string(e.variant)));
    line("k", fmt::format("{}", e.k));
    line("min_overlap", fmt::format("{}", e.min_overlap));
    line("alpha", fmt::format("{}", r.config.recommend.alpha));
    line("n", fmt::format("{}", r.config.recommend.n));
    line("threshold", fmt::format("{}", r.config.threshold));
    line("users", fmt::format("{} tested, {} evaluated, {} absent, {} cold start", r.test_users, r.per_user.size(),
                              r.skipped_absent, r.skipped_cold_start));
    line("N / Np / Nt", fmt::format("{} / {} / {}", r.counts.n_retrieved, r.counts.n_relevant, r.counts.n_hit));
    out += fmt::format("{:<20} {:>10} {:>10} {:>10}\n", "", "precision", "recall", "F");
    out += fmt::format("{:<20} {:>10.4f} {:>10.4f} {:>10.4f}\n", "micro", r.micro.precision, r.micro.recall,
                       r.micro.fmeasure);
    out += fmt::format("{:<20} {:>10.4f} {:>10.4f} {:>10.4f}\n", "macro", r.macro.precision, r.macro.recall,
                       r.macro.fmeasure);
    return out;
}

std::string to_table(const CrossValidation& cv) {
    std::string out = fmt::format("{:<8} {:>10} {:>10} {:>10} {:>8}\n", "split", "precision", "recall", "F", "users");
    for (const auto& s : cv.splits) {
        if (s.report) {
            const auto& m = s.report->micro;
            out += fmt::format("{:<8} {:>10.4f} {:>10.4f} {:>10.4f} {:>8}\n", s.split, m.precision, m.recall,
                               m.fmeasure, s.report->per_user.size());
        } else {
            out += fmt::format("{:<8} error: {}\n", s.split, s.error.value_or(""));
        }
    }
    out += fmt::format("{:<8} {:>10.4f} {:>10.4f} {:>10.4f}\n", "mean", cv.precision.mean, cv.recall.mean,
                       cv.fmeasure.mean);
    out += fmt::format("{:<8} {:>10.4f} {:>10.4f} {:>10.4f}\n", "stddev", cv.precision.stddev, cv.recall.stddev,
                       cv.fmeasure.stddev);
    return out;
}

}  // namespace ctxrec::eval
