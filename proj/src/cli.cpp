#include "ctxrec/cli.hpp"

#include <cstdlib>
#include <map>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ctxrec/ahp.hpp"
#include "ctxrec/error.hpp"
#include "ctxrec/eval.hpp"
#include "ctxrec/ingest.hpp"
#include "ctxrec/io.hpp"
#include "ctxrec/log.hpp"
#include "ctxrec/pipeline.hpp"
#include "parse_util.hpp"

namespace ctxrec::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// RunConfig

const std::vector<std::string_view>& RunConfig::keys() {
    static const std::vector<std::string_view> k = {
        "dataset", "format",    "split",   "split_source", "context", "match_policy", "k",
        "min_overlap", "alpha", "n",       "threshold",    "measure", "variant",      "weights",
        "scale",   "aggregation", "out",   "seed",         "workers", "user",
    };
    return k;
}

namespace {

std::string alpha_text(const std::optional<double>& a) { return a ? fmt::format("{}", *a) : "auto"; }

template <class T>
T parse_count(std::string_view key, std::string_view value, long long min) {
    const auto v = detail::parse_integer(value);
    if (!v || *v < min) throw ParseError(fmt::format("{}: expected an integer >= {}, got '{}'", key, min, value));
    return static_cast<T>(*v);
}

double parse_number(std::string_view key, std::string_view value) {
    const auto v = detail::parse_real(value);
    if (!v) throw ParseError(fmt::format("{}: expected a number, got '{}'", key, value));
    return *v;
}

void expect_one_of(std::string_view key, std::string_view value, std::initializer_list<std::string_view> allowed) {
    for (auto a : allowed) {
        if (value == a) return;
    }
    throw ParseError(fmt::format("{}: '{}' is not one of {}", key, value, fmt::join(allowed, ", ")));
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view raw) {
    const std::string value(io::trim(raw));
    if (key == "dataset") {
        dataset = value;
    } else if (key == "format") {
        expect_one_of(key, value, {"auto", "movielens", "comoda"});
        format = value;
    } else if (key == "split") {
        split = value;
    } else if (key == "split_source") {
        expect_one_of(key, value, {"generate", "shipped"});
        split_source = value;
    } else if (key == "context") {
        ContextQuery::parse(value);
        context = value;
    } else if (key == "match_policy") {
        expect_one_of(key, value, {"strict", "permissive"});
        match_policy = value;
    } else if (key == "k") {
        k = parse_count<std::size_t>(key, value, 1);
    } else if (key == "min_overlap") {
        min_overlap = parse_count<std::size_t>(key, value, 1);
    } else if (key == "alpha") {
        if (value == "auto") {
            alpha.reset();
        } else {
            const double a = parse_number(key, value);
            if (!(a >= 0.0 && a <= 1.0)) throw ParseError(fmt::format("alpha: {} outside [0,1]", value));
            alpha = a;
        }
    } else if (key == "n") {
        n = parse_count<std::size_t>(key, value, 1);
    } else if (key == "threshold") {
        threshold = parse_number(key, value);
    } else if (key == "measure") {
        if (!cf::measure_from_string(value)) throw ParseError(fmt::format("measure: unknown '{}'", value));
        measure = value;
    } else if (key == "variant") {
        if (!cf::variant_from_string(value)) throw ParseError(fmt::format("variant: unknown '{}'", value));
        variant = value;
    } else if (key == "weights") {
        if (value != "frequency" && !value.starts_with("file:") && !value.starts_with("matrix:")) {
            throw ParseError(fmt::format("weights: expected frequency, file:<path> or matrix:<path>, got '{}'", value));
        }
        weights = value;
    } else if (key == "scale") {
        expect_one_of(key, value, {"approach5", "saaty9"});
        scale = value;
    } else if (key == "aggregation") {
        expect_one_of(key, value, {"mean", "max"});
        aggregation = value;
    } else if (key == "out") {
        out = value;
    } else if (key == "seed") {
        seed = parse_count<std::uint64_t>(key, value, 0);
    } else if (key == "workers") {
        workers = parse_count<unsigned>(key, value, 0);
    } else if (key == "user") {
        user = parse_count<std::uint32_t>(key, value, 1);
    } else {
        throw ParseError(fmt::format("unknown configuration key '{}'", key));
    }
}

std::string RunConfig::to_text() const {
    std::string s;
    auto add = [&](std::string_view key, const std::string& value) { s += fmt::format("{} = {}\n", key, value); };
    add("dataset", dataset);
    add("format", format);
    add("split", split);
    add("split_source", split_source);
    add("context", context);
    add("match_policy", match_policy);
    add("k", fmt::format("{}", k));
    add("min_overlap", fmt::format("{}", min_overlap));
    add("alpha", alpha_text(alpha));
    add("n", fmt::format("{}", n));
    add("threshold", fmt::format("{}", threshold));
    add("measure", measure);
    add("variant", variant);
    add("weights", weights);
    add("scale", scale);
    add("aggregation", aggregation);
    add("out", out);
    add("seed", fmt::format("{}", seed));
    add("workers", fmt::format("{}", workers));
    add("user", user ? fmt::format("{}", *user) : "");
    return s;
}

void apply_config_file(RunConfig& config, const fs::path& file) {
    const auto text = io::read_file(file);
    std::size_t line_no = 0;
    for (auto line : io::split_lines(text)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = io::trim(line);
        if (line.empty()) continue;
        const detail::LineError where{file, line_no};
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) where.fail("expected 'key = value'");
        const auto key = io::trim(line.substr(0, eq));
        const auto value = io::trim(line.substr(eq + 1));
        // An empty value keeps the default ("user =" in an echoed config).
        if (value.empty() && (key == "user" || key == "alpha")) continue;
        try {
            config.set(key, value);
        } catch (const ParseError& e) {
            where.fail(e.what());
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

/// Bad flag values are usage errors, unlike malformed files.
class UsageError : public Error {
public:
    using Error::Error;
};

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const UsageError*>(&e)) return kUsage;
    if (dynamic_cast<const ParseError*>(&e)) return kParse;
    if (dynamic_cast<const IntegrityError*>(&e) || dynamic_cast<const DuplicateError*>(&e)) return kIntegrity;
    if (dynamic_cast<const NotFoundError*>(&e)) return kNotFound;
    if (dynamic_cast<const ColdStartError*>(&e)) return kColdStart;
    return kDomain;
}

struct Loaded {
    Dataset data;
    bool movielens = false;
    fs::path root;
};

Loaded load(const RunConfig& c, std::ostream& err) {
    if (c.dataset.empty()) throw UsageError("no dataset given (--dataset, config 'dataset' or $CTXREC_DATASET_ROOT)");
    const fs::path path(c.dataset);
    if (!fs::exists(path)) throw NotFoundError(fmt::format("dataset '{}' does not exist", c.dataset));
    const bool movielens = c.format == "movielens" || (c.format == "auto" && fs::is_directory(path));
    ingest::LoadReport report;
    Loaded l{movielens ? ingest::load_movielens(path, &report) : ingest::load_comoda(path, &report), movielens, path};
    for (const auto& w : report.warnings) fmt::print(err, "warning: {}\n", w);
    return l;
}

ContextQuery query_of(const RunConfig& c) {
    return ContextQuery::parse(c.context, c.match_policy == "strict" ? MatchPolicy::strict : MatchPolicy::permissive);
}

ahp::Scale scale_of(const RunConfig& c) { return c.scale == "saaty9" ? ahp::Scale::saaty9 : ahp::Scale::approach5; }

GenreWeights weights_of(const RunConfig& c, const Dataset& d) {
    if (c.weights.starts_with("file:")) return read_weight_table(d.genre_catalog(), c.weights.substr(5));
    if (c.weights.starts_with("matrix:")) {
        return weights_from_matrix(d.genre_catalog(), ahp::read_matrix_file(c.weights.substr(7)));
    }
    return weights_from_frequencies(d, scale_of(c));
}

RecommendConfig recommend_config(const RunConfig& c, bool movielens) {
    RecommendConfig r;
    r.engine.measure = *cf::measure_from_string(c.measure);
    r.engine.variant = *cf::variant_from_string(c.variant);
    r.engine.k = c.k;
    r.engine.min_overlap = c.min_overlap;
    r.alpha = c.alpha.value_or(movielens ? 1.0 : 0.7);
    r.n = c.n;
    r.aggregation = c.aggregation == "max" ? GenreAggregation::max : GenreAggregation::mean;
    return r;
}

unsigned worker_count(const RunConfig& c) {
    return c.workers != 0 ? c.workers : std::max(1u, std::thread::hardware_concurrency());
}

/// The effective configuration as '#' comment lines.
std::string config_comment(const RunConfig& c) {
    const std::string text = c.to_text();
    std::string s;
    for (auto line : io::split_lines(text)) s += fmt::format("# {}\n", line);
    return s;
}

void emit(std::ostream& out, const RunConfig& c, const std::string& text) {
    if (c.out.empty()) {
        out << text;
    } else {
        io::write_file_atomically(c.out, text);
    }
}

std::vector<ingest::SplitSpec> split_specs(const RunConfig& c) {
    std::vector<ingest::SplitSpec> specs;
    const std::string list = c.split == "cv" ? "u1,u2,u3,u4,u5" : c.split;
    for (auto name : io::split_fields(list, ',')) {
        name = io::trim(name);
        try {
            specs.push_back(ingest::SplitSpec::parse(name, c.seed));
        } catch (const ParseError& e) {
            throw UsageError(e.what());
        }
    }
    return specs;
}

ingest::Split make_split(const Loaded& l, const RunConfig& c, const ingest::SplitSpec& spec) {
    if (c.split_source == "shipped") {
        if (!l.movielens) throw UsageError("shipped splits exist only for MovieLens");
        auto shipped = ingest::load_shipped_split(l.data, l.root, spec.name);
        if (!shipped) {
            throw NotFoundError(fmt::format("no {0}.base/{0}.test in {1}", ingest::to_string(spec.name),
                                            l.root.string()));
        }
        return std::move(*shipped);
    }
    return ingest::generate_splits(l.data, spec);
}

// ---------------------------------------------------------------------------
// Subcommands

int run_ingest(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const auto l = load(c, err);
    const auto& d = l.data;
    std::string text = fmt::format("{} users, {} items, {} ratings\n", d.users().size(), d.movies().size(),
                                   d.ratings().size());
    text += fmt::format("format: {}\nactive: {} users, {} items\ngenres: {}\n", to_string(d.source()),
                        d.active_user_count(), d.active_item_count(), d.genre_catalog().size());
    emit(out, c, text);
    return kOk;
}

int run_split(const RunConfig& c, std::ostream& out, std::ostream& err) {
    if (c.out.empty()) throw UsageError("split needs --out <directory>");
    const auto l = load(c, err);
    fs::create_directories(c.out);
    for (const auto& spec : split_specs(c)) {
        const auto split = ingest::generate_splits(l.data, spec);
        std::string stem(ingest::to_string(spec.name));
        if (l.movielens) {
            ingest::write_movielens_ratings(split.train.ratings(), fs::path(c.out) / (stem + ".base"));
            ingest::write_movielens_ratings(split.test.ratings(), fs::path(c.out) / (stem + ".test"));
        } else {
            ingest::write_comoda(split.train, fs::path(c.out) / (stem + ".base.csv"));
            ingest::write_comoda(split.test, fs::path(c.out) / (stem + ".test.csv"));
        }
        fmt::print(out, "{}: {} train, {} test\n", stem, split.train.ratings().size(), split.test.ratings().size());
    }
    return kOk;
}

int run_weights(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const auto l = load(c, err);
    const auto w = weights_of(c, l.data);
    std::string text = config_comment(c);
    text += fmt::format("provenance: {}\n", to_string(w.provenance));
    if (w.provenance == WeightProvenance::eigen_from_frequency) {
        const auto freq = genre_frequencies(l.data);
        text += fmt::format("{:<14} {:>10} {:>8}\n", "genre", "weight", "ratings");
        for (std::size_t g = 0; g < w.weights.size(); ++g) {
            text += fmt::format("{:<14} {:>10.4f} {:>8}\n", w.names[g], w.weights[g], freq[g]);
        }
    } else {
        text += fmt::format("{:<14} {:>10}\n", "genre", "weight");
        for (std::size_t g = 0; g < w.weights.size(); ++g) {
            text += fmt::format("{:<14} {:>10.4f}\n", w.names[g], w.weights[g]);
        }
    }
    if (w.consistency) {
        text += fmt::format("lambda_max {:.4f}\nCI {:.4f}\nCR {:.1f}%{}\n", w.consistency->lambda_max,
                            w.consistency->ci, w.consistency->cr, w.consistency->acceptable ? "" : " (inconsistent)");
    }
    if (w.raw_sum != 1.0) text += fmt::format("raw sum {}\n", w.raw_sum);
    for (const auto& msg : w.warnings) text += fmt::format("warning: {}\n", msg);
    emit(out, c, text);
    return kOk;
}

std::string matrix_report(const ahp::ComparisonMatrix& m, ahp::RandomIndexTable table) {
    const auto eig = ahp::principal_eigenpair(m);
    std::vector<std::string> weights;
    for (double w : eig.priorities.weights()) weights.push_back(fmt::format("{:.4f}", w));
    std::vector<std::size_t> ranking;
    for (auto i : eig.priorities.ranking()) ranking.push_back(i + 1);
    std::string text = fmt::format("order {}\nlambda_max {:.4f}\nweights {}\nranking {}\n", m.order(), eig.lambda_max,
                                   fmt::join(weights, " "), fmt::join(ranking, " > "));
    try {
        const auto r = ahp::consistency(m, table);
        text += fmt::format("CI {:.4f}\nCR {:.1f}%\nacceptable {}\n", r.ci, r.cr, r.acceptable ? "yes" : "no");
    } catch (const DomainError& e) {
        text += fmt::format("CR unavailable: {}\n", e.what());
    }
    return text;
}

int run_ahp(const std::string& matrix, const std::string& hierarchy, bool extended, const RunConfig& c,
            std::ostream& out) {
    const auto table = extended ? ahp::RandomIndexTable::extended : ahp::RandomIndexTable::standard;
    if (matrix.empty() == hierarchy.empty()) throw UsageError("ahp needs exactly one of --matrix or --hierarchy");
    if (!matrix.empty()) {
        emit(out, c, matrix_report(ahp::read_matrix_file(matrix), table));
        return kOk;
    }
    const auto h = ahp::parse_hierarchy(io::read_file(hierarchy));
    const auto result = ahp::aggregate(h, table);
    const auto& alternatives = h.levels().back();
    std::string text = fmt::format("goal {}\n", h.goal());
    for (const auto& nc : result.consistency) {
        text += fmt::format("node {}: lambda_max {:.4f} CI {:.4f} CR {:.1f}%\n", nc.node, nc.report.lambda_max,
                            nc.report.ci, nc.report.cr);
    }
    for (std::size_t i = 0; i < alternatives.size(); ++i) {
        text += fmt::format("global {} {:.4f}\n", alternatives[i], result.global[i]);
    }
    std::vector<std::string> ranked;
    for (auto i : result.ranking) ranked.push_back(alternatives[i]);
    text += fmt::format("ranking {}\n", fmt::join(ranked, " > "));
    for (const auto& w : result.warnings) text += fmt::format("warning: {}\n", w);
    emit(out, c, text);
    return kOk;
}

int run_recommend(const RunConfig& c, bool jsonl, std::ostream& out, std::ostream& err) {
    if (!c.user) throw UsageError("recommend needs --user");
    const auto l = load(c, err);
    const auto weights = weights_of(c, l.data);
    const auto list = recommend(l.data, UserId(*c.user), query_of(c), weights, recommend_config(c, l.movielens));
    std::string text;
    if (jsonl) {
        text = format_recommendations_jsonl(list, l.data);
    } else {
        text = config_comment(c) + format_recommendations(list, l.data);
    }
    emit(out, c, text);
    return kOk;
}

int run_evaluate(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const auto l = load(c, err);
    const auto specs = split_specs(c);
    eval::EvalConfig ec;
    ec.recommend = recommend_config(c, l.movielens);
    ec.context = query_of(c);
    ec.threshold = c.threshold;
    ec.workers = worker_count(c);

    auto weights_for = [&](const Dataset& train) { return weights_of(c, train); };
    std::string records;
    std::string table;
    int status = kOk;
    if (specs.size() == 1) {
        const auto split = make_split(l, c, specs.front());
        ec.split = std::string(ingest::to_string(specs.front().name));
        const auto report = eval::evaluate_topn(split.train, split.test, weights_for(split.train), ec);
        records = eval::to_jsonl(report);
        table = eval::to_table(report);
    } else {
        const auto cv = eval::cross_validate(
            specs, [&](const ingest::SplitSpec& spec) { return make_split(l, c, spec); }, weights_for, ec);
        for (const auto& outcome : cv.splits) {
            if (outcome.error) status = kDomain;
        }
        records = eval::to_jsonl(cv);
        table = eval::to_table(cv);
    }

    const std::string config_record = "# " + std::string(eval::kSchemaTag) + "\n" + config_comment(c);
    if (c.out.empty()) {
        out << config_record << table << records;
    } else {
        io::write_file_atomically(c.out, records);
        out << config_record << table;
    }
    return status;
}

}  // namespace

// ---------------------------------------------------------------------------

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Context-aware movie recommendation: ingestion, AHP genre weights, CF and evaluation", "ctxrec"};
    app.require_subcommand(1, 1);

    std::string config_file;
    std::map<std::string, std::string> flags;
    std::string matrix_file, hierarchy_file;
    bool extended_ri = false;
    bool jsonl = false;

    auto run_option = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(flag, [&flags, key](const std::string& v) { flags[key] = v; }, help);
    };
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "Config file of 'key = value' lines");
        run_option(sub, "--dataset,--path", "dataset", "MovieLens directory or CoMoDa file");
        run_option(sub, "--format", "format", "movielens, comoda or auto");
        run_option(sub, "--out", "out", "Output path (written atomically)");
    };
    auto add_engine = [&](CLI::App* sub) {
        run_option(sub, "--context", "context", "Context query, e.g. time=3,mood=1");
        run_option(sub, "--match-policy", "match_policy", "strict or permissive for missing context values");
        run_option(sub, "--k", "k", "Neighborhood size");
        run_option(sub, "--min-overlap", "min_overlap", "Minimum co-rated items for a neighbor");
        run_option(sub, "--alpha", "alpha", "CF share of the fused score, or auto");
        run_option(sub, "--n", "n", "Recommendations per user");
        run_option(sub, "--measure", "measure", "pearson, cosine, spearman or itemcos");
        run_option(sub, "--variant", "variant", "plain or mean-centered");
        run_option(sub, "--weights", "weights", "frequency, file:<table> or matrix:<judgments>");
        run_option(sub, "--scale", "scale", "approach5 or saaty9 for frequency weights");
        run_option(sub, "--aggregation", "aggregation", "Genre score aggregation: mean or max");
    };

    auto* ingest_cmd = app.add_subcommand("ingest", "Parse a dataset and report counts");
    add_common(ingest_cmd);

    auto* split_cmd = app.add_subcommand("split", "Write train/test split files");
    add_common(split_cmd);
    run_option(split_cmd, "--split", "split", "u1..u5, ua, ub, custom:<f>, cv or a comma list");
    run_option(split_cmd, "--seed", "seed", "Split seed");

    auto* weights_cmd = app.add_subcommand("weights", "Compute genre weights and their consistency");
    add_common(weights_cmd);
    run_option(weights_cmd, "--weights", "weights", "frequency, file:<table> or matrix:<judgments>");
    run_option(weights_cmd, "--scale", "scale", "approach5 or saaty9");

    auto* ahp_cmd = app.add_subcommand("ahp", "Eigenvector, consistency and aggregation for AHP judgments");
    ahp_cmd->add_option("--matrix", matrix_file, "Judgment matrix file");
    ahp_cmd->add_option("--hierarchy", hierarchy_file, "Hierarchy file");
    ahp_cmd->add_flag("--extended-ri", extended_ri, "Use random indices up to n = 15");
    run_option(ahp_cmd, "--out", "out", "Output path");

    auto* recommend_cmd = app.add_subcommand("recommend", "Top-N list for one user in a context");
    add_common(recommend_cmd);
    add_engine(recommend_cmd);
    run_option(recommend_cmd, "--user", "user", "User id");
    recommend_cmd->add_flag("--jsonl", jsonl, "One JSON object per entry instead of a table");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Precision, recall and F-measure on held-out ratings");
    add_common(evaluate_cmd);
    add_engine(evaluate_cmd);
    run_option(evaluate_cmd, "--split", "split", "u1..u5, ua, ub, custom:<f>, cv or a comma list");
    run_option(evaluate_cmd, "--split-source", "split_source", "generate or shipped");
    run_option(evaluate_cmd, "--threshold", "threshold", "Relevance threshold");
    run_option(evaluate_cmd, "--seed", "seed", "Split seed");
    run_option(evaluate_cmd, "--workers", "workers", "Evaluation threads (0 = all cores)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        fmt::print(err, "error: {}\n", e.what());
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return kUsage;
    }

    try {
        RunConfig config;
        if (const char* root = std::getenv("CTXREC_DATASET_ROOT")) config.dataset = root;
        if (!config_file.empty()) apply_config_file(config, config_file);
        for (const auto& [key, value] : flags) {
            try {
                config.set(key, value);
            } catch (const ParseError& e) {
                throw UsageError(e.what());
            }
        }

        if (app.got_subcommand(ingest_cmd)) return run_ingest(config, out, err);
        if (app.got_subcommand(split_cmd)) return run_split(config, out, err);
        if (app.got_subcommand(weights_cmd)) return run_weights(config, out, err);
        if (app.got_subcommand(ahp_cmd)) return run_ahp(matrix_file, hierarchy_file, extended_ri, config, out);
        if (app.got_subcommand(recommend_cmd)) return run_recommend(config, jsonl, out, err);
        return run_evaluate(config, out, err);
    } catch (const UsageError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kUsage;
    } catch (const Error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return exit_code_for(e);
    } catch (const fs::filesystem_error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kNotFound;
    }
}

}  // namespace ctxrec::cli
