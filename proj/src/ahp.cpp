#include "ctxrec/ahp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "ctxrec/error.hpp"
#include "ctxrec/io.hpp"
#include "parse_util.hpp"

namespace ctxrec::ahp {

namespace {

constexpr double kReciprocityTolerance = 1e-9;
constexpr double kSumTolerance = 1e-9;

}  // namespace

// ---------------------------------------------------------------------------
// ComparisonMatrix

ComparisonMatrix::ComparisonMatrix(std::size_t n) : n_(n), entries_(n * n, 1.0) {
    if (n == 0) throw DomainError("comparison matrix order must be at least 1");
}

std::optional<std::string> ComparisonMatrix::check(const std::vector<std::vector<double>>& rows) {
    const std::size_t n = rows.size();
    if (n == 0) return "empty matrix";
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) return fmt::format("row {} has {} entries, expected {}", i + 1, rows[i].size(), n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double a = rows[i][j];
            if (!std::isfinite(a) || a <= 0.0) return fmt::format("entry ({},{}) = {} is not positive", i + 1, j + 1, a);
        }
        if (std::abs(rows[i][i] - 1.0) > kReciprocityTolerance) {
            return fmt::format("diagonal entry ({0},{0}) = {1} is not 1", i + 1, rows[i][i]);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(rows[i][j] * rows[j][i] - 1.0) > kReciprocityTolerance) {
                return fmt::format("entries ({},{}) = {} and ({},{}) = {} are not reciprocal", i + 1, j + 1,
                                   rows[i][j], j + 1, i + 1, rows[j][i]);
            }
        }
    }
    return std::nullopt;
}

ComparisonMatrix ComparisonMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (auto problem = check(rows)) throw DomainError("invalid comparison matrix: " + *problem);
    ComparisonMatrix m(rows.size());
    for (std::size_t i = 0; i < m.n_; ++i) {
        std::copy(rows[i].begin(), rows[i].end(), m.entries_.begin() + static_cast<std::ptrdiff_t>(i * m.n_));
    }
    return m;
}

void ComparisonMatrix::set_judgment(std::size_t i, std::size_t j, double value) {
    if (i >= n_ || j >= n_) throw DomainError(fmt::format("cell ({},{}) outside a {}x{} matrix", i, j, n_, n_));
    if (i == j) throw DomainError("diagonal entries are fixed at 1");
    if (!std::isfinite(value) || value <= 0.0) throw DomainError(fmt::format("judgment {} is not positive", value));
    entries_[i * n_ + j] = value;
    entries_[j * n_ + i] = 1.0 / value;
}

std::vector<std::vector<double>> ComparisonMatrix::rows() const {
    std::vector<std::vector<double>> out(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        out[i].assign(entries_.begin() + static_cast<std::ptrdiff_t>(i * n_),
                      entries_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_));
    }
    return out;
}

// ---------------------------------------------------------------------------
// PriorityVector

PriorityVector::PriorityVector(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw DomainError("priority vector is empty");
    double sum = 0.0;
    for (double w : weights_) {
        if (!std::isfinite(w) || w < 0.0) throw DomainError(fmt::format("priority {} is negative", w));
        sum += w;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) throw DomainError(fmt::format("priorities sum to {}, not 1", sum));
}

std::vector<std::size_t> PriorityVector::ranking() const {
    std::vector<std::size_t> order(weights_.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return weights_[a] > weights_[b]; });
    return order;
}

// ---------------------------------------------------------------------------
// Eigen / consistency

Eigenpair principal_eigenpair(const ComparisonMatrix& m, const PowerIterationOptions& options) {
    const std::size_t n = m.order();
    std::vector<double> v(n, 1.0 / static_cast<double>(n));
    std::vector<double> x(n);
    double residual = INFINITY;
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += m(i, j) * v[j];
            x[i] = acc;
        }
        // v sums to 1, so the Rayleigh-type estimate is the sum of Mv.
        const double lambda = std::accumulate(x.begin(), x.end(), 0.0);
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(x[i] - lambda * v[i]));
        if (residual <= options.tolerance) {
            const double sum = std::accumulate(v.begin(), v.end(), 0.0);
            for (double& w : v) w /= sum;
            return Eigenpair{lambda, PriorityVector(std::move(v)), it, residual};
        }
        for (std::size_t i = 0; i < n; ++i) v[i] = x[i] / lambda;
    }
    throw NumericError(fmt::format("power iteration did not converge in {} iterations (residual {:.3e})",
                                   options.max_iterations, residual),
                       residual);
}

double random_index(std::size_t n, RandomIndexTable table) {
    static constexpr std::array<double, 10> kStandard = {0.00, 0.00, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49};
    static constexpr std::array<double, 5> kExtension = {1.51, 1.48, 1.56, 1.57, 1.59};
    if (n >= 1 && n <= kStandard.size()) return kStandard[n - 1];
    if (table == RandomIndexTable::extended && n > kStandard.size() && n <= kStandard.size() + kExtension.size()) {
        return kExtension[n - kStandard.size() - 1];
    }
    throw DomainError(fmt::format("no random consistency index for n = {} ({} table covers 1..{})", n,
                                  table == RandomIndexTable::standard ? "standard" : "extended",
                                  table == RandomIndexTable::standard ? 10 : 15));
}

ConsistencyReport consistency(const ComparisonMatrix& m, RandomIndexTable table) {
    const std::size_t n = m.order();
    const double aci = random_index(n, table);
    const Eigenpair e = principal_eigenpair(m);
    ConsistencyReport report;
    report.lambda_max = e.lambda_max;
    report.aci = aci;
    if (n <= 2) return report;
    // lambda_max >= n holds exactly; clamp away rounding noise.
    report.ci = std::max(0.0, (e.lambda_max - static_cast<double>(n)) / static_cast<double>(n - 1));
    report.cr = 100.0 * report.ci / aci;
    report.acceptable = report.cr <= kAcceptableCr;
    return report;
}

PriorityVector normalize_measurements(std::span<const double> raw) {
    if (raw.empty()) throw DomainError("no measurements to normalize");
    double sum = 0.0;
    for (double x : raw) {
        if (!std::isfinite(x) || x <= 0.0) throw DomainError(fmt::format("measurement {} is not positive", x));
        sum += x;
    }
    std::vector<double> w(raw.begin(), raw.end());
    for (double& x : w) x /= sum;
    return PriorityVector(std::move(w));
}

int scale_max(Scale scale) { return scale == Scale::saaty9 ? 9 : 5; }

double judgment_from_scale(int degree, Scale scale) {
    if (degree < 1 || degree > scale_max(scale)) {
        throw DomainError(fmt::format("degree {} outside 1..{}", degree, scale_max(scale)));
    }
    return static_cast<double>(degree);
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (std::isspace(static_cast<unsigned char>(line[i])) || line[i] == ',')) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) && line[i] != ',') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::string_view strip_comment(std::string_view line) {
    const auto hash = line.find('#');
    return hash == std::string_view::npos ? line : line.substr(0, hash);
}

double parse_entry(std::string_view token, std::size_t line_no) {
    const auto slash = token.find('/');
    if (slash == std::string_view::npos) {
        if (const auto v = detail::parse_real(token)) return *v;
    } else {
        const auto p = detail::parse_real(token.substr(0, slash));
        const auto q = detail::parse_real(token.substr(slash + 1));
        if (p && q && *q != 0.0) return *p / *q;
    }
    throw ParseError(fmt::format("line {}: bad matrix entry '{}'", line_no, token));
}

struct MatrixBlockParser {
    std::vector<std::pair<std::size_t, std::string_view>> lines;  // (line number, content)
    std::size_t pos = 0;

    ComparisonMatrix parse_block() {
        if (pos >= lines.size()) throw ParseError("missing matrix order line");
        const auto [order_line, order_text] = lines[pos++];
        const auto head = tokens(order_text);
        const auto n = head.size() == 1 ? detail::parse_integer(head[0]) : std::nullopt;
        if (!n || *n < 1) throw ParseError(fmt::format("line {}: expected the matrix order", order_line));
        std::vector<std::vector<double>> rows;
        for (long long r = 0; r < *n; ++r) {
            if (pos >= lines.size()) throw ParseError(fmt::format("matrix declares {} rows, found {}", *n, r));
            const auto [line_no, text] = lines[pos++];
            std::vector<double> row;
            for (auto t : tokens(text)) row.push_back(parse_entry(t, line_no));
            if (row.size() != static_cast<std::size_t>(*n)) {
                throw ParseError(fmt::format("line {}: expected {} entries, got {}", line_no, *n, row.size()));
            }
            rows.push_back(std::move(row));
        }
        try {
            return ComparisonMatrix::from_rows(rows);
        } catch (const DomainError& e) {
            throw ParseError(e.what());
        }
    }
};

std::vector<std::pair<std::size_t, std::string_view>> content_lines(std::string_view text) {
    std::vector<std::pair<std::size_t, std::string_view>> out;
    std::size_t line_no = 0;
    for (auto line : io::split_lines(text)) {
        ++line_no;
        const auto body = io::trim(strip_comment(line));
        if (!body.empty()) out.emplace_back(line_no, body);
    }
    return out;
}

std::string format_entry(double v) {
    const double r = std::round(v);
    if (std::abs(v - r) < 1e-12 && r >= 1.0) return fmt::format("{}", static_cast<long long>(r));
    const double inv = 1.0 / v;
    const double ri = std::round(inv);
    if (std::abs(inv - ri) < 1e-9 * ri && ri >= 2.0) return fmt::format("1/{}", static_cast<long long>(ri));
    return fmt::format("{}", v);
}

}  // namespace

ComparisonMatrix parse_matrix(std::string_view text) {
    MatrixBlockParser p{content_lines(text)};
    auto m = p.parse_block();
    if (p.pos != p.lines.size()) {
        throw ParseError(fmt::format("line {}: trailing content after the matrix", p.lines[p.pos].first));
    }
    return m;
}

ComparisonMatrix read_matrix_file(const std::filesystem::path& file) {
    const auto text = io::read_file(file);
    try {
        return parse_matrix(text);
    } catch (const ParseError& e) {
        throw ParseError(file.filename().string() + ": " + e.what());
    }
}

std::string format_matrix(const ComparisonMatrix& m) {
    std::string out = fmt::format("{}\n", m.order());
    for (std::size_t i = 0; i < m.order(); ++i) {
        for (std::size_t j = 0; j < m.order(); ++j) {
            if (j) out += ' ';
            out += format_entry(m(i, j));
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Hierarchy

Hierarchy::Hierarchy(std::string goal, std::vector<std::vector<std::string>> levels)
    : goal_(std::move(goal)), levels_(std::move(levels)) {
    if (levels_.empty()) throw StructuralError("hierarchy needs at least one level below the goal");
    std::vector<std::string_view> seen{goal_};
    for (std::size_t d = 0; d < levels_.size(); ++d) {
        if (levels_[d].empty()) throw StructuralError(fmt::format("level {} is empty", d + 1));
        for (const auto& label : levels_[d]) {
            if (std::find(seen.begin(), seen.end(), label) != seen.end()) {
                throw StructuralError(fmt::format("label '{}' appears twice in the hierarchy", label));
            }
            seen.push_back(label);
        }
    }
}

std::size_t Hierarchy::level_of(std::string_view label) const {
    if (label == goal_) return 0;
    for (std::size_t d = 0; d < levels_.size(); ++d) {
        if (std::find(levels_[d].begin(), levels_[d].end(), label) != levels_[d].end()) return d + 1;
    }
    throw StructuralError(fmt::format("no element '{}' in the hierarchy", label));
}

std::size_t Hierarchy::child_count(std::string_view parent) const {
    const std::size_t depth = level_of(parent);
    if (depth == levels_.size()) throw StructuralError(fmt::format("'{}' is an alternative and has no children", parent));
    return levels_[depth].size();
}

void Hierarchy::set_matrix(std::string_view parent, ComparisonMatrix m) {
    const std::size_t children = child_count(parent);
    if (m.order() != children) {
        throw StructuralError(fmt::format("'{}' compares {} children but its matrix has order {}", parent, children, m.order()));
    }
    judgments_.insert_or_assign(std::string(parent), Judgment(std::move(m)));
}

void Hierarchy::set_priorities(std::string_view parent, PriorityVector p) {
    const std::size_t children = child_count(parent);
    if (p.size() != children) {
        throw StructuralError(fmt::format("'{}' has {} children but {} priorities", parent, children, p.size()));
    }
    judgments_.insert_or_assign(std::string(parent), Judgment(std::move(p)));
}

void Hierarchy::set_measurements(std::string_view parent, std::span<const double> raw) {
    set_priorities(parent, normalize_measurements(raw));
}

const Judgment* Hierarchy::judgment(std::string_view parent) const {
    const auto it = judgments_.find(parent);
    return it == judgments_.end() ? nullptr : &it->second;
}

AggregateResult aggregate(const Hierarchy& h, RandomIndexTable table) {
    std::vector<std::string> warnings;
    std::vector<NodeConsistency> consistency_reports;
    const auto& levels = h.levels();
    for (std::size_t d = 0; d < levels.size(); ++d) {
        const auto size = levels[d].size();
        if (size < 5 || size > 9) {
            warnings.push_back(fmt::format("level {} has {} elements; 5 to 9 per node are recommended", d + 1, size));
        }
    }

    std::vector<double> weights{1.0};
    std::vector<std::string> parents{h.goal()};
    for (std::size_t d = 0; d < levels.size(); ++d) {
        std::vector<double> next(levels[d].size(), 0.0);
        for (std::size_t p = 0; p < parents.size(); ++p) {
            const Judgment* j = h.judgment(parents[p]);
            if (!j) throw StructuralError(fmt::format("element '{}' has no judgment over its children", parents[p]));
            const PriorityVector* local = std::get_if<PriorityVector>(j);
            std::optional<PriorityVector> derived;
            if (const auto* m = std::get_if<ComparisonMatrix>(j)) {
                derived = principal_eigenpair(*m).priorities;
                local = &*derived;
                try {
                    const auto report = consistency(*m, table);
                    if (!report.acceptable) {
                        warnings.push_back(fmt::format("judgments under '{}' are inconsistent (CR {:.1f}%)", parents[p], report.cr));
                    }
                    consistency_reports.push_back({parents[p], report});
                } catch (const DomainError& e) {
                    warnings.push_back(fmt::format("consistency of '{}' not assessed: {}", parents[p], e.what()));
                }
            }
            for (std::size_t c = 0; c < next.size(); ++c) next[c] += weights[p] * (*local)[c];
        }
        weights = std::move(next);
        parents = levels[d];
    }
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= sum;
    PriorityVector global(std::move(weights));
    auto ranking = global.ranking();
    return AggregateResult{std::move(global), std::move(ranking), std::move(consistency_reports), std::move(warnings)};
}

Hierarchy parse_hierarchy(std::string_view text) {
    const auto lines = content_lines(text);
    std::optional<std::string> goal;
    std::vector<std::vector<std::string>> levels;

    struct Pending {
        std::size_t line;
        std::string kind;
        std::string parent;
        std::variant<ComparisonMatrix, std::vector<double>> payload;
    };
    std::vector<Pending> pending;

    MatrixBlockParser block{lines};
    while (block.pos < lines.size()) {
        const auto [line_no, body] = lines[block.pos++];
        const auto t = tokens(body);
        const auto& kw = t[0];
        if (kw == "goal") {
            if (t.size() != 2) throw ParseError(fmt::format("line {}: expected 'goal <label>'", line_no));
            goal = std::string(t[1]);
        } else if (kw == "level") {
            if (t.size() < 2) throw ParseError(fmt::format("line {}: empty level", line_no));
            levels.emplace_back(t.begin() + 1, t.end());
        } else if (kw == "matrix") {
            if (t.size() != 2) throw ParseError(fmt::format("line {}: expected 'matrix <parent>'", line_no));
            pending.push_back({line_no, "matrix", std::string(t[1]), block.parse_block()});
        } else if (kw == "priorities" || kw == "measure") {
            if (t.size() < 3) throw ParseError(fmt::format("line {}: expected '{} <parent> <values...>'", line_no, kw));
            std::vector<double> values;
            for (std::size_t i = 2; i < t.size(); ++i) values.push_back(parse_entry(t[i], line_no));
            pending.push_back({line_no, std::string(kw), std::string(t[1]), std::move(values)});
        } else {
            throw ParseError(fmt::format("line {}: unknown directive '{}'", line_no, kw));
        }
    }
    if (!goal) throw ParseError("hierarchy has no goal line");

    Hierarchy h(*goal, std::move(levels));
    for (auto& p : pending) {
        try {
            if (p.kind == "matrix") {
                h.set_matrix(p.parent, std::get<ComparisonMatrix>(std::move(p.payload)));
            } else if (p.kind == "measure") {
                h.set_measurements(p.parent, std::get<std::vector<double>>(p.payload));
            } else {
                h.set_priorities(p.parent, PriorityVector(std::get<std::vector<double>>(std::move(p.payload))));
            }
        } catch (const DomainError& e) {
            throw ParseError(fmt::format("line {}: {}", p.line, e.what()));
        }
    }
    return h;
}

}  // namespace ctxrec::ahp
