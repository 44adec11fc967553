#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ctxrec::ahp {

/// Positive reciprocal judgment matrix: a_ii = 1, a_ji = 1/a_ij.
class ComparisonMatrix {
public:
    /// n x n matrix of ones (every pair judged equal).
    explicit ComparisonMatrix(std::size_t n);

    /// Throws DomainError unless `rows` is square, positive, unit-diagonal and
    /// reciprocal within relative tolerance 1e-9.
    static ComparisonMatrix from_rows(const std::vector<std::vector<double>>& rows);

    /// Returns a description of the first violated invariant, or nullopt.
    static std::optional<std::string> check(const std::vector<std::vector<double>>& rows);

    std::size_t order() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }

    /// Sets a_ij = value and a_ji = 1/value. Throws DomainError for i == j or value <= 0.
    void set_judgment(std::size_t i, std::size_t j, double value);

    std::vector<std::vector<double>> rows() const;

    friend bool operator==(const ComparisonMatrix&, const ComparisonMatrix&) = default;

private:
    std::size_t n_;
    std::vector<double> entries_;
};

/// Nonnegative weights summing to 1.
class PriorityVector {
public:
    /// Throws DomainError on negative entries or a sum off 1 by more than 1e-9.
    explicit PriorityVector(std::vector<double> weights);

    const std::vector<double>& weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }

    /// Indices by descending weight, ties by ascending index.
    std::vector<std::size_t> ranking() const;

private:
    std::vector<double> weights_;
};

struct PowerIterationOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 1000;
};

struct Eigenpair {
    double lambda_max;
    PriorityVector priorities;
    std::size_t iterations;
    double residual;
};

/// Perron root and normalized principal eigenvector by power iteration from
/// the uniform vector. Converged when ||Mv - lambda v||_inf <= tolerance.
/// Throws NumericError carrying the last residual otherwise.
Eigenpair principal_eigenpair(const ComparisonMatrix& m, const PowerIterationOptions& options = {});

/// Average random consistency index table. `standard` covers n <= 10;
/// `extended` adds Saaty's published values for n = 11..15.
enum class RandomIndexTable { standard, extended };

/// Throws DomainError when n is not covered by the table.
double random_index(std::size_t n, RandomIndexTable table = RandomIndexTable::standard);

struct ConsistencyReport {
    double lambda_max = 0;
    double ci = 0;
    double aci = 0;
    double cr = 0;  ///< percent
    bool acceptable = true;
};

/// Judgments are flagged (not rejected) above this consistency ratio, in percent.
inline constexpr double kAcceptableCr = 10.0;

ConsistencyReport consistency(const ComparisonMatrix& m, RandomIndexTable table = RandomIndexTable::standard);

/// Divides each entry by the sum. Throws DomainError on empty input or non-positive entries.
PriorityVector normalize_measurements(std::span<const double> raw);

enum class Scale { saaty9, approach5 };

/// Matrix entry for a judgment degree; the mirrored cell holds its reciprocal.
/// saaty9 accepts 1..9, approach5 accepts 1..5. Throws DomainError otherwise.
double judgment_from_scale(int degree, Scale scale);

int scale_max(Scale scale);

// ---------------------------------------------------------------------------
// Text format: first line n, then n rows of n entries. Entries may be
// integers, decimals or p/q fractions; '#' starts a comment.

ComparisonMatrix parse_matrix(std::string_view text);
ComparisonMatrix read_matrix_file(const std::filesystem::path& file);

/// Inverse of parse_matrix; integers and unit fractions are written as such,
/// other values with round-trip precision.
std::string format_matrix(const ComparisonMatrix& m);

// ---------------------------------------------------------------------------
// Hierarchy

/// How an element's children are weighted.
using Judgment = std::variant<ComparisonMatrix, PriorityVector>;

/// Layered decision hierarchy: a goal, then levels of elements down to the
/// alternatives. Each element above the last level carries one judgment over
/// all elements of the next level.
class Hierarchy {
public:
    /// `levels` lists the levels below the goal, the last one being the
    /// alternatives. Labels must be unique. Throws StructuralError.
    Hierarchy(std::string goal, std::vector<std::vector<std::string>> levels);

    const std::string& goal() const noexcept { return goal_; }
    const std::vector<std::vector<std::string>>& levels() const noexcept { return levels_; }

    /// Throws StructuralError for unknown parents, leaves, or a size mismatch.
    void set_matrix(std::string_view parent, ComparisonMatrix m);
    void set_priorities(std::string_view parent, PriorityVector p);
    /// Raw positive measurements, normalized by sum.
    void set_measurements(std::string_view parent, std::span<const double> raw);

    const Judgment* judgment(std::string_view parent) const;

    /// Children compared under `parent`, i.e. the next level.
    std::size_t child_count(std::string_view parent) const;

private:
    std::size_t level_of(std::string_view label) const;

    std::string goal_;
    std::vector<std::vector<std::string>> levels_;
    std::map<std::string, Judgment, std::less<>> judgments_;
};

struct NodeConsistency {
    std::string node;
    ConsistencyReport report;
};

struct AggregateResult {
    PriorityVector global;
    std::vector<std::size_t> ranking;  ///< alternative indices, best first
    std::vector<NodeConsistency> consistency;  ///< one per matrix judgment
    std::vector<std::string> warnings;
};

/// Composes priorities down the hierarchy:
/// P_k(e) = sum over parents p of P_{k-1}(p) * P_k(e | p).
/// Throws StructuralError naming the first element without a judgment.
AggregateResult aggregate(const Hierarchy& h, RandomIndexTable table = RandomIndexTable::standard);

/// Hierarchy text format (one directive per line, '#' comments):
///   goal <label>
///   level <label> <label> ...        (repeat per level, top to bottom)
///   matrix <parent>                  (followed by a matrix block: n, then n rows)
///   priorities <parent> <w1> <w2> ...
///   measure <parent> <x1> <x2> ...
Hierarchy parse_hierarchy(std::string_view text);

}  // namespace ctxrec::ahp
