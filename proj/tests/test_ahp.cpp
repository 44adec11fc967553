#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "ctxrec/ahp.hpp"
#include "ctxrec/error.hpp"
#include "ctxrec/io.hpp"

using namespace ctxrec;
using namespace ctxrec::ahp;

namespace {

const std::filesystem::path kData = std::filesystem::path(CTXREC_SOURCE_DIR) / "data" / "ahp";

ComparisonMatrix consistent_from(const std::vector<double>& w) {
    std::vector<std::vector<double>> rows(w.size(), std::vector<double>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = 0; j < w.size(); ++j) rows[i][j] = w[i] / w[j];
    }
    return ComparisonMatrix::from_rows(rows);
}

ComparisonMatrix random_reciprocal(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> degree(1, 9);
    std::bernoulli_distribution flip(0.5);
    ComparisonMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = degree(rng);
            m.set_judgment(i, j, flip(rng) ? d : 1.0 / d);
        }
    }
    return m;
}

// Oracle: dense eigensolver, Perron root is the eigenvalue with the largest real part.
struct Reference {
    double lambda;
    std::vector<double> w;
};

Reference eigen_reference(const ComparisonMatrix& m) {
    const auto n = static_cast<Eigen::Index>(m.order());
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a);
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < n; ++k) {
        if (solver.eigenvalues()[k].real() > solver.eigenvalues()[best].real()) best = k;
    }
    const Eigen::VectorXd v = solver.eigenvectors().col(best).real();
    const double s = v.sum();
    Reference r{solver.eigenvalues()[best].real(), {}};
    for (Eigen::Index i = 0; i < n; ++i) r.w.push_back(v[i] / s);
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Worked example

TEST(WorkedExample, CriteriaMatrix) {
    const auto m = read_matrix_file(kData / "partner_criteria.txt");
    const auto e = principal_eigenpair(m);
    EXPECT_NEAR(e.lambda_max, 3.0183, 5e-4);
    EXPECT_NEAR(e.priorities[0], 0.3196, 5e-4);
    EXPECT_NEAR(e.priorities[1], 0.5584, 5e-4);
    EXPECT_NEAR(e.priorities[2], 0.1220, 5e-4);
    const auto c = consistency(m);
    EXPECT_NEAR(c.ci, 0.0092, 1e-4);
    EXPECT_DOUBLE_EQ(c.aci, 0.58);
    EXPECT_NEAR(c.cr, 1.6, 0.1);
    EXPECT_TRUE(c.acceptable);
}

TEST(WorkedExample, QualityMatrixIsFlaggedInconsistent) {
    const auto m = read_matrix_file(kData / "partner_quality.txt");
    const auto e = principal_eigenpair(m);
    EXPECT_NEAR(e.lambda_max, 4.4347, 5e-4);
    const std::vector<double> published{0.1160, 0.2470, 0.0600, 0.5770};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(e.priorities[i], published[i], 5e-4) << i;
    const auto c = consistency(m);
    EXPECT_NEAR(c.ci, 0.1449, 1e-4);
    EXPECT_NEAR(c.cr, 16.1, 0.1);
    EXPECT_FALSE(c.acceptable);
}

TEST(WorkedExample, ReliabilityMatrix) {
    const auto m = read_matrix_file(kData / "partner_reliability.txt");
    const auto e = principal_eigenpair(m);
    EXPECT_NEAR(e.lambda_max, 4.1913, 5e-4);
    const std::vector<double> published{0.3790, 0.2900, 0.0740, 0.2570};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(e.priorities[i], published[i], 5e-4) << i;
    const auto c = consistency(m);
    EXPECT_NEAR(c.ci, 0.0638, 1e-4);
    EXPECT_NEAR(c.cr, 7.1, 0.1);
}

TEST(WorkedExample, EconomyNormalization) {
    const std::vector<double> raw{34, 27, 24, 28};
    const auto p = normalize_measurements(raw);
    const std::vector<double> published{0.3010, 0.2390, 0.2120, 0.2480};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p[i], published[i], 5e-4) << i;
}

TEST(WorkedExample, AggregationRanksA4First) {
    const auto h = parse_hierarchy(io::read_file(kData / "partner.hier"));
    const auto r = aggregate(h);
    EXPECT_EQ(r.ranking, (std::vector<std::size_t>{3, 0, 1, 2}));
    // Composition of the published vectors by hand.
    const std::vector<double> crit{0.3196, 0.5584, 0.1220};
    const std::vector<std::vector<double>> alt{{0.1160, 0.2470, 0.0600, 0.5770},
                                               {0.3790, 0.2900, 0.0740, 0.2570},
                                               {0.3010, 0.2390, 0.2120, 0.2480}};
    for (std::size_t a = 0; a < 4; ++a) {
        double expected = 0;
        for (std::size_t c = 0; c < 3; ++c) expected += crit[c] * alt[c][a];
        EXPECT_NEAR(r.global[a], expected, 1e-3) << a;
    }
    EXPECT_NEAR(std::accumulate(r.global.weights().begin(), r.global.weights().end(), 0.0), 1.0, 1e-12);
    // Three matrix judgments, the quality one flagged.
    ASSERT_EQ(r.consistency.size(), 3u);
    bool flagged = false;
    for (const auto& w : r.warnings) flagged |= w.find("quality") != std::string::npos;
    EXPECT_TRUE(flagged);
}

// ---------------------------------------------------------------------------
// Eigenpair

TEST(Eigenpair, UniformMatrix) {
    for (std::size_t n = 1; n <= 9; ++n) {
        const auto e = principal_eigenpair(ComparisonMatrix(n));
        EXPECT_NEAR(e.lambda_max, static_cast<double>(n), 1e-12);
        for (double w : e.priorities.weights()) EXPECT_NEAR(w, 1.0 / n, 1e-12);
    }
}

TEST(Eigenpair, RecoversConsistentGenerator) {
    const auto e = principal_eigenpair(consistent_from({0.6, 0.3, 0.1}));
    EXPECT_NEAR(e.lambda_max, 3.0, 1e-8);
    EXPECT_NEAR(e.priorities[0], 0.6, 1e-8);
    EXPECT_NEAR(e.priorities[1], 0.3, 1e-8);
    EXPECT_NEAR(e.priorities[2], 0.1, 1e-8);
}

TEST(Eigenpair, MatchesDenseEigensolverOnRandomReciprocalMatrices) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + trial % 9;
        const auto m = random_reciprocal(rng, n);
        const auto e = principal_eigenpair(m);
        const auto ref = eigen_reference(m);
        ASSERT_NEAR(e.lambda_max, ref.lambda, 1e-8) << "trial " << trial;
        for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(e.priorities[i], ref.w[i], 1e-8) << "trial " << trial;
        EXPECT_LE(e.residual, 1e-10);
    }
}

TEST(Eigenpair, PerronRootIsAtLeastOrder) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 10;
        const auto e = principal_eigenpair(random_reciprocal(rng, n));
        EXPECT_GE(e.lambda_max, static_cast<double>(n) - 1e-9);
        for (double w : e.priorities.weights()) EXPECT_GT(w, 0.0);
    }
}

TEST(Eigenpair, ReportsNonConvergence) {
    const auto m = read_matrix_file(kData / "partner_quality.txt");
    try {
        principal_eigenpair(m, {1e-10, 1});
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_GT(e.residual(), 1e-10);
    }
}

// ---------------------------------------------------------------------------
// Consistency

TEST(Consistency, RandomIndexTable) {
    const std::vector<double> table{0, 0, .58, .90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49};
    for (std::size_t n = 1; n <= 10; ++n) EXPECT_DOUBLE_EQ(random_index(n), table[n - 1]);
    EXPECT_THROW(random_index(11), DomainError);
    EXPECT_NO_THROW(random_index(15, RandomIndexTable::extended));
    EXPECT_THROW(random_index(16, RandomIndexTable::extended), DomainError);
    EXPECT_THROW(random_index(0), DomainError);
}

TEST(Consistency, ConsistentMatricesScoreZero) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> pick(0.05, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> w(3 + trial % 5);
        for (auto& x : w) x = pick(rng);
        const auto c = consistency(consistent_from(w));
        EXPECT_NEAR(c.ci, 0.0, 1e-9);
        EXPECT_NEAR(c.cr, 0.0, 1e-9);
        EXPECT_TRUE(c.acceptable);
    }
}

TEST(Consistency, SmallOrdersAreTriviallyConsistent) {
    ComparisonMatrix m(2);
    m.set_judgment(0, 1, 7);
    const auto c = consistency(m);
    EXPECT_NEAR(c.ci, 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(c.cr, 0.0);
    EXPECT_TRUE(c.acceptable);
}

// ---------------------------------------------------------------------------
// Matrix and scale

TEST(Matrix, ValidationNamesTheViolation) {
    EXPECT_THROW(ComparisonMatrix::from_rows({{1, 2}, {0.4, 1}}), DomainError);
    EXPECT_THROW(ComparisonMatrix::from_rows({{1, 2}, {0.5, 2}}), DomainError);
    EXPECT_THROW(ComparisonMatrix::from_rows({{1, -2}, {-0.5, 1}}), DomainError);
    EXPECT_THROW(ComparisonMatrix::from_rows({{1, 2, 3}, {0.5, 1, 1}}), DomainError);
    EXPECT_TRUE(ComparisonMatrix::check({{1, 2}, {0.5, 1}}) == std::nullopt);
    EXPECT_TRUE(ComparisonMatrix::check({{1, 2}, {0.4, 1}}).has_value());
    ComparisonMatrix m(3);
    EXPECT_THROW(m.set_judgment(1, 1, 2), DomainError);
    EXPECT_THROW(m.set_judgment(0, 1, 0), DomainError);
}

TEST(Matrix, ScaleInvarianceOfPriorities) {
    // Reordering the elements permutes the priority vector the same way.
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 3 + trial % 5;
        const auto m = random_reciprocal(rng, n);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::vector<double>> rows(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) rows[i][j] = m(perm[i], perm[j]);
        }
        const auto a = principal_eigenpair(m);
        const auto b = principal_eigenpair(ComparisonMatrix::from_rows(rows));
        EXPECT_NEAR(a.lambda_max, b.lambda_max, 1e-9);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(b.priorities[i], a.priorities[perm[i]], 1e-9);
    }
}

TEST(Matrix, TextRoundTrip) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = random_reciprocal(rng, 1 + trial % 8);
        EXPECT_EQ(parse_matrix(format_matrix(m)), m);
    }
    const auto m = parse_matrix("# comment\n3\n1 1/2 3\n2 1 4 # trailing\n1/3 0.25 1\n");
    EXPECT_DOUBLE_EQ(m(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(m(2, 1), 0.25);
    EXPECT_THROW(parse_matrix("2\n1 x\n1 1\n"), ParseError);
    EXPECT_THROW(parse_matrix("2\n1 2\n"), ParseError);
    EXPECT_THROW(parse_matrix("2\n1 2\n1 1\n"), ParseError);
}

TEST(Scale, Degrees) {
    EXPECT_DOUBLE_EQ(judgment_from_scale(5, Scale::saaty9), 5.0);
    EXPECT_DOUBLE_EQ(judgment_from_scale(1, Scale::saaty9), 1.0);
    EXPECT_DOUBLE_EQ(judgment_from_scale(1, Scale::approach5), 1.0);
    EXPECT_DOUBLE_EQ(judgment_from_scale(4, Scale::saaty9), 4.0);
    EXPECT_THROW(judgment_from_scale(10, Scale::saaty9), DomainError);
    EXPECT_THROW(judgment_from_scale(6, Scale::approach5), DomainError);
    EXPECT_THROW(judgment_from_scale(0, Scale::approach5), DomainError);
    EXPECT_EQ(scale_max(Scale::saaty9), 9);
    EXPECT_EQ(scale_max(Scale::approach5), 5);
}

TEST(Normalize, Trivial) {
    EXPECT_DOUBLE_EQ(normalize_measurements(std::vector<double>{1})[0], 1.0);
    const auto even = normalize_measurements(std::vector<double>{2, 2, 2, 2});
    for (double w : even.weights()) EXPECT_DOUBLE_EQ(w, 0.25);
    EXPECT_THROW(normalize_measurements(std::vector<double>{1, 0}), DomainError);
    EXPECT_THROW(normalize_measurements(std::vector<double>{}), DomainError);
}

TEST(PriorityVectorTest, RankingBreaksTiesByIndex) {
    const PriorityVector p({0.25, 0.25, 0.5});
    EXPECT_EQ(p.ranking(), (std::vector<std::size_t>{2, 0, 1}));
    EXPECT_THROW(PriorityVector({0.5, 0.6}), DomainError);
    EXPECT_THROW(PriorityVector({1.5, -0.5}), DomainError);
}

// ---------------------------------------------------------------------------
// Hierarchy

TEST(HierarchyTest, SingleCriterionPassesThrough) {
    Hierarchy h("g", {{"c"}, {"x", "y", "z"}});
    h.set_priorities("g", PriorityVector({1.0}));
    h.set_priorities("c", PriorityVector({0.2, 0.5, 0.3}));
    const auto r = aggregate(h);
    EXPECT_NEAR(r.global[0], 0.2, 1e-12);
    EXPECT_NEAR(r.global[1], 0.5, 1e-12);
    EXPECT_NEAR(r.global[2], 0.3, 1e-12);
    EXPECT_EQ(r.ranking, (std::vector<std::size_t>{1, 2, 0}));
}

TEST(HierarchyTest, ThreeLevelCompositionSumsToOne) {
    std::mt19937_64 rng(12);
    Hierarchy h("g", {{"a", "b"}, {"p", "q", "r"}, {"x", "y", "z", "t"}});
    h.set_matrix("g", random_reciprocal(rng, 2));
    for (const char* p : {"a", "b"}) h.set_matrix(p, random_reciprocal(rng, 3));
    for (const char* p : {"p", "q", "r"}) h.set_matrix(p, random_reciprocal(rng, 4));
    const auto r = aggregate(h);
    EXPECT_NEAR(std::accumulate(r.global.weights().begin(), r.global.weights().end(), 0.0), 1.0, 1e-12);
    EXPECT_EQ(r.consistency.size(), 6u);
}

TEST(HierarchyTest, MissingJudgmentNamesTheNode) {
    Hierarchy h("g", {{"a", "b"}, {"x", "y"}});
    h.set_matrix("g", ComparisonMatrix(2));
    h.set_matrix("a", ComparisonMatrix(2));
    try {
        aggregate(h);
        FAIL() << "expected StructuralError";
    } catch (const StructuralError& e) {
        EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos) << e.what();
    }
}

TEST(HierarchyTest, StructuralErrors) {
    EXPECT_THROW(Hierarchy("g", {{"a", "a"}}), StructuralError);
    EXPECT_THROW(Hierarchy("g", {}), StructuralError);
    Hierarchy h("g", {{"a", "b"}, {"x", "y"}});
    EXPECT_THROW(h.set_matrix("nope", ComparisonMatrix(2)), StructuralError);
    EXPECT_THROW(h.set_matrix("x", ComparisonMatrix(2)), StructuralError);
    EXPECT_THROW(h.set_matrix("g", ComparisonMatrix(3)), StructuralError);
    EXPECT_THROW(parse_hierarchy("goal g\nlevel a b\nmatrix g\n2\n1 2\n"), ParseError);
    EXPECT_THROW(parse_hierarchy("level a b\n"), ParseError);
}

TEST(HierarchyTest, WarnsOnLevelSizeOutsideRecommendedRange) {
    Hierarchy h("g", {{"a", "b"}, {"x", "y"}});
    h.set_matrix("g", ComparisonMatrix(2));
    h.set_matrix("a", ComparisonMatrix(2));
    h.set_matrix("b", ComparisonMatrix(2));
    const auto r = aggregate(h);
    bool size_warning = false;
    for (const auto& w : r.warnings) size_warning |= w.find("5 to 9") != std::string::npos;
    EXPECT_TRUE(size_warning);
}
