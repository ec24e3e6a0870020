#include "activemle/checks.hpp"

#include <doctest.h>

#include <cmath>

using namespace activemle;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

DesignProblem scalar_problem() {
    DesignProblem p;
    p.fisher = {scalar(1.0), scalar(4.0)};
    p.target = scalar(2.5);
    p.budget = 2.0;
    p.weight_cap = 1.0;
    return p;
}

Matrix random_rows(Index n, Index d, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0);
    Matrix rows(n, d);
    for (Index i = 0; i < n; ++i) rows.row(i) = checks::random_normal(d, rng).transpose();
    return rows;
}

void check_feasible(const Design& design) {
    CHECK(std::abs(design.weights.sum() - design.budget) <= 1e-9);
    CHECK(design.weights.minCoeff() >= 0.0);
    CHECK(design.weights.maxCoeff() <= design.weight_cap + 1e-12);
}

}  // namespace

TEST_CASE("scalar objective and gradient") {
    const auto p = scalar_problem();
    const Vector a = Vector::Ones(2);
    CHECK(design_objective(a, p) == doctest::Approx(0.5));
    const Vector g = design_gradient(a, p);
    CHECK(g(0) == doctest::Approx(-0.1));
    CHECK(g(1) == doctest::Approx(-0.4));
}

TEST_CASE("objective matches direct evaluation on a random linear problem") {
    LinearRegression lin;
    const Matrix rows = random_rows(3, 2, 21);
    const auto p = make_design_problem(lin, rows, Vector::Zero(2), 2.0);
    const Vector a = (Vector(3) << 0.5, 0.9, 0.6).finished();
    Matrix s = Matrix::Zero(2, 2);
    Matrix m = Matrix::Zero(2, 2);
    for (Index i = 0; i < 3; ++i) {
        const Vector x = rows.row(i).transpose();
        s += a(i) * x * x.transpose();
        m += x * x.transpose() / 3.0;
    }
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    Matrix adj(2, 2);
    adj << s(1, 1), -s(0, 1), -s(1, 0), s(0, 0);
    CHECK(design_objective(a, p) == doctest::Approx((adj * m).trace() / det).epsilon(1e-12));
}

TEST_CASE("gradient matches central differences") {
    LogisticRegression logi;
    const auto p = make_design_problem(logi, random_rows(7, 3, 4), Vector::Ones(3) * 0.3, 3.0);
    const Vector a = Vector::Constant(7, 3.0 / 7);
    const Vector g = design_gradient(a, p);
    const Vector fd = checks::fd_gradient([&](const Vector& t) { return design_objective(t, p); },
                                          a, 1e-6 * a.norm());
    CHECK((fd - g).norm() <= 1e-6 * g.norm());
}

TEST_CASE("identical examples: every design has rate p") {
    SUBCASE("linear d=1") {
        const Matrix rows = Matrix::Constant(4, 1, 1.7);
        LinearRegression lin;
        const auto p = make_design_problem(lin, rows, Vector::Zero(1), 2.0);
        for (const Vector& a :
             std::vector<Vector>{Vector::Constant(4, 0.5), (Vector(4) << 1, 1, 0, 0).finished()})
            CHECK(2.0 * design_objective(a, p) == doctest::Approx(1.0));
        const Vector g = design_gradient(Vector::Constant(4, 0.5), p);
        CHECK(g.maxCoeff() - g.minCoeff() == doctest::Approx(0.0));
        CHECK(solve_design(p).tau_squared == doctest::Approx(1.0));
    }
    SUBCASE("multinomial K=3, d=1") {
        const Matrix rows = Matrix::Constant(5, 1, 0.8);
        MultinomialLogistic multi(3);
        const auto p = make_design_problem(multi, rows, (Vector(2) << 0.3, -0.2).finished(), 3.0);
        for (const Vector& a :
             std::vector<Vector>{Vector::Constant(5, 0.6), (Vector(5) << 1, 1, 1, 0, 0).finished()})
            CHECK(3.0 * design_objective(a, p) == doctest::Approx(2.0));
    }
}

TEST_CASE("singular aggregates are reported") {
    LinearRegression lin;
    Matrix rows(3, 2);
    rows << 1, 0, 1, 0, 0, 1;
    const auto p = make_design_problem(lin, rows, Vector::Zero(2), 1.0);
    CHECK_THROWS_AS(design_objective((Vector(3) << 0.5, 0.5, 0).finished(), p), SingularMatrix);
}

TEST_CASE("budget above n * cap is infeasible") {
    LinearRegression lin;
    const Matrix rows = random_rows(3, 2, 1);
    CHECK_THROWS_AS(make_design_problem(lin, rows, Vector::Zero(2), 4.0), InfeasibleDesign);
    CHECK_THROWS_AS(make_design_problem(lin, rows, Vector::Zero(2), 2.0, 0.5), InfeasibleDesign);
    CHECK_NOTHROW(make_design_problem(lin, rows, Vector::Zero(2), 4.0, std::nullopt));
}

TEST_CASE("solver output is feasible and certified") {
    LogisticRegression logi;
    const auto p = make_design_problem(logi, random_rows(40, 3, 9), Vector::Ones(3), 12.0);
    const Design d = solve_design(p);
    CHECK(d.converged);
    check_feasible(d);
    CHECK(d.duality_gap <= 1e-4 * d.objective);
    CHECK(d.tau_squared == doctest::Approx(12.0 * d.objective));
    CHECK(d.objective <= design_objective(Vector::Constant(40, 12.0 / 40), p));
}

TEST_CASE("three-point linear pool with m2 = 2") {
    Matrix rows(3, 2);
    rows << 1, 0, 0, 1, 1, 1;
    const auto p = make_design_problem(LinearRegression{}, rows, Vector::Zero(2), 2.0);
    const Design d = solve_design(p);
    check_feasible(d);
}

TEST_CASE("solver agrees with grid search on small instances") {
    Rng rng = make_rng(12, 0);
    LogisticRegression logi;
    for (int k = 0; k < 5; ++k) {
        const Matrix rows = random_rows(4, 2, 100 + k);
        const auto p = make_design_problem(logi, rows, checks::random_normal(2, rng, 0.5), 2.0);
        const auto grid = checks::grid_search_design(p.fisher, p.target, 2.0, 1.0);
        const Design d = solve_design(p, {.tol = 1e-7});
        CHECK(std::abs(d.objective - grid.best) <= 1e-3);
    }
}

TEST_CASE("diagonal multiplicity pool follows the square-root law") {
    // Pool {e1, e1, e1, e2}: Sigma = diag(3/4, 1/4). Optimal mass on direction j
    // is proportional to sqrt(Sigma_jj), with rate (sum_j sqrt(Sigma_jj))^2.
    Matrix rows(4, 2);
    rows << 1, 0, 1, 0, 1, 0, 0, 1;
    const auto p = make_design_problem(LinearRegression{}, rows, Vector::Zero(2), 1.0,
                                       std::nullopt);
    const Design d = solve_design(p, {.tol = 1e-10});
    const double r1 = std::sqrt(0.75), r2 = 0.5;
    CHECK(d.tau_squared == doctest::Approx((r1 + r2) * (r1 + r2)).epsilon(1e-8));
    CHECK(d.weights.head(3).sum() == doctest::Approx(r1 / (r1 + r2)).epsilon(1e-4));

    const auto grid = checks::grid_search_design(p.fisher, p.target, 1.0, 1.0);
    CHECK(std::abs(grid.best - d.objective) <= 1e-3);
}

TEST_CASE("rescaling single examples does not move the design") {
    // With one example per direction the aggregate's scale cancels in S^-1 M.
    Matrix rows = Matrix::Identity(3, 3);
    rows(0, 0) = 5.0;
    rows(2, 2) = 0.1;
    const auto p = make_design_problem(LinearRegression{}, rows, Vector::Zero(3), 3.0,
                                       std::nullopt);
    const Design d = solve_design(p, {.tol = 1e-10});
    CHECK((d.weights - Vector::Ones(3)).norm() < 1e-4);
    CHECK(d.tau_squared == doctest::Approx(3.0));
}

TEST_CASE("e1/ej pool at d=10 concentrates half the mass on e1") {
    const int d = 10;
    const Matrix rows = e1_ej_rows(d, 1000);
    const auto p = make_design_problem(LinearRegression{}, rows, Vector::Zero(d), 1600,
                                       std::nullopt);
    const Design design = solve_design(p, {.tol = 1e-9});
    const Vector gamma = design.sampling_distribution();
    const int copies = 1000 / (d * d);
    const int e1_count = 1000 - copies * (d - 1);
    const double e1_mass = gamma.head(e1_count).sum();
    CHECK(std::abs(e1_mass - (1.0 - (d - 1.0) / (2 * d))) <= 0.05);
    for (int j = 1; j < d; ++j) {
        const double mass = gamma.segment(e1_count + (j - 1) * copies, copies).sum();
        CHECK(std::abs(mass - 1.0 / (2 * d)) <= 0.01);
    }
    // exact optimum: mass proportional to sqrt(Sigma_jj)
    const double s1 = std::sqrt(e1_count / 1000.0), sj = std::sqrt(copies / 1000.0);
    CHECK(e1_mass == doctest::Approx(s1 / (s1 + (d - 1) * sj)).epsilon(1e-3));
    CHECK(design.tau_squared <= 4.0);
}

TEST_CASE("SDP form") {
    SUBCASE("d = 1") {
        const auto form = build_sdp_form(scalar_problem());
        REQUIRE(form.sigma.size() == 1);
        CHECK(form.sigma(0) == doctest::Approx(2.5));
        CHECK(std::abs(form.v(0, 0)) == doctest::Approx(1.0));
        const Vector a = Vector::Ones(2);
        const Vector c = form.tight_epigraph(a);
        const Matrix block = form.block(0, c(0), form.aggregate(a));
        CHECK(block.rows() == 2);
        CHECK(block(0, 0) == doctest::Approx(0.2));
        CHECK(form.objective(c) == doctest::Approx(0.5));
    }
    SUBCASE("identity target") {
        DesignProblem p;
        p.fisher = {Matrix::Identity(2, 2) * 0.5, Matrix::Identity(2, 2) * 1.5};
        p.target = Matrix::Identity(2, 2);
        p.budget = 1.0;
        const auto form = build_sdp_form(p);
        CHECK(form.sigma(0) == doctest::Approx(1.0));
        CHECK(form.sigma(1) == doctest::Approx(1.0));
        CHECK((form.v.cwiseAbs() - Matrix::Identity(2, 2)).norm() < 1e-12);
    }
    SUBCASE("random d = 3 consistency") {
        const auto p = make_design_problem(LinearRegression{}, random_rows(6, 3, 5),
                                           Vector::Zero(3), 3.0);
        const auto form = build_sdp_form(p);
        CHECK((form.reconstruct_target() - p.target).norm() <= 1e-12 * p.target.norm());
        const Vector a = (Vector(6) << 0.2, 0.9, 0.4, 0.5, 0.3, 0.7).finished();
        const Vector c = form.tight_epigraph(a);
        CHECK(std::abs(form.objective(c) - design_objective(a, p)) <= 1e-8);
        // Any smaller c_j breaks the Schur block.
        const Matrix s = form.aggregate(a);
        const Matrix tight = form.block(0, c(0) * (1 - 1e-3), s);
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(tight).eigenvalues()(0) < 0);
    }
}

TEST_CASE("mixing with the uniform distribution") {
    Design d;
    d.budget = 2.0;
    d.weights = (Vector(2) << 2.0, 0.0).finished();
    CHECK(mixing_alpha(1) == 0.0);
    CHECK(mixing_alpha(64) == doctest::Approx(0.5));

    Design one = d;
    one.budget = 1.0;
    one.weights = (Vector(2) << 1.0, 0.0).finished();
    const Vector u = mix_with_uniform(one, 1.0);
    CHECK(u(0) == doctest::Approx(0.5));
    CHECK(u(1) == doctest::Approx(0.5));

    const Vector g = mix_with_uniform(d, 2.0);
    const double r = std::pow(2.0, -1.0 / 6.0);
    CHECK(g(0) == doctest::Approx((1 - r) + r / 2));
    CHECK(g(1) == doctest::Approx(r / 2));
    CHECK(g.sum() == doctest::Approx(1.0));

    Design big;
    big.budget = 64.0;
    big.weights = (Vector(4) << 64.0, 0.0, 0.0, 0.0).finished();
    const Vector h = mix_with_uniform(big, 64.0);
    CHECK(h(0) == doctest::Approx(0.5 + 0.125));
    CHECK(h(3) == doctest::Approx(0.125));
}
