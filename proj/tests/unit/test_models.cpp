#include "activemle/checks.hpp"

#include <doctest.h>

#include <cmath>

using namespace activemle;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

}  // namespace

TEST_CASE("nll at reference points") {
    LinearRegression lin;
    LogisticRegression logi;
    MultinomialLogistic multi(3);

    CHECK(lin.nll(vec({1, 0}), 0.0, vec({0, 0})) == 0.0);
    CHECK(lin.nll(vec({1, 2}), 5.0, vec({1, 1})) == doctest::Approx(4.0));

    for (const Vector& x : {vec({0.3, -2.0}), vec({5.0, 1.0})}) {
        CHECK(logi.nll(x, Sign{1}, Vector::Zero(2)) == doctest::Approx(std::log(2.0)));
        CHECK(logi.nll(x, Sign{-1}, Vector::Zero(2)) == doctest::Approx(std::log(2.0)));
        for (int k = 1; k <= 3; ++k)
            CHECK(multi.nll(x, ClassIndex{k}, Vector::Zero(4)) == doctest::Approx(std::log(3.0)));
    }
}

TEST_CASE("logistic nll is stable at large margins") {
    LogisticRegression logi;
    const Vector x = vec({1.0});
    CHECK(logi.nll(x, Sign{1}, vec({800.0})) == doctest::Approx(0.0));
    CHECK(logi.nll(x, Sign{-1}, vec({800.0})) == doctest::Approx(800.0));
    CHECK(std::isfinite(logi.nll(x, Sign{-1}, vec({-1e4}))));
}

TEST_CASE("gradients at reference points") {
    LinearRegression lin;
    LogisticRegression logi;
    const Vector g = lin.nll_gradient(vec({1, 0}), 1.0, vec({0, 0}));
    CHECK(g(0) == doctest::Approx(-2.0));
    CHECK(g(1) == 0.0);

    const Vector x = vec({0.7, -1.3, 2.0});
    const Vector gl = logi.nll_gradient(x, Sign{1}, Vector::Zero(3));
    CHECK((gl + x / 2).norm() < 1e-15);
}

TEST_CASE("gradients match central differences") {
    Rng rng = make_rng(3, 0);
    LinearRegression lin;
    LogisticRegression logi;
    MultinomialLogistic multi(3);
    for (const ModelFamily* f : std::vector<const ModelFamily*>{&lin, &logi, &multi}) {
        for (int k = 0; k < 10; ++k) {
            const Vector x = checks::random_normal(2, rng);
            const Vector theta = checks::random_normal(f->param_dim(2), rng, 0.5);
            const Label y = checks::random_label(*f, rng);
            const Vector fd = checks::fd_gradient(
                [&](const Vector& t) { return f->nll(x, y, t); }, theta, 1e-5);
            const Vector g = f->nll_gradient(x, y, theta);
            CHECK((fd - g).norm() <= 1e-6 * std::max(g.norm(), 1e-8));
        }
    }
}

TEST_CASE("Fisher matrices at reference points") {
    LinearRegression lin;
    LogisticRegression logi;
    MultinomialLogistic multi(3);

    const Matrix fl = lin.fisher(vec({2, 1}), vec({9, 9}));
    CHECK(fl(0, 0) == 4.0);
    CHECK(fl(0, 1) == 2.0);
    CHECK(fl(1, 0) == 2.0);
    CHECK(fl(1, 1) == 1.0);

    const Matrix fg = logi.fisher(vec({1, 0}), Vector::Zero(2));
    CHECK(fg(0, 0) == doctest::Approx(0.25));
    CHECK(fg(0, 1) == 0.0);
    CHECK(fg(1, 1) == 0.0);

    const Matrix fm = multi.fisher(vec({1}), Vector::Zero(2));
    CHECK(fm(0, 0) == doctest::Approx(2.0 / 9));
    CHECK(fm(1, 1) == doctest::Approx(2.0 / 9));
    CHECK(fm(0, 1) == doctest::Approx(-1.0 / 9));
    CHECK(fm(1, 0) == doctest::Approx(-1.0 / 9));
}

TEST_CASE("multinomial Fisher is F kron xx'") {
    MultinomialLogistic multi(4);
    Rng rng = make_rng(8, 0);
    const Vector x = checks::random_normal(3, rng);
    const Vector theta = checks::random_normal(9, rng);
    const Matrix f = multi.class_fisher(x, theta);
    const Matrix xx = x * x.transpose();
    const Matrix full = multi.fisher(x, theta);
    for (Index a = 0; a < 3; ++a)
        for (Index b = 0; b < 3; ++b)
            CHECK((full.block(a * 3, b * 3, 3, 3) - f(a, b) * xx).norm() < 1e-14);
}

TEST_CASE("Hessian does not depend on the label") {
    Rng rng = make_rng(4, 0);
    LogisticRegression logi;
    MultinomialLogistic multi(3);
    for (const ModelFamily* f : std::vector<const ModelFamily*>{&logi, &multi}) {
        const Vector x = checks::random_normal(2, rng);
        const Vector theta = checks::random_normal(f->param_dim(2), rng, 0.5);
        auto hess = [&](const Label& y) {
            return checks::fd_jacobian_of_gradient(
                [&](const Vector& t) { return f->nll_gradient(x, y, t); }, theta, 1e-3);
        };
        const Label y1 = f->name() == "logistic" ? Label(Sign{1}) : Label(ClassIndex{1});
        const Label y2 = f->name() == "logistic" ? Label(Sign{-1}) : Label(ClassIndex{3});
        const Matrix h1 = hess(y1);
        CHECK((h1 - hess(y2)).norm() <= 1e-10 * h1.norm());
        CHECK((h1 - f->nll_hessian(x, theta)).norm() <= 1e-5 * h1.norm());
    }
}

TEST_CASE("label sampling laws") {
    Rng rng = make_rng(5, 0);
    const int draws = 100000;

    LogisticRegression logi;
    int positive = 0;
    for (int i = 0; i < draws; ++i)
        positive += std::get<Sign>(logi.sample_label(Vector::Ones(2), Vector::Zero(2), rng)).value > 0;
    CHECK(std::abs(positive / double(draws) - 0.5) <= 0.005);

    LinearRegression lin;
    double sum = 0, sq = 0;
    for (int i = 0; i < draws; ++i) {
        const double y = std::get<double>(lin.sample_label(vec({1, 0}), vec({3, 0}), rng));
        sum += y;
        sq += y * y;
    }
    const double mean = sum / draws;
    CHECK(std::abs(mean - 3.0) <= 0.01);
    CHECK(std::abs((sq - draws * mean * mean) / (draws - 1) - 1.0) <= 0.02);

    MultinomialLogistic multi(3);
    std::array<int, 3> counts{};
    for (int i = 0; i < draws; ++i)
        ++counts[std::get<ClassIndex>(multi.sample_label(Vector::Ones(2), Vector::Zero(4), rng)).value - 1];
    for (int c : counts) CHECK(std::abs(c / double(draws) - 1.0 / 3) <= 0.005);
}

TEST_CASE("sampling with an explicit seed is reproducible") {
    LinearRegression lin;
    const Label a = lin.sample_label(vec({1.0}), vec({2.0}), std::uint64_t{99});
    const Label b = lin.sample_label(vec({1.0}), vec({2.0}), std::uint64_t{99});
    CHECK(a == b);
}

TEST_CASE("invalid labels and shapes are rejected") {
    LogisticRegression logi;
    MultinomialLogistic multi(3);
    LinearRegression lin;
    CHECK_THROWS_AS(logi.nll(vec({1}), Sign{0}, vec({0})), LabelError);
    CHECK_THROWS_AS(logi.nll(vec({1}), 1.0, vec({0})), LabelError);
    CHECK_THROWS_AS(multi.nll(vec({1}), ClassIndex{4}, vec({0, 0})), LabelError);
    CHECK_THROWS_AS(multi.nll(vec({1}), ClassIndex{0}, vec({0, 0})), LabelError);
    CHECK_THROWS_AS(lin.nll(vec({1}), Sign{1}, vec({0})), LabelError);
    CHECK_THROWS_AS(lin.nll(vec({1, 2}), 0.0, vec({0})), DimensionError);
    CHECK_THROWS_AS(multi.fisher(vec({1, 2}), vec({0, 0})), DimensionError);
    CHECK_THROWS(MultinomialLogistic(1));
    CHECK_THROWS(make_family("poisson"));
}

TEST_CASE("closed-form expected NLL gap") {
    LinearRegression lin;
    LogisticRegression logi;
    MultinomialLogistic multi(3);
    CHECK(lin.expected_nll_gap(vec({1, 0}), vec({0.7, 3}), vec({0.2, 1})) ==
          doctest::Approx(0.25));
    CHECK(logi.expected_nll_gap(vec({1, 2}), vec({1, 2}), vec({1, 2})) == 0.0);
    CHECK(multi.expected_nll_gap(vec({1}), vec({1, 2}), vec({1, 2})) == doctest::Approx(0.0));

    // KL(Bern(1/2) || Bern(sigmoid(1)))
    const double s = sigmoid(1.0);
    const double kl = 0.5 * std::log(0.5 / s) + 0.5 * std::log(0.5 / (1 - s));
    CHECK(logi.expected_nll_gap(vec({1}), vec({1}), vec({0})) == doctest::Approx(kl).epsilon(1e-12));
}
