#include "activemle/checks.hpp"
#include "activemle/io.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace activemle::checks {

namespace {

struct Families {
    LinearRegression linear;
    LogisticRegression logistic;
    MultinomialLogistic multinomial{3};

    std::vector<const ModelFamily*> all() const { return {&linear, &logistic, &multinomial}; }
};

double relative(const Matrix& a, const Matrix& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

template <class Fn>
CheckResult timed(std::string name, Fn&& body) {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    r.name = std::move(name);
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

Label distinct_label(const ModelFamily& family, const Label& y, Rng& rng) {
    for (;;) {
        Label other = random_label(family, rng);
        if (other != y) return other;
    }
}

}  // namespace

CheckResult check_gradients(int instances, std::uint64_t seed) {
    return timed("gradient vs central differences", [&](CheckResult& r) {
        Families fam;
        Rng rng = make_rng(seed, 101);
        double worst = 0.0;
        for (const ModelFamily* family : fam.all()) {
            for (int k = 0; k < instances; ++k) {
                const Index d = std::uniform_int_distribution<Index>(1, 4)(rng);
                const Vector x = random_normal(d, rng);
                const Vector theta = random_normal(family->param_dim(d), rng, 0.5);
                const Label y = random_label(*family, rng);
                const Vector analytic = family->nll_gradient(x, y, theta);
                const Vector numeric = fd_gradient(
                    [&](const Vector& t) { return family->nll(x, y, t); }, theta, 1e-5);
                const double rel =
                    (numeric - analytic).norm() / std::max(analytic.norm(), 1e-8);
                worst = std::max(worst, rel);
            }
        }
        r.passed = worst <= 1e-6;
        r.detail = "worst relative error " + fmt(worst) + " (limit 1e-6)";
    });
}

CheckResult check_condition_one(int instances, std::uint64_t seed) {
    return timed("label-free Hessian equals scaled Fisher", [&](CheckResult& r) {
        Families fam;
        Rng rng = make_rng(seed, 102);
        double worst_fisher = 0.0;
        double worst_labels = 0.0;
        for (const ModelFamily* family : fam.all()) {
            for (int k = 0; k < instances; ++k) {
                const Index d = std::uniform_int_distribution<Index>(1, 4)(rng);
                const Vector x = random_normal(d, rng);
                const Vector theta = random_normal(family->param_dim(d), rng, 0.5);
                const Label y1 = random_label(*family, rng);
                const Label y2 = distinct_label(*family, y1, rng);
                auto hess = [&](const Label& y) {
                    return fd_jacobian_of_gradient(
                        [&](const Vector& t) { return family->nll_gradient(x, y, t); }, theta,
                        1e-3);
                };
                const Matrix h1 = hess(y1);
                const Matrix h2 = hess(y2);
                const Matrix expected = family->nll_scale() * family->fisher(x, theta);
                worst_fisher = std::max(worst_fisher, relative(h1, expected));
                worst_labels = std::max(worst_labels, relative(h1, h2));
            }
        }
        r.passed = worst_fisher <= 1e-5 && worst_labels <= 1e-10;
        r.detail = "Hessian vs scale*Fisher " + fmt(worst_fisher) +
                   " (limit 1e-5); Hessian(y1) vs Hessian(y2) " + fmt(worst_labels) +
                   " (limit 1e-10)";
    });
}

CheckResult check_fisher_identity(int points, int draws, std::uint64_t seed) {
    return timed("Fisher identity E[grad grad'] = scale^2 I", [&](CheckResult& r) {
        Families fam;
        Rng rng = make_rng(seed, 103);
        double worst = 0.0;
        std::string where;
        for (const ModelFamily* family : fam.all()) {
            for (int k = 0; k < points; ++k) {
                const Index d = 2;
                const Vector x = random_normal(d, rng);
                const Vector theta = random_normal(family->param_dim(d), rng, 0.5);
                const auto res = fisher_identity_check(*family, x, theta, draws,
                                                       seed * 1000 + static_cast<unsigned>(k));
                if (res.max_deviation > worst) {
                    worst = res.max_deviation;
                    where = family->name() + " (scale " + fmt(res.scale) + ")";
                }
            }
        }
        r.passed = worst <= 4.0;
        r.detail = "worst deviation " + fmt(worst) + " SE at " + where + " (limit 4 SE)";
    });
}

CheckResult check_design_oracle(int instances, int max_n, std::uint64_t seed) {
    return timed("design solver vs exhaustive grid (step 0.01)", [&](CheckResult& r) {
        Families fam;
        Rng rng = make_rng(seed, 104);
        double worst = 0.0;
        int accepted = 0;
        int attempts = 0;
        while (accepted < instances) {
            if (++attempts > 50 * instances) throw Error("could not generate instances");
            const int n = std::uniform_int_distribution<int>(2, max_n)(rng);
            const Index d = std::uniform_int_distribution<Index>(1, 2)(rng);
            const ModelFamily& family =
                std::bernoulli_distribution(0.5)(rng) ? static_cast<const ModelFamily&>(fam.linear)
                                                      : fam.logistic;
            Matrix rows(n, d);
            for (int i = 0; i < n; ++i) rows.row(i) = random_normal(d, rng).transpose();
            const Vector theta = random_normal(d, rng, 0.5);
            const int budget = std::uniform_int_distribution<int>(1, n)(rng);
            const auto problem = make_design_problem(family, rows, theta, budget, 1.0);
            const auto grid = grid_search_design(problem.fisher, problem.target, budget, 1.0);
            if (!std::isfinite(grid.best) || grid.best > 10.0) continue;
            ++accepted;
            const Design fw = solve_design(problem, {.tol = 1e-6});
            const double diff = std::abs(fw.objective - grid.best);
            worst = std::max(worst, diff);
        }
        r.passed = worst <= 1e-3;
        r.detail = std::to_string(instances) + " instances, worst |FW - grid| " + fmt(worst) +
                   " (limit 1e-3)";
    });
}

CheckResult check_sdp_consistency(int weight_vectors, std::uint64_t seed) {
    return timed("SDP form: Schur blocks PSD and sum sigma c = objective", [&](CheckResult& r) {
        Families fam;
        Rng rng = make_rng(seed, 105);
        double worst_value = 0.0;
        double worst_block = 0.0;
        double worst_reconstruct = 0.0;
        for (int k = 0; k < weight_vectors; ++k) {
            const ModelFamily* family = fam.all()[static_cast<std::size_t>(k % 3)];
            const Index d = family->name() == "multinomial" ? 2 : 3;
            const int n = 8;
            Matrix rows(n, d);
            for (int i = 0; i < n; ++i) rows.row(i) = random_normal(d, rng).transpose();
            const Vector theta = random_normal(family->param_dim(d), rng, 0.5);
            const double budget = 4.0;
            const auto problem = make_design_problem(*family, rows, theta, budget, 1.0);
            const SdpForm form = build_sdp_form(problem);
            worst_reconstruct =
                std::max(worst_reconstruct, relative(form.reconstruct_target(), problem.target));

            // Random feasible point of {0 <= a <= 1, sum a = 4}.
            Vector a;
            std::gamma_distribution<double> gamma(1.0, 1.0);
            do {
                a = Vector(n);
                for (int i = 0; i < n; ++i) a(i) = gamma(rng);
                a *= budget / a.sum();
            } while (a.maxCoeff() > 1.0);

            const Vector c = form.tight_epigraph(a);
            const double direct = design_objective(a, problem);
            worst_value = std::max(worst_value, std::abs(form.objective(c) - direct));
            const Matrix s = form.aggregate(a);
            for (Index j = 0; j < form.sigma.size(); ++j) {
                const double min_eig =
                    Eigen::SelfAdjointEigenSolver<Matrix>(form.block(j, c(j), s),
                                                          Eigen::EigenvaluesOnly)
                        .eigenvalues()(0);
                worst_block = std::min(worst_block, min_eig);
            }
        }
        r.passed = worst_value <= 1e-8 && worst_block >= -1e-8 && worst_reconstruct <= 1e-8;
        r.detail = "|sum sigma c - objective| " + fmt(worst_value) + ", min block eig " +
                   fmt(worst_block) + ", reconstruction " + fmt(worst_reconstruct);
    });
}

CheckResult check_plumbing(std::uint64_t seed) {
    return timed("algorithm plumbing: budget, floor, domination, determinism",
                 [&](CheckResult& r) {
        std::vector<std::string> failures;
        LogisticRegression logistic;
        LinearRegression linear;
        const UnlabeledPool pool = generate_pool({.generator = "gaussian", .d = 3, .n = 60,
                                                  .seed = seed, .scale = 1.0});
        const Vector theta_star = (Vector(3) << 1.0, -1.0, 0.5).finished();

        ActiveConfig config;
        config.m1 = 30;
        config.m2 = 40;
        config.seed = seed;
        SyntheticOracle oracle(logistic, pool, theta_star);
        const ActiveResult run = active_set_select(pool, logistic, oracle, config);
        if (run.labels_used != 70 || oracle.calls() != 70)
            failures.push_back("label budget " + std::to_string(run.labels_used) + " != 70");

        ActiveConfig skip = config;
        skip.m1.reset();
        SyntheticOracle linear_oracle(linear, pool, theta_star);
        const ActiveResult lin = active_set_select(pool, linear, linear_oracle, skip);
        if (!lin.stage1_skipped || lin.labels_used != 40)
            failures.push_back("skip-stage1 budget " + std::to_string(lin.labels_used) + " != 40");

        const double alpha = mixing_alpha(config.m2);
        const double floor = (1.0 - alpha) / static_cast<double>(pool.size());
        if (run.mixed_distribution.minCoeff() < floor * (1 - 1e-12))
            failures.push_back("mixture floor violated");
        if (std::abs(run.mixed_distribution.sum() - 1.0) > 1e-12)
            failures.push_back("mixture does not sum to 1");

        const Matrix dominated =
            fisher_aggregate(logistic, pool, run.mixed_distribution, theta_star).matrix -
            (1.0 - alpha) * pool_fisher(logistic, pool, theta_star).matrix;
        const double min_eig =
            Eigen::SelfAdjointEigenSolver<Matrix>(dominated, Eigen::EigenvaluesOnly)
                .eigenvalues()(0);
        if (min_eig < -1e-10) failures.push_back("PSD domination min eig " + fmt(min_eig));

        SyntheticOracle again_oracle(logistic, pool, theta_star);
        const ActiveResult again = active_set_select(pool, logistic, again_oracle, config);
        if (again.theta2 != run.theta2 || again.mixed_distribution != run.mixed_distribution)
            failures.push_back("active run not reproducible");

        Scenario sc = linear_toy_scenario(3, 3, {20}, seed);
        sc.pool.n = 50;
        const std::string first = json(run_scenario(sc, 1)).dump();
        const std::string second = json(run_scenario(sc, 2)).dump();
        auto strip = [](std::string s) {
            auto j = json::parse(s);
            j.erase("runtime_seconds");
            return j.dump();
        };
        if (strip(first) != strip(second)) failures.push_back("scenario report not reproducible");

        r.passed = failures.empty();
        if (r.passed) {
            r.detail = "labels 70 (m1+m2) and 40 (skip); floor " + fmt(floor) +
                       "; domination min eig " + fmt(min_eig) + "; reports identical";
        } else {
            for (const auto& f : failures) r.detail += f + "; ";
        }
    });
}

Scenario linear_toy_scenario(int d, int trials, std::vector<int> m2_sweep, std::uint64_t seed) {
    Scenario s;
    s.family = "linear";
    s.pool = {.generator = "e1_ej", .d = d, .n = 1000, .seed = seed};
    s.theta_star = Vector::Ones(d);
    s.trials = trials;
    s.m2_sweep = std::move(m2_sweep);
    s.seed = seed;
    s.weight_cap = std::nullopt;
    return s;
}

Scenario logistic_rate_scenario(int trials, std::vector<int> m2_sweep, std::uint64_t seed) {
    Scenario s;
    s.family = "logistic";
    s.pool = {.generator = "sphere", .d = 5, .n = 500, .seed = 5, .scale = 2.0};
    s.theta_star = (Vector(5) << 1.0, -1.0, 0.5, -0.5, 0.75).finished();
    s.trials = trials;
    s.m2_sweep = std::move(m2_sweep);
    s.seed = seed;
    s.weight_cap = std::nullopt;
    s.theta_bound = 50.0;
    return s;
}

std::vector<CheckResult> check_linear_toy(int d, int trials, std::uint64_t seed) {
    std::vector<CheckResult> out;
    const std::string tag = "e1/ej linear d=" + std::to_string(d) + ": ";
    LinearRegression linear;
    const UnlabeledPool pool(e1_ej_rows(d, 1000));
    const Vector theta_star = Vector::Ones(d);

    out.push_back(timed(tag + "rate_constant(U) = d", [&](CheckResult& r) {
        const double n = static_cast<double>(pool.size());
        const double tau = rate_constant(linear, pool, Vector::Constant(pool.size(), 1.0 / n),
                                         theta_star);
        r.passed = std::abs(tau - d) <= 1e-8;
        r.detail = "tau^2(U) = " + fmt(tau) + ", |diff| " + fmt(std::abs(tau - d));
    }));

    out.push_back(timed(tag + "optimal design rate <= 4", [&](CheckResult& r) {
        const auto problem = make_design_problem(linear, pool.examples, theta_star, 1600,
                                                 std::nullopt);
        const Design design = solve_design(problem);
        r.passed = design.tau_squared <= 4.0 && design.converged;
        r.detail = "m2 * objective = " + fmt(design.tau_squared) + " after " +
                   std::to_string(design.iterations) + " iterations";
    }));

    ExperimentReport report;
    out.push_back(timed(tag + "active error*m2 <= 5 at m2=1600", [&](CheckResult& r) {
        report = run_scenario(linear_toy_scenario(d, trials, {1600}, seed));
        const SweepResult& sweep = report.sweeps.back();
        r.passed = sweep.active.scaled_mean <= 4.0 * 1.25;
        r.detail = "mean " + fmt(sweep.active.scaled_mean) + " +- " +
                   fmt(sweep.active.scaled_standard_error) + " over " + std::to_string(trials) +
                   " trials (tau^2 at mixture " + fmt(sweep.tau_squared_mean) + ")";
    }));
    out.push_back(timed(tag + "passive error*m2 in [0.75d, 1.25d] at m2=1600", [&](CheckResult& r) {
        if (report.sweeps.empty()) throw Error("scenario did not run");
        const SweepResult& sweep = report.sweeps.back();
        const double v = sweep.passive->scaled_mean;
        r.passed = v >= 0.75 * d && v <= 1.25 * d;
        r.detail = "mean " + fmt(v) + " +- " + fmt(sweep.passive->scaled_standard_error) +
                   ", band [" + fmt(0.75 * d) + ", " + fmt(1.25 * d) +
                   "]; exact finite-sample expectation " +
                   fmt(passive_e1_ej_expectation(d, 1000, 1600, theta_star));
    }));
    return out;
}

std::vector<CheckResult> check_logistic_rate(int trials, std::uint64_t seed) {
    std::vector<CheckResult> out;
    ExperimentReport report;
    out.push_back(timed("logistic d=5: active error*m2 within 25% of tau^2(mixture) at m2=2000",
                        [&](CheckResult& r) {
        report = run_scenario(logistic_rate_scenario(trials, {500, 1000, 2000}, seed));
        const SweepResult& last = report.sweeps.back();
        const double rel = std::abs(last.active.scaled_mean - last.tau_squared_mean) /
                           last.tau_squared_mean;
        r.passed = rel <= 0.25;
        r.detail = "error*m2 " + fmt(last.active.scaled_mean) + " +- " +
                   fmt(last.active.scaled_standard_error) + " vs tau^2 " +
                   fmt(last.tau_squared_mean) + " (rel diff " + fmt(rel) + "); passive*labels " +
                   fmt(last.passive->scaled_mean) + " vs p = 5; for reference, nll_scale/2 * tau^2 = " +
                   fmt(0.5 * last.tau_squared_mean) + " (rel diff " +
                   fmt(std::abs(last.active.scaled_mean - 0.5 * last.tau_squared_mean) /
                       (0.5 * last.tau_squared_mean)) + ")";
    }));
    out.push_back(timed("logistic d=5: mean active error non-increasing over m2 sweep",
                        [&](CheckResult& r) {
        if (report.sweeps.empty()) throw Error("scenario did not run");
        const SweepResult& last = report.sweeps.back();
        r.passed = true;
        for (std::size_t k = 1; k < report.sweeps.size(); ++k) {
            const auto& a = report.sweeps[k - 1].active;
            const auto& b = report.sweeps[k].active;
            const double slack =
                2.0 * std::sqrt(a.standard_error * a.standard_error +
                                b.standard_error * b.standard_error);
            if (b.mean > a.mean + slack) r.passed = false;
            r.detail += "m2=" + std::to_string(report.sweeps[k - 1].m2) + ": " + fmt(a.mean) + "; ";
        }
        r.detail += "m2=" + std::to_string(last.m2) + ": " + fmt(last.active.mean);
    }));
    return out;
}

std::vector<CheckResult> fast_suite(std::uint64_t seed) {
    return {check_gradients(20, seed),         check_condition_one(20, seed),
            check_fisher_identity(2, 20000, seed), check_design_oracle(10, 4, seed),
            check_sdp_consistency(20, seed),   check_plumbing(seed)};
}

std::vector<CheckResult> full_suite(std::uint64_t seed) {
    std::vector<CheckResult> out{check_gradients(100, seed),
                                 check_condition_one(100, seed),
                                 check_fisher_identity(5, 100000, seed),
                                 check_design_oracle(50, 5, seed),
                                 check_sdp_consistency(20, seed),
                                 check_plumbing(seed)};
    for (int d : {5, 10, 20})
        for (auto& r : check_linear_toy(d, 200, seed)) out.push_back(std::move(r));
    for (auto& r : check_logistic_rate(200, seed)) out.push_back(std::move(r));
    return out;
}

}  // namespace activemle::checks
