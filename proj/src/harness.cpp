#include "activemle/harness.hpp"

#include "activemle/io.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

namespace activemle {

// Pools ----------------------------------------------------------------------

Matrix e1_ej_rows(int d, int n) {
    if (d < 1 || n < 1) throw Error("e1_ej: d and n must be positive");
    const int copies = std::max(1, n / (d * d));
    const int head = n - (d - 1) * copies;
    if (d > 1 && head < 1) throw Error("e1_ej: n too small for d");
    Matrix rows = Matrix::Zero(n, d);
    int r = 0;
    for (; r < (d == 1 ? n : head); ++r) rows(r, 0) = 1.0;
    for (int j = 1; j < d; ++j)
        for (int c = 0; c < copies; ++c) rows(r++, j) = 1.0;
    return rows;
}

UnlabeledPool generate_pool(const PoolSpec& request) {
    if (request.generator == "csv") return UnlabeledPool(read_matrix_csv(request.path, request.header));
    if (request.d < 1 || request.n < 1) throw Error("pool: d and n must be positive");
    if (request.generator == "e1_ej") return UnlabeledPool(e1_ej_rows(request.d, request.n));

    Matrix rows(request.n, request.d);
    if (request.generator == "identical") {
        rows.rowwise() = Vector::Constant(request.d, request.scale / std::sqrt(double(request.d))).transpose();
        return UnlabeledPool(std::move(rows));
    }
    Rng rng = make_rng(request.seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < rows.rows(); ++i)
        for (Index j = 0; j < rows.cols(); ++j) rows(i, j) = normal(rng);
    if (request.generator == "gaussian") {
        rows *= request.scale;
    } else if (request.generator == "sphere") {
        for (Index i = 0; i < rows.rows(); ++i) rows.row(i) *= request.scale / rows.row(i).norm();
    } else {
        throw ParseError("unknown pool generator '" + request.generator + "'");
    }
    return UnlabeledPool(std::move(rows));
}

// Metrics --------------------------------------------------------------------

double expected_nll_gap(const ModelFamily& family, const UnlabeledPool& pool, const Vector& theta,
                        const Vector& theta_star) {
    std::vector<double> gaps(static_cast<std::size_t>(pool.size()));
    for (Index i = 0; i < pool.size(); ++i)
        gaps[static_cast<std::size_t>(i)] =
            family.expected_nll_gap(pool.example(i), theta, theta_star);
    return pairwise_sum(gaps) / static_cast<double>(pool.size());
}

FisherAggregate fisher_aggregate(const ModelFamily& family, const UnlabeledPool& pool,
                                 const Vector& gamma, const Vector& theta) {
    if (gamma.size() != pool.size())
        throw DimensionError("fisher_aggregate: distribution length does not match the pool");
    const Index p = family.param_dim(pool.dim());
    Matrix m = Matrix::Zero(p, p);
    for (Index i = 0; i < pool.size(); ++i)
        if (gamma(i) != 0.0) m += gamma(i) * family.fisher(pool.example(i), theta);
    return FisherAggregate::from(std::move(m));
}

FisherAggregate pool_fisher(const ModelFamily& family, const UnlabeledPool& pool,
                            const Vector& theta) {
    const auto n = static_cast<double>(pool.size());
    return fisher_aggregate(family, pool, Vector::Constant(pool.size(), 1.0 / n), theta);
}

double rate_constant(const ModelFamily& family, const UnlabeledPool& pool, const Vector& gamma,
                     const Vector& theta_star) {
    const Matrix ig = fisher_aggregate(family, pool, gamma, theta_star).matrix;
    const Matrix iu = pool_fisher(family, pool, theta_star).matrix;
    Eigen::LLT<Matrix> llt(ig);
    if (llt.info() != Eigen::Success)
        throw SingularMatrix("rate_constant: I_Gamma(theta_star) is not invertible");
    return llt.solve(iu).trace();
}

FisherIdentityResult fisher_identity_check(const ModelFamily& family, const Vector& x,
                                           const Vector& theta_star, int n_draws,
                                           std::uint64_t seed) {
    if (n_draws < 2) throw Error("fisher_identity_check: need at least two draws");
    const Index p = theta_star.size();
    Rng rng = make_rng(seed, 0);
    Matrix sum = Matrix::Zero(p, p);
    Matrix sumsq = Matrix::Zero(p, p);
    for (int k = 0; k < n_draws; ++k) {
        const Label y = family.sample_label(x, theta_star, rng);
        const Vector g = family.nll_gradient(x, y, theta_star);
        const Matrix outer = g * g.transpose();
        sum += outer;
        sumsq += outer.cwiseProduct(outer);
    }
    FisherIdentityResult out;
    const double n = n_draws;
    out.scale = family.nll_scale() * family.nll_scale();
    out.expected = out.scale * family.fisher(x, theta_star);
    out.mc_second_moment = sum / n;
    for (Index a = 0; a < p; ++a) {
        for (Index b = 0; b < p; ++b) {
            const double mean = out.mc_second_moment(a, b);
            const double var = std::max(0.0, (sumsq(a, b) / n - mean * mean) * n / (n - 1));
            const double se = std::sqrt(var / n);
            const double diff = std::abs(mean - out.expected(a, b));
            double dev = 0.0;
            if (se > 0) dev = diff / se;
            else if (diff > 1e-12 * (1.0 + std::abs(out.expected(a, b))))
                dev = std::numeric_limits<double>::infinity();
            out.max_deviation = std::max(out.max_deviation, dev);
        }
    }
    return out;
}

RegularityDiagnostics regularity_diagnostics(const ModelFamily& family,
                                             const UnlabeledPool& pool,
                                             const Vector& theta_star, int n_draws,
                                             std::uint64_t seed) {
    if (pool.size() < 1) throw Error("regularity_diagnostics: empty pool");
    const Matrix iu = pool_fisher(family, pool, theta_star).matrix;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(iu);
    const Vector ev = eig.eigenvalues();
    const Matrix vecs = eig.eigenvectors();
    RegularityDiagnostics diag;
    diag.sigma_max_U = std::max(ev.maxCoeff(), 0.0);
    const double threshold = 1e-12 * diag.sigma_max_U;
    double smallest_nonzero = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < ev.size(); ++k) {
        if (ev(k) > threshold && diag.sigma_max_U > 0) {
            ++diag.rank;
            smallest_nonzero = std::min(smallest_nonzero, ev(k));
        }
    }
    diag.sigma_min_U = diag.rank == ev.size() ? ev(0) : 0.0;
    diag.condition_number = diag.rank > 0 ? diag.sigma_max_U / smallest_nonzero : 0.0;

    // sup ||grad L||_{I_U^-1}, pseudo-inverse on the nonzero spectrum.
    Rng rng = make_rng(seed, 0);
    for (Index i = 0; i < pool.size(); ++i) {
        const Vector x = pool.example(i);
        for (int k = 0; k < n_draws; ++k) {
            const Vector g = family.nll_gradient(x, family.sample_label(x, theta_star, rng),
                                                 theta_star);
            const Vector proj = vecs.transpose() * g;
            double norm2 = 0.0;
            for (Index j = 0; j < ev.size(); ++j)
                if (ev(j) > threshold && diag.sigma_max_U > 0) norm2 += proj(j) * proj(j) / ev(j);
            diag.max_gradient_norm_whitened =
                std::max(diag.max_gradient_norm_whitened, std::sqrt(norm2));
        }
    }
    return diag;
}

// Summary statistics ---------------------------------------------------------

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Summary summarize(std::span<const double> values) {
    Summary s;
    if (values.empty()) return s;
    const auto n = static_cast<double>(values.size());
    s.mean = pairwise_sum(values) / n;
    if (values.size() < 2) return s;
    std::vector<double> sq;
    sq.reserve(values.size());
    for (double v : values) sq.push_back((v - s.mean) * (v - s.mean));
    s.standard_error = std::sqrt(pairwise_sum(sq) / (n - 1) / n);
    return s;
}

// Experiments ----------------------------------------------------------------

void Scenario::validate() const {
    if (trials < 1) throw Error("scenario: trials must be at least 1");
    if (m2_sweep.empty()) throw Error("scenario: m2 sweep is empty");
    for (int m2 : m2_sweep)
        if (m2 < 1) throw Error("scenario: m2 must be at least 1");
    if (m1 && *m1 < 1) throw Error("scenario: m1 must be at least 1");
    if (!theta_star.allFinite()) throw Error("scenario: theta_star must be finite");
    if (weight_cap && !(*weight_cap > 0)) throw Error("scenario: weight_cap must be positive");
    if (theta_bound && !(*theta_bound > 0)) throw Error("scenario: theta_bound must be positive");
    if (diagnostic_draws < 1) throw Error("scenario: diagnostic_draws must be at least 1");
    static const std::set<std::string> generators{"e1_ej", "gaussian", "sphere", "identical", "csv"};
    if (!generators.count(pool.generator))
        throw Error("scenario: unknown pool generator '" + pool.generator + "'");
    const auto f = make_family(family, classes);
    if (pool.generator != "csv" && theta_star.size() != f->param_dim(pool.d))
        throw DimensionError("scenario: theta_star has length " +
                             std::to_string(theta_star.size()) + ", expected " +
                             std::to_string(f->param_dim(pool.d)));
}

std::uint64_t trial_seed(std::uint64_t root, int trial) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(root ^ mix(static_cast<std::uint64_t>(trial) + 1));
}

int harness_threads() {
    const char* env = std::getenv("ACTIVE_MLE_THREADS");
    int requested = env ? std::atoi(env) : 0;
    if (requested <= 0) requested = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, requested);
}

namespace {

struct TrialOutcome {
    double active_error = 0.0;
    double passive_error = 0.0;
    double tau_squared = 0.0;
    double design_tau_squared = 0.0;
    long long active_labels = 0;
    long long passive_labels = 0;
    int m1 = 0;
    bool active_converged = true;
    bool passive_converged = true;
};

template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (int w = 0; w < threads; ++w) {
        workers.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
}

ArmResult finish_arm(std::vector<double> errors, long long labels, double scale, int nonconverged) {
    ArmResult arm;
    const Summary s = summarize(errors);
    arm.errors = std::move(errors);
    arm.labels = labels;
    arm.mean = s.mean;
    arm.standard_error = s.standard_error;
    arm.scaled_mean = s.mean * scale;
    arm.scaled_standard_error = s.standard_error * scale;
    arm.nonconverged = nonconverged;
    return arm;
}

}  // namespace

ExperimentReport run_scenario(const Scenario& scenario, int threads) {
    const auto start = std::chrono::steady_clock::now();
    scenario.validate();
    if (threads <= 0) threads = harness_threads();

    const auto family = make_family(scenario.family, scenario.classes);
    const UnlabeledPool pool = generate_pool(scenario.pool);
    const Index p = family->param_dim(pool.dim());
    if (scenario.theta_star.size() != p)
        throw DimensionError("scenario: theta_star has length " +
                             std::to_string(scenario.theta_star.size()) + ", model needs " +
                             std::to_string(p));

    ExperimentReport report;
    report.scenario = scenario;
    report.p = p;
    report.n = pool.size();
    report.diagnostics =
        regularity_diagnostics(*family, pool, scenario.theta_star, scenario.diagnostic_draws);
    if (!report.diagnostics.ok())
        throw DiagnosticsFailed("diagnostics: I_U(theta_star) is singular (rank " +
                                std::to_string(report.diagnostics.rank) + " of " +
                                std::to_string(p) + ")");

    const std::optional<ParamSpace> space =
        scenario.theta_bound ? std::optional(ParamSpace::box(p, *scenario.theta_bound))
                             : std::nullopt;

    for (int m2 : scenario.m2_sweep) {
        ActiveConfig config;
        config.m1 = scenario.m1;
        config.m2 = m2;
        config.mle_tol = scenario.mle_tol;
        config.design_tol = scenario.design_tol;
        config.skip_stage1 = scenario.skip_stage1;
        config.weight_cap = scenario.weight_cap;
        config.space = space;
        config.validate(pool.size());

        std::optional<Design> shared;
        if (config.resolved_skip(*family)) {
            const auto problem = make_design_problem(*family, pool.examples, Vector::Zero(p), m2,
                                                     config.weight_cap);
            shared = solve_design(problem, {.tol = config.design_tol});
        }

        std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(scenario.trials));
        parallel_for(scenario.trials, threads, [&](int t) {
            ActiveConfig local = config;
            local.seed = trial_seed(scenario.seed, t);
            TrialOutcome& out = outcomes[static_cast<std::size_t>(t)];

            SyntheticOracle oracle(*family, pool, scenario.theta_star);
            const ActiveResult run =
                active_set_select(pool, *family, oracle, local, shared ? &*shared : nullptr);
            out.active_error = expected_nll_gap(*family, pool, run.theta2, scenario.theta_star);
            out.tau_squared =
                rate_constant(*family, pool, run.mixed_distribution, scenario.theta_star);
            out.design_tau_squared = run.design.tau_squared;
            out.active_labels = run.labels_used;
            out.m1 = run.m1;
            out.active_converged = run.stage2.converged;

            if (scenario.run_passive) {
                SyntheticOracle passive_oracle(*family, pool, scenario.theta_star);
                const MleResult fit =
                    passive_baseline(pool, *family, passive_oracle, static_cast<int>(run.labels_used),
                                     local.seed, space ? &*space : nullptr, scenario.mle_tol);
                out.passive_error =
                    expected_nll_gap(*family, pool, fit.theta_hat, scenario.theta_star);
                out.passive_labels = passive_oracle.calls();
                out.passive_converged = fit.converged;
            }
        });

        SweepResult sweep;
        sweep.m2 = m2;
        sweep.m1 = outcomes.front().m1;
        sweep.alpha = mixing_alpha(m2);
        sweep.passive_tau_squared = static_cast<double>(p);
        std::vector<double> active_errors;
        std::vector<double> passive_errors;
        int active_bad = 0;
        int passive_bad = 0;
        for (const auto& o : outcomes) {
            active_errors.push_back(o.active_error);
            passive_errors.push_back(o.passive_error);
            sweep.tau_squared.push_back(o.tau_squared);
            sweep.design_tau_squared.push_back(o.design_tau_squared);
            active_bad += o.active_converged ? 0 : 1;
            passive_bad += o.passive_converged ? 0 : 1;
        }
        sweep.tau_squared_mean = summarize(sweep.tau_squared).mean;
        sweep.design_tau_squared_mean = summarize(sweep.design_tau_squared).mean;
        sweep.active = finish_arm(std::move(active_errors), outcomes.front().active_labels, m2,
                                  active_bad);
        if (scenario.run_passive) {
            const long long labels = outcomes.front().passive_labels;
            sweep.passive = finish_arm(std::move(passive_errors), labels,
                                       static_cast<double>(labels), passive_bad);
        }
        report.sweeps.push_back(std::move(sweep));
    }

    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace activemle
