#pragma once

// Verification oracles that do not share code paths with the library:
// finite differences, exhaustive grid search, Monte Carlo, and the
// acceptance experiments built on them.

#include "activemle/harness.hpp"

#include <functional>
#include <string>
#include <vector>

namespace activemle::checks {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

// Oracles --------------------------------------------------------------------

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& at, double h);

/// Central differences of an analytic gradient, symmetrized.
Matrix fd_jacobian_of_gradient(const std::function<Vector(const Vector&)>& grad, const Vector& at,
                               double h);

/// Second-order central differences of f itself.
Matrix fd_hessian(const std::function<double(const Vector&)>& f, const Vector& at, double h);

struct GridResult {
    double best = 0.0;
    std::vector<double> argmin;
    long long evaluated = 0;
};

/// Exhaustive search of trace(S(a)^-1 M) over the grid {0, step, ..., cap}^n
/// intersected with sum a = budget. Supports p <= 2 and integral budget/step.
GridResult grid_search_design(const std::vector<Matrix>& fisher, const Matrix& target,
                              double budget, double cap, double step = 0.01);

/// Exact E[(L_U(theta_hat) - L_U(theta*)) * m] for passive least squares on
/// the e_1 / e_j pool with m uniform draws and unit noise. Direction j with
/// N_j ~ Binomial(m, Sigma_jj) samples contributes Sigma_jj / N_j, or
/// Sigma_jj * theta*_j^2 when N_j = 0 (the fit leaves that coordinate at 0).
double passive_e1_ej_expectation(int d, int n, int m, const Vector& theta_star);

/// Random problem instances.
Vector random_normal(Index n, Rng& rng, double scale = 1.0);
Label random_label(const ModelFamily& family, Rng& rng);

// Checks ---------------------------------------------------------------------

/// Central-difference agreement of nll_gradient, `instances` per family.
CheckResult check_gradients(int instances, std::uint64_t seed);

/// Label independence of the Hessian and agreement with the scaled Fisher matrix.
CheckResult check_condition_one(int instances, std::uint64_t seed);

/// E[grad grad'] = nll_scale^2 I(x, theta*) within 4 standard errors.
CheckResult check_fisher_identity(int points, int draws, std::uint64_t seed);

/// Frank-Wolfe vs exhaustive grid, n <= max_n, p <= 2.
CheckResult check_design_oracle(int instances, int max_n, std::uint64_t seed);

/// Schur-block feasibility and sum sigma_j c_j = design objective.
CheckResult check_sdp_consistency(int weight_vectors, std::uint64_t seed);

/// Label budget, mixture floor, PSD domination and seed determinism.
CheckResult check_plumbing(std::uint64_t seed);

/// The e_1 / e_j linear example at dimension d: rate of U, design bound, and
/// the paired active/passive experiment.
std::vector<CheckResult> check_linear_toy(int d, int trials, std::uint64_t seed);

/// Logistic rate tracking at the largest m2 of the sweep, plus the sweep trend.
std::vector<CheckResult> check_logistic_rate(int trials, std::uint64_t seed);

// Scenarios used by the acceptance experiments.
Scenario linear_toy_scenario(int d, int trials, std::vector<int> m2_sweep, std::uint64_t seed);
Scenario logistic_rate_scenario(int trials, std::vector<int> m2_sweep, std::uint64_t seed);

std::vector<CheckResult> fast_suite(std::uint64_t seed = 1);
std::vector<CheckResult> full_suite(std::uint64_t seed = 1);

}  // namespace activemle::checks
