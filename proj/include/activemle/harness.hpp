#pragma once

#include "activemle/active.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace activemle {

// Pools ----------------------------------------------------------------------

/// Named pool generators:
///   e1_ej     - e_1 with the remaining mass, floor(n/d^2) (at least 1) copies of each e_j, j >= 2
///   gaussian  - rows i.i.d. N(0, scale^2 I_d)
///   sphere    - rows uniform on the sphere of radius `scale`
///   identical - n copies of scale * (1, ..., 1) / sqrt(d)
///   csv       - rows read from `path`
struct PoolSpec {
    std::string generator = "gaussian";
    int d = 2;
    int n = 100;
    std::uint64_t seed = 1;
    double scale = 1.0;
    std::string path;
    bool header = false;
};

UnlabeledPool generate_pool(const PoolSpec& request);

/// Rows of the e_1 / e_j example; count of each e_j (j >= 2) is max(1, floor(n / d^2)).
Matrix e1_ej_rows(int d, int n);

// Metrics ----------------------------------------------------------------------

/// L_U(theta) - L_U(theta_star), exact per family (squared prediction gap or KL).
double expected_nll_gap(const ModelFamily& family, const UnlabeledPool& pool, const Vector& theta,
                        const Vector& theta_star);

/// I_Gamma(theta) = sum_i gamma_i I(x_i, theta).
FisherAggregate fisher_aggregate(const ModelFamily& family, const UnlabeledPool& pool,
                                 const Vector& gamma, const Vector& theta);

/// I_U(theta), the uniform average.
FisherAggregate pool_fisher(const ModelFamily& family, const UnlabeledPool& pool,
                            const Vector& theta);

/// tau^2 = trace(I_Gamma(theta_star)^-1 I_U(theta_star)). Throws SingularMatrix.
double rate_constant(const ModelFamily& family, const UnlabeledPool& pool, const Vector& gamma,
                     const Vector& theta_star);

struct FisherIdentityResult {
    double max_deviation = 0.0;  // worst |MC - expected| in standard errors
    double scale = 1.0;          // expected = scale * fisher(x, theta_star)
    Matrix mc_second_moment;
    Matrix expected;
};

/// Monte-Carlo check of E[grad L grad L'] = nll_scale^2 * I(x, theta_star).
FisherIdentityResult fisher_identity_check(const ModelFamily& family, const Vector& x,
                                           const Vector& theta_star, int n_draws,
                                           std::uint64_t seed = 7);

struct RegularityDiagnostics {
    double sigma_min_U = 0.0;
    double sigma_max_U = 0.0;
    double condition_number = 0.0;  // over the nonzero spectrum
    double max_gradient_norm_whitened = 0.0;
    Index rank = 0;
    bool ok() const { return rank > 0 && sigma_min_U > 1e-12 * sigma_max_U; }
};

RegularityDiagnostics regularity_diagnostics(const ModelFamily& family,
                                             const UnlabeledPool& pool,
                                             const Vector& theta_star, int n_draws,
                                             std::uint64_t seed = 11);

// Summary statistics ---------------------------------------------------------

/// Pairwise (cascade) summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values);

struct Summary {
    double mean = 0.0;
    double standard_error = 0.0;
};

Summary summarize(std::span<const double> values);

// Experiments ----------------------------------------------------------------

struct Scenario {
    std::string family = "linear";
    int classes = 3;
    PoolSpec pool;
    Vector theta_star;
    int trials = 200;
    std::optional<int> m1;
    std::vector<int> m2_sweep{100};
    std::uint64_t seed = 20160701;
    std::optional<double> weight_cap = 1.0;  // nullopt: uncapped
    double mle_tol = 1e-8;
    double design_tol = 1e-4;
    std::optional<double> theta_bound;  // box radius for Theta
    std::optional<bool> skip_stage1;
    bool run_passive = true;
    int diagnostic_draws = 100;

    void validate() const;
};

struct ArmResult {
    std::vector<double> errors;  // L_U(theta_hat) - L_U(theta_star), one per trial
    long long labels = 0;        // labels per trial
    double mean = 0.0;
    double standard_error = 0.0;
    double scaled_mean = 0.0;    // mean * m2 (active) or mean * labels (passive)
    double scaled_standard_error = 0.0;
    int nonconverged = 0;
};

struct SweepResult {
    int m1 = 0;
    int m2 = 0;
    double alpha = 0.0;
    ArmResult active;
    std::optional<ArmResult> passive;
    std::vector<double> tau_squared;  // at the realized mixed distribution and theta_star
    double tau_squared_mean = 0.0;
    std::vector<double> design_tau_squared;  // m2 * objective of the solved design
    double design_tau_squared_mean = 0.0;
    double passive_tau_squared = 0.0;  // p
};

struct ExperimentReport {
    Scenario scenario;
    Index p = 0;
    Index n = 0;
    RegularityDiagnostics diagnostics;
    std::vector<SweepResult> sweeps;
    std::optional<double> runtime_seconds;
};

/// Worker count from ACTIVE_MLE_THREADS (0 or unset: hardware concurrency).
int harness_threads();

/// Runs every sweep point for `trials` paired trials. Trial t uses the same
/// derived seed at every sweep point and for both arms.
ExperimentReport run_scenario(const Scenario& scenario, int threads = 0);

/// Derived per-trial seed.
std::uint64_t trial_seed(std::uint64_t root, int trial);

}  // namespace activemle
