#pragma once

#include "activemle/models.hpp"

#include <optional>
#include <vector>

namespace activemle {

/// Symmetric PSD aggregate E_{X~Gamma}[I(X, theta)] with its smallest eigenvalue.
struct FisherAggregate {
    Matrix matrix;
    double min_eig = 0.0;

    static FisherAggregate from(Matrix m);
};

/// Data of the sampling-design program
///
///   minimize   trace(S(a)^-1 target),  S(a) = sum_i a_i fisher[i]
///   subject to 0 <= a_i <= weight_cap, sum_i a_i = budget.
///
/// weight_cap = 1 is the classical box. Any cap >= budget removes the upper
/// bound, leaving a scaled simplex (with-replacement sampling).
struct DesignProblem {
    std::vector<Matrix> fisher;
    Matrix target;
    double budget = 1.0;
    double weight_cap = 1.0;

    Index size() const { return static_cast<Index>(fisher.size()); }
    Index dim() const { return target.rows(); }
    bool uncapped() const { return weight_cap >= budget; }

    /// Throws InfeasibleDesign if budget > n * cap, DimensionError on shape
    /// mismatch, Error if target differs from the mean Fisher matrix.
    void validate() const;
};

/// Builds the problem at theta: per-example Fisher matrices and target I_U(theta).
/// A cap of std::nullopt means uncapped.
DesignProblem make_design_problem(const ModelFamily& family, const Matrix& pool_rows,
                                  const Vector& theta, double budget,
                                  std::optional<double> weight_cap = 1.0);

struct Design {
    Vector weights;
    double budget = 0.0;
    double weight_cap = 1.0;
    double objective = 0.0;     // trace(S(a)^-1 target)
    double tau_squared = 0.0;   // budget * objective = trace(I_Gamma^-1 I_U), Gamma = a / budget
    double duality_gap = 0.0;   // Frank-Wolfe gap at the returned weights
    int iterations = 0;
    int ridge_events = 0;
    bool converged = false;

    Vector sampling_distribution() const { return weights / budget; }
};

struct DesignOptions {
    double tol = 1e-4;  // relative duality gap
    int max_iterations = 5000;
};

/// trace(S(a)^-1 target). Throws SingularMatrix if S(a) is not positive definite.
double design_objective(const Vector& a, const DesignProblem& problem);

/// d/da_i trace(S^-1 M) = -trace(S^-1 I_i S^-1 M).
Vector design_gradient(const Vector& a, const DesignProblem& problem);

/// Away-step Frank-Wolfe from the uniform design a_i = budget / n. The
/// linear oracle fills the most negative gradient coordinates up to the cap,
/// lowest index first on ties. Stops at gap <= tol * objective.
Design solve_design(const DesignProblem& problem, const DesignOptions& options = {});

/// The cone-program view: target = sum_j sigma_j v_j v_j', and the design
/// value is sum_j sigma_j c_j subject to [[c_j, v_j'], [v_j, S]] >= 0.
struct SdpForm {
    Vector sigma;                // descending
    Matrix v;                    // column j is v_j
    std::vector<Matrix> fisher;  // per example
    double budget = 0.0;
    double weight_cap = 1.0;

    Matrix reconstruct_target() const;
    Matrix block(Index j, double c, const Matrix& s) const;

    /// c_j = v_j' S(a)^-1 v_j, the smallest feasible epigraph values.
    Vector tight_epigraph(const Vector& a) const;
    double objective(const Vector& c) const { return sigma.dot(c); }
    Matrix aggregate(const Vector& a) const;
};

SdpForm build_sdp_form(const DesignProblem& problem);

/// alpha * a / m2 + (1 - alpha) / n with alpha = 1 - m2^(-1/6).
Vector mix_with_uniform(const Design& design, double m2);
double mixing_alpha(double m2);

}  // namespace activemle
