#pragma once

#include "activemle/models.hpp"

#include <vector>

namespace activemle {

struct LabeledExample {
    Vector x;
    Label y;
    double weight = 1.0;
};

/// Weighted labeled sample. Nonempty with positive total weight.
struct LabeledSet {
    std::vector<LabeledExample> items;

    void add(Vector x, Label y, double weight = 1.0) {
        items.push_back({std::move(x), std::move(y), weight});
    }
    double total_weight() const;
    void validate() const;
};

struct MleOptions {
    double tol = 1e-8;
    int max_iterations = 100;
    double armijo_c = 1e-4;
    int max_backtracks = 60;
};

struct MleResult {
    Vector theta_hat;
    int iterations = 0;
    double final_gradient_norm = 0.0;  // projected onto the box's feasible directions
    double hessian_min_eig = 0.0;      // at the last Newton step, before ridge
    bool converged = false;
    bool on_boundary = false;
    bool ridge_applied = false;
    std::vector<double> objective_history;  // weighted NLL per accepted iterate
};

double weighted_nll(const ModelFamily& family, const LabeledSet& data, const Vector& theta);

/// Damped projected Newton on the weighted negative log-likelihood.
///
/// Each iteration solves (H + ridge) step = -g, clips the trial point into
/// the box and backtracks (halving) until the Armijo condition holds. The
/// ridge 1e-8 * trace(H) / p is added only when min eig(H) < 1e-10.
/// Returns the best iterate with converged = false if the iteration budget
/// runs out.
MleResult fit_mle(const ModelFamily& family, const LabeledSet& data, const Vector& init,
                  const ParamSpace& space, const MleOptions& options = {});

}  // namespace activemle
