#include "activemle/mle.hpp"

#include <cmath>

namespace activemle {

double LabeledSet::total_weight() const {
    double total = 0.0;
    for (const auto& item : items) total += item.weight;
    return total;
}

void LabeledSet::validate() const {
    if (items.empty()) throw Error("LabeledSet: empty");
    const Index d = items.front().x.size();
    for (const auto& item : items) {
        if (item.x.size() != d) throw DimensionError("LabeledSet: examples differ in dimension");
        if (!(item.weight >= 0.0) || !std::isfinite(item.weight))
            throw Error("LabeledSet: weights must be finite and nonnegative");
    }
    if (!(total_weight() > 0.0)) throw Error("LabeledSet: total weight must be positive");
}

double weighted_nll(const ModelFamily& family, const LabeledSet& data, const Vector& theta) {
    double total = 0.0;
    for (const auto& item : data.items)
        if (item.weight != 0.0) total += item.weight * family.nll(item.x, item.y, theta);
    return total;
}

namespace {

struct LocalModel {
    double value;
    Vector gradient;
    Matrix hessian;
};

LocalModel evaluate(const ModelFamily& family, const LabeledSet& data, const Vector& theta) {
    const Index p = theta.size();
    LocalModel m{0.0, Vector::Zero(p), Matrix::Zero(p, p)};
    for (const auto& item : data.items) {
        if (item.weight == 0.0) continue;
        m.value += item.weight * family.nll(item.x, item.y, theta);
        m.gradient += item.weight * family.nll_gradient(item.x, item.y, theta);
        m.hessian += item.weight * family.nll_hessian(item.x, theta);
    }
    return m;
}

// Coordinates pinned at a bound with the gradient pushing outward.
std::vector<bool> pinned_coordinates(const Vector& theta, const Vector& g, const ParamSpace& box) {
    std::vector<bool> pinned(theta.size(), false);
    for (Index i = 0; i < theta.size(); ++i) {
        if (theta(i) <= box.lower(i) && g(i) > 0) pinned[i] = true;
        if (theta(i) >= box.upper(i) && g(i) < 0) pinned[i] = true;
    }
    return pinned;
}

double projected_norm(const Vector& g, const std::vector<bool>& pinned) {
    double s = 0.0;
    for (Index i = 0; i < g.size(); ++i)
        if (!pinned[i]) s += g(i) * g(i);
    return std::sqrt(s);
}

bool touches_boundary(const Vector& theta, const ParamSpace& box) {
    return ((theta.array() <= box.lower.array()) || (theta.array() >= box.upper.array())).any();
}

}  // namespace

MleResult fit_mle(const ModelFamily& family, const LabeledSet& data, const Vector& init,
                  const ParamSpace& space, const MleOptions& options) {
    data.validate();
    space.validate();
    if (!(options.tol > 0.0)) throw Error("fit_mle: tolerance must be positive");
    const Index p = family.param_dim(data.items.front().x.size());
    if (init.size() != p || space.dim() != p)
        throw DimensionError("fit_mle: init/space length does not match the model");
    if (!space.contains(init)) throw Error("fit_mle: init lies outside the parameter space");

    MleResult result;
    Vector theta = init;
    LocalModel local = evaluate(family, data, theta);
    result.objective_history.push_back(local.value);

    for (int iter = 0;; ++iter) {
        const auto pinned = pinned_coordinates(theta, local.gradient, space);
        result.final_gradient_norm = projected_norm(local.gradient, pinned);
        result.iterations = iter;
        if (result.final_gradient_norm <= options.tol) {
            result.converged = true;
            break;
        }
        if (iter >= options.max_iterations) break;

        std::vector<Index> free;
        for (Index i = 0; i < p; ++i)
            if (!pinned[i]) free.push_back(i);
        const auto nf = static_cast<Index>(free.size());
        Matrix h(nf, nf);
        Vector g(nf);
        for (Index a = 0; a < nf; ++a) {
            g(a) = local.gradient(free[a]);
            for (Index b = 0; b < nf; ++b) h(a, b) = local.hessian(free[a], free[b]);
        }

        const double min_eig =
            Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues()(0);
        result.hessian_min_eig = min_eig;
        if (min_eig < 1e-10) {
            const double trace = h.trace();
            const double ridge = 1e-8 * (trace > 0 ? trace : 1.0) / static_cast<double>(nf);
            h.diagonal().array() += ridge;
            result.ridge_applied = true;
        }
        Vector step_free = h.ldlt().solve(-g);
        if (!step_free.allFinite() || step_free.dot(g) >= 0) step_free = -g;

        Vector step = Vector::Zero(p);
        for (Index a = 0; a < nf; ++a) step(free[a]) = step_free(a);

        double t = 1.0;
        bool accepted = false;
        Vector trial;
        double trial_value = 0.0;
        for (int k = 0; k < options.max_backtracks; ++k, t *= 0.5) {
            trial = space.project(theta + t * step);
            trial_value = weighted_nll(family, data, trial);
            const double predicted = local.gradient.dot(trial - theta);
            if (std::isfinite(trial_value) &&
                trial_value <= local.value + options.armijo_c * predicted) {
                accepted = true;
                break;
            }
        }
        if (!accepted || trial == theta) break;

        theta = trial;
        local = evaluate(family, data, theta);
        result.objective_history.push_back(local.value);
    }

    result.theta_hat = theta;
    result.on_boundary = touches_boundary(theta, space);
    return result;
}

}  // namespace activemle
