#include "activemle/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace activemle {

FisherAggregate FisherAggregate::from(Matrix m) {
    FisherAggregate agg{std::move(m), 0.0};
    if (agg.matrix.size() > 0)
        agg.min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(agg.matrix, Eigen::EigenvaluesOnly)
                          .eigenvalues()(0);
    return agg;
}

void DesignProblem::validate() const {
    if (fisher.empty()) throw Error("design: empty pool");
    const Index p = target.rows();
    if (target.cols() != p) throw DimensionError("design: target is not square");
    for (const auto& f : fisher)
        if (f.rows() != p || f.cols() != p)
            throw DimensionError("design: per-example Fisher matrix has the wrong shape");
    if (!(budget > 0.0)) throw InfeasibleDesign("design: budget must be positive");
    if (!(weight_cap > 0.0)) throw InfeasibleDesign("design: weight cap must be positive");
    const double capacity = weight_cap * static_cast<double>(size());
    if (budget > capacity * (1.0 + 1e-12))
        throw InfeasibleDesign("design: budget " + std::to_string(budget) + " exceeds n * cap = " +
                               std::to_string(capacity) + "; no weights satisfy 0 <= a_i <= cap");

    Matrix mean = Matrix::Zero(p, p);
    for (const auto& f : fisher) mean += f;
    mean /= static_cast<double>(size());
    const double scale = std::max(target.norm(), mean.norm());
    if ((target - mean).norm() > 1e-10 * std::max(scale, 1e-300))
        throw Error("design: target is not the mean of the per-example Fisher matrices");
}

DesignProblem make_design_problem(const ModelFamily& family, const Matrix& pool_rows,
                                  const Vector& theta, double budget,
                                  std::optional<double> weight_cap) {
    const Index n = pool_rows.rows();
    const Index p = family.param_dim(pool_rows.cols());
    DesignProblem problem;
    problem.budget = budget;
    problem.weight_cap = weight_cap ? *weight_cap : budget;
    problem.fisher.reserve(static_cast<std::size_t>(n));
    problem.target = Matrix::Zero(p, p);
    for (Index i = 0; i < n; ++i) {
        problem.fisher.push_back(family.fisher(pool_rows.row(i).transpose(), theta));
        problem.target += problem.fisher.back();
    }
    if (n > 0) problem.target /= static_cast<double>(n);
    problem.validate();
    return problem;
}

namespace {

Matrix aggregate(const std::vector<Matrix>& fisher, const Vector& a, Index p) {
    Matrix s = Matrix::Zero(p, p);
    for (std::size_t i = 0; i < fisher.size(); ++i) {
        const double w = a(static_cast<Index>(i));
        if (w != 0.0) s += w * fisher[i];
    }
    return s;
}

// Inverse of a symmetric matrix that must be positive definite.
std::optional<Matrix> spd_inverse(const Matrix& s) {
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Matrix inv = llt.solve(Matrix::Identity(s.rows(), s.cols()));
    if (!inv.allFinite()) return std::nullopt;
    return inv;
}

[[noreturn]] void throw_singular(const Matrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
    const Vector ev = eig.eigenvalues();
    const double top = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    Index rank = 0;
    for (Index i = 0; i < ev.size(); ++i)
        if (ev(i) > 1e-12 * top) ++rank;
    throw SingularMatrix("design: S(a) is singular (rank " + std::to_string(rank) + " of " +
                         std::to_string(s.rows()) + ")");
}

void check_weights(const Vector& a, const DesignProblem& problem) {
    if (a.size() != problem.size())
        throw DimensionError("design: weight vector length does not match the pool");
}

struct Inverted {
    Matrix used;  // s, or s plus the ridge
    Matrix inverse;
    bool ridged = false;
};

Inverted invert_with_ridge(const Matrix& s) {
    if (auto inv = spd_inverse(s)) return {s, std::move(*inv), false};
    const double trace = s.trace();
    Matrix r = s;
    r.diagonal().array() += 1e-10 * (trace > 0 ? trace : 1.0) / static_cast<double>(s.rows());
    if (auto inv = spd_inverse(r)) return {std::move(r), std::move(*inv), true};
    throw_singular(s);
}

Vector gradient_from(const std::vector<Matrix>& fisher, const Matrix& g) {
    Vector out(static_cast<Index>(fisher.size()));
    for (std::size_t i = 0; i < fisher.size(); ++i)
        out(static_cast<Index>(i)) = -fisher[i].cwiseProduct(g).sum();
    return out;
}

std::vector<Index> order_by(const Vector& grad, bool ascending) {
    std::vector<Index> idx(static_cast<std::size_t>(grad.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Index l, Index r) {
        return ascending ? grad(l) < grad(r) : grad(l) > grad(r);
    });
    return idx;
}

// argmin <grad, s> over {0 <= s <= cap, sum s = budget}.
Vector linear_oracle(const Vector& grad, double budget, double cap) {
    Vector s = Vector::Zero(grad.size());
    double remaining = budget;
    for (Index i : order_by(grad, true)) {
        if (remaining <= 0) break;
        const double take = std::min(cap, remaining);
        s(i) = take;
        remaining -= take;
    }
    return s;
}

// argmax <grad, v> over vertices of the smallest face containing a.
Vector away_vertex(const Vector& grad, const Vector& a, double budget, double cap) {
    Vector v = Vector::Zero(a.size());
    double remaining = budget;
    for (Index i = 0; i < a.size(); ++i) {
        if (a(i) >= cap) {
            v(i) = cap;
            remaining -= cap;
        }
    }
    for (Index i : order_by(grad, false)) {
        if (remaining <= 0) break;
        if (a(i) <= 0.0 || a(i) >= cap) continue;
        const double take = std::min(cap, remaining);
        v(i) = take;
        remaining -= take;
    }
    return v;
}

double max_step(const Vector& a, const Vector& dir, double cap) {
    double gmax = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < a.size(); ++i) {
        if (dir(i) < 0) gmax = std::min(gmax, a(i) / -dir(i));
        else if (dir(i) > 0) gmax = std::min(gmax, (cap - a(i)) / dir(i));
    }
    return std::max(gmax, 0.0);
}

// Derivative of trace((S + g D)^-1 M) in g; +inf once S + g D loses definiteness.
double directional_derivative(const Matrix& s, const Matrix& d, const Matrix& m, double g) {
    const auto inv = spd_inverse(s + g * d);
    if (!inv) return std::numeric_limits<double>::infinity();
    return -(*inv * d * *inv * m).trace();
}

double line_search(const Matrix& s, const Matrix& d, const Matrix& m, double gmax) {
    if (!(gmax > 0)) return 0.0;
    if (directional_derivative(s, d, m, gmax) <= 0) return gmax;
    double lo = 0.0;
    double hi = gmax;
    for (int k = 0; k < 60 && hi - lo > 1e-15 * gmax; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (directional_derivative(s, d, m, mid) > 0) hi = mid;
        else lo = mid;
    }
    return lo;
}

void snap(Vector& a, double cap) {
    const double eps = 1e-13 * cap;
    for (Index i = 0; i < a.size(); ++i) {
        if (a(i) < eps) a(i) = 0.0;
        else if (a(i) > cap - eps) a(i) = cap;
    }
}

}  // namespace

double design_objective(const Vector& a, const DesignProblem& problem) {
    check_weights(a, problem);
    const Matrix s = aggregate(problem.fisher, a, problem.dim());
    const auto inv = spd_inverse(s);
    if (!inv) throw_singular(s);
    return (*inv * problem.target).trace();
}

Vector design_gradient(const Vector& a, const DesignProblem& problem) {
    check_weights(a, problem);
    const Matrix s = aggregate(problem.fisher, a, problem.dim());
    const auto inv = spd_inverse(s);
    if (!inv) throw_singular(s);
    const Matrix g = *inv * problem.target * *inv;
    return gradient_from(problem.fisher, 0.5 * (g + g.transpose()));
}

Design solve_design(const DesignProblem& problem, const DesignOptions& options) {
    problem.validate();
    if (!(options.tol > 0)) throw Error("solve_design: tolerance must be positive");
    const Index n = problem.size();
    const Index p = problem.dim();
    const double cap = std::min(problem.weight_cap, problem.budget);
    const Matrix& m = problem.target;

    Design out;
    out.budget = problem.budget;
    out.weight_cap = problem.weight_cap;

    Vector a = Vector::Constant(n, problem.budget / static_cast<double>(n));
    Vector best = a;
    double best_value = std::numeric_limits<double>::infinity();
    double best_gap = std::numeric_limits<double>::infinity();

    for (int iter = 0;; ++iter) {
        const Matrix s = aggregate(problem.fisher, a, p);
        const Inverted inv = invert_with_ridge(s);
        if (inv.ridged) ++out.ridge_events;
        const double value = (inv.inverse * m).trace();
        Matrix g = inv.inverse * m * inv.inverse;
        g = 0.5 * (g + g.transpose());
        const Vector grad = gradient_from(problem.fisher, g);

        const Vector fw = linear_oracle(grad, problem.budget, cap);
        const double gap = grad.dot(a - fw);
        if (value <= best_value) {
            best = a;
            best_value = value;
            best_gap = gap;
        }
        out.iterations = iter;
        if (gap <= options.tol * value) {
            out.converged = true;
            break;
        }
        if (iter >= options.max_iterations) break;

        const Vector away = away_vertex(grad, a, problem.budget, cap);
        Vector dir;
        double gmax = 1.0;
        if (gap >= grad.dot(away - a)) {
            dir = fw - a;
        } else {
            dir = a - away;
            gmax = max_step(a, dir, cap);
        }
        const Matrix d = aggregate(problem.fisher, dir, p);
        const double step = line_search(inv.used, d, m, gmax);
        if (step <= 0) {
            // Numerically stalled: keep the best iterate.
            break;
        }
        a += step * dir;
        snap(a, cap);
    }

    out.weights = best;
    out.duality_gap = best_gap;
    const Matrix s = aggregate(problem.fisher, best, p);
    if (auto inv = spd_inverse(s)) out.objective = (*inv * m).trace();
    else out.objective = best_value;
    out.tau_squared = problem.budget * out.objective;
    if (!out.converged && best_gap <= options.tol * out.objective) out.converged = true;
    return out;
}

Matrix SdpForm::reconstruct_target() const {
    return v * sigma.asDiagonal() * v.transpose();
}

Matrix SdpForm::aggregate(const Vector& a) const {
    return activemle::aggregate(fisher, a, sigma.size());
}

Matrix SdpForm::block(Index j, double c, const Matrix& s) const {
    const Index p = s.rows();
    Matrix b(p + 1, p + 1);
    b(0, 0) = c;
    b.block(1, 0, p, 1) = v.col(j);
    b.block(0, 1, 1, p) = v.col(j).transpose();
    b.block(1, 1, p, p) = s;
    return b;
}

Vector SdpForm::tight_epigraph(const Vector& a) const {
    const Matrix s = aggregate(a);
    const auto inv = spd_inverse(s);
    if (!inv) throw_singular(s);
    Vector c(sigma.size());
    for (Index j = 0; j < sigma.size(); ++j) c(j) = v.col(j).dot(*inv * v.col(j));
    return c;
}

SdpForm build_sdp_form(const DesignProblem& problem) {
    problem.validate();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(problem.target);
    const Index p = problem.dim();
    // Descending eigenvalues; equal ones keep the solver's order.
    std::vector<Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return eig.eigenvalues()(a) > eig.eigenvalues()(b);
    });
    SdpForm form;
    form.sigma.resize(p);
    form.v.resize(p, p);
    for (Index j = 0; j < p; ++j) {
        form.sigma(j) = eig.eigenvalues()(order[static_cast<std::size_t>(j)]);
        form.v.col(j) = eig.eigenvectors().col(order[static_cast<std::size_t>(j)]);
    }
    form.fisher = problem.fisher;
    form.budget = problem.budget;
    form.weight_cap = problem.weight_cap;
    return form;
}

double mixing_alpha(double m2) {
    return 1.0 - std::pow(m2, -1.0 / 6.0);
}

Vector mix_with_uniform(const Design& design, double m2) {
    if (!(m2 > 0)) throw Error("mix_with_uniform: m2 must be positive");
    const double alpha = mixing_alpha(m2);
    const auto n = static_cast<double>(design.weights.size());
    return (alpha / m2) * design.weights.array() + (1.0 - alpha) / n;
}

}  // namespace activemle
