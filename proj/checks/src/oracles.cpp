#include "activemle/checks.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace activemle::checks {

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& at, double h) {
    Vector g(at.size());
    for (Index i = 0; i < at.size(); ++i) {
        Vector up = at;
        Vector dn = at;
        up(i) += h;
        dn(i) -= h;
        g(i) = (f(up) - f(dn)) / (2 * h);
    }
    return g;
}

Matrix fd_jacobian_of_gradient(const std::function<Vector(const Vector&)>& grad, const Vector& at,
                               double h) {
    const Index p = at.size();
    Matrix j(p, p);
    for (Index i = 0; i < p; ++i) {
        Vector up = at;
        Vector dn = at;
        up(i) += h;
        dn(i) -= h;
        j.col(i) = (grad(up) - grad(dn)) / (2 * h);
    }
    return 0.5 * (j + j.transpose());
}

Matrix fd_hessian(const std::function<double(const Vector&)>& f, const Vector& at, double h) {
    const Index p = at.size();
    Matrix hess(p, p);
    for (Index a = 0; a < p; ++a) {
        for (Index b = a; b < p; ++b) {
            auto shifted = [&](double sa, double sb) {
                Vector t = at;
                t(a) += sa * h;
                t(b) += sb * h;
                return f(t);
            };
            const double v = (shifted(1, 1) - shifted(1, -1) - shifted(-1, 1) + shifted(-1, -1)) /
                             (4 * h * h);
            hess(a, b) = v;
            hess(b, a) = v;
        }
    }
    return hess;
}

namespace {

// Symmetric 2x2 (or 1x1) packed as {s11, s12, s22}.
using Packed = std::array<double, 3>;

Packed pack(const Matrix& m) {
    if (m.rows() == 1) return {m(0, 0), 0.0, 0.0};
    return {m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), m(1, 1)};
}

struct GridSearch {
    std::vector<Packed> fisher;
    Packed target{};
    int p = 1;
    long long units_cap = 0;
    double step = 0.01;
    double det_floor = 0.0;
    GridResult result;
    std::vector<long long> current;

    double value(const Packed& s) const {
        if (p == 1) {
            if (s[0] <= det_floor) return std::numeric_limits<double>::infinity();
            return target[0] / s[0];
        }
        const double det = s[0] * s[2] - s[1] * s[1];
        if (det <= det_floor || s[0] <= 0) return std::numeric_limits<double>::infinity();
        // trace(adj(S) M) / det(S)
        return (s[2] * target[0] - 2 * s[1] * target[1] + s[0] * target[2]) / det;
    }

    void recurse(std::size_t i, long long remaining, const Packed& s) {
        const std::size_t n = fisher.size();
        if (i + 1 == n) {
            if (remaining < 0 || remaining > units_cap) return;
            current[i] = remaining;
            const double w = static_cast<double>(remaining) * step;
            const Packed t{s[0] + w * fisher[i][0], s[1] + w * fisher[i][1],
                           s[2] + w * fisher[i][2]};
            const double v = value(t);
            ++result.evaluated;
            if (v < result.best) {
                result.best = v;
                result.argmin.assign(current.size(), 0.0);
                for (std::size_t k = 0; k < n; ++k)
                    result.argmin[k] = static_cast<double>(current[k]) * step;
            }
            return;
        }
        const long long rest_capacity = units_cap * static_cast<long long>(n - i - 1);
        const long long lo = std::max(0LL, remaining - rest_capacity);
        const long long hi = std::min(units_cap, remaining);
        for (long long k = lo; k <= hi; ++k) {
            current[i] = k;
            const double w = static_cast<double>(k) * step;
            recurse(i + 1, remaining - k,
                    {s[0] + w * fisher[i][0], s[1] + w * fisher[i][1], s[2] + w * fisher[i][2]});
        }
    }
};

}  // namespace

GridResult grid_search_design(const std::vector<Matrix>& fisher, const Matrix& target,
                              double budget, double cap, double step) {
    if (fisher.empty()) throw Error("grid search: empty pool");
    if (target.rows() > 2) throw Error("grid search: supports p <= 2 only");
    GridSearch gs;
    gs.p = static_cast<int>(target.rows());
    gs.step = step;
    gs.units_cap = std::llround(std::min(cap, budget) / step);
    const long long units_budget = std::llround(budget / step);
    for (const auto& f : fisher) gs.fisher.push_back(pack(f));
    gs.target = pack(target);
    const double scale = target.norm() * budget;
    gs.det_floor = 1e-14 * scale * scale;
    gs.result.best = std::numeric_limits<double>::infinity();
    gs.current.assign(fisher.size(), 0);
    gs.recurse(0, units_budget, {0.0, 0.0, 0.0});
    return gs.result;
}

double passive_e1_ej_expectation(int d, int n, int m, const Vector& theta_star) {
    const Matrix rows = e1_ej_rows(d, n);
    double total = 0.0;
    for (int j = 0; j < d; ++j) {
        const double p = rows.col(j).sum() / n;
        double e = 0.0;
        for (int k = 0; k <= m; ++k) {
            const double log_pmf = std::lgamma(m + 1.0) - std::lgamma(k + 1.0) -
                                   std::lgamma(m - k + 1.0) + k * std::log(p) +
                                   (m - k) * std::log1p(-p);
            e += std::exp(log_pmf) * (k > 0 ? 1.0 / k : theta_star(j) * theta_star(j));
        }
        total += p * e;
    }
    return total * m;
}

Vector random_normal(Index n, Rng& rng, double scale) {
    std::normal_distribution<double> normal(0.0, scale);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
}

Label random_label(const ModelFamily& family, Rng& rng) {
    if (family.name() == "linear") return std::normal_distribution<double>(0.0, 2.0)(rng);
    if (family.name() == "logistic")
        return Sign{std::bernoulli_distribution(0.5)(rng) ? 1 : -1};
    const auto& multi = dynamic_cast<const MultinomialLogistic&>(family);
    return ClassIndex{std::uniform_int_distribution<int>(1, multi.num_classes())(rng)};
}

}  // namespace activemle::checks
