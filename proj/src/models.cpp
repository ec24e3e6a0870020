#include "activemle/models.hpp"

#include <algorithm>
#include <cmath>

namespace activemle {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double log1p_exp(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

void ModelFamily::check_dims(const Vector& x, const Vector& theta) const {
    if (theta.size() != param_dim(x.size()))
        throw DimensionError(name() + ": parameter length " + std::to_string(theta.size()) +
                             " does not match feature length " + std::to_string(x.size()));
}

namespace {

double real_label(const Label& y) {
    if (const auto* v = std::get_if<double>(&y)) return *v;
    throw LabelError("linear: expected a real-valued label");
}

int sign_label(const Label& y) {
    const auto* s = std::get_if<Sign>(&y);
    if (s == nullptr) throw LabelError("logistic: expected a sign label");
    if (s->value != 1 && s->value != -1) throw LabelError("logistic: sign label must be -1 or +1");
    return s->value;
}

}  // namespace

// Linear ---------------------------------------------------------------------

double LinearRegression::nll(const Vector& x, const Label& y, const Vector& theta) const {
    check_dims(x, theta);
    const double r = real_label(y) - theta.dot(x);
    return r * r;
}

Vector LinearRegression::nll_gradient(const Vector& x, const Label& y, const Vector& theta) const {
    check_dims(x, theta);
    const double r = real_label(y) - theta.dot(x);
    return -2.0 * r * x;
}

Matrix LinearRegression::fisher(const Vector& x, const Vector& theta) const {
    check_dims(x, theta);
    return x * x.transpose();
}

Label LinearRegression::sample_label(const Vector& x, const Vector& theta_star, Rng& rng) const {
    check_dims(x, theta_star);
    std::normal_distribution<double> noise(0.0, 1.0);
    return theta_star.dot(x) + noise(rng);
}

double LinearRegression::expected_nll_gap(const Vector& x, const Vector& theta,
                                          const Vector& theta_star) const {
    check_dims(x, theta);
    check_dims(x, theta_star);
    const double diff = (theta - theta_star).dot(x);
    return diff * diff;
}

// Logistic -------------------------------------------------------------------

double LogisticRegression::nll(const Vector& x, const Label& y, const Vector& theta) const {
    check_dims(x, theta);
    return log1p_exp(-sign_label(y) * theta.dot(x));
}

Vector LogisticRegression::nll_gradient(const Vector& x, const Label& y,
                                        const Vector& theta) const {
    check_dims(x, theta);
    const int s = sign_label(y);
    return -s * sigmoid(-s * theta.dot(x)) * x;
}

Matrix LogisticRegression::fisher(const Vector& x, const Vector& theta) const {
    check_dims(x, theta);
    const double z = theta.dot(x);
    // e^z / (1 + e^z)^2 = sigmoid(z) * sigmoid(-z)
    return (sigmoid(z) * sigmoid(-z)) * (x * x.transpose());
}

Label LogisticRegression::sample_label(const Vector& x, const Vector& theta_star, Rng& rng) const {
    check_dims(x, theta_star);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return Sign{unit(rng) < sigmoid(theta_star.dot(x)) ? 1 : -1};
}

double LogisticRegression::expected_nll_gap(const Vector& x, const Vector& theta,
                                            const Vector& theta_star) const {
    check_dims(x, theta);
    check_dims(x, theta_star);
    const double z = theta.dot(x);
    const double zs = theta_star.dot(x);
    // KL(Bern(sigmoid(zs)) || Bern(sigmoid(z))) written through softplus terms.
    const double p = sigmoid(zs);
    const double kl = p * (log1p_exp(-z) - log1p_exp(-zs)) +
                      (1.0 - p) * (log1p_exp(z) - log1p_exp(zs));
    return std::max(kl, 0.0);
}

// Multinomial ----------------------------------------------------------------

MultinomialLogistic::MultinomialLogistic(int num_classes) : classes_(num_classes) {
    if (num_classes < 2) throw Error("multinomial: need at least two classes");
}

Vector MultinomialLogistic::logits(const Vector& x, const Vector& theta) const {
    check_dims(x, theta);
    const Index d = x.size();
    Vector z(classes_);
    for (int k = 0; k + 1 < classes_; ++k) z(k) = theta.segment(k * d, d).dot(x);
    z(classes_ - 1) = 0.0;
    return z;
}

Vector MultinomialLogistic::class_probabilities(const Vector& x, const Vector& theta) const {
    const Vector z = logits(x, theta);
    const Vector e = (z.array() - z.maxCoeff()).exp().matrix();
    return e / e.sum();
}

double MultinomialLogistic::nll(const Vector& x, const Label& y, const Vector& theta) const {
    const auto* c = std::get_if<ClassIndex>(&y);
    if (c == nullptr) throw LabelError("multinomial: expected a class label");
    if (c->value < 1 || c->value > classes_) throw LabelError("multinomial: class out of range");
    const Vector z = logits(x, theta);
    const double m = z.maxCoeff();
    const double lse = m + std::log((z.array() - m).exp().sum());
    return lse - z(c->value - 1);
}

Vector MultinomialLogistic::nll_gradient(const Vector& x, const Label& y,
                                         const Vector& theta) const {
    const auto* c = std::get_if<ClassIndex>(&y);
    if (c == nullptr) throw LabelError("multinomial: expected a class label");
    if (c->value < 1 || c->value > classes_) throw LabelError("multinomial: class out of range");
    const Vector p = class_probabilities(x, theta);
    const Index d = x.size();
    Vector g(theta.size());
    for (int k = 0; k + 1 < classes_; ++k) {
        const double resid = p(k) - (c->value == k + 1 ? 1.0 : 0.0);
        g.segment(k * d, d) = resid * x;
    }
    return g;
}

Matrix MultinomialLogistic::class_fisher(const Vector& x, const Vector& theta) const {
    const Vector p = class_probabilities(x, theta).head(classes_ - 1);
    Matrix f = -p * p.transpose();
    f.diagonal() += p;
    return f;
}

Matrix MultinomialLogistic::fisher(const Vector& x, const Vector& theta) const {
    const Matrix f = class_fisher(x, theta);
    const Matrix xx = x * x.transpose();
    const Index d = x.size();
    const Index b = classes_ - 1;
    Matrix out(b * d, b * d);
    for (Index i = 0; i < b; ++i)
        for (Index j = 0; j < b; ++j) out.block(i * d, j * d, d, d) = f(i, j) * xx;
    return out;
}

Label MultinomialLogistic::sample_label(const Vector& x, const Vector& theta_star,
                                        Rng& rng) const {
    const Vector p = class_probabilities(x, theta_star);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double acc = 0.0;
    for (int k = 0; k < classes_; ++k) {
        acc += p(k);
        if (u < acc) return ClassIndex{k + 1};
    }
    return ClassIndex{classes_};
}

double MultinomialLogistic::expected_nll_gap(const Vector& x, const Vector& theta,
                                             const Vector& theta_star) const {
    const Vector z = logits(x, theta);
    const Vector zs = logits(x, theta_star);
    const double lse = z.maxCoeff() + std::log((z.array() - z.maxCoeff()).exp().sum());
    const double lses = zs.maxCoeff() + std::log((zs.array() - zs.maxCoeff()).exp().sum());
    const Vector ps = class_probabilities(x, theta_star);
    // KL(p* || p) = sum_k p*_k [(zs_k - lses) - (z_k - lse)]
    double kl = 0.0;
    for (int k = 0; k < classes_; ++k)
        if (ps(k) > 0) kl += ps(k) * ((zs(k) - lses) - (z(k) - lse));
    return std::max(kl, 0.0);
}

std::unique_ptr<ModelFamily> make_family(std::string_view name, int num_classes) {
    if (name == "linear") return std::make_unique<LinearRegression>();
    if (name == "logistic") return std::make_unique<LogisticRegression>();
    if (name == "multinomial") return std::make_unique<MultinomialLogistic>(num_classes);
    throw ParseError("unknown model family '" + std::string(name) + "'");
}

}  // namespace activemle
