#pragma once

#include "activemle/types.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace activemle {

/// A conditional model p(y | x, theta) whose Hessian of the negative
/// log-likelihood does not depend on y.
///
/// Parameters are flat vectors of length param_dim(d). The Hessian of nll()
/// equals nll_scale() * fisher(); nll_scale() is 1 for a true negative
/// log-likelihood and 2 for the squared-error linear convention.
class ModelFamily {
public:
    virtual ~ModelFamily() = default;

    virtual std::string name() const = 0;
    virtual Index param_dim(Index feature_dim) const = 0;

    virtual double nll(const Vector& x, const Label& y, const Vector& theta) const = 0;
    virtual Vector nll_gradient(const Vector& x, const Label& y, const Vector& theta) const = 0;
    virtual Matrix fisher(const Vector& x, const Vector& theta) const = 0;
    virtual Label sample_label(const Vector& x, const Vector& theta_star, Rng& rng) const = 0;

    /// E_{Y~p(.|x,theta_star)}[L(Y|x,theta)] - E[L(Y|x,theta_star)], closed form.
    virtual double expected_nll_gap(const Vector& x, const Vector& theta,
                                    const Vector& theta_star) const = 0;

    virtual bool fisher_theta_independent() const { return false; }
    virtual double nll_scale() const { return 1.0; }

    Matrix nll_hessian(const Vector& x, const Vector& theta) const {
        return nll_scale() * fisher(x, theta);
    }

    Label sample_label(const Vector& x, const Vector& theta_star, std::uint64_t seed) const {
        Rng rng = make_rng(seed, 0);
        return sample_label(x, theta_star, rng);
    }

protected:
    void check_dims(const Vector& x, const Vector& theta) const;
};

/// y = theta'x + N(0,1), with L = (y - theta'x)^2 and I(x, theta) = xx'.
class LinearRegression final : public ModelFamily {
public:
    std::string name() const override { return "linear"; }
    Index param_dim(Index d) const override { return d; }
    double nll(const Vector& x, const Label& y, const Vector& theta) const override;
    Vector nll_gradient(const Vector& x, const Label& y, const Vector& theta) const override;
    Matrix fisher(const Vector& x, const Vector& theta) const override;
    Label sample_label(const Vector& x, const Vector& theta_star, Rng& rng) const override;
    double expected_nll_gap(const Vector& x, const Vector& theta,
                            const Vector& theta_star) const override;
    bool fisher_theta_independent() const override { return true; }
    double nll_scale() const override { return 2.0; }
    using ModelFamily::sample_label;
};

/// Binary logistic regression with labels in {-1, +1}.
class LogisticRegression final : public ModelFamily {
public:
    std::string name() const override { return "logistic"; }
    Index param_dim(Index d) const override { return d; }
    double nll(const Vector& x, const Label& y, const Vector& theta) const override;
    Vector nll_gradient(const Vector& x, const Label& y, const Vector& theta) const override;
    Matrix fisher(const Vector& x, const Vector& theta) const override;
    Label sample_label(const Vector& x, const Vector& theta_star, Rng& rng) const override;
    double expected_nll_gap(const Vector& x, const Vector& theta,
                            const Vector& theta_star) const override;
    using ModelFamily::sample_label;
};

/// K-class softmax regression with class K as the reference (logit 0).
/// theta holds K-1 blocks of length d, class-major; I(x, theta) = F (x) xx'.
class MultinomialLogistic final : public ModelFamily {
public:
    explicit MultinomialLogistic(int num_classes);

    std::string name() const override { return "multinomial"; }
    int num_classes() const { return classes_; }
    Index param_dim(Index d) const override { return static_cast<Index>(classes_ - 1) * d; }
    double nll(const Vector& x, const Label& y, const Vector& theta) const override;
    Vector nll_gradient(const Vector& x, const Label& y, const Vector& theta) const override;
    Matrix fisher(const Vector& x, const Vector& theta) const override;
    Label sample_label(const Vector& x, const Vector& theta_star, Rng& rng) const override;
    double expected_nll_gap(const Vector& x, const Vector& theta,
                            const Vector& theta_star) const override;
    using ModelFamily::sample_label;

    /// Probabilities of classes 1..K at (x, theta).
    Vector class_probabilities(const Vector& x, const Vector& theta) const;

    /// The (K-1)x(K-1) matrix F with F_ii = p_i(1-p_i), F_ij = -p_i p_j.
    Matrix class_fisher(const Vector& x, const Vector& theta) const;

private:
    Vector logits(const Vector& x, const Vector& theta) const;
    int classes_;
};

/// "linear", "logistic" or "multinomial" (num_classes used by the last).
std::unique_ptr<ModelFamily> make_family(std::string_view name, int num_classes = 3);

double sigmoid(double z);
double log1p_exp(double z);

}  // namespace activemle
