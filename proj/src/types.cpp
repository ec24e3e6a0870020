#include "activemle/types.hpp"

#include <cmath>

namespace activemle {

ParamSpace ParamSpace::unbounded(Index p) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {Vector::Constant(p, -inf), Vector::Constant(p, inf)};
}

ParamSpace ParamSpace::box(Index p, double radius) {
    return {Vector::Constant(p, -radius), Vector::Constant(p, radius)};
}

bool ParamSpace::contains(const Vector& theta) const {
    if (theta.size() != dim()) return false;
    return (theta.array() >= lower.array()).all() && (theta.array() <= upper.array()).all();
}

Vector ParamSpace::project(const Vector& theta) const {
    return theta.cwiseMax(lower).cwiseMin(upper);
}

void ParamSpace::validate() const {
    if (lower.size() != upper.size())
        throw DimensionError("ParamSpace: lower and upper bounds differ in length");
    if ((lower.array() > upper.array()).any())
        throw Error("ParamSpace: lower bound exceeds upper bound");
    if (lower.array().isNaN().any() || upper.array().isNaN().any())
        throw Error("ParamSpace: NaN bound");
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5eedu};
    return Rng(seq);
}

bool all_finite(const Vector& v) {
    return v.allFinite();
}

}  // namespace activemle
