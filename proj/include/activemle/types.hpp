#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>

namespace activemle {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Labels. Real for regression, sign for binary, 1-based class for multiclass.
struct Sign {
    int value = 1;
    friend bool operator==(Sign, Sign) = default;
};

struct ClassIndex {
    int value = 1;
    friend bool operator==(ClassIndex, ClassIndex) = default;
};

using Label = std::variant<double, Sign, ClassIndex>;

// Box bounds on the parameter vector; entries may be infinite.
struct ParamSpace {
    Vector lower;
    Vector upper;

    static ParamSpace unbounded(Index p);
    static ParamSpace box(Index p, double radius);

    Index dim() const { return lower.size(); }
    bool contains(const Vector& theta) const;
    Vector project(const Vector& theta) const;
    void validate() const;
};

// Error hierarchy. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct LabelError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct InfeasibleDesign : Error {
    using Error::Error;
};

struct SingularMatrix : Error {
    using Error::Error;
};

struct DiagnosticsFailed : Error {
    using Error::Error;
};

struct OracleExhausted : Error {
    using Error::Error;
};

// Derive an independent generator from a root seed and a stream tag.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

bool all_finite(const Vector& v);

}  // namespace activemle
