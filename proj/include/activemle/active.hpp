#pragma once

#include "activemle/design.hpp"
#include "activemle/mle.hpp"

#include <map>
#include <optional>
#include <vector>

namespace activemle {

/// The fixed pool U; one example per row. U also denotes the uniform
/// distribution over these rows.
struct UnlabeledPool {
    Matrix examples;

    UnlabeledPool() = default;
    explicit UnlabeledPool(Matrix rows);

    Index size() const { return examples.rows(); }
    Index dim() const { return examples.cols(); }
    Vector example(Index i) const { return examples.row(i).transpose(); }
};

/// Answers label queries for pool indices. Queries with replacement are
/// allowed and independent.
class LabelOracle {
public:
    virtual ~LabelOracle() = default;

    Label query(Index index, Rng& rng) {
        ++calls_;
        return do_query(index, rng);
    }
    long long calls() const { return calls_; }

private:
    virtual Label do_query(Index index, Rng& rng) = 0;
    long long calls_ = 0;
};

/// Draws labels from p(y | x_i, theta_star).
class SyntheticOracle final : public LabelOracle {
public:
    SyntheticOracle(const ModelFamily& family, const UnlabeledPool& pool, Vector theta_star);

private:
    Label do_query(Index index, Rng& rng) override;
    const ModelFamily& family_;
    const UnlabeledPool& pool_;
    Vector theta_star_;
};

/// Replays recorded labels, in order, per pool index. Throws OracleExhausted
/// when an index is queried more often than it was recorded.
class ReplayOracle final : public LabelOracle {
public:
    explicit ReplayOracle(std::map<Index, std::vector<Label>> recorded);

private:
    Label do_query(Index index, Rng& rng) override;
    std::map<Index, std::vector<Label>> recorded_;
    std::map<Index, std::size_t> cursor_;
};

struct ActiveConfig {
    std::optional<int> m1;  // default: max(10 p, ceil(m2 / 4))
    int m2 = 1;
    double mle_tol = 1e-8;
    double design_tol = 1e-4;
    std::uint64_t seed = 20160701;
    std::optional<bool> skip_stage1;         // default: the family's fisher_theta_independent()
    std::optional<double> weight_cap = 1.0;  // nullopt: uncapped
    bool force_uniform_design = false;
    std::optional<ParamSpace> space;  // default: unbounded
    std::optional<Vector> init;       // default: zeros

    int resolved_m1(Index param_dim) const;
    bool resolved_skip(const ModelFamily& family) const;
    void validate(Index pool_size) const;
};

struct ActiveResult {
    Vector theta1;
    Vector theta2;
    Design design;
    Vector mixed_distribution;
    long long labels_used = 0;
    int m1 = 0;
    int m2 = 0;
    bool stage1_skipped = false;
    std::optional<MleResult> stage1;
    MleResult stage2;
};

/// Sub-seed streams derived from the root seed. Passive runs reuse the
/// Stage-1 streams so that both arms see common random numbers.
enum class SeedStream : std::uint64_t {
    stage1_draws = 1,
    stage1_labels = 2,
    stage2_draws = 3,
    stage2_labels = 4,
};

/// count i.i.d. indices from the distribution `probabilities`.
std::vector<Index> draw_indices(const Vector& probabilities, int count, Rng& rng);

/// Two-stage active learning:
///  1. m1 uniform draws (with replacement) and their labels;
///  2. MLE on them gives theta1;
///  3. solve the sampling design at theta1 with budget m2;
///  4. draw m2 indices from the design mixed with uniform, query labels;
///  5. MLE on the second sample gives theta2.
/// Steps 1-2 are skipped when the Fisher information does not depend on
/// theta. `precomputed` supplies the Step-3 design for such families.
ActiveResult active_set_select(const UnlabeledPool& pool, const ModelFamily& family,
                               LabelOracle& oracle, const ActiveConfig& config,
                               const Design* precomputed = nullptr);

/// Passive control: m uniform draws with replacement, one MLE fit.
MleResult passive_baseline(const UnlabeledPool& pool, const ModelFamily& family,
                           LabelOracle& oracle, int m, std::uint64_t seed,
                           const ParamSpace* space = nullptr, double tol = 1e-8);

}  // namespace activemle
