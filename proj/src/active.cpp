#include "activemle/active.hpp"

#include <cmath>

namespace activemle {

UnlabeledPool::UnlabeledPool(Matrix rows) : examples(std::move(rows)) {
    if (examples.rows() < 1) throw Error("pool: needs at least one example");
    if (!examples.allFinite()) throw Error("pool: features must be finite");
}

SyntheticOracle::SyntheticOracle(const ModelFamily& family, const UnlabeledPool& pool,
                                 Vector theta_star)
    : family_(family), pool_(pool), theta_star_(std::move(theta_star)) {
    if (!theta_star_.allFinite()) throw Error("oracle: theta_star must be finite");
    if (theta_star_.size() != family_.param_dim(pool_.dim()))
        throw DimensionError("oracle: theta_star length does not match the model");
}

Label SyntheticOracle::do_query(Index index, Rng& rng) {
    if (index < 0 || index >= pool_.size()) throw Error("oracle: index out of range");
    return family_.sample_label(pool_.example(index), theta_star_, rng);
}

ReplayOracle::ReplayOracle(std::map<Index, std::vector<Label>> recorded)
    : recorded_(std::move(recorded)) {}

Label ReplayOracle::do_query(Index index, Rng&) {
    auto it = recorded_.find(index);
    std::size_t& pos = cursor_[index];
    if (it == recorded_.end() || pos >= it->second.size())
        throw OracleExhausted("replay oracle: no recorded label left for index " +
                              std::to_string(index));
    return it->second[pos++];
}

int ActiveConfig::resolved_m1(Index param_dim) const {
    if (m1) return *m1;
    const int floor_p = static_cast<int>(10 * param_dim);
    const int share = static_cast<int>(std::ceil(static_cast<double>(m2) / 4.0));
    return std::max(floor_p, share);
}

bool ActiveConfig::resolved_skip(const ModelFamily& family) const {
    return skip_stage1 ? *skip_stage1 : family.fisher_theta_independent();
}

void ActiveConfig::validate(Index pool_size) const {
    if (m1 && *m1 < 1) throw Error("config: m1 must be at least 1");
    if (m2 < 1) throw Error("config: m2 must be at least 1");
    if (!(mle_tol > 0) || !(design_tol > 0)) throw Error("config: tolerances must be positive");
    if (weight_cap && static_cast<double>(m2) > *weight_cap * static_cast<double>(pool_size))
        throw InfeasibleDesign("config: m2 = " + std::to_string(m2) + " exceeds n * cap");
}

std::vector<Index> draw_indices(const Vector& probabilities, int count, Rng& rng) {
    std::discrete_distribution<Index> dist(probabilities.data(),
                                           probabilities.data() + probabilities.size());
    std::vector<Index> out(static_cast<std::size_t>(count));
    for (auto& idx : out) idx = dist(rng);
    return out;
}

namespace {

LabeledSet query_all(const UnlabeledPool& pool, LabelOracle& oracle,
                     const std::vector<Index>& indices, Rng& label_rng) {
    LabeledSet set;
    set.items.reserve(indices.size());
    for (Index i : indices) set.add(pool.example(i), oracle.query(i, label_rng));
    return set;
}

}  // namespace

ActiveResult active_set_select(const UnlabeledPool& pool, const ModelFamily& family,
                               LabelOracle& oracle, const ActiveConfig& config,
                               const Design* precomputed) {
    config.validate(pool.size());
    const Index n = pool.size();
    const Index p = family.param_dim(pool.dim());
    const ParamSpace space = config.space ? *config.space : ParamSpace::unbounded(p);
    const Vector init = config.init ? *config.init : Vector::Zero(p);
    const MleOptions mle_opts{.tol = config.mle_tol};

    ActiveResult result;
    result.m2 = config.m2;
    result.stage1_skipped = config.resolved_skip(family);
    const long long calls_before = oracle.calls();

    // Steps 1-2.
    if (result.stage1_skipped) {
        result.theta1 = init;
    } else {
        result.m1 = config.resolved_m1(p);
        Rng draw_rng = make_rng(config.seed, static_cast<std::uint64_t>(SeedStream::stage1_draws));
        Rng label_rng =
            make_rng(config.seed, static_cast<std::uint64_t>(SeedStream::stage1_labels));
        const auto idx = draw_indices(Vector::Constant(n, 1.0 / static_cast<double>(n)),
                                      result.m1, draw_rng);
        const LabeledSet s1 = query_all(pool, oracle, idx, label_rng);
        result.stage1 = fit_mle(family, s1, init, space, mle_opts);
        result.theta1 = result.stage1->theta_hat;
    }

    // Step 3.
    if (config.force_uniform_design) {
        result.design.budget = config.m2;
        result.design.weight_cap = config.weight_cap ? *config.weight_cap : config.m2;
        result.design.weights =
            Vector::Constant(n, static_cast<double>(config.m2) / static_cast<double>(n));
        const auto problem = make_design_problem(family, pool.examples, result.theta1, config.m2,
                                                 config.weight_cap);
        result.design.objective = design_objective(result.design.weights, problem);
        result.design.tau_squared = config.m2 * result.design.objective;
        result.design.converged = true;
    } else if (precomputed != nullptr && result.stage1_skipped) {
        if (precomputed->weights.size() != n || precomputed->budget != config.m2)
            throw Error("active_set_select: precomputed design does not match the run");
        result.design = *precomputed;
    } else {
        const auto problem = make_design_problem(family, pool.examples, result.theta1, config.m2,
                                                 config.weight_cap);
        result.design = solve_design(problem, {.tol = config.design_tol});
    }

    // Step 4.
    result.mixed_distribution = mix_with_uniform(result.design, config.m2);
    Rng draw_rng = make_rng(config.seed, static_cast<std::uint64_t>(SeedStream::stage2_draws));
    Rng label_rng = make_rng(config.seed, static_cast<std::uint64_t>(SeedStream::stage2_labels));
    const auto idx = draw_indices(result.mixed_distribution, config.m2, draw_rng);
    const LabeledSet s2 = query_all(pool, oracle, idx, label_rng);

    // Step 5.
    result.stage2 = fit_mle(family, s2, init, space, mle_opts);
    result.theta2 = result.stage2.theta_hat;
    result.labels_used = oracle.calls() - calls_before;
    return result;
}

MleResult passive_baseline(const UnlabeledPool& pool, const ModelFamily& family,
                           LabelOracle& oracle, int m, std::uint64_t seed,
                           const ParamSpace* space, double tol) {
    if (m < 1) throw Error("passive_baseline: m must be at least 1");
    const Index n = pool.size();
    const Index p = family.param_dim(pool.dim());
    Rng draw_rng = make_rng(seed, static_cast<std::uint64_t>(SeedStream::stage1_draws));
    Rng label_rng = make_rng(seed, static_cast<std::uint64_t>(SeedStream::stage1_labels));
    const auto idx = draw_indices(Vector::Constant(n, 1.0 / static_cast<double>(n)), m, draw_rng);
    const LabeledSet set = query_all(pool, oracle, idx, label_rng);
    const ParamSpace box = space ? *space : ParamSpace::unbounded(p);
    return fit_mle(family, set, Vector::Zero(p), box, {.tol = tol});
}

}  // namespace activemle
