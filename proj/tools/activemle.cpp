// activemle: design | select | run | verify
//
// Exit codes: 0 ok, 1 verification failure, 2 usage or parse error,
// 3 infeasible or singular design, 4 design did not converge (best iterate
// written), 5 regularity diagnostics failed.

#include "activemle/checks.hpp"
#include "activemle/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace activemle;

namespace {

constexpr std::uint64_t default_seed = 20160701;

enum Exit { ok = 0, failed = 1, usage = 2, infeasible = 3, nonconverged = 4, diagnostics = 5 };

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// A path to a CSV file, or an inline comma-separated list.
Vector parse_theta(const std::string& arg) {
    if (fs::exists(arg)) return read_vector_csv(arg);
    const Matrix m = parse_matrix_csv(arg);
    if (m.rows() == 1) return m.row(0).transpose();
    if (m.cols() == 1) return m.col(0);
    throw ParseError("--theta: expected a single row or column");
}

void emit(const json& doc, const std::string& out) {
    const std::string text = doc.dump(2) + "\n";
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        write_text(out, text);
    }
}

struct PoolArgs {
    std::string pool;
    bool header = false;
    std::string family = "linear";
    int classes = 3;

    void add(CLI::App* app) {
        app->add_option("--pool", pool, "pool CSV, one example per row")->required()
            ->check(CLI::ExistingFile);
        app->add_flag("--header", header, "skip the first line of the pool CSV");
        app->add_option("--family", family, "linear | logistic | multinomial")
            ->check(CLI::IsMember({"linear", "logistic", "multinomial"}));
        app->add_option("--classes", classes, "number of classes for multinomial");
    }
};

struct DesignArgs {
    PoolArgs pool;
    std::string theta;
    double m2 = 0;
    double weight_cap = 1.0;
    bool uncapped = false;
    double tol = 1e-4;
    int max_iterations = 5000;
    std::uint64_t seed = default_seed;
    std::string out;
};

int cmd_design(const DesignArgs& a) {
    const auto family = make_family(a.pool.family, a.pool.classes);
    const Matrix rows = read_matrix_csv(a.pool.pool, a.pool.header);
    const Vector theta = parse_theta(a.theta);
    std::optional<double> cap = a.weight_cap;
    if (a.uncapped) cap.reset();
    const auto problem = make_design_problem(*family, rows, theta, a.m2, cap);
    const Design design = solve_design(problem, {.tol = a.tol, .max_iterations = a.max_iterations});
    json doc;
    doc["design"] = design;
    doc["sdp_form"] = build_sdp_form(problem);
    doc["mixed_distribution"] = to_std(mix_with_uniform(design, a.m2));
    emit(doc, a.out);
    std::cerr << "objective " << design.objective << ", m2 * objective " << design.tau_squared
              << ", gap " << design.duality_gap << ", " << design.iterations << " iterations\n";
    if (!design.converged) {
        std::cerr << "design did not reach the gap tolerance; best iterate written\n";
        return nonconverged;
    }
    return ok;
}

struct SelectArgs {
    PoolArgs pool;
    std::string theta_star;
    std::string labels;
    std::optional<int> m1;
    int m2 = 0;
    bool skip_stage1 = false;
    bool no_skip_stage1 = false;
    double weight_cap = 1.0;
    bool uncapped = false;
    std::optional<double> theta_bound;
    double mle_tol = 1e-8;
    double design_tol = 1e-4;
    std::uint64_t seed = default_seed;
    std::string out;
};

int cmd_select(const SelectArgs& a) {
    const auto family = make_family(a.pool.family, a.pool.classes);
    const UnlabeledPool pool(read_matrix_csv(a.pool.pool, a.pool.header));
    std::unique_ptr<LabelOracle> oracle;
    if (!a.labels.empty()) {
        oracle = std::make_unique<ReplayOracle>(read_replay_labels(a.labels, *family));
    } else {
        oracle = std::make_unique<SyntheticOracle>(*family, pool, parse_theta(a.theta_star));
    }
    ActiveConfig config;
    config.m1 = a.m1;
    config.m2 = a.m2;
    config.mle_tol = a.mle_tol;
    config.design_tol = a.design_tol;
    config.seed = a.seed;
    if (a.skip_stage1) config.skip_stage1 = true;
    if (a.no_skip_stage1) config.skip_stage1 = false;
    config.weight_cap = a.uncapped ? std::nullopt : std::optional<double>(a.weight_cap);
    const Index p = family->param_dim(pool.dim());
    if (a.theta_bound) config.space = ParamSpace::box(p, *a.theta_bound);

    const ActiveResult r = active_set_select(pool, *family, *oracle, config);
    json doc;
    doc["theta1"] = to_std(r.theta1);
    doc["theta2"] = to_std(r.theta2);
    doc["m1"] = r.m1;
    doc["m2"] = r.m2;
    doc["labels_used"] = r.labels_used;
    doc["stage1_skipped"] = r.stage1_skipped;
    doc["stage2_converged"] = r.stage2.converged;
    doc["design"] = r.design;
    doc["mixed_distribution"] = to_std(r.mixed_distribution);
    emit(doc, a.out);
    std::cerr << r.labels_used << " labels used\n";
    return ok;
}

struct RunArgs {
    std::string scenario;
    std::string out;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    std::optional<int> m1;
    std::vector<int> m2;
    bool skip_stage1 = false;
    bool timing = false;
};

int cmd_run(const RunArgs& a) {
    Scenario sc = parse_scenario(read_text(a.scenario));
    if (a.trials) sc.trials = *a.trials;
    if (a.seed) sc.seed = *a.seed;
    if (a.m1) sc.m1 = *a.m1;
    if (!a.m2.empty()) sc.m2_sweep = a.m2;
    if (a.skip_stage1) sc.skip_stage1 = true;
    sc.validate();

    ExperimentReport report = run_scenario(sc);
    if (!a.timing) report.runtime_seconds.reset();
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "report.json", json(report).dump(2) + "\n");
    write_text(fs::path(a.out) / "trials.csv", report_csv(report));
    for (const auto& s : report.sweeps) {
        std::cerr << "m2=" << s.m2 << " active error*m2 " << s.active.scaled_mean << " +- "
                  << s.active.scaled_standard_error << ", tau^2 " << s.tau_squared_mean;
        if (s.passive) std::cerr << ", passive " << s.passive->scaled_mean;
        std::cerr << "\n";
    }
    return ok;
}

int cmd_verify(const std::string& level, std::uint64_t seed) {
    const auto results = level == "full" ? checks::full_suite(seed) : checks::fast_suite(seed);
    bool all = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " -- " << r.detail << " ["
                  << r.seconds << " s]\n";
        all = all && r.passed;
    }
    return all ? ok : failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage active learning for maximum-likelihood estimation"};
    app.require_subcommand(1);

    DesignArgs design;
    auto* design_cmd = app.add_subcommand("design", "solve the sampling design at theta");
    design.pool.add(design_cmd);
    design_cmd->add_option("--theta", design.theta, "parameter (CSV path or a,b,c)")->required();
    design_cmd->add_option("--m2", design.m2, "label budget")->required();
    design_cmd->add_option("--weight-cap", design.weight_cap, "upper bound on each weight");
    design_cmd->add_flag("--uncapped", design.uncapped, "no upper bound (sampling with replacement)");
    design_cmd->add_option("--tol", design.tol, "relative duality-gap tolerance");
    design_cmd->add_option("--max-iterations", design.max_iterations);
    design_cmd->add_option("--seed", design.seed, "accepted for uniformity; the solver is deterministic");
    design_cmd->add_option("--out", design.out, "output JSON (default stdout)");

    SelectArgs select;
    auto* select_cmd = app.add_subcommand("select", "one two-stage active run");
    select.pool.add(select_cmd);
    auto* truth = select_cmd->add_option("--theta-star", select.theta_star,
                                         "simulate labels at this parameter");
    auto* replay = select_cmd->add_option("--labels", select.labels, "replay CSV: index,label")
                       ->check(CLI::ExistingFile);
    truth->excludes(replay);
    select_cmd->add_option("--m1", select.m1, "stage-1 labels");
    select_cmd->add_option("--m2", select.m2, "stage-2 labels")->required();
    auto* skip = select_cmd->add_flag("--skip-stage1", select.skip_stage1);
    select_cmd->add_flag("--no-skip-stage1", select.no_skip_stage1)->excludes(skip);
    select_cmd->add_option("--weight-cap", select.weight_cap);
    select_cmd->add_flag("--uncapped", select.uncapped);
    select_cmd->add_option("--theta-bound", select.theta_bound, "box radius for the parameter");
    select_cmd->add_option("--mle-tol", select.mle_tol);
    select_cmd->add_option("--design-tol", select.design_tol);
    select_cmd->add_option("--seed", select.seed);
    select_cmd->add_option("--out", select.out, "output JSON (default stdout)");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "run a scenario sweep");
    run_cmd->add_option("--scenario", run.scenario, "scenario JSON")->required()
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--out", run.out, "output directory")->required();
    run_cmd->add_option("--trials", run.trials);
    run_cmd->add_option("--seed", run.seed);
    run_cmd->add_option("--m1", run.m1);
    run_cmd->add_option("--m2", run.m2, "one or more stage-2 budgets");
    run_cmd->add_flag("--skip-stage1", run.skip_stage1);
    run_cmd->add_flag("--timing", run.timing, "record runtime_seconds in the report");

    std::string level = "fast";
    std::uint64_t verify_seed = 1;
    auto* verify_cmd = app.add_subcommand("verify", "run the verification suites");
    verify_cmd->add_option("--level", level, "fast | full")
        ->check(CLI::IsMember({"fast", "full"}));
    verify_cmd->add_option("--seed", verify_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*design_cmd) return cmd_design(design);
        if (*select_cmd) {
            if (select.theta_star.empty() && select.labels.empty())
                throw ParseError("select needs --theta-star or --labels");
            return cmd_select(select);
        }
        if (*run_cmd) return cmd_run(run);
        return cmd_verify(level, verify_seed);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return usage;
    } catch (const InfeasibleDesign& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return infeasible;
    } catch (const SingularMatrix& e) {
        std::cerr << "no design with finite objective: " << e.what() << "\n";
        return infeasible;
    } catch (const DiagnosticsFailed& e) {
        std::cerr << "diagnostics failed: " << e.what() << "\n";
        return diagnostics;
    } catch (const DimensionError& e) {
        std::cerr << "dimension mismatch: " << e.what() << "\n";
        return usage;
    } catch (const LabelError& e) {
        std::cerr << "bad label: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failed;
    }
}
