#include "activemle/checks.hpp"
#include "activemle/io.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

namespace py = pybind11;
using namespace activemle;

namespace {

Label to_label(const ModelFamily& family, double y) {
    if (family.name() == "linear") return y;
    if (y != std::round(y)) throw LabelError("label must be an integer for " + family.name());
    if (family.name() == "logistic") return Sign{static_cast<int>(y)};
    return ClassIndex{static_cast<int>(y)};
}

std::optional<double> cap_arg(const py::object& cap) {
    if (cap.is_none()) return std::nullopt;
    return cap.cast<double>();
}

DesignProblem problem_for(const Matrix& pool, const std::string& family, const Vector& theta,
                          double m2, const py::object& weight_cap, int classes) {
    const auto f = make_family(family, classes);
    return make_design_problem(*f, pool, theta, m2, cap_arg(weight_cap));
}

py::dict design_dict(const Design& d) {
    py::dict out;
    out["weights"] = d.weights;
    out["budget"] = d.budget;
    out["weight_cap"] = d.weight_cap;
    out["objective"] = d.objective;
    out["tau_squared"] = d.tau_squared;
    out["duality_gap"] = d.duality_gap;
    out["iterations"] = d.iterations;
    out["converged"] = d.converged;
    return out;
}

py::dict mle_dict(const MleResult& r) {
    py::dict out;
    out["theta_hat"] = r.theta_hat;
    out["iterations"] = r.iterations;
    out["converged"] = r.converged;
    out["on_boundary"] = r.on_boundary;
    out["ridge_applied"] = r.ridge_applied;
    out["final_gradient_norm"] = r.final_gradient_norm;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sampling designs and two-stage active learning for GLM maximum likelihood";

    auto base = py::register_exception<Error>(m, "ActiveMleError", PyExc_RuntimeError);
    py::register_exception<InfeasibleDesign>(m, "InfeasibleDesign", base.ptr());
    py::register_exception<SingularMatrix>(m, "SingularMatrix", base.ptr());
    py::register_exception<DiagnosticsFailed>(m, "DiagnosticsFailed", base.ptr());
    py::register_exception<OracleExhausted>(m, "OracleExhausted", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<LabelError>(m, "LabelError", PyExc_ValueError);

    m.def(
        "nll",
        [](const std::string& family, const Vector& x, double y, const Vector& theta, int classes) {
            const auto f = make_family(family, classes);
            return f->nll(x, to_label(*f, y), theta);
        },
        py::arg("family"), py::arg("x"), py::arg("y"), py::arg("theta"), py::arg("classes") = 3);

    m.def(
        "nll_gradient",
        [](const std::string& family, const Vector& x, double y, const Vector& theta, int classes) {
            const auto f = make_family(family, classes);
            return Vector(f->nll_gradient(x, to_label(*f, y), theta));
        },
        py::arg("family"), py::arg("x"), py::arg("y"), py::arg("theta"), py::arg("classes") = 3);

    m.def(
        "fisher",
        [](const std::string& family, const Vector& x, const Vector& theta, int classes) {
            return Matrix(make_family(family, classes)->fisher(x, theta));
        },
        py::arg("family"), py::arg("x"), py::arg("theta"), py::arg("classes") = 3);

    m.def(
        "fit_mle",
        [](const std::string& family, const Matrix& X, const Vector& y,
           std::optional<Vector> weights, std::optional<double> theta_bound, int classes,
           double tol) {
            const auto f = make_family(family, classes);
            if (y.size() != X.rows()) throw DimensionError("fit_mle: X and y differ in length");
            LabeledSet data;
            for (Index i = 0; i < X.rows(); ++i)
                data.add(X.row(i).transpose(), to_label(*f, y(i)), weights ? (*weights)(i) : 1.0);
            const Index p = f->param_dim(X.cols());
            const ParamSpace space =
                theta_bound ? ParamSpace::box(p, *theta_bound) : ParamSpace::unbounded(p);
            return mle_dict(fit_mle(*f, data, Vector::Zero(p), space, {.tol = tol}));
        },
        py::arg("family"), py::arg("X"), py::arg("y"), py::arg("weights") = py::none(),
        py::arg("theta_bound") = py::none(), py::arg("classes") = 3, py::arg("tol") = 1e-8);

    m.def(
        "design_objective",
        [](const Matrix& pool, const std::string& family, const Vector& theta, const Vector& a,
           py::object weight_cap, int classes) {
            return design_objective(a, problem_for(pool, family, theta, a.sum(), weight_cap, classes));
        },
        py::arg("pool"), py::arg("family"), py::arg("theta"), py::arg("a"),
        py::arg("weight_cap") = py::none(), py::arg("classes") = 3);

    m.def(
        "solve_design",
        [](const Matrix& pool, const std::string& family, const Vector& theta, double m2,
           py::object weight_cap, int classes, double tol, int max_iterations) {
            const auto problem = problem_for(pool, family, theta, m2, weight_cap, classes);
            return design_dict(solve_design(problem, {.tol = tol, .max_iterations = max_iterations}));
        },
        py::arg("pool"), py::arg("family"), py::arg("theta"), py::arg("m2"),
        py::arg("weight_cap") = 1.0, py::arg("classes") = 3, py::arg("tol") = 1e-4,
        py::arg("max_iterations") = 5000,
        "Minimize trace(S(a)^-1 I_U) over 0 <= a <= weight_cap, sum a = m2. "
        "weight_cap=None removes the upper bound.");

    m.def(
        "sdp_form",
        [](const Matrix& pool, const std::string& family, const Vector& theta, double m2,
           py::object weight_cap, int classes) {
            const SdpForm f = build_sdp_form(problem_for(pool, family, theta, m2, weight_cap, classes));
            py::dict out;
            out["sigma"] = f.sigma;
            out["v"] = f.v;
            return out;
        },
        py::arg("pool"), py::arg("family"), py::arg("theta"), py::arg("m2"),
        py::arg("weight_cap") = 1.0, py::arg("classes") = 3);

    m.def("mixing_alpha", &mixing_alpha, py::arg("m2"));
    m.def(
        "mix_with_uniform",
        [](const Vector& weights, double m2) {
            Design d;
            d.weights = weights;
            d.budget = weights.sum();
            return Vector(mix_with_uniform(d, m2));
        },
        py::arg("weights"), py::arg("m2"));

    m.def(
        "rate_constant",
        [](const Matrix& pool, const std::string& family, const Vector& gamma,
           const Vector& theta_star, int classes) {
            return rate_constant(*make_family(family, classes), UnlabeledPool(pool), gamma,
                                 theta_star);
        },
        py::arg("pool"), py::arg("family"), py::arg("gamma"), py::arg("theta_star"),
        py::arg("classes") = 3);

    m.def("e1_ej_rows", [](int d, int n) { return Matrix(e1_ej_rows(d, n)); }, py::arg("d"),
          py::arg("n"));

    m.def(
        "active_select",
        [](const Matrix& rows, const std::string& family, const Vector& theta_star, int m2,
           std::optional<int> m1, std::uint64_t seed, py::object weight_cap,
           std::optional<bool> skip_stage1, std::optional<double> theta_bound, int classes) {
            const auto f = make_family(family, classes);
            const UnlabeledPool pool(rows);
            SyntheticOracle oracle(*f, pool, theta_star);
            ActiveConfig config;
            config.m1 = m1;
            config.m2 = m2;
            config.seed = seed;
            config.weight_cap = cap_arg(weight_cap);
            config.skip_stage1 = skip_stage1;
            if (theta_bound) config.space = ParamSpace::box(f->param_dim(pool.dim()), *theta_bound);
            const ActiveResult r = active_set_select(pool, *f, oracle, config);
            py::dict out;
            out["theta1"] = r.theta1;
            out["theta2"] = r.theta2;
            out["m1"] = r.m1;
            out["m2"] = r.m2;
            out["labels_used"] = r.labels_used;
            out["stage1_skipped"] = r.stage1_skipped;
            out["design"] = design_dict(r.design);
            out["mixed_distribution"] = r.mixed_distribution;
            out["error"] = expected_nll_gap(*f, pool, r.theta2, theta_star);
            return out;
        },
        py::arg("pool"), py::arg("family"), py::arg("theta_star"), py::arg("m2"),
        py::arg("m1") = py::none(), py::arg("seed") = 20160701, py::arg("weight_cap") = 1.0,
        py::arg("skip_stage1") = py::none(), py::arg("theta_bound") = py::none(),
        py::arg("classes") = 3,
        "Two-stage active run with labels simulated at theta_star.");

    m.def(
        "run_scenario",
        [](const std::string& scenario_json, int threads) {
            const Scenario sc = parse_scenario(scenario_json);
            ExperimentReport report;
            {
                py::gil_scoped_release release;
                report = run_scenario(sc, threads);
            }
            report.runtime_seconds.reset();
            return json(report).dump();
        },
        py::arg("scenario_json"), py::arg("threads") = 0);

    m.def(
        "verify",
        [](const std::string& level, std::uint64_t seed) {
            if (level != "fast" && level != "full") throw ParseError("level must be fast or full");
            std::vector<checks::CheckResult> results;
            {
                py::gil_scoped_release release;
                results = level == "full" ? checks::full_suite(seed) : checks::fast_suite(seed);
            }
            py::list out;
            for (const auto& r : results) out.append(py::make_tuple(r.name, r.passed, r.detail));
            return out;
        },
        py::arg("level") = "fast", py::arg("seed") = 1);
}
