#include "activemle/checks.hpp"
#include "activemle/io.hpp"

#include <doctest.h>

#include <filesystem>

using namespace activemle;

namespace {

template <class T>
json round_trip(const T& value) {
    const json first = value;
    const T back = json::parse(first.dump()).get<T>();
    return json(back);
}

}  // namespace

TEST_CASE("CSV matrices") {
    const Matrix m = parse_matrix_csv("1,2\n3, 4\n\n# comment\n5;6\n");
    REQUIRE(m.rows() == 3);
    CHECK(m(2, 1) == 6.0);
    const Matrix h = parse_matrix_csv("a,b\n1 2\n", true);
    CHECK(h.rows() == 1);
    CHECK(h(0, 1) == 2.0);
    CHECK(parse_matrix_csv("0.1,-2e-3\n")(0, 1) == -2e-3);

    CHECK_THROWS_AS(parse_matrix_csv("1,2\n3\n"), ParseError);
    CHECK_THROWS_AS(parse_matrix_csv("1,x\n"), ParseError);
    CHECK_THROWS_AS(parse_matrix_csv("a,b\n1,2\n"), ParseError);
    CHECK_THROWS_AS(parse_matrix_csv(""), ParseError);
    CHECK_THROWS_AS(parse_matrix_csv("1,nan\n"), ParseError);
    CHECK_THROWS_AS(read_matrix_csv("/nonexistent/pool.csv"), ParseError);
}

TEST_CASE("replay label files") {
    const auto dir = std::filesystem::temp_directory_path() / "activemle_io_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "labels.csv";
    write_text(path, "0,1\n2,-1\n0,-1\n");
    const auto rec = read_replay_labels(path, LogisticRegression{});
    REQUIRE(rec.at(0).size() == 2);
    CHECK(std::get<Sign>(rec.at(0)[1]).value == -1);
    CHECK(std::get<Sign>(rec.at(2)[0]).value == -1);

    write_text(path, "0,2\n");
    CHECK_THROWS_AS(read_replay_labels(path, LogisticRegression{}), ParseError);
    write_text(path, "1,3\n");
    CHECK(std::get<ClassIndex>(read_replay_labels(path, MultinomialLogistic(3)).at(1)[0]).value == 3);
    CHECK_THROWS_AS(read_replay_labels(path, MultinomialLogistic(2)), ParseError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("Design and SdpForm round-trip through JSON") {
    const auto pool = generate_pool({.generator = "gaussian", .d = 3, .n = 12, .seed = 1});
    const auto problem = make_design_problem(LogisticRegression{}, pool.examples,
                                             (Vector(3) << 0.1, 0.2, 0.3).finished(), 4.0);
    const Design design = solve_design(problem);
    CHECK(round_trip(design) == json(design));
    const Design back = json(design).get<Design>();
    CHECK(back.weights == design.weights);
    CHECK(back.objective == design.objective);

    const SdpForm form = build_sdp_form(problem);
    CHECK(round_trip(form) == json(form));
    const SdpForm fb = json(form).get<SdpForm>();
    CHECK(fb.sigma == form.sigma);
    CHECK(fb.v == form.v);
    CHECK(fb.fisher.size() == form.fisher.size());
}

TEST_CASE("ExperimentReport round-trips through JSON") {
    Scenario s;
    s.family = "multinomial";
    s.classes = 3;
    s.pool = {.generator = "sphere", .d = 2, .n = 30, .seed = 2};
    s.theta_star = (Vector(4) << 0.5, -0.5, 0.2, 0.1).finished();
    s.trials = 2;
    s.m1 = 20;
    s.m2_sweep = {20};
    s.weight_cap = std::nullopt;
    const auto report = run_scenario(s, 1);
    CHECK(round_trip(report) == json(report));
    CHECK(json(report).contains("runtime_seconds"));
    ExperimentReport quiet = report;
    quiet.runtime_seconds.reset();
    CHECK_FALSE(json(quiet).contains("runtime_seconds"));

    const std::string csv = report_csv(report);
    CHECK(csv.rfind("trial,arm,m1,m2,error,tau_squared\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 2);
}

TEST_CASE("scenario parsing") {
    const Scenario s = parse_scenario(R"({
        "family": "linear",
        "pool": {"generator": "e1_ej", "d": 5, "n": 100},
        "theta_star": [1, 1, 1, 1, 1],
        "trials": 3,
        "m2": [10, 20],
        "weight_cap": "uncapped"
    })");
    CHECK(s.family == "linear");
    CHECK(s.pool.d == 5);
    CHECK(s.m2_sweep == std::vector<int>{10, 20});
    CHECK_FALSE(s.weight_cap.has_value());
    CHECK_FALSE(s.m1.has_value());

    const Scenario t = parse_scenario(
        R"({"family": "logistic", "pool": {"generator": "gaussian", "d": 2, "n": 40},
            "theta_star": [1, 0], "m2": 30, "m1": 12, "weight_cap": 2})");
    CHECK(t.m2_sweep == std::vector<int>{30});
    CHECK(*t.m1 == 12);
    CHECK(*t.weight_cap == 2.0);
    CHECK(parse_scenario(json(t).dump()).m2_sweep == t.m2_sweep);

    CHECK_THROWS_AS(parse_scenario("{"), ParseError);
    CHECK_THROWS_AS(parse_scenario(R"({"family": "linear"})"), ParseError);
    CHECK_THROWS_AS(parse_scenario(R"({"family": "poisson", "pool": {"d": 1, "n": 3},
                                       "theta_star": [1], "m2": 2})"),
                    ParseError);
    CHECK_THROWS_AS(parse_scenario(R"({"family": "linear", "pool": {"d": 2, "n": 3},
                                       "theta_star": [1], "m2": 2})"),
                    ParseError);
}
