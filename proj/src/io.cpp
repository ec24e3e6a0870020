#include "activemle/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace activemle {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',' || ch == ' ' || ch == '\t' || ch == ';' || ch == '\r') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

double parse_number(const std::string& field, int line_no) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size() || errno == ERANGE || !std::isfinite(v))
        throw ParseError("line " + std::to_string(line_no) + ": '" + field +
                         "' is not a finite number");
    return v;
}

bool skippable(const std::string& line) {
    const auto pos = line.find_first_not_of(" \t\r");
    return pos == std::string::npos || line[pos] == '#';
}

std::vector<double> to_std(const Vector& v) {
    return {v.data(), v.data() + v.size()};
}

Vector to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) rows.push_back(to_std(m.row(i).transpose()));
    return rows;
}

Matrix matrix_from(const json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) return {};
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw ParseError("ragged matrix in JSON");
        for (std::size_t k = 0; k < rows[i].size(); ++k)
            m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
    }
    return m;
}

template <class T>
std::optional<T> optional_field(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

template <class T>
json nullable(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

// CSV -----------------------------------------------------------------------

Matrix parse_matrix_csv(const std::string& text, bool header) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    int line_no = 0;
    bool skipped_header = !header;
    while (std::getline(in, line)) {
        ++line_no;
        if (skippable(line)) continue;
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        std::vector<double> row;
        for (const auto& f : split_fields(line)) row.push_back(parse_number(f, line_no));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(rows.front().size()) + " columns, found " +
                             std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no data rows");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows[i].size(); ++k)
            m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
    return m;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

Matrix read_matrix_csv(const std::filesystem::path& path, bool header) {
    try {
        return parse_matrix_csv(read_text(path), header);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

Vector read_vector_csv(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    std::istringstream in(text);
    std::string line;
    std::vector<double> values;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skippable(line)) continue;
        for (const auto& f : split_fields(line)) values.push_back(parse_number(f, line_no));
    }
    if (values.empty()) throw ParseError(path.string() + ": no values");
    return to_eigen(values);
}

std::map<Index, std::vector<Label>> read_replay_labels(const std::filesystem::path& path,
                                                       const ModelFamily& family) {
    const std::string text = read_text(path);
    std::istringstream in(text);
    std::string line;
    std::map<Index, std::vector<Label>> out;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skippable(line)) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 2)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 'index,label'");
        const double idx = parse_number(fields[0], line_no);
        const double raw = parse_number(fields[1], line_no);
        auto fail = [&](const std::string& what) {
            return ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
        };
        if (idx < 0 || idx != std::floor(idx)) throw fail("index must be a nonnegative integer");
        Label y;
        if (family.name() == "linear") {
            y = raw;
        } else if (family.name() == "logistic") {
            if (raw != 1.0 && raw != -1.0) throw fail("logistic labels are -1 or +1");
            y = Sign{static_cast<int>(raw)};
        } else {
            const int k = dynamic_cast<const MultinomialLogistic&>(family).num_classes();
            if (raw != std::floor(raw) || raw < 1 || raw > k)
                throw fail("class labels are 1.." + std::to_string(k));
            y = ClassIndex{static_cast<int>(raw)};
        }
        out[static_cast<Index>(idx)].push_back(y);
    }
    return out;
}

// JSON ----------------------------------------------------------------------

void to_json(json& j, const Design& d) {
    j = json{{"weights", to_std(d.weights)},
             {"budget", d.budget},
             {"weight_cap", d.weight_cap},
             {"objective", d.objective},
             {"tau_squared", d.tau_squared},
             {"duality_gap", d.duality_gap},
             {"iterations", d.iterations},
             {"ridge_events", d.ridge_events},
             {"converged", d.converged}};
}

void from_json(const json& j, Design& d) {
    d.weights = to_eigen(j.at("weights").get<std::vector<double>>());
    d.budget = j.at("budget").get<double>();
    d.weight_cap = j.value("weight_cap", 1.0);
    d.objective = j.at("objective").get<double>();
    d.tau_squared = j.value("tau_squared", d.budget * d.objective);
    d.duality_gap = j.at("duality_gap").get<double>();
    d.iterations = j.value("iterations", 0);
    d.ridge_events = j.value("ridge_events", 0);
    d.converged = j.value("converged", false);
}

void to_json(json& j, const SdpForm& f) {
    json v = json::array();
    for (Index k = 0; k < f.v.cols(); ++k) v.push_back(to_std(f.v.col(k)));
    json fisher = json::array();
    for (const auto& m : f.fisher) fisher.push_back(matrix_json(m));
    j = json{{"sigma", to_std(f.sigma)},
             {"v", std::move(v)},
             {"fisher", std::move(fisher)},
             {"budget", f.budget},
             {"weight_cap", f.weight_cap}};
}

void from_json(const json& j, SdpForm& f) {
    f.sigma = to_eigen(j.at("sigma").get<std::vector<double>>());
    const auto cols = j.at("v").get<std::vector<std::vector<double>>>();
    f.v.resize(f.sigma.size(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
        if (static_cast<Index>(cols[k].size()) != f.sigma.size())
            throw ParseError("sdp form: eigenvector length mismatch");
        f.v.col(static_cast<Index>(k)) = to_eigen(cols[k]);
    }
    f.fisher.clear();
    for (const auto& m : j.at("fisher")) f.fisher.push_back(matrix_from(m));
    f.budget = j.at("budget").get<double>();
    f.weight_cap = j.value("weight_cap", 1.0);
}

void to_json(json& j, const PoolSpec& s) {
    j = json{{"generator", s.generator}, {"d", s.d},         {"n", s.n},
             {"seed", s.seed},           {"scale", s.scale}, {"path", s.path},
             {"header", s.header}};
}

void from_json(const json& j, PoolSpec& s) {
    s = PoolSpec{};
    s.generator = j.value("generator", s.generator);
    s.d = j.value("d", s.d);
    s.n = j.value("n", s.n);
    s.seed = j.value("seed", s.seed);
    s.scale = j.value("scale", s.scale);
    s.path = j.value("path", s.path);
    s.header = j.value("header", s.header);
}

void to_json(json& j, const Scenario& s) {
    j = json{{"family", s.family},
             {"classes", s.classes},
             {"pool", s.pool},
             {"theta_star", to_std(s.theta_star)},
             {"trials", s.trials},
             {"m1", nullable(s.m1)},
             {"m2", s.m2_sweep},
             {"seed", s.seed},
             {"weight_cap", s.weight_cap ? json(*s.weight_cap) : json("uncapped")},
             {"mle_tol", s.mle_tol},
             {"design_tol", s.design_tol},
             {"theta_bound", nullable(s.theta_bound)},
             {"skip_stage1", nullable(s.skip_stage1)},
             {"passive", s.run_passive},
             {"diagnostic_draws", s.diagnostic_draws}};
}

void from_json(const json& j, Scenario& s) {
    s = Scenario{};
    s.family = j.value("family", s.family);
    s.classes = j.value("classes", s.classes);
    if (j.contains("pool")) s.pool = j.at("pool").get<PoolSpec>();
    if (!j.contains("theta_star")) throw ParseError("scenario: missing theta_star");
    s.theta_star = to_eigen(j.at("theta_star").get<std::vector<double>>());
    s.trials = j.value("trials", s.trials);
    s.m1 = optional_field<int>(j, "m1");
    if (j.contains("m2")) {
        const auto& m2 = j.at("m2");
        s.m2_sweep = m2.is_array() ? m2.get<std::vector<int>>() : std::vector<int>{m2.get<int>()};
    }
    s.seed = j.value("seed", s.seed);
    if (j.contains("weight_cap")) {
        const auto& cap = j.at("weight_cap");
        if (cap.is_null() || (cap.is_string() && cap.get<std::string>() == "uncapped"))
            s.weight_cap = std::nullopt;
        else if (cap.is_number())
            s.weight_cap = cap.get<double>();
        else
            throw ParseError("scenario: weight_cap must be a number or \"uncapped\"");
    }
    s.mle_tol = j.value("mle_tol", s.mle_tol);
    s.design_tol = j.value("design_tol", s.design_tol);
    s.theta_bound = optional_field<double>(j, "theta_bound");
    s.skip_stage1 = optional_field<bool>(j, "skip_stage1");
    s.run_passive = j.value("passive", s.run_passive);
    s.diagnostic_draws = j.value("diagnostic_draws", s.diagnostic_draws);
}

Scenario parse_scenario(const std::string& text) {
    try {
        Scenario s = json::parse(text).get<Scenario>();
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(e.what());
    }
}

void to_json(json& j, const RegularityDiagnostics& r) {
    j = json{{"sigma_min_U", r.sigma_min_U},
             {"sigma_max_U", r.sigma_max_U},
             {"condition_number", r.condition_number},
             {"max_gradient_norm_whitened", r.max_gradient_norm_whitened},
             {"rank", r.rank}};
}

void from_json(const json& j, RegularityDiagnostics& r) {
    r.sigma_min_U = j.at("sigma_min_U").get<double>();
    r.sigma_max_U = j.at("sigma_max_U").get<double>();
    r.condition_number = j.at("condition_number").get<double>();
    r.max_gradient_norm_whitened = j.at("max_gradient_norm_whitened").get<double>();
    r.rank = j.at("rank").get<Index>();
}

void to_json(json& j, const ArmResult& a) {
    j = json{{"errors", a.errors},
             {"labels", a.labels},
             {"mean", a.mean},
             {"standard_error", a.standard_error},
             {"scaled_mean", a.scaled_mean},
             {"scaled_standard_error", a.scaled_standard_error},
             {"nonconverged", a.nonconverged}};
}

void from_json(const json& j, ArmResult& a) {
    a.errors = j.at("errors").get<std::vector<double>>();
    a.labels = j.at("labels").get<long long>();
    a.mean = j.at("mean").get<double>();
    a.standard_error = j.at("standard_error").get<double>();
    a.scaled_mean = j.at("scaled_mean").get<double>();
    a.scaled_standard_error = j.at("scaled_standard_error").get<double>();
    a.nonconverged = j.value("nonconverged", 0);
}

void to_json(json& j, const SweepResult& s) {
    j = json{{"m1", s.m1},
             {"m2", s.m2},
             {"alpha", s.alpha},
             {"active", s.active},
             {"passive", s.passive ? json(*s.passive) : json(nullptr)},
             {"tau_squared", s.tau_squared},
             {"tau_squared_mean", s.tau_squared_mean},
             {"design_tau_squared", s.design_tau_squared},
             {"design_tau_squared_mean", s.design_tau_squared_mean},
             {"passive_tau_squared", s.passive_tau_squared}};
}

void from_json(const json& j, SweepResult& s) {
    s.m1 = j.at("m1").get<int>();
    s.m2 = j.at("m2").get<int>();
    s.alpha = j.at("alpha").get<double>();
    s.active = j.at("active").get<ArmResult>();
    s.passive = optional_field<ArmResult>(j, "passive");
    s.tau_squared = j.at("tau_squared").get<std::vector<double>>();
    s.tau_squared_mean = j.at("tau_squared_mean").get<double>();
    s.design_tau_squared = j.at("design_tau_squared").get<std::vector<double>>();
    s.design_tau_squared_mean = j.at("design_tau_squared_mean").get<double>();
    s.passive_tau_squared = j.at("passive_tau_squared").get<double>();
}

void to_json(json& j, const ExperimentReport& r) {
    j = json{{"scenario", r.scenario}, {"p", r.p},
             {"n", r.n},               {"diagnostics", r.diagnostics},
             {"sweeps", r.sweeps}};
    if (r.runtime_seconds) j["runtime_seconds"] = *r.runtime_seconds;
}

void from_json(const json& j, ExperimentReport& r) {
    r.scenario = j.at("scenario").get<Scenario>();
    r.p = j.at("p").get<Index>();
    r.n = j.at("n").get<Index>();
    r.diagnostics = j.at("diagnostics").get<RegularityDiagnostics>();
    r.sweeps = j.at("sweeps").get<std::vector<SweepResult>>();
    r.runtime_seconds = optional_field<double>(j, "runtime_seconds");
}

std::string report_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "trial,arm,m1,m2,error,tau_squared\n";
    for (const auto& s : report.sweeps) {
        for (std::size_t t = 0; t < s.active.errors.size(); ++t)
            out << t << ",active," << s.m1 << ',' << s.m2 << ',' << s.active.errors[t] << ','
                << s.tau_squared[t] << '\n';
        if (s.passive)
            for (std::size_t t = 0; t < s.passive->errors.size(); ++t)
                out << t << ",passive," << 0 << ',' << s.passive->labels << ','
                    << s.passive->errors[t] << ',' << s.passive_tau_squared << '\n';
    }
    return out.str();
}

}  // namespace activemle
