#pragma once

#include "activemle/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace activemle {

using json = nlohmann::json;

// CSV input. Fields may be separated by commas and/or whitespace; blank lines
// and lines starting with '#' are skipped.
Matrix read_matrix_csv(const std::filesystem::path& path, bool header = false);
Matrix parse_matrix_csv(const std::string& text, bool header = false);
Vector read_vector_csv(const std::filesystem::path& path);

/// Replay labels: one "index,label" row per recorded draw. Labels are parsed
/// according to the family (real, +-1, or 1-based class).
std::map<Index, std::vector<Label>> read_replay_labels(const std::filesystem::path& path,
                                                       const ModelFamily& family);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// JSON documents. Every type below round-trips through to_json/from_json.
void to_json(json& j, const Design& d);
void from_json(const json& j, Design& d);

/// {"sigma": [...], "v": [[...], ...], "fisher": [[[...]]], "budget": m2, "weight_cap": cap}
/// v[j] is the j-th eigenvector (not a matrix row).
void to_json(json& j, const SdpForm& f);
void from_json(const json& j, SdpForm& f);

void to_json(json& j, const PoolSpec& s);
void from_json(const json& j, PoolSpec& s);
void to_json(json& j, const Scenario& s);
void from_json(const json& j, Scenario& s);
void to_json(json& j, const RegularityDiagnostics& r);
void from_json(const json& j, RegularityDiagnostics& r);
void to_json(json& j, const ArmResult& a);
void from_json(const json& j, ArmResult& a);
void to_json(json& j, const SweepResult& s);
void from_json(const json& j, SweepResult& s);
void to_json(json& j, const ExperimentReport& r);
void from_json(const json& j, ExperimentReport& r);

Scenario parse_scenario(const std::string& text);

/// Per-trial table: trial,arm,m1,m2,error,tau_squared.
std::string report_csv(const ExperimentReport& report);

}  // namespace activemle
