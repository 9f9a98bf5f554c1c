#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "holofun/function.hpp"
#include "holofun/holographic.hpp"
#include "holofun/network.hpp"
#include "holofun/polynomial.hpp"
#include "holofun/sampling.hpp"
#include "holofun/verification.hpp"

namespace holofun {

using json = nlohmann::json;

// Every file is {"schema": <name>, "version": 1, "payload": {...}}.
// Coordinate indices are 1-based in JSON and CLI surfaces, 0-based in memory.
// Vertex indices (network "output", "hid_edges") are 0-based list positions.
json make_envelope(const std::string& schema, json payload);
json open_envelope(const json& doc, const std::string& expected_schema);
std::string envelope_schema(const json& doc);

json measure_to_json(const CoordinateMeasure& m);
CoordinateMeasure measure_from_json(const json& j);

json activation_to_json(const Activation& a);
Activation activation_from_json(const json& j);

json function_payload(const FuzzyFunction& f);
FuzzyFunction function_from_payload(const json& j, const Limits& limits = {});

json scheme_payload(const HoloScheme& s);
HoloScheme scheme_from_payload(const json& j, const Limits& limits = {});

json polyrep_payload(const PolyRep& rep);
PolyRep polyrep_from_payload(const json& j);

json network_payload(const Network& net);
Network network_from_payload(const json& j);

json plan_payload(const SamplerPlan& plan);
SamplerPlan plan_from_payload(const json& j);

// Inspection exports for the regularity engine.
json partition_to_json(const Partition& p);
json step_array_to_json(const StepArray& w);
json trace_to_json(const RegularityTrace& trace);

json holo_check_report_to_json(const HoloCheckReport& r);
json pipeline_report_to_json(const PipelineReport& r);
json lemma_report_to_json(const LemmaSuiteReport& r);

// Envelope schema names.
inline constexpr const char* kFunctionSchema = "fuzzy-function";
inline constexpr const char* kSchemeSchema = "holo-scheme";
inline constexpr const char* kPolySchema = "poly-rep";
inline constexpr const char* kNetworkSchema = "network";
inline constexpr const char* kPlanSchema = "sampler-plan";

json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const json& doc);

FuzzyFunction load_function(const std::filesystem::path& path, const Limits& limits = {});
HoloScheme load_scheme(const std::filesystem::path& path, const Limits& limits = {});
PolyRep load_polyrep(const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

void save_function(const std::filesystem::path& path, const FuzzyFunction& f);
void save_scheme(const std::filesystem::path& path, const HoloScheme& s);
void save_polyrep(const std::filesystem::path& path, const PolyRep& rep);
void save_network(const std::filesystem::path& path, const Network& net);

}  // namespace holofun
