#pragma once

#include <string>

#include "epifit/estimate.hpp"
#include "epifit/experiments.hpp"
#include "epifit/hypodist.hpp"
#include "epifit/plugins.hpp"

namespace epifit::io {

// Canonical float formatting: 17 significant digits round-trips doubles and
// keeps outputs byte-stable across runs.
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// --- JSON output (fixed key order, canonical floats) ---
std::string complex_to_json(const SimplicialComplex& cx, int indent = 0);
std::string model_to_json(const EpiSpline& f);
std::string distance_report_to_json(const DistanceReport& rep);
std::string plugin_report_to_json(const PluginReport& rep);
std::string estimate_result_to_json(const EstimateResult& res);

// --- JSON input (schema-checked; unknown keys rejected) ---
EpiSpline model_from_json(const std::string& text);
EstimationConfig problem_config_from_json(const std::string& text);
HypoDistanceConfig hypodist_config_from_json(const std::string& text, int space_dim);

struct StudyConfig {
  std::string kind;  // "consistency" | "scaling"
  ConsistencyStudyConfig consistency;
  ScalingStudyConfig scaling;
};
StudyConfig study_config_from_json(const std::string& text);

// --- CSV ---
struct LoadedSample {
  Sample sample;
  int rejected = 0;
};
LoadedSample load_sample_csv(const std::string& path, const BoxDomain& box,
                             bool with_response);
std::string grid_to_csv(const GridEvaluation& grid);
std::string study_to_csv(const StudyResult& result);

}  // namespace epifit::io
