#pragma once

#include <string>
#include <vector>

#include "attkit/dataset.hpp"
#include "attkit/pipeline.hpp"

namespace attkit {

enum class ReportFormat { kText, kJson, kCsv, kSvg };

const char* to_string(ReportFormat f);
ReportFormat report_format_from_string(const std::string& s);

// Human-readable report; all numbers are rendered with %.6g.
std::string render_text(const MethodResult& result);
std::string render_text(const std::vector<MethodResult>& results);

// Machine-readable report. A single result renders as one object:
//   {method, att, ess:{treated,control}, nominal:{treated,control},
//    balance:[{name,treated,control,target,sd_t,sd_c}],
//    negative_weights:{count,ids}, sample_bounded}
// Multiple results render as an array of those objects. Doubles round-trip
// losslessly.
std::string render_json(const MethodResult& result);
std::string render_json(const std::vector<MethodResult>& results);

// Wide CSV, one row per method.
std::string render_csv(const std::vector<MethodResult>& results);

// Self-contained balance dot plot (960x480): one row per covariate with the
// unweighted control gap and the weighted gaps of both groups, in pooled-sd
// units around the method's target profile.
std::string render_svg(const Dataset& data, const MethodResult& result);

}  // namespace attkit
