#pragma once

#include <string>
#include <string_view>

#include "flakysieve/evaluate.hpp"

namespace flakysieve {

// {"per_class": {label: {"precision","recall","f1","support"}},
//  "weighted_avg_f1", "classes", "confusion", "train_seconds",
//  "decision_rule", "seed", "taxonomy"}. Embedding time is not part of the
// report; callers log it separately.
std::string report_to_json(const EvalReport& report, Taxonomy taxonomy);
// Per-project form: {"projects": {name: report}, "total": report, ...}.
std::string report_to_json(const ExperimentResult& result, Taxonomy taxonomy);

// Table with class/project, support and F1 (percent) columns and a closing
// "Total/Weighted Avg." row.
std::string report_to_markdown(const EvalReport& report, std::string_view title = {});
std::string report_to_markdown(const ExperimentResult& result, std::string_view title = {});

// Renders a report JSON file (either form) as Markdown.
std::string markdown_from_report_json(std::string_view json_text);

}  // namespace flakysieve
