#include "flakysieve/report.hpp"

#include <cmath>
#include <cstdio>

#include "flakysieve/error.hpp"
#include "json.hpp"

namespace flakysieve {
namespace {

using Json = nlohmann::ordered_json;

Json eval_json(const EvalReport& report) {
  Json j;
  Json per_class = Json::object();
  Json classes = Json::array();
  for (const auto& c : report.per_class) {
    per_class[std::string(c.label.token())] = {{"precision", c.precision},
                                               {"recall", c.recall},
                                               {"f1", c.f1},
                                               {"support", c.support}};
    classes.push_back(c.label.token());
  }
  j["per_class"] = std::move(per_class);
  j["weighted_avg_f1"] = report.weighted_avg_f1;
  j["classes"] = std::move(classes);
  j["confusion"] = report.confusion;
  j["train_seconds"] = report.train_seconds;
  j["decision_rule"] = report.decision_rule;
  j["seed"] = report.seed;
  return j;
}

std::string percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", value * 100.0);
  return buf;
}

std::string seconds(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", value);
  return buf;
}

std::string display(const Json& root, const std::string& token) {
  if (root.contains("taxonomy")) {
    if (auto taxonomy = parse_taxonomy(root["taxonomy"].get<std::string>())) {
      if (auto label = parse_label(token, *taxonomy)) return std::string(label->display_name());
    }
  }
  return token;
}

void class_table(std::string& out, const Json& root, const Json& report) {
  out += "| Class | Support | F1 |\n|---|---:|---:|\n";
  std::size_t total = 0;
  for (const auto& [token, m] : report["per_class"].items()) {
    const auto support = m["support"].get<std::size_t>();
    total += support;
    out += "| " + display(root, token) + " | " + std::to_string(support) + " | " +
           percent(m["f1"].get<double>()) + " |\n";
  }
  out += "| **Total/Weighted Avg.** | " + std::to_string(total) + " | " +
         percent(report["weighted_avg_f1"].get<double>()) + " |\n";
}

void confusion_table(std::string& out, const Json& root, const Json& report) {
  const auto& classes = report["classes"];
  out += "\nConfusion matrix (rows = truth, columns = prediction):\n\n| |";
  for (const auto& c : classes) out += " " + display(root, c.get<std::string>()) + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < classes.size(); ++i) out += "---:|";
  out += "\n";
  for (std::size_t r = 0; r < classes.size(); ++r) {
    out += "| " + display(root, classes[r].get<std::string>()) + " |";
    for (const auto& cell : report["confusion"][r]) out += " " + std::to_string(cell.get<std::size_t>()) + " |";
    out += "\n";
  }
}

}  // namespace

std::string report_to_json(const EvalReport& report, Taxonomy taxonomy) {
  Json j;
  j["taxonomy"] = to_string(taxonomy);
  const Json body = eval_json(report);
  for (const auto& [key, value] : body.items()) j[key] = value;
  return j.dump(2) + "\n";
}

std::string report_to_json(const ExperimentResult& result, Taxonomy taxonomy) {
  if (result.projects.empty()) return report_to_json(result.report, taxonomy);
  Json j;
  j["taxonomy"] = to_string(taxonomy);
  Json projects = Json::object();
  for (const auto& p : result.projects) projects[p.project] = eval_json(p.report);
  j["projects"] = std::move(projects);
  j["total"] = {{"support", result.total.support},
                {"weighted_avg_f1", result.total.weighted_avg_f1},
                {"train_seconds", result.total.train_seconds}};
  j["pooled"] = eval_json(result.report);
  j["decision_rule"] = result.report.decision_rule;
  j["seed"] = result.report.seed;
  return j.dump(2) + "\n";
}

std::string markdown_from_report_json(std::string_view json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw LoadError(std::string("report is not valid JSON: ") + e.what());
  }
  std::string out;
  try {
    if (root.contains("projects")) {
      out += "| Project | Support | F1 |\n|---|---:|---:|\n";
      for (const auto& [name, report] : root["projects"].items()) {
        std::size_t support = 0;
        for (const auto& [token, m] : report["per_class"].items()) {
          support += m["support"].get<std::size_t>();
        }
        out += "| " + name + " | " + std::to_string(support) + " | " +
               percent(report["weighted_avg_f1"].get<double>()) + " |\n";
      }
      const auto& total = root["total"];
      out += "| **Total/Weighted Avg.** | " + std::to_string(total["support"].get<std::size_t>()) +
             " | " + percent(total["weighted_avg_f1"].get<double>()) + " |\n";
      out += "\nTraining time: " + seconds(total["train_seconds"].get<double>()) + " s\n";
      out += "\nPooled over projects:\n\n";
      class_table(out, root, root["pooled"]);
    } else {
      class_table(out, root, root);
      out += "\nTraining time: " + seconds(root["train_seconds"].get<double>()) + " s\n";
      confusion_table(out, root, root);
    }
    out += "\nDecision rule: " + root["decision_rule"].get<std::string>() +
           ", seed: " + std::to_string(root["seed"].get<std::uint64_t>()) + "\n";
  } catch (const Json::exception& e) {
    throw LoadError(std::string("malformed report: ") + e.what());
  }
  return out;
}

std::string report_to_markdown(const EvalReport& report, std::string_view title) {
  const Taxonomy taxonomy =
      report.per_class.empty() ? Taxonomy::kDetection : report.per_class.front().label.taxonomy();
  std::string out;
  if (!title.empty()) out += "### " + std::string(title) + "\n\n";
  return out + markdown_from_report_json(report_to_json(report, taxonomy));
}

std::string report_to_markdown(const ExperimentResult& result, std::string_view title) {
  const auto& first = result.report.per_class;
  const Taxonomy taxonomy = first.empty() ? Taxonomy::kDetection : first.front().label.taxonomy();
  std::string out;
  if (!title.empty()) out += "### " + std::string(title) + "\n\n";
  return out + markdown_from_report_json(report_to_json(result, taxonomy));
}

}  // namespace flakysieve
