#include "tvhsd/harness.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>

namespace tvhsd::harness {

using nlohmann::json;

namespace {

// nlohmann prints the shortest round-trip form; reports use a fixed
// 17-significant-digit rendering instead.
void write(const json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(key).dump() + ": ";
        write(value, out, indent, depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        write(j[i], out, indent, depth + 1);
      }
      out += "\n" + close + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

std::string render(const json& j) {
  std::string out;
  write(j, out, 2, 0);
  out += '\n';
  return out;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_json(const Metrics& m) {
  json per_class = json::array();
  for (const ClassCounts& c : m.per_class) per_class.push_back({{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}});
  return {{"macro_f1", m.macro_f1},   {"macro_precision", m.macro_precision},
          {"macro_recall", m.macro_recall}, {"accuracy", m.accuracy},
          {"n", m.n},                 {"per_class", per_class}};
}

json bins_json(const LengthBinReport& report) {
  json bins = json::array();
  for (const LengthBin& b : report.bins) {
    bins.push_back({{"lower", b.lower},
                    {"upper", optional_number(b.upper)},
                    {"n", b.n},
                    {"folds", b.folds},
                    {"accuracy_mean", optional_number(b.accuracy_mean)},
                    {"ci95_half_width", optional_number(b.ci_half_width)},
                    {"mean_uncertainty", optional_number(b.mean_uncertainty)}});
  }
  return bins;
}

json summary_json(const MetricSummary& s) { return {{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

std::string eval_report_json(const Evaluation& evaluation, const LengthBinReport& bins) {
  const json j{{"kind", "eval"},
               {"metrics", metrics_json(evaluation.metrics)},
               {"mean_uncertainty", evaluation.mean_uncertainty},
               {"length_bins", bins_json(bins)}};
  return render(j);
}

std::string xval_report_json(const XvalResult& result, const TrainConfig& config,
                             const LengthBinReport& bins) {
  json folds = json::array();
  for (std::size_t f = 0; f < result.report.folds.size(); ++f) {
    json entry = metrics_json(result.report.folds[f]);
    entry["fold_index"] = f;
    entry["mean_uncertainty"] = result.report.fold_uncertainty[f];
    folds.push_back(entry);
  }
  const json j{{"kind", "xval"},
               {"config", json::parse(train_config_json(config))},
               {"num_folds", result.report.folds.size()},
               {"folds", folds},
               {"macro_f1", summary_json(result.report.macro_f1)},
               {"macro_precision", summary_json(result.report.macro_precision)},
               {"macro_recall", summary_json(result.report.macro_recall)},
               {"mean_uncertainty", result.report.mean_uncertainty},
               {"length_bins", bins_json(bins)}};
  return render(j);
}

}  // namespace tvhsd::harness
