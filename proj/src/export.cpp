#include <ostream>

#include "tsroute/harness.hpp"

namespace tsroute {

void write_records_csv(const RunResult& result, std::ostream& out) {
  out << "t,arm,price,reward\n";
  for (const auto& r : result.records) {
    out << r.t << ',' << result.arm_names.at(r.arm) << ',' << format_double(r.offered_price) << ','
        << r.reward << '\n';
  }
}

void write_series_csv(std::span<const SeriesPoint> series, std::ostream& out) {
  out << "step,metric,arm,value\n";
  for (const auto& p : series) {
    out << p.step << ',' << p.metric << ',' << p.arm << ','
        << (p.value ? format_double(*p.value) : std::string("NA")) << '\n';
  }
}

nlohmann::json run_summary_json(const RunResult& result) {
  nlohmann::json arms = nlohmann::json::array();
  const double n = static_cast<double>(result.records.size());
  for (std::size_t a = 0; a < result.arm_names.size(); ++a) {
    arms.push_back({{"name", result.arm_names[a]},
                    {"pulls", result.pull_counts[a]},
                    {"assignment_share", n > 0 ? static_cast<double>(result.pull_counts[a]) / n : 0.0},
                    {"revenue", result.arm_revenue[a]}});
  }
  std::size_t fallbacks = 0;
  for (const auto& e : result.events) fallbacks += e.kind == "caution_fallback";

  nlohmann::json j;
  j["policy"] = result.policy;
  j["sessions"] = result.records.size();
  j["conversion_score"] = result.records.empty() ? 0.0 : conversion_score(result.records);
  j["revenue_per_offer"] = result.records.empty() ? 0.0 : revenue_per_offer(result.records);
  j["total_revenue"] = result.total_revenue();
  j["arms"] = arms;
  j["caution_fallbacks"] = fallbacks;
  j["final_state"] = result.final_state ? result.final_state->to_json() : nlohmann::json(nullptr);
  return j;
}

}  // namespace tsroute
