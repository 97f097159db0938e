#pragma once

#include <vector>

#include <json.hpp>

#include "bgrid/streaming.hpp"

namespace bgrid {

// JSON document for a simulation run (schema v1, documented in the README).
inline nlohmann::json report_to_json(const CycleReport& rep, const std::vector<double>& f_clks) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["total_cycles"] = rep.total_cycles;
    j["stall_cycles"] = rep.stall_cycles;
    j["lb_peak"] = rep.lb_peak;
    j["live_cells"] = rep.live_cells;
    j["max_ops_per_cycle"] = rep.max_ops_per_cycle;
    j["fallback"] = rep.fallback;
    j["grid_dims"] = {rep.dims.gx, rep.dims.gy, rep.dims.gz};
    j["partitions"] = nlohmann::json::array();
    for (const auto& p : rep.partitions)
        j["partitions"].push_back({{"name", p.name}, {"max_accesses", p.max_accesses}});
    j["predicted_fps"] = nlohmann::json::array();
    for (double f : f_clks)
        j["predicted_fps"].push_back({{"f_clk", f}, {"fps", rep.predicted_fps(f)}});
    AuditResult audit = audit_memory_accesses(rep);
    j["audit"]["passed"] = audit.passed;
    j["audit"]["violations"] = nlohmann::json::array();
    for (const auto& v : audit.offenders)
        j["audit"]["violations"].push_back(
            {{"cycle", v.cycle}, {"partition", v.partition}, {"accesses", v.accesses}});
    return j;
}

}  // namespace bgrid
