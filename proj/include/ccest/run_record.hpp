#pragma once

#include "ccest/estimator.hpp"
#include "ccest/similarity.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ccest {

// Context that the step machine does not know about.
struct RunRecordContext {
    std::optional<double> tau;
    std::optional<Calibration> calibration;
    const std::vector<std::string>* item_ids = nullptr;  // optional, adds ids next to indices
};

// Non-finite values (the N=1 stderr) serialize as null.
nlohmann::json to_json(const Estimate& e);
nlohmann::json to_json(const BudgetPlan& p);

// The canonical run record: config, per-vertex draws, final estimate,
// per-vertex estimate history and diagnostics.
nlohmann::json run_record(const NisRun& run, const RunRecordContext& ctx = {});

}  // namespace ccest
