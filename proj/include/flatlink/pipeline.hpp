#pragma once

#include "flatlink/config.hpp"
#include "flatlink/report.hpp"

#include <functional>
#include <vector>

namespace flatlink {

struct PipelineReport {
    std::vector<KvReport> stages;
};

/// compile every KB, run each 2-way join, then the optional 3-way join and
/// sample, and finally validate every produced file when enabled. `progress`
/// receives each stage report as it finishes.
PipelineReport run_pipeline(const PipelineConfig& cfg,
                            const std::function<void(const KvReport&)>& progress = {});

} // namespace flatlink
