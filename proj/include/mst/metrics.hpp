// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mst/motion.hpp"

namespace mst {

using TransferFn =
    std::function<MotionSequence(const MotionSequence& content, const MotionSequence& style)>;

struct GeneratedPair {
    const MotionSequence* content = nullptr;
    const MotionSequence* style = nullptr;
    MotionSequence generated;
};

/// Metric distances exclude the global translation channels (root and
/// velocity); sequences of different lengths are truncated to the shorter.
double metric_distance(const MotionSequence& a, const MotionSequence& b);

/// Mean distance of the generated motion to its content motion over pairs
/// with equal style labels.
double metric_cc(const std::vector<GeneratedPair>& pairs);

/// Mean distance of the generated motion to its style motion over pairs with
/// equal content labels.
double metric_sc(const std::vector<GeneratedPair>& pairs);

/// Mean (over pairs) of the mean distance from the generated motion to every
/// training clip sharing the content label of the content motion and the
/// style label of the style motion. Pairs with an empty training cell are
/// skipped and counted.
double metric_scpp(const std::vector<GeneratedPair>& pairs,
                   const std::vector<MotionSequence>& train, std::size_t* skipped = nullptr);

struct MetricsReport {
    struct Row {
        std::optional<double> cc, sc, scpp;
        std::size_t pairs_cc = 0, pairs_sc = 0, pairs_scpp = 0;
    };
    Row average, same_content, diff_content;
    std::map<std::string, Row> by_content;  // keyed by content label of the content motion
    std::map<std::string, Row> by_style;    // keyed by style label of the style motion
    std::size_t skipped_scpp = 0;
};

/// Generates every ordered test pair once and aggregates all three metrics
/// with same-content / different-content splits and per-category rows.
MetricsReport evaluate_metrics(const std::vector<MotionSequence>& test,
                               const std::vector<MotionSequence>& train, const TransferFn& fn);

std::string metrics_report_csv(const MetricsReport& report);

}  // namespace mst
