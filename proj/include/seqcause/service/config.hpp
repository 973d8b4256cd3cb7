#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "seqcause/event_model.hpp"
#include "seqcause/state_grouping.hpp"

namespace seqcause::service {

/// Every tunable of an analysis. Defaults are listed in the README table.
struct AnalysisConfig {
    std::int64_t session_interval_ms = 0;  // required, > 0
    double alpha = 0.05;
    std::size_t max_cond_size = 3;
    double min_support = 0.1;
    std::size_t max_pattern_len = 5;
    std::size_t max_patterns = 500;  // per graph, after sorting
    double eps = 0.2;
    std::size_t min_pts = 5;
    std::size_t max_iter = 20;
    std::size_t min_group_size = 5;
    std::size_t min_type_count = 5;
    std::uint64_t seed = 0;

    /// Throws ConfigError naming the first field out of range.
    void validate() const;

    PreprocessConfig preprocess() const;
    StateConfig states() const;

    nlohmann::json to_json() const;
    /// Missing keys keep their default; unknown keys and wrong types are
    /// ConfigErrors. The result is validated.
    static AnalysisConfig from_json(const nlohmann::json& j);

    std::string hash() const;
};

}  // namespace seqcause::service
