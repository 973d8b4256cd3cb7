#include "seqcause/service/config.hpp"

#include "seqcause/error.hpp"
#include "seqcause/event_io.hpp"

namespace seqcause::service {

namespace {

void require(bool ok, const char* field, const char* range) {
    if (!ok) {
        throw ConfigError(std::string(field) + " must be " + range);
    }
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return;
    }
    try {
        if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number()) {
                throw ConfigError("");
            }
        } else {
            if (!it->is_number_integer()) {
                throw ConfigError("");
            }
            if constexpr (std::is_unsigned_v<T>) {
                if (it->is_number_integer() && !it->is_number_unsigned() && it->template get<std::int64_t>() < 0) {
                    throw ConfigError("");
                }
            }
        }
        out = it->template get<T>();
    } catch (const std::exception&) {
        throw ConfigError(std::string(key) + " has the wrong type");
    }
}

}  // namespace

void AnalysisConfig::validate() const {
    require(session_interval_ms > 0, "session_interval_ms", "a positive integer");
    require(alpha > 0.0 && alpha < 1.0, "alpha", "in (0, 1)");
    require(max_cond_size <= 10, "max_cond_size", "at most 10");
    require(min_support > 0.0 && min_support <= 1.0, "min_support", "in (0, 1]");
    require(max_pattern_len >= 1 && max_pattern_len <= 32, "max_pattern_len", "in [1, 32]");
    require(max_patterns >= 1, "max_patterns", "at least 1");
    require(eps > 0.0 && eps <= 2.0, "eps", "in (0, 2]");
    require(min_pts >= 1, "min_pts", "at least 1");
    require(max_iter <= 1000, "max_iter", "at most 1000");
    require(min_group_size >= 1, "min_group_size", "at least 1");
}

PreprocessConfig AnalysisConfig::preprocess() const {
    PreprocessConfig p;
    p.min_type_count = min_type_count;
    p.session_interval_ms = session_interval_ms;
    return p;
}

StateConfig AnalysisConfig::states() const {
    StateConfig s;
    s.discovery.pc.alpha = alpha;
    s.discovery.pc.max_cond_size = max_cond_size;
    s.eps = eps;
    s.min_pts = min_pts;
    s.max_iter = max_iter;
    s.min_group_size = min_group_size;
    return s;
}

nlohmann::json AnalysisConfig::to_json() const {
    return {{"session_interval_ms", session_interval_ms},
            {"alpha", alpha},
            {"max_cond_size", max_cond_size},
            {"min_support", min_support},
            {"max_pattern_len", max_pattern_len},
            {"max_patterns", max_patterns},
            {"eps", eps},
            {"min_pts", min_pts},
            {"max_iter", max_iter},
            {"min_group_size", min_group_size},
            {"min_type_count", min_type_count},
            {"seed", seed}};
}

AnalysisConfig AnalysisConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    AnalysisConfig c;
    const auto known = c.to_json();
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    read_field(j, "session_interval_ms", c.session_interval_ms);
    read_field(j, "alpha", c.alpha);
    read_field(j, "max_cond_size", c.max_cond_size);
    read_field(j, "min_support", c.min_support);
    read_field(j, "max_pattern_len", c.max_pattern_len);
    read_field(j, "max_patterns", c.max_patterns);
    read_field(j, "eps", c.eps);
    read_field(j, "min_pts", c.min_pts);
    read_field(j, "max_iter", c.max_iter);
    read_field(j, "min_group_size", c.min_group_size);
    read_field(j, "min_type_count", c.min_type_count);
    read_field(j, "seed", c.seed);
    c.validate();
    return c;
}

std::string AnalysisConfig::hash() const {
    return fnv1a_hex(to_json().dump());
}

}  // namespace seqcause::service
