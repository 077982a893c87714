#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "archkernel/estimation.hpp"
#include "archkernel/generator.hpp"
#include "archkernel/metrics.hpp"

namespace archkernel {

/// Flat generator record {"family":..., "theta":..., "dim":...}. The
/// normalization scale is recomputed on load, never stored.
inline nlohmann::json generator_to_json(const Generator& g) {
    nlohmann::json j;
    j["family"] = std::string(family_name(g.family().id));
    j["theta"] = g.family().has_parameter() ? nlohmann::json(g.family().theta) : nlohmann::json(nullptr);
    j["dim"] = g.dim();
    return j;
}

inline Generator generator_from_json(const nlohmann::json& j) {
    try {
        const Family f = parse_family(j.at("family").get<std::string>());
        const int d = j.at("dim").get<int>();
        double theta = std::nan("");
        if (f == Family::ClaytonBoundary) {
            theta = j.contains("theta") && !j["theta"].is_null() ? j["theta"].get<double>() : -1.0 / (d - 1);
        } else if (f != Family::Independence) {
            theta = j.at("theta").get<double>();
        }
        return make_generator({f, theta}, d);
    } catch (const nlohmann::json::exception& e) {
        detail::fail(Errc::InvalidConfig, std::string("malformed generator record: ") + e.what());
    }
}

inline nlohmann::json to_json(const FitResult& r) {
    nlohmann::json j;
    j["family"] = std::string(family_name(r.family));
    j["theta_hat"] = r.theta_hat;
    j["log_likelihood"] = r.log_likelihood;
    j["n"] = r.n;
    j["convergence"] = std::string(to_string(r.status));
    j["stderr_estimate"] = r.stderr_estimate ? nlohmann::json(*r.stderr_estimate) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json to_json(const ConvergenceReport& r) {
    nlohmann::json j;
    j["all_decreasing"] = r.all_decreasing;
    for (const auto& c : r.criteria) {
        j["criteria"][c.name] = {{"values", c.values},
                                 {"non_increasing", c.non_increasing},
                                 {"strictly_decreasing", c.strictly_decreasing}};
    }
    return j;
}

inline nlohmann::json to_json(const IntegrationSpec& s) {
    return {{"method", std::string(to_string(s.method))},
            {"nodes_or_samples", s.nodes_or_samples},
            {"seed", s.seed},
            {"reported_tolerance", s.reported_tolerance}};
}

}  // namespace archkernel
