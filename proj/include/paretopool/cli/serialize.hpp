#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "paretopool/centralized.hpp"
#include "paretopool/error.hpp"
#include "paretopool/posolver.hpp"

namespace paretopool::cli {

using nlohmann::json;

inline json allocation_to_json(const LayerAllocation& a, const std::vector<std::string>& labels, double value) {
    return json{{"kind", "decentralized_allocation"},
                {"agents", labels},
                {"breakpoints", a.breakpoints},
                {"slopes", a.slopes},
                {"side_payments", a.side_payments},
                {"chosen_distortions", a.chosen_distortions},
                {"value", value}};
}

inline LayerAllocation allocation_from_json(const json& j) {
    try {
        if (j.at("kind") != "decentralized_allocation") throw FormatError("not a decentralized allocation document");
        LayerAllocation a;
        a.breakpoints = j.at("breakpoints").get<std::vector<double>>();
        a.slopes = j.at("slopes").get<std::vector<std::vector<double>>>();
        a.side_payments = j.at("side_payments").get<std::vector<double>>();
        a.chosen_distortions = j.at("chosen_distortions").get<std::vector<std::size_t>>();
        const std::size_t n = a.chosen_distortions.size();
        if (!a.slopes.empty() && a.breakpoints.size() != a.slopes.size() + 1)
            throw FormatError("allocation breakpoints and slopes disagree");
        for (const auto& row : a.slopes)
            if (row.size() != n) throw FormatError("allocation slope row has the wrong agent count");
        if (!a.side_payments.empty() && a.side_payments.size() != n)
            throw FormatError("allocation side payments have the wrong agent count");
        return a;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed allocation JSON: ") + e.what());
    }
}

inline json report_to_json(const MarketReport& r, const std::vector<std::string>& labels) {
    json agents = json::array();
    for (std::size_t i = 0; i < labels.size(); ++i)
        agents.push_back({{"label", labels[i]},
                          {"initial_risk", r.initial_risk[i]},
                          {"final_risk", r.final_risk[i]},
                          {"gain", r.gains[i]}});
    return json{{"agents", agents},
                {"aggregate_gain", r.aggregate_gain},
                {"average_gain", r.average_gain},
                {"optimum_value", r.optimum_value}};
}

inline std::string to_string(LayerCase c) {
    switch (c) {
        case LayerCase::Cede: return "cede";
        case LayerCase::Tie: return "tie";
        default: return "retain";
    }
}

inline json contract_to_json(const CentralizedContract& c, const std::vector<std::string>& labels, TieRule rule) {
    json agents = json::array();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& s = c.indemnities[i];
        json cases = json::array();
        for (auto k : s.cases) cases.push_back(to_string(k));
        const auto d = s.deductible();
        agents.push_back({{"label", labels[i]},
                          {"breakpoints", s.breakpoints},
                          {"slopes", s.slopes},
                          {"cases", cases},
                          {"measure_survival", s.measure_survival},
                          {"distorted_survival", s.distorted_survival},
                          {"deductible_contract", d.has_value()},
                          {"deductible", d ? json(*d) : json(nullptr)},
                          {"premium", c.premiums.empty() ? 0.0 : c.premiums[i]}});
    }
    return json{{"kind", "centralized_contract"},
                {"alpha", c.alpha},
                {"tie_rule", rule == TieRule::Half ? "half" : "optimize"},
                {"measure", c.measure},
                {"measure_value", c.measure_value},
                {"cedes_nothing", c.cedes_nothing()},
                {"agents", agents}};
}

inline json welfare_to_json(const CentralizedWelfare& w, const std::vector<std::string>& labels) {
    json gains = json::object();
    for (std::size_t i = 0; i < labels.size(); ++i) gains[labels[i]] = w.policyholder_gains[i];
    return json{{"policyholder_gains", gains},
                {"insurer_gain", w.insurer_gain},
                {"aggregate_gain", w.aggregate_gain},
                {"average_gain", w.average_gain},
                {"max_aggregate_gain", w.max_aggregate_gain},
                {"cedes_nothing", w.cedes_nothing}};
}

}  // namespace paretopool::cli
