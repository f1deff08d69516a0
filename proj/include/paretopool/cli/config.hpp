#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "paretopool/centralized.hpp"
#include "paretopool/distortion.hpp"
#include "paretopool/error.hpp"
#include "paretopool/ingest.hpp"
#include "paretopool/posolver.hpp"

namespace paretopool::cli {

inline constexpr int kSchemaVersion = 1;

struct AgentConfig {
    std::string label;
    std::string column;  // panel agent label holding the endowment; defaults to label
    std::optional<std::filesystem::path> belief_file;  // nullopt means the shared uniform belief
    std::vector<Distortion> distortions;
};

/// Welfare split: equal, all to the last agent, or explicit shares summing to 1.
struct WeightSpec {
    enum class Kind { Equal, Last, Shares } kind = Kind::Equal;
    std::vector<double> shares;
};

struct SweepConfig {
    std::string agent;
    std::size_t parameter = 0;
    std::vector<double> values;
};

struct RunConfig {
    std::vector<AgentConfig> agents;
    double alpha = 0.15;
    WeightSpec weights;
    std::filesystem::path output_dir = "out";
    ParseOptions data;
    TieRule tie_rule = TieRule::Optimize;
    double tie_tolerance = 1e-12;
    RobustOptions robust;
    std::optional<SweepConfig> sweep;

    bool shared_belief() const {
        for (const auto& a : agents)
            if (a.belief_file) return false;
        return true;
    }
    bool singleton_sets() const {
        for (const auto& a : agents)
            if (a.distortions.size() != 1) return false;
        return true;
    }
    std::optional<std::size_t> agent_index(const std::string& label) const {
        for (std::size_t i = 0; i < agents.size(); ++i)
            if (agents[i].label == label) return i;
        return std::nullopt;
    }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

inline double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + " must be a number");
    return v.get<double>();
}

inline std::string text(const json& v, const std::string& where) {
    if (!v.is_string()) throw ConfigError(where + " must be a string");
    return v.get<std::string>();
}

inline Distortion parse_distortion(const json& spec, const std::string& where) {
    reject_unknown(spec, {"family", "params", "knots"}, where);
    if (!spec.contains("family")) throw ConfigError(where + " needs a family");
    Family family;
    try {
        family = family_from_string(text(spec["family"], where + ".family"));
    } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
    }
    try {
        if (family == Family::Tabulated) {
            if (!spec.contains("knots") || !spec["knots"].is_array()) throw ConfigError(where + " needs knots");
            std::vector<Knot> knots;
            for (const auto& k : spec["knots"]) {
                if (!k.is_array() || k.size() != 2) throw ConfigError(where + " knots are [t, value] pairs");
                knots.push_back({number(k[0], where), number(k[1], where)});
            }
            return Distortion::tabulated(std::move(knots));
        }
        std::vector<double> params;
        if (spec.contains("params")) {
            if (!spec["params"].is_array()) throw ConfigError(where + ".params must be an array");
            for (const auto& p : spec["params"]) params.push_back(number(p, where + ".params"));
        }
        return Distortion::make(family, params);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace detail

/// Parses a configuration document. Relative file paths resolve against `base_dir`.
inline RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {}) {
    using detail::number;
    using detail::text;
    detail::reject_unknown(doc, {"schema_version", "agents", "insurer", "welfare_weights", "output_dir", "data",
                                 "tie_rule", "tie_tolerance", "robust", "sweep"},
                           "config");
    if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer() ||
        doc["schema_version"].get<int>() != kSchemaVersion)
        throw ConfigError("schema_version must be " + std::to_string(kSchemaVersion));

    RunConfig cfg;
    if (!doc.contains("agents") || !doc["agents"].is_array() || doc["agents"].empty())
        throw ConfigError("config needs a non-empty agents array");
    for (std::size_t i = 0; i < doc["agents"].size(); ++i) {
        const auto& a = doc["agents"][i];
        const std::string where = "agents[" + std::to_string(i) + "]";
        detail::reject_unknown(a, {"label", "column", "belief", "distortions"}, where);
        AgentConfig agent;
        if (!a.contains("label")) throw ConfigError(where + " needs a label");
        agent.label = text(a["label"], where + ".label");
        if (agent.label.empty()) throw ConfigError(where + ".label is empty");
        if (cfg.agent_index(agent.label)) throw ConfigError("duplicate agent label '" + agent.label + "'");
        agent.column = a.contains("column") ? text(a["column"], where + ".column") : agent.label;
        if (a.contains("belief")) {
            const auto b = text(a["belief"], where + ".belief");
            if (b != "shared") agent.belief_file = base_dir / b;
        }
        if (!a.contains("distortions") || !a["distortions"].is_array() || a["distortions"].empty())
            throw ConfigError(where + " needs a non-empty distortions array");
        for (std::size_t k = 0; k < a["distortions"].size(); ++k)
            agent.distortions.push_back(
                detail::parse_distortion(a["distortions"][k], where + ".distortions[" + std::to_string(k) + "]"));
        cfg.agents.push_back(std::move(agent));
    }

    if (doc.contains("insurer")) {
        detail::reject_unknown(doc["insurer"], {"alpha"}, "insurer");
        if (doc["insurer"].contains("alpha")) cfg.alpha = number(doc["insurer"]["alpha"], "insurer.alpha");
    }
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("insurer.alpha must lie in (0,1)");

    if (doc.contains("welfare_weights")) {
        const auto& w = doc["welfare_weights"];
        if (w.is_string()) {
            const auto s = w.get<std::string>();
            if (s == "equal")
                cfg.weights.kind = WeightSpec::Kind::Equal;
            else if (s == "last" || s == "all-to-last")
                cfg.weights.kind = WeightSpec::Kind::Last;
            else
                throw ConfigError("welfare_weights must be \"equal\", \"last\" or an array of shares");
        } else if (w.is_array()) {
            cfg.weights.kind = WeightSpec::Kind::Shares;
            for (const auto& v : w) cfg.weights.shares.push_back(number(v, "welfare_weights"));
        } else {
            throw ConfigError("welfare_weights must be a string or an array");
        }
    }
    if (cfg.weights.kind == WeightSpec::Kind::Shares) {
        if (cfg.weights.shares.size() != cfg.agents.size())
            throw ConfigError("welfare_weights needs one share per agent");
        double sum = 0.0;
        for (double s : cfg.weights.shares) {
            if (!(s >= 0.0)) throw ConfigError("welfare shares must be non-negative");
            sum += s;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("welfare shares must sum to 1");
    }

    if (doc.contains("output_dir")) cfg.output_dir = base_dir / text(doc["output_dir"], "output_dir");
    else cfg.output_dir = base_dir / "out";

    if (doc.contains("data")) {
        const auto& d = doc["data"];
        detail::reject_unknown(d, {"date_column", "agent_column", "loss_column", "fill_gaps"}, "data");
        if (d.contains("date_column")) cfg.data.date_column = text(d["date_column"], "data.date_column");
        if (d.contains("agent_column")) cfg.data.agent_column = text(d["agent_column"], "data.agent_column");
        if (d.contains("loss_column")) cfg.data.loss_column = text(d["loss_column"], "data.loss_column");
        if (d.contains("fill_gaps")) {
            if (!d["fill_gaps"].is_boolean()) throw ConfigError("data.fill_gaps must be a boolean");
            cfg.data.fill_gaps = d["fill_gaps"].get<bool>();
        }
    }

    if (doc.contains("tie_rule")) {
        const auto t = text(doc["tie_rule"], "tie_rule");
        if (t == "half") cfg.tie_rule = TieRule::Half;
        else if (t == "optimize") cfg.tie_rule = TieRule::Optimize;
        else throw ConfigError("tie_rule must be \"half\" or \"optimize\"");
    }
    if (doc.contains("tie_tolerance")) {
        cfg.tie_tolerance = number(doc["tie_tolerance"], "tie_tolerance");
        if (!(cfg.tie_tolerance >= 0.0)) throw ConfigError("tie_tolerance must be non-negative");
    }

    if (doc.contains("robust")) {
        const auto& r = doc["robust"];
        detail::reject_unknown(r, {"exhaustive_cap", "coordinate_ascent"}, "robust");
        if (r.contains("exhaustive_cap")) {
            if (!r["exhaustive_cap"].is_number_unsigned()) throw ConfigError("robust.exhaustive_cap must be a non-negative integer");
            cfg.robust.exhaustive_cap = r["exhaustive_cap"].get<std::uint64_t>();
        }
        if (r.contains("coordinate_ascent")) {
            if (!r["coordinate_ascent"].is_boolean()) throw ConfigError("robust.coordinate_ascent must be a boolean");
            cfg.robust.coordinate_ascent = r["coordinate_ascent"].get<bool>();
        }
    }

    if (doc.contains("sweep")) {
        const auto& s = doc["sweep"];
        detail::reject_unknown(s, {"agent", "parameter", "values"}, "sweep");
        SweepConfig sweep;
        if (!s.contains("agent")) throw ConfigError("sweep needs an agent");
        sweep.agent = text(s["agent"], "sweep.agent");
        const auto idx = cfg.agent_index(sweep.agent);
        if (!idx) throw ConfigError("sweep agent '" + sweep.agent + "' is not configured");
        if (s.contains("parameter")) {
            if (!s["parameter"].is_number_unsigned()) throw ConfigError("sweep.parameter must be a parameter index");
            sweep.parameter = s["parameter"].get<std::size_t>();
        }
        const auto& d = cfg.agents[*idx].distortions;
        if (d.size() != 1) throw ConfigError("sweep agent must have a single distortion");
        if (sweep.parameter >= d.front().params().size())
            throw ConfigError("sweep.parameter is out of range for family " + std::string(to_string(d.front().family())));
        if (!s.contains("values") || !s["values"].is_array() || s["values"].empty())
            throw ConfigError("sweep needs a non-empty values array");
        for (const auto& v : s["values"]) sweep.values.push_back(number(v, "sweep.values"));
        cfg.sweep = std::move(sweep);
    }
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(doc, path.parent_path());
}

/// Reads one weight per line; an optional non-numeric header line is skipped.
inline EmpiricalSpace load_belief(const std::filesystem::path& path, std::size_t states) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open belief file " + path.string());
    std::vector<double> w;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto v = parse_money(line);
        if (!v) {
            if (first) {
                first = false;
                continue;
            }
            throw FormatError("bad weight '" + line + "' in " + path.string());
        }
        first = false;
        w.push_back(*v);
    }
    if (w.size() != states)
        throw ConfigError("belief file " + path.string() + " has " + std::to_string(w.size()) + " weights for " +
                          std::to_string(states) + " months");
    double sum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) throw ConfigError("belief weights must be non-negative");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ConfigError("belief weights in " + path.string() + " must sum to 1");
    return EmpiricalSpace::normalized(w);
}

}  // namespace paretopool::cli
