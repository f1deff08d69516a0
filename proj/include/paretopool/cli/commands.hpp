#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "paretopool/centralized.hpp"
#include "paretopool/cli/config.hpp"
#include "paretopool/cli/serialize.hpp"
#include "paretopool/csv.hpp"
#include "paretopool/ingest.hpp"
#include "paretopool/posolver.hpp"

namespace paretopool::cli {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int format = 2;
inline constexpr int solver = 3;
inline constexpr int config = 4;
}  // namespace exit_code

/// Command-line overrides; empty fields fall back to the config file.
struct CommandOptions {
    std::filesystem::path config;
    std::filesystem::path data;
    std::filesystem::path out;
    std::optional<std::string> loss_column;
    std::optional<double> alpha;
    std::optional<std::string> weights;  // equal | last | FILE
};

/// stderr logger whose level comes from PARETOPOOL_LOG (default info).
inline std::shared_ptr<spdlog::logger> logger() {
    static auto log = [] {
        auto l = spdlog::get("paretopool");
        if (!l) l = spdlog::stderr_color_mt("paretopool");
        l->set_pattern("[%l] %v");
        l->set_level(spdlog::level::info);
        if (const char* env = std::getenv("PARETOPOOL_LOG")) l->set_level(spdlog::level::from_str(env));
        return l;
    }();
    return log;
}

// ============================================================================
// Inputs
// ============================================================================

namespace detail {

inline bool is_canonical_header(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line == "month,agent,loss";
}

inline std::string file_label(const std::string& label) {
    std::string out;
    for (char c : label) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_';
    return out;
}

inline void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw FormatError("cannot create output directory " + dir.string() + ": " + ec.message());
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    return out;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

inline std::string fmt_num(double v) { return std::isfinite(v) ? csv::format_number(v) : std::string(); }

}  // namespace detail

/// Reads a claim export, or a canonical month,agent,loss panel when the header says so.
inline LossPanel load_panel(const std::filesystem::path& path, ParseOptions options) {
    if (path.empty()) throw FormatError("no data file given (use --data)");
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open data file " + path.string());
    if (detail::is_canonical_header(path)) {
        const bool fill = options.fill_gaps;
        options = ParseOptions::canonical();
        options.fill_gaps = fill;
    }
    auto result = parse_losses(in, options);
    for (const auto& issue : result.rejected)
        logger()->warn("{}:{}: row rejected: {}", path.string(), issue.line, issue.reason);
    logger()->info("read {} rows into {} months x {} agents", result.accepted_rows, result.panel.month_count(),
                   result.panel.agent_count());
    return std::move(result.panel);
}

/// Everything a market command needs once config and data are resolved.
struct Session {
    RunConfig config;
    LossPanel panel;
    EmpiricalSpace reference = EmpiricalSpace::uniform(1);
    std::vector<AgentSpec> agents;
    std::vector<std::string> labels;
    std::filesystem::path out_dir;
};

inline RunConfig resolve_config(const CommandOptions& opt) {
    if (opt.config.empty()) throw ConfigError("no config file given (use --config)");
    RunConfig cfg = load_config(opt.config);
    if (opt.loss_column) cfg.data.loss_column = *opt.loss_column;
    if (opt.alpha) {
        if (!(*opt.alpha > 0.0 && *opt.alpha < 1.0)) throw ConfigError("--alpha must lie in (0,1)");
        cfg.alpha = *opt.alpha;
    }
    if (opt.weights) {
        const auto& w = *opt.weights;
        cfg.weights = {};
        if (w == "equal") {
            cfg.weights.kind = WeightSpec::Kind::Equal;
        } else if (w == "last") {
            cfg.weights.kind = WeightSpec::Kind::Last;
        } else {
            std::ifstream in(w);
            if (!in) throw ConfigError("cannot open weights file " + w);
            cfg.weights.kind = WeightSpec::Kind::Shares;
            std::string line;
            while (std::getline(in, line)) {
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                auto v = parse_money(line);
                if (!v || *v < 0.0) throw ConfigError("bad welfare share '" + line + "' in " + w);
                cfg.weights.shares.push_back(*v);
            }
            if (cfg.weights.shares.size() != cfg.agents.size())
                throw ConfigError("weights file needs one share per agent");
            const double sum = std::accumulate(cfg.weights.shares.begin(), cfg.weights.shares.end(), 0.0);
            if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("welfare shares must sum to 1");
        }
    }
    return cfg;
}

inline std::vector<AgentSpec> build_agents(const RunConfig& cfg, const LossPanel& panel) {
    if (panel.month_count() == 0) throw DomainError("data file holds no months");
    const auto reference = EmpiricalSpace::uniform(panel.month_count());
    std::vector<AgentSpec> agents;
    for (const auto& a : cfg.agents) {
        const auto col = panel.agent_index(a.column);
        if (!col) throw ConfigError("agent '" + a.label + "' maps to column '" + a.column + "', absent from the data");
        EmpiricalSpace belief = a.belief_file ? load_belief(*a.belief_file, panel.month_count()) : reference;
        agents.push_back({std::move(belief), DistortionSet(a.distortions), panel.profile(*col)});
    }
    return agents;
}

inline Session open_session(const CommandOptions& opt) {
    Session s;
    s.config = resolve_config(opt);
    s.panel = load_panel(opt.data, s.config.data);
    s.agents = build_agents(s.config, s.panel);
    s.reference = EmpiricalSpace::uniform(s.panel.month_count());
    for (const auto& a : s.config.agents) s.labels.push_back(a.label);
    s.out_dir = opt.out.empty() ? s.config.output_dir : opt.out;
    return s;
}

inline std::vector<PolicyHolder> policyholders(const Session& s) {
    if (!s.config.shared_belief()) throw ConfigError("the centralized market needs every agent on the shared belief");
    if (!s.config.singleton_sets()) throw ConfigError("the centralized market needs one distortion per agent");
    std::vector<PolicyHolder> holders;
    for (const auto& a : s.agents) holders.push_back({a.distortions[0], a.endowment});
    return holders;
}

// ============================================================================
// Decentralized market
// ============================================================================

struct DecentralizedResult {
    LayerAllocation allocation;
    double value = 0.0;  // minimax layer value
    bool exhaustive = true;
    MarketReport report;
};

inline std::vector<double> resolve_weights(const WeightSpec& spec, double gain, std::size_t n) {
    switch (spec.kind) {
        case WeightSpec::Kind::Equal: return welfare_weights(WeightRule::Equal, gain, n);
        case WeightSpec::Kind::Last: return welfare_weights(WeightRule::AllToLast, gain, n);
        default: {
            std::vector<double> w(n);
            for (std::size_t i = 0; i < n; ++i) w[i] = spec.shares.at(i) * gain;
            return w;
        }
    }
}

inline DecentralizedResult solve_decentralized(const std::vector<AgentSpec>& agents, const RunConfig& cfg) {
    DecentralizedResult r;
    const auto sol = solve_robust(agents, cfg.robust);
    r.allocation = sol.allocation;
    r.value = sol.value;
    r.exhaustive = sol.exhaustive;
    const double gain = aggregate_gain(agents, r.allocation);
    if (gain < -welfare_tolerance(agents))
        throw InvalidWeightsError("pooling loses " + csv::format_number(-gain) +
                                  " against the status quo; no individually rational transfers exist");
    r.allocation.side_payments = side_payments(r.allocation, agents, resolve_weights(cfg.weights, gain, agents.size()));
    r.report = welfare_report(agents, r.allocation);
    return r;
}

/// Prelec deductible split when the market qualifies, else null.
inline json prelec_summary(const Session& s) {
    if (!s.config.shared_belief() || !s.config.singleton_sets()) return nullptr;
    std::vector<Distortion> ds;
    for (const auto& a : s.agents) ds.push_back(a.distortions[0]);
    try {
        const auto roles = deductible_agents(ds);
        const double d = prelec_deductible(aggregate_loss(s.agents), s.reference, ds);
        return json{{"retention_agent", s.labels[roles.retention]},
                    {"excess_agent", s.labels[roles.excess]},
                    {"deductible", d}};
    } catch (const UnsupportedError&) {
        return nullptr;
    }
}

inline int cmd_po_decentralized(const CommandOptions& opt) {
    const auto s = open_session(opt);
    const auto r = solve_decentralized(s.agents, s.config);
    detail::ensure_dir(s.out_dir);
    detail::write_json(s.out_dir / "allocation.json", allocation_to_json(r.allocation, s.labels, r.value));

    auto report = report_to_json(r.report, s.labels);
    report["minimax_value"] = r.value;
    report["exhaustive"] = r.exhaustive;
    report["prelec"] = prelec_summary(s);
    detail::write_json(s.out_dir / "report.json", report);

    // Retention curves over the states sorted by the aggregate loss.
    const auto total = aggregate_loss(s.agents);
    std::vector<std::size_t> order(total.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return total[a] < total[b]; });
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        auto out = detail::open_out(s.out_dir / ("retention_" + detail::file_label(s.labels[i]) + ".csv"));
        csv::Writer w(out);
        w.row({"rank", "month", "aggregate_loss", "retained", "retained_normalized"});
        for (std::size_t k = 0; k < order.size(); ++k) {
            const std::size_t st = order[k];
            const double g = r.allocation.share(i, total[st]);
            w.row({std::to_string(k), s.panel.months()[st].iso(), csv::format_number(total[st]),
                   csv::format_number(g + r.allocation.side_payment(i)), csv::format_number(g)});
        }
    }
    logger()->info("aggregate gain {} (average {}) written to {}", r.report.aggregate_gain, r.report.average_gain,
                   s.out_dir.string());
    return exit_code::ok;
}

// ============================================================================
// Centralized market
// ============================================================================

inline CentralizedContract centralized_contract(const Session& s, const std::vector<PolicyHolder>& holders) {
    auto c = solve_centralized(s.reference, holders, s.config.alpha,
                               {.tie_rule = s.config.tie_rule, .tie_tolerance = s.config.tie_tolerance});
    if (c.cedes_nothing())
        logger()->warn("the contract at alpha = {} cedes nothing; the insurer is too risk averse to trade",
                       s.config.alpha);
    return c;
}

inline int cmd_po_centralized(const CommandOptions& opt) {
    const auto s = open_session(opt);
    const auto holders = policyholders(s);
    const auto c = centralized_contract(s, holders);
    const auto w = centralized_welfare(s.reference, holders, c);
    detail::ensure_dir(s.out_dir);
    detail::write_json(s.out_dir / "contract.json", contract_to_json(c, s.labels, s.config.tie_rule));
    detail::write_json(s.out_dir / "welfare.json", welfare_to_json(w, s.labels));

    for (std::size_t i = 0; i < holders.size(); ++i) {
        const auto& x = holders[i].endowment;
        std::vector<std::size_t> order(x.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
        const auto& sched = c.indemnities[i];
        auto out = detail::open_out(s.out_dir / ("retention_" + detail::file_label(s.labels[i]) + ".csv"));
        csv::Writer wr(out);
        wr.row({"rank", "month", "loss", "indemnity", "retained", "retained_normalized"});
        for (std::size_t k = 0; k < order.size(); ++k) {
            const std::size_t st = order[k];
            const double ind = sched.indemnity(x[st]);
            wr.row({std::to_string(k), s.panel.months()[st].iso(), csv::format_number(x[st]), csv::format_number(ind),
                    csv::format_number(x[st] - ind + c.premiums[i]), csv::format_number(x[st] - ind)});
        }
        if (const auto d = sched.deductible(); d && *d >= x.max())
            logger()->info("{}: retains everything", s.labels[i]);
        else if (d)
            logger()->info("{}: deductible contract at {}", s.labels[i], *d);
        else
            logger()->info("{}: non-deductible contract", s.labels[i]);
    }
    return exit_code::ok;
}

inline int cmd_stackelberg(const CommandOptions& opt) {
    const auto s = open_session(opt);
    const auto holders = policyholders(s);
    const auto c = centralized_contract(s, holders);
    const auto w = centralized_welfare(s.reference, holders, c);
    detail::ensure_dir(s.out_dir);
    auto out = detail::open_out(s.out_dir / "premiums.csv");
    csv::Writer wr(out);
    wr.row({"agent", "premium", "initial_risk", "final_risk", "gain"});
    double total_premium = 0.0;
    std::vector<LossProfile> ceded;
    for (std::size_t i = 0; i < holders.size(); ++i) {
        const auto& h = holders[i];
        const double before = choquet(s.reference, h.endowment, h.distortion);
        wr.row({s.labels[i], csv::format_number(c.premiums[i]), csv::format_number(before),
                csv::format_number(before - w.policyholder_gains[i]), csv::format_number(w.policyholder_gains[i])});
        total_premium += c.premiums[i];
        ceded.push_back(c.ceded(i, h.endowment));
    }
    const double es = expected_shortfall(s.reference, sum_profiles(ceded), c.alpha);
    wr.row({"insurer", csv::format_number(total_premium), "0", csv::format_number(es - total_premium),
            csv::format_number(w.insurer_gain)});
    return exit_code::ok;
}

// ============================================================================
// Parameter sweep
// ============================================================================

struct SweepRow {
    double parameter = 0.0;
    double rpra = std::numeric_limits<double>::quiet_NaN();
    double centralized = 0.0;    // average gain, insurer included
    double decentralized = 0.0;  // average gain
    double percent_decrease = std::numeric_limits<double>::quiet_NaN();
};

/// One grid point: swap the swept parameter in and run both markets.
inline SweepRow sweep_point(const Session& base, double value) {
    const auto& sw = *base.config.sweep;
    const std::size_t idx = *base.config.agent_index(sw.agent);
    const auto& d0 = base.config.agents[idx].distortions.front();
    std::vector<double> params(d0.params().begin(), d0.params().end());
    if (sw.parameter >= params.size()) throw ConfigError("sweep parameter index out of range");
    params[sw.parameter] = value;
    Distortion d = [&] {
        try {
            return Distortion::make(d0.family(), params, {d0.knots().begin(), d0.knots().end()});
        } catch (const Error& e) {
            throw ConfigError("sweep value " + csv::format_number(value) + ": " + e.what());
        }
    }();

    Session s = base;
    s.config.agents[idx].distortions = {d};
    s.agents[idx].distortions = DistortionSet::singleton(d);

    SweepRow row;
    row.parameter = value;
    if (d.family() == Family::Power || d.family() == Family::Identity) row.rpra = rpra(d, 0.5);
    const auto holders = policyholders(s);
    const auto c = solve_centralized(s.reference, holders, s.config.alpha,
                                     {.tie_rule = s.config.tie_rule, .tie_tolerance = s.config.tie_tolerance});
    row.centralized = centralized_welfare(s.reference, holders, c).average_gain;
    const auto alloc = solve_robust(s.agents, s.config.robust).allocation;
    row.decentralized = aggregate_gain(s.agents, alloc) / static_cast<double>(s.agents.size());
    if (row.centralized != 0.0) row.percent_decrease = 100.0 * (row.centralized - row.decentralized) / row.centralized;
    return row;
}

inline std::vector<SweepRow> run_sweep(const Session& s) {
    if (!s.config.sweep) throw ConfigError("config has no sweep section");
    std::vector<std::future<SweepRow>> jobs;
    for (double v : s.config.sweep->values)
        jobs.push_back(std::async(std::launch::async, [&s, v] { return sweep_point(s, v); }));
    std::vector<SweepRow> rows;
    for (auto& j : jobs) rows.push_back(j.get());
    return rows;
}

inline int cmd_sweep(const CommandOptions& opt) {
    const auto s = open_session(opt);
    const auto rows = run_sweep(s);
    detail::ensure_dir(s.out_dir);
    auto out = detail::open_out(s.out_dir / "sweep.csv");
    csv::Writer w(out);
    w.row({"parameter", "rpra", "centralized_avg_gain", "decentralized_avg_gain", "percent_decrease"});
    for (const auto& r : rows)
        w.row({csv::format_number(r.parameter), detail::fmt_num(r.rpra), csv::format_number(r.centralized),
               csv::format_number(r.decentralized), detail::fmt_num(r.percent_decrease)});
    return exit_code::ok;
}

// ============================================================================
// Summary and validation
// ============================================================================

inline int cmd_summary(const CommandOptions& opt) {
    ParseOptions parse;
    std::filesystem::path out_dir = "out";
    if (!opt.config.empty()) {
        const auto cfg = resolve_config(opt);
        parse = cfg.data;
        out_dir = cfg.output_dir;
    } else if (opt.loss_column) {
        parse.loss_column = *opt.loss_column;
    }
    if (!opt.out.empty()) out_dir = opt.out;
    const auto panel = load_panel(opt.data, parse);
    const auto stats = summary_stats(panel);
    const auto corr = correlation(panel);
    detail::ensure_dir(out_dir);
    {
        auto out = detail::open_out(out_dir / "summary.csv");
        csv::Writer w(out);
        w.row({"agent", "mean", "median", "var5", "max", "stdev"});
        for (std::size_t a = 0; a < panel.agent_count(); ++a) {
            const auto& st = stats[a];
            w.row({panel.agents()[a], csv::format_number(st.mean), csv::format_number(st.median),
                   csv::format_number(st.var5), csv::format_number(st.max), csv::format_number(st.stdev)});
        }
    }
    auto out = detail::open_out(out_dir / "correlation.csv");
    csv::Writer w(out);
    std::vector<std::string> header{"agent"};
    header.insert(header.end(), panel.agents().begin(), panel.agents().end());
    w.row(header);
    for (std::size_t a = 0; a < panel.agent_count(); ++a) {
        std::vector<std::string> row{panel.agents()[a]};
        for (std::size_t b = 0; b < panel.agent_count(); ++b)
            row.push_back(corr.undefined[a][b] ? "NA" : csv::format_number(corr.values[a][b]));
        w.row(row);
    }
    return exit_code::ok;
}

inline int cmd_validate_config(const CommandOptions& opt) {
    const auto cfg = resolve_config(opt);
    for (const auto& a : cfg.agents)
        if (a.belief_file && !std::filesystem::exists(*a.belief_file))
            throw ConfigError("belief file " + a.belief_file->string() + " does not exist");
    logger()->info("config OK: {} agents, alpha {}", cfg.agents.size(), cfg.alpha);
    return exit_code::ok;
}

// ============================================================================
// Dispatch
// ============================================================================

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const UnsupportedError*>(&e)) return exit_code::config;
    if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const LengthMismatchError*>(&e) ||
        dynamic_cast<const DomainError*>(&e))
        return exit_code::format;
    return exit_code::solver;
}

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"summary",     "po-decentralized", "po-centralized",
                                                "stackelberg", "sweep",            "validate-config"};
    return names;
}

/// Runs one subcommand and maps failures to exit codes.
inline int run_command(const std::string& name, const CommandOptions& opt) {
    try {
        if (name == "summary") return cmd_summary(opt);
        if (name == "po-decentralized") return cmd_po_decentralized(opt);
        if (name == "po-centralized") return cmd_po_centralized(opt);
        if (name == "stackelberg") return cmd_stackelberg(opt);
        if (name == "sweep") return cmd_sweep(opt);
        if (name == "validate-config") return cmd_validate_config(opt);
        throw ConfigError("unknown command '" + name + "'");
    } catch (const std::exception& e) {
        logger()->error("{}", e.what());
        return exit_code_for(e);
    }
}

}  // namespace paretopool::cli
