#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstddef>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "paretopool/csv.hpp"
#include "paretopool/error.hpp"
#include "paretopool/riskmeasure.hpp"

namespace paretopool {

// ============================================================================
// Monthly loss panels
// ============================================================================

struct YearMonth {
    int year = 0;
    int month = 1;

    auto operator<=>(const YearMonth&) const = default;

    int ordinal() const noexcept { return year * 12 + (month - 1); }
    static YearMonth from_ordinal(int n) { return {n / 12, n % 12 + 1}; }

    std::string iso() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
        return buf;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace detail

/// Accepts "YYYY-MM" and any ISO 8601 date or timestamp starting with "YYYY-MM-DD".
inline std::optional<YearMonth> parse_year_month(std::string_view text) {
    text = detail::trim(text);
    if (text.size() < 7 || text[4] != '-') return std::nullopt;
    auto y = detail::parse_int(text.substr(0, 4));
    auto m = detail::parse_int(text.substr(5, 2));
    if (!y || !m || *m < 1 || *m > 12) return std::nullopt;
    if (text.size() > 7) {
        if (text.size() < 10 || text[7] != '-') return std::nullopt;
        auto d = detail::parse_int(text.substr(8, 2));
        if (!d || *d < 1 || *d > 31) return std::nullopt;
        if (text.size() > 10 && text[10] != 'T' && text[10] != ' ') return std::nullopt;
    }
    return YearMonth{*y, *m};
}

inline std::optional<double> parse_money(std::string_view text) {
    text = detail::trim(text);
    if (text.empty()) return 0.0;
    if (text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// Losses per (month, agent); rectangular, months strictly increasing, agents sorted.
class LossPanel {
public:
    LossPanel() = default;
    LossPanel(std::vector<YearMonth> months, std::vector<std::string> agents, std::vector<std::vector<double>> losses)
        : months_(std::move(months)), agents_(std::move(agents)), losses_(std::move(losses)) {
        if (losses_.size() != months_.size()) throw DomainError("one loss row per month is required");
        for (std::size_t m = 0; m < months_.size(); ++m) {
            if (m > 0 && !(months_[m - 1] < months_[m])) throw DomainError("months must be strictly increasing");
            if (losses_[m].size() != agents_.size()) throw DomainError("loss panel must be rectangular");
            for (double v : losses_[m])
                if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("losses must be finite and non-negative");
        }
    }

    std::size_t month_count() const noexcept { return months_.size(); }
    std::size_t agent_count() const noexcept { return agents_.size(); }
    const std::vector<YearMonth>& months() const noexcept { return months_; }
    const std::vector<std::string>& agents() const noexcept { return agents_; }
    double loss(std::size_t month, std::size_t agent) const { return losses_.at(month).at(agent); }

    std::optional<std::size_t> agent_index(std::string_view label) const {
        auto it = std::find(agents_.begin(), agents_.end(), label);
        if (it == agents_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - agents_.begin());
    }

    LossProfile profile(std::size_t agent) const {
        std::vector<double> v(months_.size());
        for (std::size_t m = 0; m < v.size(); ++m) v[m] = losses_[m].at(agent);
        return LossProfile(std::move(v));
    }

    friend bool operator==(const LossPanel&, const LossPanel&) = default;

private:
    std::vector<YearMonth> months_;
    std::vector<std::string> agents_;
    std::vector<std::vector<double>> losses_;
};

struct ParseOptions {
    std::string date_column = "dateOfLoss";
    std::string agent_column = "state";
    std::string loss_column = "amountPaid";
    /// Insert zero-loss months so the panel covers every month from first to last.
    bool fill_gaps = true;

    static ParseOptions canonical() { return {"month", "agent", "loss", true}; }
};

struct RowIssue {
    std::size_t line = 0;
    std::string reason;
};

struct ParseResult {
    LossPanel panel;
    std::size_t accepted_rows = 0;
    std::vector<RowIssue> rejected;
};

/// Groups claim rows by (month, agent) and sums their losses. Blank loss fields count
/// as zero; unparseable or negative rows are skipped and reported.
inline ParseResult parse_losses(std::istream& in, const ParseOptions& options = {}) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw FormatError("missing header row");
    if (!header->empty() && header->front().rfind("\xEF\xBB\xBF", 0) == 0) header->front().erase(0, 3);

    auto column = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header->size(); ++i)
            if (detail::trim((*header)[i]) == name) return i;
        throw FormatError("missing required column '" + name + "'");
    };
    const std::size_t date_col = column(options.date_column);
    const std::size_t agent_col = column(options.agent_column);
    const std::size_t loss_col = column(options.loss_column);
    const std::size_t needed = std::max({date_col, agent_col, loss_col}) + 1;

    ParseResult result;
    // Amounts are kept per cell and summed in sorted order, so the panel does not
    // depend on row order down to the last bit.
    std::map<std::pair<int, std::string>, std::vector<double>> cells;
    std::map<std::string, bool> labels;
    std::size_t line = reader.line();
    while (auto rec = reader.next()) {
        const std::size_t row_line = line + 1;
        line = reader.line();
        if (rec->size() == 1 && detail::trim(rec->front()).empty()) continue;
        if (rec->size() < needed) {
            result.rejected.push_back({row_line, "too few fields"});
            continue;
        }
        auto ym = parse_year_month((*rec)[date_col]);
        if (!ym) {
            result.rejected.push_back({row_line, "unparseable date '" + (*rec)[date_col] + "'"});
            continue;
        }
        const std::string agent(detail::trim((*rec)[agent_col]));
        if (agent.empty()) {
            result.rejected.push_back({row_line, "empty agent label"});
            continue;
        }
        auto amount = parse_money((*rec)[loss_col]);
        if (!amount) {
            result.rejected.push_back({row_line, "unparseable loss '" + (*rec)[loss_col] + "'"});
            continue;
        }
        if (*amount < 0.0) {
            result.rejected.push_back({row_line, "negative loss"});
            continue;
        }
        cells[{ym->ordinal(), agent}].push_back(*amount);
        labels[agent] = true;
        ++result.accepted_rows;
    }

    std::vector<std::string> agents;
    for (const auto& [label, _] : labels) agents.push_back(label);
    std::vector<int> ordinals;
    for (const auto& [key, _] : cells) ordinals.push_back(key.first);
    std::sort(ordinals.begin(), ordinals.end());
    ordinals.erase(std::unique(ordinals.begin(), ordinals.end()), ordinals.end());
    if (options.fill_gaps && !ordinals.empty()) {
        const int first = ordinals.front(), last = ordinals.back();
        ordinals.clear();
        for (int o = first; o <= last; ++o) ordinals.push_back(o);
    }

    std::vector<YearMonth> months;
    std::vector<std::vector<double>> losses;
    for (int o : ordinals) {
        months.push_back(YearMonth::from_ordinal(o));
        std::vector<double> row(agents.size(), 0.0);
        for (std::size_t a = 0; a < agents.size(); ++a) {
            auto it = cells.find({o, agents[a]});
            if (it == cells.end()) continue;
            std::sort(it->second.begin(), it->second.end());
            for (double v : it->second) row[a] += v;
        }
        losses.push_back(std::move(row));
    }
    result.panel = LossPanel(std::move(months), std::move(agents), std::move(losses));
    return result;
}

/// Canonical cache form: header `month,agent,loss`, months ascending, agents in panel order.
inline void write_canonical(std::ostream& out, const LossPanel& panel) {
    csv::Writer w(out);
    w.row({"month", "agent", "loss"});
    char buf[64];
    for (std::size_t m = 0; m < panel.month_count(); ++m)
        for (std::size_t a = 0; a < panel.agent_count(); ++a) {
            std::snprintf(buf, sizeof buf, "%.17g", panel.loss(m, a));
            w.row({panel.months()[m].iso(), panel.agents()[a], buf});
        }
}

struct PanelSpace {
    EmpiricalSpace space;
    std::vector<LossProfile> profiles;  // one per agent, states in month order
};

/// Uniform weights 1/m over the months.
inline PanelSpace to_space(const LossPanel& panel) {
    if (panel.month_count() == 0) throw DomainError("panel has no months");
    PanelSpace out{EmpiricalSpace::uniform(panel.month_count()), {}};
    for (std::size_t a = 0; a < panel.agent_count(); ++a) out.profiles.push_back(panel.profile(a));
    return out;
}

// ============================================================================
// Descriptive statistics
// ============================================================================

struct SummaryStats {
    double mean = 0.0;
    double median = 0.0;
    double var5 = 0.0;  // VaR at level 5% on the uniform space
    double max = 0.0;
    double stdev = 0.0;  // sample standard deviation, divisor m - 1
};

inline std::vector<SummaryStats> summary_stats(const LossPanel& panel) {
    if (panel.month_count() < 2) throw DomainError("standard deviation needs at least two months");
    const auto ps = to_space(panel);
    const double m = static_cast<double>(panel.month_count());
    std::vector<SummaryStats> out;
    for (const auto& prof : ps.profiles) {
        SummaryStats s;
        std::vector<double> v(prof.values().begin(), prof.values().end());
        for (double x : v) s.mean += x;
        s.mean /= m;
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stdev = std::sqrt(ss / (m - 1.0));
        std::sort(v.begin(), v.end());
        const std::size_t h = v.size() / 2;
        s.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
        s.max = v.back();
        s.var5 = value_at_risk(ps.space, prof, 0.05);
        out.push_back(s);
    }
    return out;
}

struct CorrelationMatrix {
    std::vector<std::vector<double>> values;  // NaN where undefined
    std::vector<std::vector<bool>> undefined;
};

/// Pearson correlations; pairs involving a zero-variance agent are flagged undefined.
inline CorrelationMatrix correlation(const LossPanel& panel) {
    if (panel.month_count() < 2) throw DomainError("correlation needs at least two months");
    const std::size_t n = panel.agent_count();
    const std::size_t m = panel.month_count();
    std::vector<double> mean(n, 0.0), sd(n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t t = 0; t < m; ++t) mean[a] += panel.loss(t, a);
        mean[a] /= static_cast<double>(m);
        for (std::size_t t = 0; t < m; ++t) sd[a] += (panel.loss(t, a) - mean[a]) * (panel.loss(t, a) - mean[a]);
        sd[a] = std::sqrt(sd[a]);
    }
    CorrelationMatrix c;
    c.values.assign(n, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
    c.undefined.assign(n, std::vector<bool>(n, false));
    for (std::size_t a = 0; a < n; ++a) {
        c.values[a][a] = 1.0;
        for (std::size_t b = a + 1; b < n; ++b) {
            if (sd[a] == 0.0 || sd[b] == 0.0) {
                c.undefined[a][b] = c.undefined[b][a] = true;
                continue;
            }
            double cov = 0.0;
            for (std::size_t t = 0; t < m; ++t) cov += (panel.loss(t, a) - mean[a]) * (panel.loss(t, b) - mean[b]);
            const double r = std::clamp(cov / (sd[a] * sd[b]), -1.0, 1.0);
            c.values[a][b] = c.values[b][a] = r;
        }
    }
    return c;
}

}  // namespace paretopool
