// Three agents with behavioural distortions share a small synthetic loss panel,
// once among themselves and once through an ES insurer.

#include <cstdio>
#include <vector>

#include "paretopool/centralized.hpp"
#include "paretopool/posolver.hpp"

using namespace paretopool;

int main() {
    const auto p = EmpiricalSpace::uniform(8);
    const std::vector<Distortion> ds{Distortion::kahneman_tversky(0.4), Distortion::kahneman_tversky(0.5),
                                     Distortion::power(0.5)};
    const std::vector<LossProfile> x{LossProfile({0, 1, 2, 0, 5, 1, 9, 3}), LossProfile({1, 0, 2, 2, 4, 0, 7, 1}),
                                     LossProfile({0, 0, 1, 3, 2, 2, 6, 4})};

    std::vector<AgentSpec> agents;
    std::vector<PolicyHolder> holders;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        agents.push_back({p, DistortionSet::singleton(ds[i]), x[i]});
        holders.push_back({ds[i], x[i]});
    }

    auto alloc = solve_fixed(agents).allocation;
    alloc.side_payments = side_payments(alloc, agents, WeightRule::Equal);
    const auto report = welfare_report(agents, alloc);
    std::printf("decentralized: aggregate gain %.6f, average %.6f\n", report.aggregate_gain, report.average_gain);
    for (std::size_t k = 0; k < alloc.layer_count(); ++k) {
        std::printf("  layer [%g, %g]:", alloc.breakpoints[k], alloc.breakpoints[k + 1]);
        for (double s : alloc.slopes[k]) std::printf(" %.2f", s);
        std::printf("\n");
    }

    for (double alpha : {0.05, 0.15, 0.5}) {
        const auto contract = solve_centralized(p, holders, alpha, {.tie_rule = TieRule::Optimize});
        const auto w = centralized_welfare(p, holders, contract);
        std::printf("centralized alpha=%.2f: insurer gain %.6f, average %.6f%s\n", alpha, w.insurer_gain,
                    w.average_gain, w.cedes_nothing ? " (no cession)" : "");
    }
}
