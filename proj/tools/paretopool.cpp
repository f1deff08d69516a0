// paretopool: risk-sharing market solvers over monthly loss panels.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "paretopool/cli/commands.hpp"

namespace pc = paretopool::cli;

int main(int argc, char** argv) {
    CLI::App app{"Pareto-optimal risk sharing among distortion-risk-measure agents"};
    app.require_subcommand(1);

    pc::CommandOptions opt;
    std::string config, data, out, loss_column, weights;
    double alpha = 0.0;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", config, "JSON run configuration");
        if (needs_config) c->required();
        sub->add_option("--data", data, "claim export or month,agent,loss panel (CSV)");
        sub->add_option("--out", out, "output directory (overrides the config)");
        sub->add_option("--loss-column", loss_column, "claim column holding the loss amount");
        sub->add_option("--alpha", alpha, "insurer expected-shortfall level");
        sub->add_option("--weights", weights, "welfare split: equal, last, or a file of shares");
    };

    struct Entry {
        const char* name;
        const char* help;
        bool needs_config;
    };
    const Entry entries[] = {
        {"summary", "monthly loss statistics and correlations", false},
        {"po-decentralized", "layer allocation of the peer-to-peer market", true},
        {"po-centralized", "indemnities and premiums of the insurer market", true},
        {"stackelberg", "premium table of the insurer market", true},
        {"sweep", "average welfare gain over a parameter grid", true},
        {"validate-config", "check a configuration file", true},
    };
    for (const auto& e : entries) add_common(app.add_subcommand(e.name, e.help), e.needs_config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : pc::exit_code::config;
    }

    for (auto* sub : app.get_subcommands()) {
        if (!config.empty()) opt.config = config;
        if (!data.empty()) opt.data = data;
        if (!out.empty()) opt.out = out;
        if (sub->count("--loss-column")) opt.loss_column = loss_column;
        if (sub->count("--alpha")) opt.alpha = alpha;
        if (sub->count("--weights")) opt.weights = weights;
        return pc::run_command(sub->get_name(), opt);
    }
    return pc::exit_code::config;
}
