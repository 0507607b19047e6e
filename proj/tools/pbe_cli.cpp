#include <iostream>

#include <CLI11.hpp>

#include "app.hpp"

using namespace pbe::app;

int main(int argc, char** argv)
{
    CLI::App cli{"phonon Boltzmann equation on the discrete torus"};
    cli.require_subcommand(1);

    struct Parsed {
        CLI::App* app;
        std::string config;
        std::string out;
        std::map<std::string, std::string> flags;
    };
    std::vector<std::unique_ptr<Parsed>> parsed;
    for (const auto& sc : subcommands()) {
        auto p = std::make_unique<Parsed>();
        p->app = cli.add_subcommand(sc.name, sc.help);
        p->app->add_option("--config", p->config, "key = value file; flags override it");
        p->app->add_option("--out", p->out, "output directory (overrides PBE_OUTPUT_DIR and the config)");
        std::vector<std::string> keys = common_keys();
        keys.insert(keys.end(), sc.keys.begin(), sc.keys.end());
        for (const auto& k : keys) {
            if (k == "out") continue;
            p->app->add_option("--" + k, p->flags[k], k);
        }
        parsed.push_back(std::move(p));
    }
    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = cli.exit(e);
        return rc == 0 ? 0 : 2;
    }

    for (const auto& p : parsed) {
        if (!p->app->parsed()) continue;
        std::string name = p->app->get_name();
        RunConfig cfg;
        std::optional<std::string> out;
        try {
            if (!p->config.empty()) cfg = RunConfig::from_file(p->config);
            for (const auto& [k, v] : p->flags)
                if (p->app->count("--" + k) > 0) cfg.set(k, v);
        } catch (const pbe::ConfigError& e) {
            std::cout << json{{"status", "config_error"}, {"error", e.what()}}.dump() << "\n";
            return 2;
        }
        if (p->app->count("--out") > 0) out = p->out;
        RunResult r = execute(name, cfg, out);
        json summary{{"subcommand", name}, {"status", r.manifest["status"]}};
        if (r.manifest.contains("error")) summary["error"] = r.manifest["error"];
        if (r.manifest.contains("results") && r.manifest["results"].contains("checks"))
            summary["checks"] = r.manifest["results"]["checks"];
        summary["output"] = output_dir(cfg, out).string();
        std::cout << summary.dump(2) << "\n";
        return r.exit_code;
    }
    return 2;
}
