// Command-line front end: runs simulation scenarios and figure presets from
// JSON configs and writes column-oriented CSV or JSON results.
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <autoqec/scenario.hpp>

namespace {

using autoqec::json;

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw autoqec::ConfigError("config", "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw autoqec::ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
}

struct CommonFlags {
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    int threads = -1;
    int max_exc = -1;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON configuration file");
    cmd->add_option("--out", flags.out_path, "output file (default: stdout)");
    cmd->add_option("--format", flags.format, "output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--threads", flags.threads, "worker threads (0 = hardware)");
    cmd->add_option("--max-exc", flags.max_exc, "excitation-number cutoff")->check(CLI::Range(1, 2));
}

int run(const std::string& scenario, const std::string& preset, const CommonFlags& flags) {
    json cfg = load_config(flags.config_path);
    if (!preset.empty()) cfg["preset"] = preset;
    if (!scenario.empty()) {
        if (cfg.contains("scenario") && cfg["scenario"] != scenario)
            std::cerr << "note: command line selects scenario '" << scenario
                      << "', overriding config value '" << cfg["scenario"].get<std::string>()
                      << "'\n";
        cfg["scenario"] = scenario;
    }
    if (flags.threads >= 0) {
        if (cfg.contains("threads") && cfg["threads"] != flags.threads)
            std::cerr << "note: --threads overrides config value\n";
        cfg["threads"] = flags.threads;
    }
    if (flags.max_exc >= 0) {
        if (cfg.contains("max_excitation") && cfg["max_excitation"] != flags.max_exc)
            std::cerr << "note: --max-exc overrides config value\n";
        cfg["max_excitation"] = flags.max_exc;
        cfg["params"]["mode_max_occupation"] = flags.max_exc;
    }

    autoqec::ResultRecord rec = autoqec::run_scenario(cfg);

    if (flags.out_path.empty()) {
        autoqec::emit(rec, flags.format, std::cout);
    } else {
        std::ofstream out(flags.out_path, std::ios::binary);
        if (!out) throw autoqec::ConfigError("out", "cannot open '" + flags.out_path + "' for writing");
        autoqec::emit(rec, flags.format, out);
        if (!out) throw std::runtime_error("write to '" + flags.out_path + "' failed");
    }
    if (rec.metadata.contains("warnings"))
        for (const auto& w : rec.metadata.at("warnings"))
            std::cerr << "warning: " << w.get<std::string>() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dissipative three-qubit error correction and sensing simulator"};
    app.require_subcommand(1);

    struct Sub {
        CLI::App* cmd = nullptr;
        CommonFlags flags;
        std::string scenario;
    };
    std::vector<Sub> subs(6);
    const char* names[] = {"simulate", "optimize", "ramsey", "rates", "compare"};
    for (int i = 0; i < 5; ++i) {
        subs[i].scenario = names[i];
        subs[i].cmd = app.add_subcommand(names[i], std::string("run the ") + names[i] + " scenario");
    }
    std::string preset_name;
    subs[5].cmd = app.add_subcommand("preset", "run a bundled figure preset");
    subs[5].cmd
        ->add_option("name", preset_name, "preset name (fig1, fig5, fig6, fig7, fig8, fig9, rates)")
        ->required();
    for (auto& s : subs) add_common_flags(s.cmd, s.flags);

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto& s : subs) {
            if (!s.cmd->parsed()) continue;
            bool is_preset = s.cmd->get_name() == "preset";
            return run(is_preset ? "" : s.scenario, is_preset ? preset_name : "", s.flags);
        }
        std::cerr << "error: no subcommand selected\n";
        return 2;
    } catch (const autoqec::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
}
