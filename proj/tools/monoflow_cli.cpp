// monoflow: run spectral-flow / index experiments from a JSON config or a shipped preset.
#include "monoflow/experiment.hpp"
#include "monoflow/parallel.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace monoflow;
using nlohmann::json;

namespace {

json read_document(const std::string& config, const std::string& preset)
{
    if (!config.empty() && !preset.empty()) throw Error("cli", "pass either --config or --preset, not both");
    if (!preset.empty()) return load_preset(preset);
    if (config.empty()) throw Error("cli", "one of --config or --preset is required");
    std::ifstream in(config);
    if (!in) throw Error("cli", "cannot open " + config);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("cli", "config is not valid JSON: " + std::string(e.what()));
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"monoflow: monopole spectral flow and index experiments"};
    app.require_subcommand(1);

    std::string config, preset, out;
    int threads = 1;
    std::optional<int> seed;

    auto add_source = [&](CLI::App* sub) {
        sub->add_option("--config", config, "experiment config (JSON)");
        sub->add_option("--preset", preset, "name of a shipped preset");
        sub->add_option("--seed", seed, "override the config seed");
    };
    CLI::App* run = app.add_subcommand("run", "run an experiment and write its report");
    add_source(run);
    run->add_option("--out", out, "output directory (default: the config's output_dir)");
    run->add_option("--threads", threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    CLI::App* validate = app.add_subcommand("validate", "check a config against the schema");
    add_source(validate);
    app.add_subcommand("list-presets", "list shipped presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("list-presets")) {
            for (const std::string& name : list_presets()) std::cout << name << "\n";
            return 0;
        }
        json doc = read_document(config, preset);
        if (seed) doc["seed"] = *seed;
        ExperimentConfig cfg = parse_config(doc);
        if (app.got_subcommand("validate")) {
            std::cout << "valid " << cfg.name << " hash " << config_hash(cfg) << "\n";
            return 0;
        }
        set_num_threads(threads);
        if (!out.empty()) cfg.output_dir = out;
        Report rep = run_experiment(cfg);
        for (const FlowReport& f : rep.flows) std::cout << f.label << " = " << f.net_flow << "\n";
        if (rep.index) std::cout << "Ind = " << rep.index->value << " (raw " << rep.index->raw << ")\n";
        if (rep.oracle) std::cout << "oracle = " << rep.oracle->value << " (raw " << rep.oracle->raw << ")\n";
        for (const InvariantRow& r : rep.invariants)
            std::cout << (r.pass ? "ok   " : "FAIL ") << r.name << ": " << r.value << "\n";
        for (const Verdict& v : rep.verdicts) std::cout << (v.pass ? "PASS " : "FAIL ") << v.line << "\n";
        if (!cfg.output_dir.empty()) {
            emit_trajectories(rep, cfg.output_dir);
            std::cout << "report written to " << cfg.output_dir << "\n";
        }
        return rep.passed() ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << "error [" << e.module() << "] " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error " << e.what() << "\n";
        return 2;
    }
}
